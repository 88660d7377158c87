import logging
import re
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import yaml

from app.causal.errors import UsageError
from app.decision.problems import BUILTINS, DecisionProblem, builtin
from app.dsl.parser import parse_problem
from app.models.decision import ALL_THEORIES, TheorySpec

BUILTIN_PREFIX = "builtin:"

_INDEPENDENCE = "_||_"


def parse_params(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    """
    Turn ``key=value`` overrides into builder keyword arguments.

    Values are read as YAML scalars, so ``accuracy=0.9`` gives a float and
    ``correlation=1`` an int.
    """
    params: Dict[str, Any] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key or not value.strip():
            raise UsageError(f"malformed parameter {item!r} (expected key=value)")
        try:
            params[key] = yaml.safe_load(value)
        except yaml.YAMLError:
            raise UsageError(f"malformed value in parameter {item!r}")
    return params


def read_problem_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except UnicodeDecodeError as e:
        logging.error(f"Problem file {path} is not UTF-8: {e}")
        raise UsageError(f"problem file {path} is not valid UTF-8 (byte {e.start})")
    except OSError as e:
        logging.error(f"Error reading problem file {path}: {e}")
        raise UsageError(f"cannot read problem file {path}: {e.strerror or e}")


def load_problem(source: str, params: Optional[Mapping[str, Any]] = None) -> DecisionProblem:
    """
    Load a problem from ``builtin:<name>`` or from a .dtp file path.

    Args:
        source: Problem reference.
        params: Keyword overrides; only built-ins accept them.

    Returns:
        The validated DecisionProblem.

    Raises:
        UsageError: unknown built-in, unreadable file, or unexpected parameters.
        ProblemDefinitionError: the file does not parse or build.
        InvalidParameterError: a built-in rejects a parameter value.
    """
    params = dict(params or {})
    if source.startswith(BUILTIN_PREFIX):
        name = source[len(BUILTIN_PREFIX):]
        if name not in BUILTINS:
            raise UsageError(f"unknown built-in problem {name!r} (available: {', '.join(BUILTINS)})")
        try:
            problem = builtin(name, **params)
        except TypeError as e:
            raise UsageError(f"bad parameters for {name}: {e}")
    else:
        if params:
            raise UsageError("--param overrides apply to built-in problems only")
        problem = parse_problem(read_problem_text(source))
    logging.info(f"Loaded problem {problem.name} from {source}")
    return problem


def load_problems(spec: str, params: Optional[Mapping[str, Any]] = None) -> List[DecisionProblem]:
    """``all`` or a comma-separated list of problem references (bare names mean built-ins)."""
    if spec.strip().lower() == "all":
        names = [f"{BUILTIN_PREFIX}{name}" for name in BUILTINS]
    else:
        names = [n.strip() for n in spec.split(",") if n.strip()]
        names = [n if n.startswith(BUILTIN_PREFIX) or n.endswith(".dtp") else f"{BUILTIN_PREFIX}{n}" for n in names]
    if not names:
        raise UsageError("no problems given")
    return [load_problem(n, params if n.startswith(BUILTIN_PREFIX) else None) for n in names]


def parse_theory(name: str) -> TheorySpec:
    try:
        return TheorySpec.from_name(name)
    except ValueError as e:
        raise UsageError(str(e))


def parse_theories(spec: str) -> List[TheorySpec]:
    """``all`` (behaviour-table order) or a comma-separated list of theory names."""
    if spec.strip().lower() == "all":
        return list(ALL_THEORIES)
    theories = [parse_theory(n) for n in spec.split(",") if n.strip()]
    if not theories:
        raise UsageError("no theories given")
    return theories


def parse_assignment(items: Optional[Sequence[str]]) -> Dict[str, str]:
    """
    Parse ``Var=outcome`` items (each may hold several, comma separated).

    Raises:
        UsageError: on a malformed or repeated assignment.
    """
    assignment: Dict[str, str] = {}
    for item in items or ():
        for part in item.split(","):
            name, sep, outcome = (s.strip() for s in part.partition("="))
            if not sep or not name or not outcome:
                raise UsageError(f"malformed assignment {part.strip()!r} (expected Var=outcome)")
            if name in assignment and assignment[name] != outcome:
                raise UsageError(f"{name} assigned twice")
            assignment[name] = outcome
    return assignment


def _names(text: str, what: str) -> List[str]:
    names = [n.strip() for n in text.split(",")]
    if any(not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", n) for n in names):
        raise UsageError(f"malformed {what} set {text.strip()!r}")
    return names


def parse_query(text: str) -> Tuple[List[str], List[str], List[str]]:
    """
    Parse an independence query ``X _||_ Y | Z``.

    Each side is a comma-separated variable list; the ``| Z`` part is optional.

    Returns:
        (X, Y, Z) as name lists.
    """
    if text.count(_INDEPENDENCE) != 1:
        raise UsageError(f"malformed query {text!r} (expected 'X _||_ Y | Z')")
    left, right = text.split(_INDEPENDENCE)
    given = ""
    if "|" in right:
        right, given = right.split("|", 1)
        if not given.strip():
            raise UsageError(f"malformed query {text!r}: empty conditioning set")
    x = _names(left, "left-hand")
    y = _names(right, "right-hand")
    z = _names(given, "conditioning") if given.strip() else []
    return x, y, z

