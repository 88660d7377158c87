"""
Command-level operations shared by the CLI and the HTTP router: checking a
problem file, explaining a d-separation query, simulating candidates.
"""

import logging
from typing import List, Mapping, Optional, Sequence

from app.causal.dseparation import active_path, render_path
from app.causal.errors import InvalidGraphError, InvalidQueryError, ProblemDefinitionError
from app.causal.graph import validate_graph
from app.config import config
from app.decision.problems import DecisionProblem, observational_equivalence
from app.decision.theories import evaluate
from app.dsl.compiler import build_problem
from app.dsl.parser import parse_description
from app.dsl.wellformed import check_well_defined, well_defined_diagnostics
from app.models.api import CheckReport, Explanation, SimulationReport
from app.models.decision import DependenceAxis, TheorySpec, UpdateAxis
from app.simulate.sampler import check_seed, estimate_candidate

FDT = TheorySpec(dependence_axis=DependenceAxis.FUNCTIONAL, update_axis=UpdateAxis.UPDATELESS)


def check_problem_text(text: str) -> CheckReport:
    """
    Parse, check well-definedness, validate both graphs and compare their
    object-level joints.

    Returns:
        A report whose ``ok`` is true iff every stage passes. Syntax errors
        stop at the first stage; a cyclic description is not built.
    """
    try:
        desc = parse_description(text)
    except ProblemDefinitionError as e:
        return CheckReport(ok=False, diagnostics=[str(d) for d in e.diagnostics])

    report = check_well_defined(desc)
    if not report.well_defined:
        diagnostics = [str(d) for d in well_defined_diagnostics(desc, report)]
        return CheckReport(problem=desc.name, ok=False, diagnostics=diagnostics, well_defined=False)

    try:
        problem = build_problem(desc)
    except ProblemDefinitionError as e:
        return CheckReport(problem=desc.name, ok=False, diagnostics=[str(d) for d in e.diagnostics],
                           well_defined=True)

    violations = [f"physical graph: {v}" for v in validate_graph(problem.physical_graph)]
    violations += [f"logical graph: {v}" for v in validate_graph(problem.logical_graph)]
    try:
        equivalence = observational_equivalence(problem)
    except InvalidGraphError as e:
        violations += e.violations
        return CheckReport(problem=problem.name, ok=False, violations=violations, well_defined=True)
    if not equivalence.equivalent:
        where = ", ".join(f"{k}={v}" for k, v in sorted(equivalence.worst_assignment.items()))
        violations.append(f"physical and logical object-level joints differ by "
                          f"{equivalence.max_difference:g} at ({where})")
    ok = not violations
    logging.info(f"check {problem.name}: {'ok' if ok else f'{len(violations)} finding(s)'}")
    return CheckReport(problem=problem.name, ok=ok, violations=violations, well_defined=True,
                       equivalent=equivalence.equivalent, max_difference=equivalence.max_difference)


def explain(p: DecisionProblem, x: Sequence[str], y: Sequence[str], z: Sequence[str] = (),
            graph: str = "physical") -> Explanation:
    """d-separation of X and Y given Z in one graph, with an active trail when there is one."""
    g = p.graph(graph)
    path = active_path(g, x, y, z)
    return Explanation(problem=p.name, graph=graph, x=list(x), y=list(y), z=list(z),
                       separated=path is None, path=path,
                       rendered_path=render_path(g, path) if path is not None else None)


def simulate(p: DecisionProblem, theory: Optional[TheorySpec] = None, rule: Optional[str] = None,
             obs: Optional[Mapping[str, str]] = None, episodes: Optional[int] = None,
             seed: Optional[int] = None) -> List[SimulationReport]:
    """
    Monte Carlo estimates with the exact values alongside.

    With ``rule`` the rule is simulated under ``theory`` (FDT when omitted);
    with only ``theory`` every candidate of that theory is simulated.
    """
    seed = int(config.get_simulation_config()["seed"] if seed is None else seed)
    check_seed(seed)
    theory = theory or FDT
    obs = dict(obs or {})
    if rule is not None:
        if not theory.is_updateless:
            raise InvalidQueryError(f"{theory.name} chooses actions, not rules; simulate a rule under uedt, ucdt or fdt")
        candidates = [rule]
    elif theory.is_updateless:
        candidates = [r.id for r in p.rules()]
    else:
        candidates = list(evaluate(p, theory, obs).candidates)
    reports = []
    for candidate in candidates:
        estimate = estimate_candidate(p, theory, candidate, obs, episodes, seed, with_exact=True)
        if theory.is_updateless:
            candidate = p.rule(candidate).id
        reports.append(SimulationReport(problem=p.name, theory=theory.name, candidate=candidate,
                                        observation=obs, seed=seed, estimate=estimate))
    return reports
