"""
Exception hierarchy shared by the engine, the problem language and the
command-line / HTTP surfaces.

Validation and well-definedness findings are returned as reports; these
exceptions mark failures that stop a computation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence


class DtlabError(ValueError):
    """Base class for every domain error raised by dtlab."""


class UnknownVariableError(DtlabError):
    pass


class CycleError(DtlabError):
    """Raised when an operation needs an acyclic graph and finds a cycle."""

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__(f"cycle: {format_cycle(self.cycle)}")


class StateSpaceTooLargeError(DtlabError):
    pass


class RuleSpaceTooLargeError(DtlabError):
    pass


class UnsupportedEvidenceError(DtlabError):
    """Raised when conditioning on an event of probability zero."""

    def __init__(self, evidence: dict, interventions: Optional[dict] = None):
        self.evidence = dict(evidence)
        self.interventions = dict(interventions or {})
        rendered = ", ".join(f"{k}={v}" for k, v in sorted(self.evidence.items()))
        message = f"unsupported evidence: P({rendered}) = 0"
        if self.interventions:
            done = ", ".join(f"{k}={v}" for k, v in sorted(self.interventions.items()))
            message += f" under do({done})"
        super().__init__(message)


class InvalidQueryError(DtlabError):
    pass


class UndefinedVerdictError(DtlabError):
    pass


class NoAcceptedEpisodesError(DtlabError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    """A positioned message produced while reading a problem description."""

    line: int
    column: int
    kind: str  # syntax | semantic | well_defined
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.kind} error: {self.message}"


class ProblemDefinitionError(DtlabError):
    """Carries every diagnostic found while parsing or building a problem."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def has_syntax_errors(self) -> bool:
        return any(d.kind == "syntax" for d in self.diagnostics)


def format_cycle(cycle: Sequence[str]) -> str:
    """Render a cycle given as its node sequence, closing it back on the first node."""
    if not cycle:
        return ""
    return "→".join(list(cycle) + [cycle[0]])


class InvalidGraphError(DtlabError):
    """Raised when a query is issued against a graph that fails validation."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid mechanised graph: " + "; ".join(self.violations))


class InvalidParameterError(DtlabError):
    """Raised by problem builders for out-of-range parameters."""


class UsageError(DtlabError):
    """Malformed command input: unknown builtin or theory, bad assignment or query text."""
