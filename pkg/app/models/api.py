from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.queries import Estimate


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"


class OutputEnvelope(BaseModel):
    """What a command produced: the structured payload, how to print it, and the exit code."""
    format: OutputFormat = OutputFormat.TEXT
    payload: Dict[str, Any] = Field(default_factory=dict)
    exit_code: int = Field(0, description="0 success, 1 domain error, 2 usage or parse error.")


class CheckReport(BaseModel):
    """Outcome of parsing, validating and cross-checking one problem file."""
    problem: Optional[str] = None
    ok: bool
    diagnostics: List[str] = Field(default_factory=list)
    violations: List[str] = Field(default_factory=list)
    well_defined: Optional[bool] = None
    equivalent: Optional[bool] = None
    max_difference: Optional[float] = None


class Explanation(BaseModel):
    """d-separation verdict for X _||_ Y | Z in one graph of a problem."""
    problem: str
    graph: str
    x: List[str]
    y: List[str]
    z: List[str] = Field(default_factory=list)
    separated: bool
    path: Optional[List[str]] = None
    rendered_path: Optional[str] = None


class SimulationReport(BaseModel):
    """Monte Carlo estimate for one candidate, with the exact value alongside."""
    problem: str
    theory: str
    candidate: str
    observation: Dict[str, str] = Field(default_factory=dict)
    seed: int
    estimate: Estimate


# ---------------------------------------------------------------------- #
# HTTP request bodies
# ---------------------------------------------------------------------- #
class ProblemSource(BaseModel):
    problem: Optional[str] = Field(None, description="'builtin:<name>' reference.")
    problem_text: Optional[str] = Field(None, description="Inline .dtp text, used instead of 'problem'.")
    params: Dict[str, Any] = Field(default_factory=dict, description="Built-in parameter overrides.")


class EvaluateRequest(ProblemSource):
    theory: str = Field(..., description="edt, cdt, ufdt, uedt, ucdt or fdt.")
    obs: Dict[str, str] = Field(default_factory=dict)


class TableRequest(BaseModel):
    problems: List[str] = Field(default_factory=lambda: ["all"])
    theories: List[str] = Field(default_factory=lambda: ["all"])
    params: Dict[str, Any] = Field(default_factory=dict)


class CheckRequest(BaseModel):
    problem_text: str = Field(..., description="Content of a .dtp file.")


class SimulateRequest(ProblemSource):
    theory: Optional[str] = Field(None, description="Theory whose candidates are simulated.")
    rule: Optional[str] = Field(None, description="Rule spec, simulated as do(decision rule).")
    obs: Dict[str, str] = Field(default_factory=dict)
    episodes: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 128, description="Generator key, 0 <= seed < 2**128.")


class ExplainRequest(ProblemSource):
    query: str = Field(..., description="'X _||_ Y | Z' with comma-separated variable lists.")
    graph: str = Field("physical", description="physical or logical.")
