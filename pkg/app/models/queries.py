from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class Query(BaseModel):
    """
    A rung-1/rung-2 query: intervene, then condition, then read off a
    marginal over ``target`` (or an expectation when ``target`` is a single
    utility variable).
    """
    model_config = ConfigDict(frozen=True)

    interventions: Dict[str, str] = Field(default_factory=dict, description="do(variable = outcome).")
    evidence: Dict[str, str] = Field(default_factory=dict, description="Observed variable = outcome.")
    target: Tuple[str, ...] = Field(default=(), description="Variables to keep, or the utility variable.")


class EpisodeResult(BaseModel):
    """One sampled world: a full assignment and the utility it yields."""
    assignment: Dict[str, str]
    utility: float


class Estimate(BaseModel):
    """Monte Carlo estimate of an expected utility."""
    mean: float
    stderr: float
    episodes: int
    accepted: int
    acceptance_rate: float
    exact: Optional[float] = Field(None, description="Exact value from enumeration, when computed.")
