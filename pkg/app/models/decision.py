from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DependenceAxis(str, Enum):
    EVIDENTIAL = "evidential"
    CAUSAL = "causal"
    FUNCTIONAL = "functional"


class UpdateAxis(str, Enum):
    UPDATEFUL = "updateful"
    UPDATELESS = "updateless"


_NAMES = {
    (DependenceAxis.EVIDENTIAL, UpdateAxis.UPDATEFUL): ("EDT", "edt", "EDT"),
    (DependenceAxis.CAUSAL, UpdateAxis.UPDATEFUL): ("CDT", "cdt", "CDT"),
    (DependenceAxis.FUNCTIONAL, UpdateAxis.UPDATEFUL): ("updateful-FDT", "ufdt", "Updateful FDT"),
    (DependenceAxis.EVIDENTIAL, UpdateAxis.UPDATELESS): ("UEDT", "uedt", "Updateless EDT"),
    (DependenceAxis.CAUSAL, UpdateAxis.UPDATELESS): ("UCDT", "ucdt", "Updateless CDT"),
    (DependenceAxis.FUNCTIONAL, UpdateAxis.UPDATELESS): ("FDT", "fdt", "FDT"),
}


class TheorySpec(BaseModel):
    """
    A decision theory as a coordinate on the two taxonomy axes:
    (updateful|updateless) (evidential|causal|functional).
    """
    model_config = ConfigDict(frozen=True)

    dependence_axis: DependenceAxis
    update_axis: UpdateAxis

    @property
    def name(self) -> str:
        """Canonical name: EDT, CDT, updateful-FDT, UEDT, UCDT or FDT."""
        return _NAMES[(self.dependence_axis, self.update_axis)][0]

    @property
    def short_name(self) -> str:
        return _NAMES[(self.dependence_axis, self.update_axis)][1]

    @property
    def display_name(self) -> str:
        return _NAMES[(self.dependence_axis, self.update_axis)][2]

    @property
    def is_updateless(self) -> bool:
        return self.update_axis == UpdateAxis.UPDATELESS

    @classmethod
    def from_name(cls, name: str) -> "TheorySpec":
        """
        Look a theory up by canonical, short or display name (case-insensitive).

        Raises:
            ValueError: for an unknown name.
        """
        wanted = name.strip().lower()
        for (dependence, update), names in _NAMES.items():
            if wanted in {n.lower() for n in names}:
                return cls(dependence_axis=dependence, update_axis=update)
        known = ", ".join(n[1] for n in _NAMES.values())
        raise ValueError(f"unknown theory {name!r} (expected one of: {known})")

    def __str__(self) -> str:
        return self.name


# Row order of the behaviour table
ALL_THEORIES: List[TheorySpec] = [
    TheorySpec(dependence_axis=d, update_axis=u)
    for u in (UpdateAxis.UPDATEFUL, UpdateAxis.UPDATELESS)
    for d in (DependenceAxis.EVIDENTIAL, DependenceAxis.CAUSAL, DependenceAxis.FUNCTIONAL)
]


class Verdict(BaseModel):
    """Expected utility of every candidate under one theory, with the recommendation."""
    problem: str
    theory: str
    observation: Dict[str, str] = Field(default_factory=dict)
    candidates: List[str] = Field(..., description="Actions (updateful) or rule specs (updateless).")
    eu_table: Dict[str, Optional[float]] = Field(..., description="None marks an undefined expected utility.")
    argmax_set: List[str]
    recommendation: str
    tie: bool
    undefined: List[str] = Field(default_factory=list)
    recommended_action: Optional[str] = Field(
        None, description="Action of the recommended rule at the observation (updateless theories)."
    )

    @model_validator(mode="after")
    def _check(self) -> "Verdict":
        if not self.argmax_set:
            raise ValueError("argmax set is empty")
        if self.recommendation not in self.argmax_set:
            raise ValueError("recommendation is not in the argmax set")
        if list(self.eu_table) != list(self.candidates):
            raise ValueError("eu_table keys must be the candidates")
        return self


class BehaviourMatrix(BaseModel):
    """Action recommended by each theory (rows) in each problem (columns)."""
    theories: List[str]
    problems: List[str]
    cells: Dict[str, Dict[str, str]]

    def rows(self) -> List[List[str]]:
        return [[theory] + [self.cells[theory][problem] for problem in self.problems] for theory in self.theories]


class EquivalenceReport(BaseModel):
    """Whether the physical and logical graphs imply the same object-level joint."""
    equivalent: bool
    max_difference: float
    worst_assignment: Dict[str, str] = Field(default_factory=dict)


class WellDefinednessReport(BaseModel):
    """Result of the object-level cycle check on a problem description."""
    well_defined: bool
    cycles: List[List[str]] = Field(default_factory=list)
    messages: List[str] = Field(default_factory=list)
