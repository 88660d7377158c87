from enum import Enum
from itertools import product
from typing import Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import config


class VariableKind(str, Enum):
    DECISION = "decision"
    CHANCE = "chance"
    UTILITY = "utility"


class VariableLevel(str, Enum):
    OBJECT = "object"
    MECHANISM = "mechanism"


class Variable(BaseModel):
    """
    A finite-domain variable of a mechanised graph.

    Utility variables carry a numeric value for every outcome label; every
    other kind carries none.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Identifier, unique within a graph.")
    kind: VariableKind = VariableKind.CHANCE
    level: VariableLevel = VariableLevel.OBJECT
    domain: Tuple[str, ...] = Field(..., description="Ordered outcome labels.")
    utility_values: Optional[Dict[str, float]] = Field(
        None,
        description="Outcome label -> utility, present iff kind is utility."
    )

    @model_validator(mode="after")
    def _check_domain(self) -> "Variable":
        if not self.domain:
            raise ValueError(f"variable {self.name} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"variable {self.name} has duplicate outcome labels")
        if self.kind == VariableKind.UTILITY:
            if self.utility_values is None or set(self.utility_values) != set(self.domain):
                raise ValueError(f"utility variable {self.name} must give a value for exactly its domain")
        elif self.utility_values is not None:
            raise ValueError(f"only utility variables carry utility values ({self.name})")
        return self

    @property
    def cardinality(self) -> int:
        return len(self.domain)

    @property
    def is_mechanism(self) -> bool:
        return self.level == VariableLevel.MECHANISM

    def index(self, outcome: str) -> int:
        try:
            return self.domain.index(outcome)
        except ValueError:
            raise ValueError(f"{outcome!r} is not an outcome of {self.name} (domain: {', '.join(self.domain)})")

    def utility_vector(self) -> List[float]:
        """Utility of each outcome in domain order."""
        return [float(self.utility_values[label]) for label in self.domain]


ParentRow = Tuple[str, ...]


class MechanismValue(BaseModel):
    """
    One value of a mechanism variable: the conditional distribution of its
    target given the target's object-level parents.
    """
    model_config = ConfigDict(frozen=True)

    id: str
    target: str
    parents: Tuple[str, ...] = ()
    table: Dict[ParentRow, Dict[str, float]]

    @model_validator(mode="after")
    def _check_rows(self) -> "MechanismValue":
        tolerance = config.get_tolerance()
        for row, distribution in self.table.items():
            if len(row) != len(self.parents):
                raise ValueError(f"mechanism value {self.id}: row {row} does not match parents {self.parents}")
            if any(p < 0 for p in distribution.values()):
                raise ValueError(f"mechanism value {self.id}: negative probability in row {row}")
            total = sum(distribution.values())
            if abs(total - 1.0) > tolerance:
                raise ValueError(f"mechanism value {self.id}: row {row} not normalized (sum {total:g})")
        return self

    @classmethod
    def constant(cls, id: str, target: str, distribution: Mapping[str, float]) -> "MechanismValue":
        """A mechanism value for a target without object-level parents."""
        return cls(id=id, target=target, parents=(), table={(): dict(distribution)})

    @classmethod
    def from_function(cls, id: str, target: str, parents: Tuple[str, ...],
                      parent_domains: List[Tuple[str, ...]], fn) -> "MechanismValue":
        """Tabulate fn(row) -> distribution over every joint parent assignment."""
        table = {row: dict(fn(row)) for row in product(*parent_domains)}
        return cls(id=id, target=target, parents=tuple(parents), table=table)

    @property
    def is_deterministic(self) -> bool:
        return all(
            sum(1 for p in distribution.values() if p > 0) == 1 and max(distribution.values()) == 1.0
            for distribution in self.table.values()
        )

    def row_key(self, assignment: Mapping[str, str]) -> ParentRow:
        missing = [p for p in self.parents if p not in assignment]
        if missing:
            raise KeyError(f"assignment lacks parent(s) {', '.join(missing)} of {self.target}")
        return tuple(assignment[p] for p in self.parents)

    def distribution(self, assignment: Mapping[str, str]) -> Dict[str, float]:
        return self.table[self.row_key(assignment)]


class DecisionRule(MechanismValue):
    """
    A deterministic decision rule: the value of a decision's mechanism
    variable, mapping each observation assignment to one action.

    The id is the canonical rule spec, e.g. ``(P=full->one_box,P=empty->two_box)``.
    """

    @model_validator(mode="after")
    def _check_deterministic(self) -> "DecisionRule":
        if not self.is_deterministic:
            raise ValueError(f"decision rule {self.id} is not deterministic")
        return self

    @classmethod
    def from_actions(cls, target: str, parents: Tuple[str, ...],
                     actions: Dict[ParentRow, str]) -> "DecisionRule":
        spec = format_rule_spec(parents, actions)
        table = {row: {action: 1.0} for row, action in actions.items()}
        return cls(id=spec, target=target, parents=tuple(parents), table=table)

    @property
    def actions(self) -> Dict[ParentRow, str]:
        return {row: next(a for a, p in distribution.items() if p > 0) for row, distribution in self.table.items()}

    @property
    def spec(self) -> str:
        return self.id

    def action_at(self, observation: Mapping[str, str]) -> str:
        """
        Action the rule takes at an observation assignment.

        Args:
            observation: Assignment covering exactly the rule's observation set.

        Returns:
            The action label.

        Raises:
            KeyError: if a variable is missing from, or unknown to, the rule.
        """
        unknown = sorted(set(observation) - set(self.parents))
        if unknown:
            raise KeyError(f"rule {self.id} does not observe {', '.join(unknown)}")
        row = self.row_key(observation)
        if row not in self.table:
            raise KeyError(f"rule {self.id} has no row for {dict(observation)}")
        return self.actions[row]


def format_rule_spec(parents: Tuple[str, ...], actions: Mapping[ParentRow, str]) -> str:
    """Canonical text of a decision rule: ``(A=a&B=b->act,...)``; constant rules are ``(->act)``."""
    parts = []
    for row, action in actions.items():
        condition = "&".join(f"{name}={value}" for name, value in zip(parents, row))
        parts.append(f"{condition}->{action}")
    return "(" + ",".join(parts) + ")"


def parse_rule_spec(text: str) -> Tuple[Tuple[str, ...], Dict[ParentRow, str]]:
    """
    Parse a rule spec such as ``(P=full -> one_box, P=empty -> two_box)``.

    Whitespace is ignored. Returns the observation variables (in name order)
    and the action for each observation row.

    Raises:
        ValueError: on malformed text or inconsistent observation variables.
    """
    body = "".join(text.split())
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"rule spec must be parenthesised: {text!r}")
    body = body[1:-1]
    if not body:
        raise ValueError("empty rule spec")
    parents: Optional[Tuple[str, ...]] = None
    actions: Dict[ParentRow, str] = {}
    for clause in body.split(","):
        if "->" not in clause:
            raise ValueError(f"rule clause {clause!r} lacks '->'")
        condition, action = clause.split("->", 1)
        if not action:
            raise ValueError(f"rule clause {clause!r} lacks an action")
        assignment: Dict[str, str] = {}
        if condition and condition != "*":
            for item in condition.split("&"):
                if item.count("=") != 1:
                    raise ValueError(f"malformed observation {item!r} in rule spec")
                name, value = item.split("=")
                if not name or not value:
                    raise ValueError(f"malformed observation {item!r} in rule spec")
                assignment[name] = value
        names = tuple(sorted(assignment))
        if parents is None:
            parents = names
        elif names != parents:
            raise ValueError(f"rule clauses observe different variables: {parents} vs {names}")
        row = tuple(assignment[n] for n in names)
        if row in actions:
            raise ValueError(f"duplicate rule clause for {row}")
        actions[row] = action
    return parents or (), actions
