"""
Parsed, not yet validated, form of a .dtp problem file.

Every node keeps the position of the token that introduced it so later
stages can report positioned diagnostics.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union


@dataclass(frozen=True)
class Position:
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class RuleRef:
    """A decision rule written inline, e.g. ``(P=full -> one_box, P=empty -> two_box)``."""
    text: str
    position: Position = Position()


Item = Union[str, RuleRef]


@dataclass
class Entry:
    key: Item
    probability: float
    position: Position = Position()


@dataclass
class Row:
    """``(<parent outcomes>) -> { <entries> }``; an unconditional distribution has ``outcomes is None``."""
    outcomes: Optional[Tuple[Item, ...]]
    entries: List[Entry]
    position: Position = Position()


@dataclass
class ObjectDecl:
    name: str
    kind: str
    domain: List[str]
    utility_values: Optional[Dict[str, float]] = None
    position: Position = Position()


@dataclass
class EdgeDecl:
    parent: str
    child: str
    level: str  # object | information | mechanism
    tag: str = "both"
    position: Position = Position()


@dataclass
class MechRootDecl:
    name: str
    domain: List[str]
    tag: str = "both"
    position: Position = Position()


@dataclass
class ValueDecl:
    id: str
    target: str
    rows: List[Row]
    position: Position = Position()


@dataclass
class CpdDecl:
    mechanism: str
    parents: List[str]
    rows: List[Row]
    tag: str = "both"
    position: Position = Position()


@dataclass
class UtilityRow:
    outcomes: Tuple[str, ...]
    payoff: Union[str, float]
    position: Position = Position()


@dataclass
class UtilityDecl:
    name: str
    parents: List[str]
    rows: List[UtilityRow]
    position: Position = Position()


@dataclass
class PriorDecl:
    mechanism: str
    uniform: bool
    entries: List[Entry] = field(default_factory=list)
    position: Position = Position()


@dataclass
class ProblemDescription:
    name: str = ""
    objects: List[ObjectDecl] = field(default_factory=list)
    edges: List[EdgeDecl] = field(default_factory=list)
    mechanism_roots: List[MechRootDecl] = field(default_factory=list)
    values: List[ValueDecl] = field(default_factory=list)
    cpds: List[CpdDecl] = field(default_factory=list)
    utilities: List[UtilityDecl] = field(default_factory=list)
    priors: List[PriorDecl] = field(default_factory=list)
    canonical_observation: Optional[Dict[str, str]] = None
    position: Position = Position()
    canonical_position: Position = Position()

    def object(self, name: str) -> Optional[ObjectDecl]:
        return next((o for o in self.objects if o.name == name), None)

    def edges_in(self, graph: str) -> List[EdgeDecl]:
        """Edges present in the physical or logical graph."""
        return [e for e in self.edges if e.tag in ("both", graph)]
