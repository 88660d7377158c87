"""
Mechanised causal Bayesian networks.

A MechanisedGraph is a DAG over object-level variables (decisions, chance
variables, utilities) and mechanism-level variables whose values are the
conditional distributions governing the object-level ones. Each object
variable has exactly one mechanism parent; its CPD is read from the value
that mechanism takes.

Graphs are immutable after construction. Every operation here is a pure
function of the graph.
"""

import logging
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.causal.errors import (
    CycleError,
    InvalidGraphError,
    RuleSpaceTooLargeError,
    UnknownVariableError,
    format_cycle,
)
from app.config import config
from app.models.graph import DecisionRule, MechanismValue, ParentRow, Variable, VariableKind, VariableLevel

Edge = Tuple[str, str]
CpdRows = Dict[ParentRow, Dict[str, float]]


class MechanisedGraph:
    """
    A DAG over object-level and mechanism-level variables with CPDs.

    Args:
        variables: All variables, both levels.
        edges: Every directed edge, including mechanism -> object edges.
        mechanism_of: Object variable name -> its mechanism variable name.
        mechanism_values: Mechanism variable name -> the MechanismValues forming its domain.
        cpds: Explicit CPD rows for mechanism variables (and intervened object
              variables), keyed by parent outcomes in ``parents()`` order.
        information_edges: Subset of edges whose child is a decision.
        intervened: Object variables whose mechanism edge was cut by an intervention.
        name: Optional label used in logs and reports.
    """

    def __init__(
        self,
        variables: Iterable[Variable],
        edges: Iterable[Edge],
        mechanism_of: Mapping[str, str],
        mechanism_values: Optional[Mapping[str, Sequence[MechanismValue]]] = None,
        cpds: Optional[Mapping[str, CpdRows]] = None,
        information_edges: Iterable[Edge] = (),
        intervened: Iterable[str] = (),
        name: str = "",
    ):
        self.name = name
        self._variables: Dict[str, Variable] = {}
        for variable in variables:
            if variable.name in self._variables:
                raise ValueError(f"duplicate variable {variable.name}")
            self._variables[variable.name] = variable

        self._dag = nx.DiGraph()
        self._dag.add_nodes_from(sorted(self._variables))
        for parent, child in edges:
            self._require(parent, child)
            self._dag.add_edge(parent, child)

        self._information_edges: FrozenSet[Edge] = frozenset((p, c) for p, c in information_edges)
        for parent, child in self._information_edges:
            self._require(parent, child)

        self._mechanism_of: Dict[str, str] = dict(mechanism_of)
        for obj, mech in self._mechanism_of.items():
            self._require(obj, mech)

        self._mechanism_values: Dict[str, Tuple[MechanismValue, ...]] = {
            mech: tuple(values) for mech, values in (mechanism_values or {}).items()
        }
        for mech in self._mechanism_values:
            self._require(mech)

        self._cpds: Dict[str, CpdRows] = {name: {tuple(r): dict(d) for r, d in rows.items()}
                                          for name, rows in (cpds or {}).items()}
        for variable_name in self._cpds:
            self._require(variable_name)

        self._intervened: FrozenSet[str] = frozenset(intervened)
        self._tensors: Dict[str, np.ndarray] = {}
        self._violations: Optional[List[str]] = None

    def _require(self, *names: str) -> None:
        for n in names:
            if n not in self._variables:
                raise UnknownVariableError(f"unknown variable {n!r}")

    # ------------------------------------------------------------------ #
    # Structure
    # ------------------------------------------------------------------ #
    @property
    def variables(self) -> Tuple[Variable, ...]:
        return tuple(self._variables[n] for n in sorted(self._variables))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(sorted(self._variables))

    def variable(self, name: str) -> Variable:
        self._require(name)
        return self._variables[name]

    def __contains__(self, name: str) -> bool:
        return name in self._variables

    @property
    def edges(self) -> FrozenSet[Edge]:
        return frozenset(self._dag.edges())

    @property
    def information_edges(self) -> FrozenSet[Edge]:
        return self._information_edges

    @property
    def mechanism_of(self) -> Dict[str, str]:
        return dict(self._mechanism_of)

    @property
    def intervened(self) -> FrozenSet[str]:
        return self._intervened

    @property
    def dag(self) -> nx.DiGraph:
        """A copy of the underlying networkx graph."""
        return self._dag.copy()

    def object_variables(self) -> List[str]:
        return [v.name for v in self.variables if v.level == VariableLevel.OBJECT]

    def mechanism_variables(self) -> List[str]:
        return [v.name for v in self.variables if v.level == VariableLevel.MECHANISM]

    def decision_variables(self) -> List[str]:
        return [v.name for v in self.variables if v.kind == VariableKind.DECISION]

    def utility_variables(self) -> List[str]:
        return [v.name for v in self.variables if v.kind == VariableKind.UTILITY]

    def parents(self, name: str) -> Tuple[str, ...]:
        """
        Parents in CPD order: for object variables the object-level parents
        by name followed by the mechanism parent; otherwise parents by name.
        """
        self._require(name)
        parents = sorted(self._dag.predecessors(name))
        if self._variables[name].level == VariableLevel.OBJECT:
            mech = self._mechanism_of.get(name)
            if mech in parents:
                parents.remove(mech)
                parents.append(mech)
        return tuple(parents)

    def object_parents(self, name: str) -> Tuple[str, ...]:
        return tuple(p for p in sorted(self._dag.predecessors(name))
                     if self._variables[p].level == VariableLevel.OBJECT)

    def children(self, name: str) -> Tuple[str, ...]:
        self._require(name)
        return tuple(sorted(self._dag.successors(name)))

    def mechanism_values(self, mechanism: str) -> Tuple[MechanismValue, ...]:
        self._require(mechanism)
        return self._mechanism_values.get(mechanism, ())

    def decision_rules(self, decision: str) -> Tuple[DecisionRule, ...]:
        """The rules forming the domain of a decision's mechanism variable."""
        return tuple(v for v in self.mechanism_values(self._mechanism_of[decision]) if isinstance(v, DecisionRule))

    def explicit_cpds(self) -> Dict[str, CpdRows]:
        return {name: {r: dict(d) for r, d in rows.items()} for name, rows in self._cpds.items()}

    # ------------------------------------------------------------------ #
    # CPDs
    # ------------------------------------------------------------------ #
    def cpd_rows(self, name: str) -> CpdRows:
        """
        Conditional probability rows of a variable keyed by parent outcomes
        in ``parents()`` order. Object-level rows are read from the value of
        the mechanism parent.
        """
        self._require(name)
        if name in self._cpds:
            return {r: dict(d) for r, d in self._cpds[name].items()}
        variable = self._variables[name]
        if variable.level == VariableLevel.MECHANISM:
            raise KeyError(f"variable {name} has no CPD")
        mech = self._mechanism_of[name]
        object_parents = self.parents(name)[:-1]
        rows: CpdRows = {}
        for value in self.mechanism_values(mech):
            for obj_row in product(*(self._variables[p].domain for p in object_parents)):
                assignment = dict(zip(object_parents, obj_row))
                rows[obj_row + (value.id,)] = dict(value.distribution(assignment))
        return rows

    def cpd_tensor(self, name: str) -> np.ndarray:
        """
        CPD as an array of shape (*parent cardinalities, cardinality).

        Returns:
            Array whose last axis is the distribution of ``name`` given the
            parent outcomes indexing the leading axes.
        """
        if name not in self._tensors:
            parents = self.parents(name)
            variable = self._variables[name]
            shape = tuple(self._variables[p].cardinality for p in parents) + (variable.cardinality,)
            tensor = np.zeros(shape, dtype=float)
            for row, distribution in self.cpd_rows(name).items():
                index = tuple(self._variables[p].index(o) for p, o in zip(parents, row))
                for outcome, probability in distribution.items():
                    tensor[index + (variable.index(outcome),)] = probability
            tensor.setflags(write=False)
            self._tensors[name] = tensor
        return self._tensors[name]

    # ------------------------------------------------------------------ #
    # Immutable edits
    # ------------------------------------------------------------------ #
    def replace(self, **changes) -> "MechanisedGraph":
        fields = dict(
            variables=self.variables,
            edges=self.edges,
            mechanism_of=self._mechanism_of,
            mechanism_values=self._mechanism_values,
            cpds=self._cpds,
            information_edges=self._information_edges,
            intervened=self._intervened,
            name=self.name,
        )
        fields.update(changes)
        return MechanisedGraph(**fields)

    def without_edge(self, parent: str, child: str) -> "MechanisedGraph":
        return self.replace(edges=self.edges - {(parent, child)},
                            information_edges=self._information_edges - {(parent, child)})

    def with_edge(self, parent: str, child: str, information: bool = False) -> "MechanisedGraph":
        info = self._information_edges | {(parent, child)} if information else self._information_edges
        return self.replace(edges=self.edges | {(parent, child)}, information_edges=info)

    # ------------------------------------------------------------------ #
    # Comparison
    # ------------------------------------------------------------------ #
    def structurally_equal(self, other: "MechanisedGraph", tolerance: Optional[float] = None) -> bool:
        """Same variables, edges and mechanisms, and CPDs equal within tolerance."""
        tolerance = config.get_tolerance() if tolerance is None else tolerance
        if not isinstance(other, MechanisedGraph):
            return False
        if self.variables != other.variables or self.edges != other.edges:
            return False
        if self._information_edges != other._information_edges or self._mechanism_of != other._mechanism_of:
            return False
        if self._intervened != other._intervened:
            return False
        for mech in set(self._mechanism_values) | set(other._mechanism_values):
            mine, theirs = self.mechanism_values(mech), other.mechanism_values(mech)
            if [v.id for v in mine] != [v.id for v in theirs]:
                return False
            for a, b in zip(mine, theirs):
                if a.target != b.target or a.parents != b.parents or not _rows_close(a.table, b.table, tolerance):
                    return False
        if set(self._cpds) != set(other._cpds):
            return False
        return all(_rows_close(self._cpds[n], other._cpds[n], tolerance) for n in self._cpds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MechanisedGraph):
            return NotImplemented
        return self.structurally_equal(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"MechanisedGraph(name={self.name!r}, variables={list(self.names)})"


def _rows_close(a: CpdRows, b: CpdRows, tolerance: float) -> bool:
    if set(a) != set(b):
        return False
    for row in a:
        outcomes = set(a[row]) | set(b[row])
        if any(abs(a[row].get(o, 0.0) - b[row].get(o, 0.0)) > tolerance for o in outcomes):
            return False
    return True


# ---------------------------------------------------------------------- #
# Operations
# ---------------------------------------------------------------------- #
def observation_set(g: MechanisedGraph, decision: str) -> Tuple[str, ...]:
    """Object-level parents of a decision reached by information edges, by name."""
    g.variable(decision)
    return tuple(sorted(p for p, c in g.information_edges if c == decision))


def rule_space(decision: Variable, observations: Sequence[Variable],
               rule_cap: Optional[int] = None) -> List[DecisionRule]:
    """
    Every deterministic decision rule for a decision given its observation variables.

    Rules are ordered lexicographically: the action at the first observation
    assignment varies slowest, actions follow domain order.
    """
    rule_cap = config.get_rule_cap() if rule_cap is None else rule_cap
    observations = sorted(observations, key=lambda v: v.name)
    parents = tuple(v.name for v in observations)
    assignments = list(product(*(v.domain for v in observations)))
    if len(assignments) > rule_cap:
        raise RuleSpaceTooLargeError(
            f"rule space too large: {decision.name} has {len(assignments)} joint observation "
            f"assignments (cap {rule_cap})"
        )
    return [
        DecisionRule.from_actions(decision.name, parents, dict(zip(assignments, choice)))
        for choice in product(decision.domain, repeat=len(assignments))
    ]


def enumerate_decision_rules(g: MechanisedGraph, d: str, rule_cap: Optional[int] = None) -> List[DecisionRule]:
    """
    Enumerate all deterministic decision rules for decision ``d``.

    Args:
        g: The graph.
        d: Name of a decision variable of g.
        rule_cap: Optional override of the observation-assignment cap.

    Returns:
        |dom(d)|^k rules, k the number of joint observation assignments.
    """
    variable = g.variable(d)
    if variable.kind != VariableKind.DECISION:
        raise ValueError(f"{d} is not a decision variable")
    observations = [g.variable(o) for o in observation_set(g, d)]
    return rule_space(variable, observations, rule_cap)


def object_projection(g: MechanisedGraph) -> nx.DiGraph:
    """
    The unmechanised view of a graph: object-level variables and the edges
    between them, with each edge marked as an information edge or not.
    """
    objects = set(g.object_variables())
    view = nx.DiGraph()
    view.add_nodes_from(sorted(objects))
    for parent, child in sorted(g.edges):
        if parent in objects and child in objects:
            view.add_edge(parent, child, information=(parent, child) in g.information_edges)
    return view


def find_cycle(dag: nx.DiGraph) -> Optional[List[str]]:
    """One directed cycle as a node list starting at its smallest name, or None."""
    try:
        cycle_edges = nx.find_cycle(dag)
    except nx.NetworkXNoCycle:
        return None
    return _rotate([u for u, _ in cycle_edges])


def _rotate(cycle: List[str]) -> List[str]:
    start = cycle.index(min(cycle))
    return cycle[start:] + cycle[:start]


def topological_order(g: MechanisedGraph) -> List[str]:
    """
    Variable names with parents before children, ties broken by name.

    Raises:
        CycleError: naming the cycle when the edge relation is cyclic.
    """
    dag = g.dag
    try:
        return list(nx.lexicographical_topological_sort(dag))
    except nx.NetworkXUnfeasible:
        raise CycleError(find_cycle(dag) or [])


def validate_graph(g: MechanisedGraph) -> List[str]:
    """
    Check every MechanisedGraph invariant.

    Returns:
        One message per violation, naming the offending variable or edge;
        empty iff the graph is valid.
    """
    if g._violations is not None:
        return list(g._violations)

    violations: List[str] = []
    tolerance = config.get_tolerance()
    dag = g.dag

    cycles = sorted(_rotate(list(c)) for c in nx.simple_cycles(dag))
    for cycle in cycles[:20]:
        violations.append(f"cycle: {format_cycle(cycle)}")

    mechanism_targets: Dict[str, str] = {}
    for name in g.object_variables():
        mech = g.mechanism_of.get(name)
        if mech is None:
            violations.append(f"object variable {name} has no mechanism variable")
            continue
        if not g.variable(mech).is_mechanism:
            violations.append(f"mechanism of {name}, {mech}, is not a mechanism-level variable")
            continue
        if mech in mechanism_targets:
            violations.append(f"mechanism variable {mech} governs both {mechanism_targets[mech]} and {name}")
        mechanism_targets[mech] = name

        mechanism_parents = [p for p in dag.predecessors(name) if g.variable(p).is_mechanism]
        if name in g.intervened:
            if list(dag.predecessors(name)):
                violations.append(f"intervened variable {name} still has parents")
        elif mech not in mechanism_parents:
            violations.append(f"object variable {name} lacks mechanism parent {mech}")
        for extra in sorted(set(mechanism_parents) - {mech}):
            violations.append(f"object variable {name} has extra mechanism parent {extra}")

    for name in g.mechanism_variables():
        for parent in sorted(dag.predecessors(name)):
            if not g.variable(parent).is_mechanism:
                violations.append(f"mechanism variable {name} has object-level parent {parent}")

    for parent, child in sorted(g.information_edges):
        if (parent, child) not in g.edges:
            violations.append(f"information edge {parent}→{child} is not an edge of the graph")
        if g.variable(child).kind != VariableKind.DECISION:
            violations.append(f"information edge {parent}→{child} does not end at a decision variable")

    for name in g.object_variables():
        if name in g.intervened or name not in g.mechanism_of or name in g.explicit_cpds():
            continue
        violations.extend(_mechanism_value_violations(g, name))

    for name in g.decision_variables():
        if name not in g.mechanism_of or name in g.intervened:
            continue
        mech = g.mechanism_of[name]
        try:
            expected = [r.id for r in enumerate_decision_rules(g, name)]
        except RuleSpaceTooLargeError as e:
            violations.append(str(e))
            continue
        if list(g.variable(mech).domain) != expected:
            violations.append(f"domain of {mech} is not the rule space of {name}")
        if not all(isinstance(v, DecisionRule) for v in g.mechanism_values(mech)):
            violations.append(f"values of {mech} must be deterministic decision rules")

    for name in g.utility_variables():
        if g.children(name):
            violations.append(f"utility variable {name} has children: {', '.join(g.children(name))}")
        mech = g.mechanism_of.get(name)
        if mech is not None and name not in g.intervened:
            values = g.mechanism_values(mech)
            if len(values) != 1:
                violations.append(f"utility mechanism {mech} must have exactly one value, found {len(values)}")
            if any(not v.is_deterministic for v in values):
                violations.append(f"utility variable {name} has a non-deterministic CPD")

    explicit = g.explicit_cpds()
    for name in g.names:
        variable = g.variable(name)
        if variable.level == VariableLevel.MECHANISM or name in explicit:
            if name not in explicit:
                violations.append(f"variable {name} has no CPD")
                continue
            violations.extend(_row_violations(g, name, explicit[name], tolerance))

    g._violations = violations
    return list(violations)


def _mechanism_value_violations(g: MechanisedGraph, name: str) -> List[str]:
    violations = []
    mech = g.mechanism_of[name]
    values = g.mechanism_values(mech)
    if [v.id for v in values] != list(g.variable(mech).domain):
        violations.append(f"domain of {mech} does not match its mechanism values")
    object_parents = g.object_parents(name)
    expected_rows = set(product(*(g.variable(p).domain for p in object_parents)))
    domain = set(g.variable(name).domain)
    for value in values:
        if value.target != name:
            violations.append(f"mechanism value {value.id} of {mech} targets {value.target}, not {name}")
        if value.parents != object_parents:
            violations.append(
                f"mechanism value {value.id} of {mech} conditions on ({', '.join(value.parents)}), "
                f"expected ({', '.join(object_parents)})"
            )
            continue
        if set(value.table) != expected_rows:
            violations.append(
                f"mechanism value {value.id} of {mech}: expected {len(expected_rows)} rows, found {len(value.table)}"
            )
        for row, distribution in value.table.items():
            unknown = sorted(set(distribution) - domain)
            if unknown:
                violations.append(f"mechanism value {value.id} of {mech}: unknown outcome(s) {', '.join(unknown)}")
    return violations


def _row_violations(g: MechanisedGraph, name: str, rows: CpdRows, tolerance: float) -> List[str]:
    violations = []
    parents = g.parents(name)
    expected_rows = set(product(*(g.variable(p).domain for p in parents)))
    if set(rows) != expected_rows:
        violations.append(
            f"CPD of {name}: expected {len(expected_rows)} rows over ({', '.join(parents)}), found {len(rows)}"
        )
    domain = set(g.variable(name).domain)
    for row, distribution in rows.items():
        unknown = sorted(set(distribution) - domain)
        if unknown:
            violations.append(f"CPD of {name}: row {row} has unknown outcome(s) {', '.join(unknown)}")
        if any(p < 0 for p in distribution.values()):
            violations.append(f"CPD of {name}: row {row} has a negative probability")
        total = sum(distribution.values())
        if abs(total - 1.0) > tolerance:
            violations.append(f"CPD of {name}: row {row} not normalized (sum {total:g})")
    return violations


def assert_valid(g: MechanisedGraph) -> None:
    """Raise InvalidGraphError when validate_graph reports violations."""
    violations = validate_graph(g)
    if violations:
        logging.debug(f"graph {g.name!r} failed validation: {violations}")
        raise InvalidGraphError(violations)
