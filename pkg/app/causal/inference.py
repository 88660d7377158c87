"""
Exact inference by enumeration over the full joint of a mechanised graph.

The joint is held as a numpy array with one axis per variable (in
topological order). Interventions are graph surgery; conditioning filters
and renormalises.
"""

import logging
from itertools import product
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.causal.errors import (
    InvalidQueryError,
    StateSpaceTooLargeError,
    UnsupportedEvidenceError,
)
from app.causal.graph import MechanisedGraph, assert_valid, topological_order
from app.config import config
from app.models.graph import Variable, VariableKind
from app.models.queries import Query


class Distribution:
    """
    A probability table over a tuple of variables.

    ``table[i, j, ...]`` is the probability of the assignment taking the
    i-th outcome of the first variable, the j-th of the second, and so on.
    """

    def __init__(self, variables: Sequence[Variable], table: np.ndarray):
        self.variables: Tuple[Variable, ...] = tuple(variables)
        self.table = np.asarray(table, dtype=float)
        if self.table.shape != tuple(v.cardinality for v in self.variables):
            raise ValueError(f"table shape {self.table.shape} does not match variables {self.names}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def total_mass(self) -> float:
        return float(self.table.sum())

    def _axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidQueryError(f"{name} is not a variable of this distribution")

    def _index(self, assignment: Mapping[str, str]) -> tuple:
        index: List[object] = [slice(None)] * len(self.variables)
        for name, outcome in assignment.items():
            axis = self._axis(name)
            index[axis] = self.variables[axis].index(outcome)
        return tuple(index)

    def probability(self, assignment: Mapping[str, str]) -> float:
        """Probability of a full or partial assignment."""
        return float(np.sum(self.table[self._index(assignment)]))

    def items(self) -> Iterator[Tuple[Dict[str, str], float]]:
        """Assignments with positive probability, in outcome order."""
        for index in zip(*np.nonzero(self.table)):
            assignment = {v.name: v.domain[i] for v, i in zip(self.variables, index)}
            yield assignment, float(self.table[index])

    def marginalize(self, keep: Sequence[str]) -> "Distribution":
        """Sum out every variable not in ``keep``; the result follows ``keep``'s order."""
        axes = [self._axis(name) for name in keep]
        summed = tuple(i for i in range(len(self.variables)) if i not in axes)
        table = self.table.sum(axis=summed)
        remaining = sorted(axes)
        table = np.transpose(table, [remaining.index(a) for a in axes]) if axes else table
        return Distribution([self.variables[a] for a in axes], table)

    def condition(self, evidence: Mapping[str, str], interventions: Optional[Mapping[str, str]] = None) -> "Distribution":
        """
        Restrict to assignments agreeing with the evidence and renormalise.

        Raises:
            UnsupportedEvidenceError: if the evidence has probability zero.
        """
        if not evidence:
            return self
        mask = np.zeros_like(self.table)
        index = self._index(evidence)
        mask[index] = 1.0
        filtered = self.table * mask
        total = float(filtered.sum())
        if total <= 0.0:
            raise UnsupportedEvidenceError(dict(evidence), dict(interventions or {}))
        return Distribution(self.variables, filtered / total)

    def expectation(self, name: str, values: Mapping[str, float]) -> float:
        """Expectation of ``values[outcome of name]``."""
        marginal = self.marginalize([name])
        vector = np.array([float(values[o]) for o in marginal.variables[0].domain])
        return float(np.dot(marginal.table, vector))

    def max_abs_difference(self, other: "Distribution") -> Tuple[float, Dict[str, str]]:
        """Largest pointwise difference to another distribution over the same variables, and where."""
        if other.names != self.names:
            other = other.marginalize(self.names)
        diff = np.abs(self.table - other.table)
        index = np.unravel_index(int(np.argmax(diff)), diff.shape) if diff.size else ()
        where = {v.name: v.domain[i] for v, i in zip(self.variables, index)}
        return float(diff.max()) if diff.size else 0.0, where

    def total_variation(self, other: "Distribution") -> float:
        if other.names != self.names:
            other = other.marginalize(self.names)
        return 0.5 * float(np.abs(self.table - other.table).sum())

    def __repr__(self) -> str:
        return f"Distribution({list(self.names)}, mass={self.total_mass:.6g})"


def _broadcast(tensor: np.ndarray, axes: Sequence[int], ndim: int) -> np.ndarray:
    order = np.argsort(axes)
    moved = np.transpose(tensor, order)
    shape = [1] * ndim
    for axis, size in zip(sorted(axes), moved.shape):
        shape[axis] = size
    return moved.reshape(shape)


def check_state_space(g: MechanisedGraph, state_cap: Optional[int]) -> None:
    cap = config.get_state_cap() if state_cap is None else state_cap
    size = 1
    for variable in g.variables:
        size *= variable.cardinality
    if size > cap:
        raise StateSpaceTooLargeError(f"state space too large: {size} joint assignments (cap {cap})")


def joint(g: MechanisedGraph, state_cap: Optional[int] = None) -> Distribution:
    """
    The full joint distribution of a valid graph.

    Each full assignment gets the product of its CPD entries; object-level
    CPDs are read from the value of the mechanism parent.

    Args:
        g: A graph with an empty validation report.
        state_cap: Optional override of the enumeration cap.

    Returns:
        Distribution over all variables in topological order.
    """
    assert_valid(g)
    check_state_space(g, state_cap)
    order = topological_order(g)
    position = {name: i for i, name in enumerate(order)}
    table = np.ones([g.variable(n).cardinality for n in order], dtype=float)
    for name in order:
        axes = [position[p] for p in g.parents(name)] + [position[name]]
        table = table * _broadcast(g.cpd_tensor(name), axes, len(order))
    logging.debug(f"joint of {g.name or 'graph'}: {table.size} assignments")
    return Distribution([g.variable(n) for n in order], table)


def object_joint(g: MechanisedGraph, state_cap: Optional[int] = None) -> Distribution:
    """Joint over object-level variables, mechanisms summed out."""
    return joint(g, state_cap).marginalize(g.object_variables())


def _check_assignment(g: MechanisedGraph, assignment: Mapping[str, str], role: str) -> None:
    for name, outcome in assignment.items():
        variable = g.variable(name)
        if outcome not in variable.domain:
            raise InvalidQueryError(f"{role} {name}={outcome}: not in the domain of {name}")


def apply_intervention(g: MechanisedGraph, x: Mapping[str, str]) -> MechanisedGraph:
    """
    Graph surgery for do(x).

    Every intervened variable loses all incoming edges (an object variable
    also loses its mechanism parent) and gets a point-mass CPD; all other
    CPDs are unchanged.

    Raises:
        InvalidQueryError: when an outcome is outside the variable's domain.
    """
    if not x:
        return g
    _check_assignment(g, x, "intervention")
    cut = set(x)
    edges = {(p, c) for p, c in g.edges if c not in cut}
    information_edges = {(p, c) for p, c in g.information_edges if c not in cut}
    cpds = g.explicit_cpds()
    for name, outcome in x.items():
        cpds[name] = {(): {outcome: 1.0}}
    intervened = set(g.intervened) | {n for n in x if not g.variable(n).is_mechanism}
    logging.debug(f"do({', '.join(f'{k}={v}' for k, v in sorted(x.items()))}) on {g.name or 'graph'}")
    return g.replace(edges=edges, information_edges=information_edges, cpds=cpds, intervened=intervened)


def _check_query(g: MechanisedGraph, q: Query) -> None:
    overlap = set(q.interventions) & set(q.evidence)
    if overlap:
        raise InvalidQueryError(f"variables both intervened on and observed: {', '.join(sorted(overlap))}")
    _check_assignment(g, q.interventions, "intervention")
    _check_assignment(g, q.evidence, "evidence")
    for name in q.target:
        g.variable(name)


def marginal(g: MechanisedGraph, q: Query, state_cap: Optional[int] = None) -> Distribution:
    """
    P(target | do(interventions), evidence).

    Raises:
        UnsupportedEvidenceError: when the evidence has probability zero
            after the interventions.
    """
    _check_query(g, q)
    mutilated = apply_intervention(g, q.interventions)
    distribution = joint(mutilated, state_cap).condition(q.evidence, q.interventions)
    return distribution.marginalize(q.target)


def query_expectation(g: MechanisedGraph, q: Query, state_cap: Optional[int] = None) -> float:
    """
    E[U | do(interventions), evidence] for the utility variable named by q.target.

    Returns:
        The expected utility in the utility variable's units.
    """
    if len(q.target) != 1 or g.variable(q.target[0]).kind != VariableKind.UTILITY:
        raise InvalidQueryError(f"expectation target must be a single utility variable, got {q.target}")
    utility = g.variable(q.target[0])
    distribution = marginal(g, q, state_cap)
    return distribution.expectation(utility.name, utility.utility_values)


def truncated_factorization(g: MechanisedGraph, x: Mapping[str, str]) -> Distribution:
    """
    P(V | do(x)) evaluated directly as a product of the original CPDs of
    every non-intervened variable, zero for assignments inconsistent with x.

    Pure dictionary enumeration, independent of the surgery + tensor path.
    """
    assert_valid(g)
    _check_assignment(g, x, "intervention")
    check_state_space(g, None)
    order = topological_order(g)
    variables = [g.variable(n) for n in order]
    rows = {name: g.cpd_rows(name) for name in order if name not in x}
    parents = {name: g.parents(name) for name in order}
    table = np.zeros([v.cardinality for v in variables], dtype=float)
    for outcomes in product(*(v.domain for v in variables)):
        assignment = dict(zip(order, outcomes))
        if any(assignment[k] != v for k, v in x.items()):
            continue
        probability = 1.0
        for name in rows:
            row = tuple(assignment[p] for p in parents[name])
            probability *= rows[name][row].get(assignment[name], 0.0)
            if probability == 0.0:
                break
        table[tuple(v.index(o) for v, o in zip(variables, outcomes))] = probability
    return Distribution(variables, table)
