"""
d-separation by reachability over (variable, direction) states.

A trail is active given Z when every collider on it is in Z or has a
descendant in Z, and no other node on it is in Z.
"""

from collections import deque
from typing import Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from app.causal.errors import InvalidQueryError
from app.causal.graph import MechanisedGraph

_UP = "up"      # arrived from a child
_DOWN = "down"  # arrived from a parent

State = Tuple[str, str]


def _check(g: MechanisedGraph, *groups: Iterable[str]) -> List[Set[str]]:
    sets = []
    for group in groups:
        names = set(group)
        for name in names:
            g.variable(name)
        sets.append(names)
    return sets


def active_path(g: MechanisedGraph, X: Iterable[str], Y: Iterable[str], Z: Iterable[str] = ()) -> Optional[List[str]]:
    """
    Find one active trail from X to Y given Z.

    Args:
        g: The graph.
        X, Y: Endpoint variable sets.
        Z: Conditioning set, disjoint from X and Y.

    Returns:
        The trail as a list of variable names, or None when X and Y are
        d-separated by Z.
    """
    X, Y, Z = _check(g, X, Y, Z)
    if (X | Y) & Z:
        raise InvalidQueryError(f"conditioning set overlaps the endpoints: {', '.join(sorted((X | Y) & Z))}")
    shared = sorted(X & Y)
    if shared:
        return [shared[0]]

    dag = g.dag
    opened = set(Z)
    for z in Z:
        opened |= nx.ancestors(dag, z)

    previous: Dict[State, Optional[State]] = {}
    queue = deque()
    for x in sorted(X):
        state = (x, _UP)
        previous[state] = None
        queue.append(state)

    while queue:
        state = queue.popleft()
        node, direction = state
        if node in Y:
            return _trail(previous, state)
        successors: List[State] = []
        if direction == _UP and node not in Z:
            successors += [(p, _UP) for p in sorted(dag.predecessors(node))]
            successors += [(c, _DOWN) for c in sorted(dag.successors(node))]
        elif direction == _DOWN:
            if node not in Z:
                successors += [(c, _DOWN) for c in sorted(dag.successors(node))]
            if node in opened:
                successors += [(p, _UP) for p in sorted(dag.predecessors(node))]
        for nxt in successors:
            if nxt not in previous:
                previous[nxt] = state
                queue.append(nxt)
    return None


def _trail(previous: Dict[State, Optional[State]], state: State) -> List[str]:
    nodes = []
    current: Optional[State] = state
    while current is not None:
        nodes.append(current[0])
        current = previous[current]
    return list(reversed(nodes))


def d_separated(g: MechanisedGraph, X: Iterable[str], Y: Iterable[str], Z: Iterable[str] = ()) -> bool:
    """
    True iff every trail between X and Y is blocked by Z.

    A variable is never separated from itself, so overlapping X and Y give False.
    """
    return active_path(g, X, Y, Z) is None


def render_path(g: MechanisedGraph, path: List[str]) -> str:
    """Render a trail as an arrow chain, e.g. ``Dt→Pt→P→U`` or ``D←Dt→Pt``."""
    if not path:
        return ""
    rendered = path[0]
    edges = g.edges
    for a, b in zip(path, path[1:]):
        rendered += ("→" if (a, b) in edges else "←") + b
    return rendered
