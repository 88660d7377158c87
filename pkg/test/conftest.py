from pathlib import Path
from typing import Dict, List

import pytest
from hypothesis import strategies as st

from app.causal.builder import GraphBuilder, mechanism_name
from app.causal.graph import MechanisedGraph
from app.decision.problems import newcomb, transparent_newcomb, twin_pd
from app.models.graph import MechanismValue, VariableKind

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS_DIR = ROOT / "problems"
MALFORMED_DIR = Path(__file__).resolve().parent / "data" / "malformed"

OUTCOMES = ("lo", "hi")


@pytest.fixture(scope="session")
def newcomb_problem():
    return newcomb()


@pytest.fixture(scope="session")
def transparent_problem():
    return transparent_newcomb()


@pytest.fixture(scope="session")
def twin_problem():
    return twin_pd()


@pytest.fixture(scope="session")
def builtin_problems(newcomb_problem, transparent_problem, twin_problem):
    return [newcomb_problem, transparent_problem, twin_problem]


def shipped_problem(name: str) -> str:
    return (PROBLEMS_DIR / name).read_text(encoding="utf-8")


_probability = st.floats(min_value=0.05, max_value=0.95, allow_nan=False, allow_infinity=False)


def _normalised(weights: List[float], labels) -> Dict[str, float]:
    total = sum(weights)
    distribution = {label: w / total for label, w in zip(labels, weights)}
    last = labels[-1]
    distribution[last] = 1.0 - sum(p for label, p in distribution.items() if label != last)
    return distribution


@st.composite
def mechanised_graphs(draw, max_objects: int = 4) -> MechanisedGraph:
    """
    Random valid mechanised graphs: binary chance variables, each governed
    by a mechanism with one or two values, random object-level and
    mechanism-level edges (always from lower to higher index, so acyclic)
    and strictly positive CPDs.
    """
    n = draw(st.integers(min_value=1, max_value=max_objects))
    names = [f"V{i}" for i in range(n)]
    b = GraphBuilder("random")
    for name in names:
        b.object(name, VariableKind.CHANCE, OUTCOMES)
    for j in range(n):
        for i in range(j):
            if draw(st.booleans()):
                b.edge(names[i], names[j])
    mechanism_parents: Dict[str, List[str]] = {mechanism_name(v): [] for v in names}
    for j in range(n):
        for i in range(j):
            if draw(st.integers(min_value=0, max_value=3)) == 0:
                parent, child = mechanism_name(names[i]), mechanism_name(names[j])
                b.mechanism_edge(parent, child)
                mechanism_parents[child].append(parent)

    value_ids: Dict[str, List[str]] = {}
    for name in names:
        parents = b.object_parents(name)
        rows = [()]
        for parent in parents:
            rows = [row + (o,) for row in rows for o in OUTCOMES]
        ids = []
        for k in range(draw(st.integers(min_value=1, max_value=2))):
            table = {}
            for row in rows:
                p = draw(_probability)
                table[row] = {"lo": p, "hi": 1.0 - p}
            value_id = f"{name.lower()}_{k}"
            b.value(MechanismValue(id=value_id, target=name, parents=parents, table=table))
            ids.append(value_id)
        value_ids[mechanism_name(name)] = ids

    for mech, parents in mechanism_parents.items():
        parents = sorted(parents)
        rows = [()]
        for parent in parents:
            rows = [row + (v,) for row in rows for v in value_ids[parent]]
        cpd = {}
        for row in rows:
            weights = [draw(_probability) for _ in value_ids[mech]]
            cpd[row] = _normalised(weights, value_ids[mech])
        b.cpd(mech, cpd)
    return b.build()
