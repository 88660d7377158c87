"""
Write a DecisionProblem back out as .dtp text.

Numbers are written with ``repr`` so parsing the output gives back the same
floats. Mechanism-level structure shared by both graphs is written once,
the rest is tagged with the graph it belongs to.
"""

from typing import Dict, List, Optional, Tuple

from app.causal.builder import PAYOFF_VALUE
from app.causal.graph import CpdRows, MechanisedGraph
from app.config import config
from app.decision.problems import DecisionProblem
from app.models.graph import MechanismValue, VariableKind


def _number(value: float) -> str:
    value = float(value)
    return repr(int(value)) if value.is_integer() and abs(value) < 1e15 else repr(value)


def _tuple(items) -> str:
    return "(" + ", ".join(items) + ")"


def _distribution(distribution: Dict[str, float]) -> str:
    return "{ " + ", ".join(f"{key}: {_number(p)}" for key, p in distribution.items()) + " }"


def _rows(rows: CpdRows, indent: str = "    ") -> str:
    if list(rows) == [()]:
        return _distribution(rows[()])
    lines = [f"{indent}{_tuple(row)} -> {_distribution(d)}" for row, d in rows.items()]
    return "{\n" + "\n".join(lines) + "\n}"


def _close(a: Optional[CpdRows], b: Optional[CpdRows]) -> bool:
    if a is None or b is None:
        return a is b
    if set(a) != set(b):
        return False
    tolerance = config.get_tolerance()
    for row in a:
        outcomes = set(a[row]) | set(b[row])
        if any(abs(a[row].get(o, 0.0) - b[row].get(o, 0.0)) > tolerance for o in outcomes):
            return False
    return True


def _tag(present: Tuple[bool, bool]) -> str:
    return {(True, True): "", (True, False): " physical", (False, True): " logical"}[present]


def _object_section(p: DecisionProblem) -> List[str]:
    g = p.physical_graph
    lines = []
    for name in g.object_variables():
        v = g.variable(name)
        if v.kind == VariableKind.UTILITY:
            labels = ", ".join(f"{label}={_number(v.utility_values[label])}" for label in v.domain)
        else:
            labels = ", ".join(v.domain)
        lines.append(f"object {name} : {v.kind.value} {{ {labels} }}")
    lines.append("")
    for parent, child in sorted(g.edges):
        if g.variable(parent).is_mechanism:
            continue
        keyword = "obsedge" if (parent, child) in g.information_edges else "edge"
        lines.append(f"{keyword} {parent} -> {child}")
    return lines


def _value(value: MechanismValue) -> str:
    if not value.parents:
        return f"value {value.id} : {value.target} = {_distribution(value.table[()])}"
    return f"value {value.id} : {value.target} = {_rows(value.table)}"


def _utility(value: MechanismValue) -> str:
    rows = [f"    {_tuple(row)} = {next(l for l, q in d.items() if q > 0)}" for row, d in value.table.items()]
    return f"utility {value.target} | {', '.join(value.parents)} {{\n" + "\n".join(rows) + "\n}"


def _value_section(p: DecisionProblem) -> List[str]:
    g, l = p.physical_graph, p.logical_graph
    lines = []
    for name in g.object_variables():
        variable = g.variable(name)
        if variable.kind == VariableKind.DECISION:
            continue
        mech = g.mechanism_of[name]
        values = g.mechanism_values(mech)
        if [v.model_dump() for v in values] != [v.model_dump() for v in l.mechanism_values(mech)]:
            raise ValueError(f"values of {mech} differ between the physical and logical graphs")
        for value in values:
            if variable.kind == VariableKind.UTILITY and value.id == PAYOFF_VALUE:
                lines.append(_utility(value))
            else:
                lines.append(_value(value))
    return lines


def _mechanism_structure(g: MechanisedGraph) -> Tuple[Dict[str, Tuple[str, ...]], set]:
    governed = set(g.mechanism_of.values())
    roots = {m: g.variable(m).domain for m in g.mechanism_variables() if m not in governed}
    edges = {(a, b) for a, b in g.edges if g.variable(b).is_mechanism}
    return roots, edges


def _implicit_cpd(p: DecisionProblem, g: MechanisedGraph, mech: str, rows: CpdRows) -> bool:
    """CPDs the parser derives on its own: a root decision mechanism's prior, single-valued roots."""
    if g.parents(mech):
        return False
    if mech == p.decision_mechanism:
        return True
    domain = g.variable(mech).domain
    return len(domain) == 1 and _close(rows, {(): {domain[0]: 1.0}})


def _mechanism_section(p: DecisionProblem) -> List[str]:
    graphs = (p.physical_graph, p.logical_graph)
    structures = [_mechanism_structure(g) for g in graphs]
    lines = []

    root_names = sorted(set(structures[0][0]) | set(structures[1][0]))
    for name in root_names:
        present = tuple(name in s[0] for s in structures)
        domain = next(s[0][name] for s in structures if name in s[0])
        lines.append(f"mechroot {name} {{ {', '.join(domain)} }}{_tag(present)}")

    for parent, child in sorted(structures[0][1] | structures[1][1]):
        present = tuple((parent, child) in s[1] for s in structures)
        lines.append(f"mechedge {parent} -> {child}{_tag(present)}")

    for mech in sorted(set(graphs[0].mechanism_variables()) | set(graphs[1].mechanism_variables())):
        entries = []
        for g in graphs:
            rows = g.explicit_cpds().get(mech) if mech in g else None
            if rows is not None and _implicit_cpd(p, g, mech, rows):
                rows = None
            entries.append((rows, g.parents(mech) if rows is not None else ()))
        if entries[0][0] is None and entries[1][0] is None:
            continue
        if entries[0][1] == entries[1][1] and _close(entries[0][0], entries[1][0]):
            lines.append(_cpd(mech, entries[0][1], entries[0][0], ""))
            continue
        for (rows, parents), tag in zip(entries, (" physical", " logical")):
            if rows is not None:
                lines.append(_cpd(mech, parents, rows, tag))
    return lines


def _cpd(mech: str, parents: Tuple[str, ...], rows: CpdRows, tag: str) -> str:
    head = f"cpd {mech}" + (f" | {', '.join(parents)}" if parents else "") + tag
    return f"{head} {_rows(rows)}"


def _prior(p: DecisionProblem) -> str:
    values = list(p.rule_prior.values())
    if values and max(values) - min(values) <= config.get_tolerance():
        return f"prior {p.decision_mechanism} = uniform"
    return f"prior {p.decision_mechanism} = {_distribution(p.rule_prior)}"


def serialize_problem(p: DecisionProblem) -> str:
    """
    Render a problem as .dtp text.

    Returns:
        Text that ``parse_problem`` turns back into a problem equal to ``p``.

    Raises:
        ValueError: when the two graphs carry different mechanism values,
            which the file format cannot express.
    """
    sections = [
        [f'problem "{p.name}"'],
        _object_section(p),
        _value_section(p),
        _mechanism_section(p),
        [_prior(p)],
    ]
    if p.canonical_observation is not None:
        assignment = ", ".join(f"{k}={v}" for k, v in sorted(p.canonical_observation.items()))
        sections.append([f"canonical_obs {{ {assignment} }}"])
    return "\n\n".join("\n".join(section) for section in sections if section) + "\n"
