"""
Well-definedness of a parsed problem description.

A prediction that depends on the decision itself, while the decision
observes the prediction, closes a cycle D -> P -> D. Such a dependence has
to go through the decision rule (Dt -> Pt) instead.
"""

from typing import Dict, List, Set, Tuple

import networkx as nx

from app.causal.builder import mechanism_name
from app.causal.errors import Diagnostic, format_cycle
from app.dsl.description import Position, ProblemDescription
from app.models.decision import WellDefinednessReport


def _rotate(cycle: List[str]) -> List[str]:
    start = cycle.index(min(cycle))
    return cycle[start:] + cycle[:start]


def _graph(desc: ProblemDescription, which: str) -> nx.DiGraph:
    dag = nx.DiGraph()
    for obj in desc.objects:
        dag.add_edge(mechanism_name(obj.name), obj.name)
    for root in desc.mechanism_roots:
        if root.tag in ("both", which):
            dag.add_node(root.name)
    for edge in desc.edges_in(which):
        dag.add_edge(edge.parent, edge.child)
    return dag


def _cycles(desc: ProblemDescription) -> List[List[str]]:
    found: Set[Tuple[str, ...]] = set()
    for which in ("physical", "logical"):
        for cycle in nx.simple_cycles(_graph(desc, which)):
            found.add(tuple(_rotate(list(cycle))))
    return [list(c) for c in sorted(found)]


def _edges_of(cycle: List[str]) -> List[Tuple[str, str]]:
    return list(zip(cycle, cycle[1:] + cycle[:1]))


def _rule_message(decision: str, child: str, cycle: List[str]) -> str:
    return (f"prediction must depend on the decision rule {decision}\u0303, not the decision {decision}: "
            f"edge {decision}\u2192{child} closes the cycle {format_cycle(cycle)}")


def check_well_defined(desc: ProblemDescription) -> WellDefinednessReport:
    """
    Detect cycles in a parsed, possibly cyclic, problem description.

    A cycle running through a decision D along an edge D -> X, where X's
    distribution therefore conditions on D, gets the diagnostic that the
    prediction must depend on the decision rule instead, citing the edge.

    Returns:
        Report listing every cycle (as node lists) and one message per finding.
    """
    decisions = {o.name for o in desc.objects if o.kind == "decision"}
    cycles = _cycles(desc)
    messages: List[str] = []
    for cycle in cycles:
        messages.append(f"cycle: {format_cycle(cycle)}")
        for parent, child in _edges_of(cycle):
            if parent in decisions:
                messages.append(_rule_message(parent, child, cycle))
    return WellDefinednessReport(well_defined=not cycles, cycles=cycles, messages=messages)


def _edge_positions(desc: ProblemDescription) -> Dict[Tuple[str, str], Position]:
    positions: Dict[Tuple[str, str], Position] = {}
    for edge in desc.edges:
        positions.setdefault((edge.parent, edge.child), edge.position)
    return positions


def well_defined_diagnostics(desc: ProblemDescription, report: WellDefinednessReport) -> List[Diagnostic]:
    """Positioned diagnostics for a report, each placed at the first declared edge of its cycle."""
    positions = _edge_positions(desc)
    decisions = {o.name for o in desc.objects if o.kind == "decision"}
    diagnostics = []
    for cycle in report.cycles:
        edges = _edges_of(cycle)
        offending = [e for e in edges if e[0] in decisions]
        anchor = next((positions[e] for e in offending + edges if e in positions), desc.position)
        rendered = format_cycle(cycle)
        diagnostics.append(Diagnostic(anchor.line, anchor.column, "well_defined", f"cycle: {rendered}"))
        for parent, child in offending:
            where = positions.get((parent, child), anchor)
            diagnostics.append(Diagnostic(where.line, where.column, "well_defined", _rule_message(parent, child, cycle)))
    return diagnostics

