"""
Build a DecisionProblem from a well-defined ProblemDescription.

Object-level declarations, values and the utility are shared by both
graphs; mechanism roots, mechanism edges and CPDs apply to the graph their
tag names (both by default). Semantic errors are collected with positions
and raised together.
"""

import logging
from itertools import product
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.causal.builder import PAYOFF_VALUE, GraphBuilder, mechanism_name
from app.causal.errors import Diagnostic, DtlabError, ProblemDefinitionError
from app.config import config
from app.decision.problems import DecisionProblem
from app.dsl.description import CpdDecl, Entry, Item, Position, ProblemDescription, Row, RuleRef, ValueDecl
from app.models.graph import DecisionRule, MechanismValue, parse_rule_spec

GRAPHS = ("physical", "logical")


class _Compiler:
    def __init__(self, desc: ProblemDescription):
        self.desc = desc
        self.diagnostics: List[Diagnostic] = []
        self.tolerance = config.get_tolerance()
        self.objects = {o.name: o for o in desc.objects}
        self.mechanisms = {mechanism_name(o.name): o.name for o in desc.objects}
        self.roots = {r.name: r for r in desc.mechanism_roots}
        self.rules: Dict[str, List[DecisionRule]] = {}

    def error(self, position: Position, message: str) -> None:
        self.diagnostics.append(Diagnostic(position.line, position.column, "semantic", message))

    # Lookups ----------------------------------------------------------------
    def known(self, name: str, position: Position) -> bool:
        if name in self.objects or name in self.mechanisms or name in self.roots:
            return True
        self.error(position, f"unknown variable {name}")
        return False

    def object_parents(self, name: str) -> Tuple[str, ...]:
        return tuple(sorted({e.parent for e in self.desc.edges
                             if e.child == name and e.level != "mechanism" and e.parent in self.objects}))

    def mechanism_parents(self, name: str, graph: str) -> Tuple[str, ...]:
        return tuple(sorted({e.parent for e in self.desc.edges_in(graph) if e.child == name and e.level == "mechanism"}))

    def resolve_rule(self, ref: RuleRef, decision: str) -> Optional[str]:
        """Canonical id of an inline rule of ``decision``."""
        try:
            parents, actions = parse_rule_spec(ref.text)
        except ValueError as e:
            self.error(ref.position, str(e))
            return None
        for rule in self.rules.get(decision, []):
            if rule.parents == parents and rule.actions == actions:
                return rule.id
        self.error(ref.position, f"{ref.text} is not a decision rule of {decision}")
        return None

    def resolve(self, item: Item, variable: str, position: Position) -> Optional[str]:
        """An outcome of ``variable`` written in a row or a distribution key."""
        decision = self.mechanisms.get(variable)
        if isinstance(item, RuleRef):
            if decision is None or self.objects[decision].kind != "decision":
                self.error(item.position, f"rule spec {item.text} given for {variable}, which is not a decision mechanism")
                return None
            return self.resolve_rule(item, decision)
        if item not in self.domain(variable):
            self.error(position, f"{item} is not an outcome of {variable}")
            return None
        return item

    def domain(self, variable: str) -> Tuple[str, ...]:
        if variable in self.objects:
            return tuple(self.objects[variable].domain)
        if variable in self.roots:
            return tuple(self.roots[variable].domain)
        obj = self.mechanisms[variable]
        if self.objects[obj].kind == "decision":
            return tuple(r.id for r in self.rules.get(obj, []))
        if self.objects[obj].kind == "utility":
            return (PAYOFF_VALUE,)
        return tuple(v.id for v in self.desc.values if v.target == obj)

    # Distributions ------------------------------------------------------------
    def distribution(self, entries: List[Entry], variable: str, position: Position) -> Optional[Dict[str, float]]:
        result: Dict[str, float] = {}
        ok = True
        for entry in entries:
            key = self.resolve(entry.key, variable, entry.position)
            if key is None:
                ok = False
                continue
            if key in result:
                self.error(entry.position, f"duplicate entry {key}")
                ok = False
            if entry.probability < 0:
                self.error(entry.position, f"negative probability {entry.probability:g}")
                ok = False
            result[key] = entry.probability
        total = sum(result.values())
        if ok and abs(total - 1.0) > self.tolerance:
            self.error(position, f"row not normalized (sum {total:g})")
            ok = False
        return result if ok else None

    def rows(self, rows: List[Row], parents: Tuple[str, ...], written: Tuple[str, ...],
             variable: str) -> Optional[Dict[Tuple[str, ...], Dict[str, float]]]:
        """Rows keyed by ``parents`` order from rows written in ``written`` order."""
        expected = set(product(*(self.domain(p) for p in parents)))
        table: Dict[Tuple[str, ...], Dict[str, float]] = {}
        ok = True
        for row in rows:
            distribution = self.distribution(row.entries, variable, row.position)
            if row.outcomes is None:
                if distribution is not None:
                    for key in expected:
                        table[key] = dict(distribution)
                ok = ok and distribution is not None
                continue
            if len(row.outcomes) != len(written):
                self.error(row.position, f"row has {len(row.outcomes)} outcome(s), expected {len(written)}")
                ok = False
                continue
            outcomes = [self.resolve(item, parent, row.position) for item, parent in zip(row.outcomes, written)]
            if any(o is None for o in outcomes) or distribution is None:
                ok = False
                continue
            by_parent = dict(zip(written, outcomes))
            key = tuple(by_parent[p] for p in parents)
            if key in table:
                self.error(row.position, f"duplicate row ({', '.join(outcomes)})")
                ok = False
            table[key] = distribution
        missing = sorted(expected - set(table))
        if ok and missing:
            self.error(rows[0].position if rows else Position(),
                       f"missing row(s) for {variable}: " + "; ".join(f"({', '.join(m)})" for m in missing))
            ok = False
        return table if ok else None

    # Statements -------------------------------------------------------------
    def declare_objects(self, b: GraphBuilder) -> None:
        declared = set()
        for obj in self.desc.objects:
            if obj.name in declared:
                self.error(obj.position, f"variable {obj.name} declared twice")
            declared.add(obj.name)
            try:
                b.object(obj.name, obj.kind, obj.domain, obj.utility_values)
            except ValidationError as e:
                self.error(obj.position, _message(e))
        for edge in self.desc.edges:
            if edge.level == "mechanism":
                continue
            if not (self.known(edge.parent, edge.position) and self.known(edge.child, edge.position)):
                continue
            if edge.parent not in self.objects or edge.child not in self.objects:
                self.error(edge.position, f"{edge.parent} -> {edge.child}: object edges join object variables "
                                          f"(use mechedge for mechanism variables)")
                continue
            if edge.level == "information":
                if self.objects[edge.child].kind != "decision":
                    self.error(edge.position, f"obsedge must end at a decision variable, {edge.child} is not one")
                    continue
                b.information_edge(edge.parent, edge.child)
            else:
                b.edge(edge.parent, edge.child)
        for obj in self.desc.objects:
            if obj.kind == "decision":
                try:
                    self.rules[obj.name] = b.rules(obj.name)
                except DtlabError as e:
                    self.error(obj.position, str(e))

    def add_value(self, b: GraphBuilder, value: ValueDecl) -> None:
        target = self.objects.get(value.target)
        if target is None:
            self.error(value.position, f"unknown variable {value.target}")
            return
        if target.kind != "chance":
            self.error(value.position, f"values are declared for chance variables; {value.target} is a {target.kind}")
            return
        parents = self.object_parents(value.target)
        rows = self.rows(value.rows, parents, parents, value.target)
        if rows is not None:
            b.value(MechanismValue(id=value.id, target=value.target, parents=parents, table=rows))

    def add_utility(self, b: GraphBuilder) -> None:
        for decl in self.desc.utilities:
            target = self.objects.get(decl.name)
            if target is None or target.kind != "utility":
                self.error(decl.position, f"{decl.name} is not a utility variable")
                continue
            parents = self.object_parents(decl.name)
            if sorted(decl.parents) != list(parents):
                self.error(decl.position, f"utility {decl.name} lists parents ({', '.join(decl.parents)}) "
                                          f"but its edges give ({', '.join(parents)})")
                continue
            by_value = {v: l for l, v in (target.utility_values or {}).items()}
            table = {}
            for row in decl.rows:
                if len(row.outcomes) != len(decl.parents):
                    self.error(row.position, f"row has {len(row.outcomes)} outcome(s), expected {len(decl.parents)}")
                    continue
                if any(self.resolve(o, p, row.position) is None for o, p in zip(row.outcomes, decl.parents)):
                    continue
                label = row.payoff
                if not isinstance(label, str):
                    label = by_value.get(label)
                    if label is None:
                        self.error(row.position, f"no outcome of {decl.name} has utility {row.payoff:g}")
                        continue
                elif label not in target.domain:
                    self.error(row.position, f"{label} is not an outcome of {decl.name}")
                    continue
                by_parent = dict(zip(decl.parents, row.outcomes))
                table[tuple(by_parent[p] for p in parents)] = {label: 1.0}
            missing = set(product(*(self.domain(p) for p in parents))) - set(table)
            if missing:
                self.error(decl.position, f"utility {decl.name} has no payoff for {len(missing)} row(s)")
                continue
            b.value(MechanismValue(id=PAYOFF_VALUE, target=decl.name, parents=parents, table=table))
        if len(self.desc.utilities) > 1:
            self.error(self.desc.utilities[1].position, "more than one utility statement")

    def mechanism_level(self, b: GraphBuilder, graph: str) -> None:
        for root in self.desc.mechanism_roots:
            if root.tag in ("both", graph):
                b.mechanism_root(root.name, root.domain)
        for edge in self.desc.edges_in(graph):
            if edge.level != "mechanism":
                continue
            if not (self.known(edge.parent, edge.position) and self.known(edge.child, edge.position)):
                continue
            if edge.parent in self.objects or edge.child in self.objects:
                self.error(edge.position, f"mechedge {edge.parent} -> {edge.child} must join mechanism variables")
                continue
            b.mechanism_edge(edge.parent, edge.child)
        seen: Dict[str, CpdDecl] = {}
        for cpd in self.desc.cpds:
            if cpd.tag not in ("both", graph):
                continue
            if not self.known(cpd.mechanism, cpd.position):
                continue
            if cpd.mechanism in self.objects:
                self.error(cpd.position, f"cpd {cpd.mechanism}: CPDs are given for mechanism variables, "
                                         f"object variables take theirs from values")
                continue
            if cpd.mechanism in seen:
                self.error(cpd.position, f"second cpd for {cpd.mechanism} in the {graph} graph "
                                         f"(missing physical/logical tag?)")
                continue
            seen[cpd.mechanism] = cpd
            parents = self.mechanism_parents(cpd.mechanism, graph)
            if sorted(cpd.parents) != list(parents):
                self.error(cpd.position, f"cpd {cpd.mechanism} lists parents ({', '.join(cpd.parents)}) but "
                                         f"{cpd.mechanism} has parents ({', '.join(parents)}) in the {graph} graph")
                continue
            rows = self.rows(cpd.rows, parents, tuple(cpd.parents), cpd.mechanism)
            if rows is not None:
                b.cpd(cpd.mechanism, rows)

    def prior(self) -> Optional[Dict[str, float]]:
        if len(self.desc.priors) > 1:
            self.error(self.desc.priors[1].position, "more than one prior statement")
        if not self.desc.priors:
            return None
        decl = self.desc.priors[0]
        decision = self.mechanisms.get(decl.mechanism)
        if decision is None or self.objects[decision].kind != "decision":
            self.error(decl.position, f"prior must name a decision mechanism, {decl.mechanism} is not one")
            return None
        if decl.uniform:
            return None
        return self.distribution(decl.entries, decl.mechanism, decl.position)

    # Build --------------------------------------------------------------------
    def build(self) -> DecisionProblem:
        desc = self.desc
        decisions = [o.name for o in desc.objects if o.kind == "decision"]
        utilities = [o.name for o in desc.objects if o.kind == "utility"]
        if len(decisions) != 1:
            self.error(desc.position, f"a problem has exactly one decision variable, found {len(decisions)}")
        if len(utilities) != 1:
            self.error(desc.position, f"a problem has exactly one utility variable, found {len(utilities)}")
        if self.diagnostics:
            raise ProblemDefinitionError(self.diagnostics)
        decision, utility = decisions[0], utilities[0]

        base = GraphBuilder(desc.name)
        self.declare_objects(base)
        for value in desc.values:
            self.add_value(base, value)
        self.add_utility(base)
        prior = self.prior()
        base.prior(decision, prior)

        tagged = any(r.tag != "both" for r in desc.mechanism_roots) or \
            any(e.tag != "both" for e in desc.edges) or any(c.tag != "both" for c in desc.cpds)
        builders = {}
        for graph in GRAPHS if tagged else GRAPHS[:1]:
            builders[graph] = base.fork(f"{desc.name}/{graph}" if tagged else desc.name)
            self.mechanism_level(builders[graph], graph)
        if self.diagnostics:
            raise ProblemDefinitionError(self.diagnostics)

        try:
            physical = builders["physical"].build()
            logical = builders["logical"].build() if tagged else physical
            problem = DecisionProblem(desc.name, physical, logical, decision, utility,
                                      canonical_observation=desc.canonical_observation, rule_prior=prior)
        except ProblemDefinitionError as e:
            raise ProblemDefinitionError([_at(d, desc.position) for d in e.diagnostics])
        except DtlabError as e:
            raise ProblemDefinitionError([Diagnostic(desc.position.line, desc.position.column, "semantic", str(e))])
        logging.info(f"loaded problem {desc.name} ({len(physical.names)} variables)")
        return problem


def _message(error: ValidationError) -> str:
    return "; ".join(e["msg"].removeprefix("Value error, ") for e in error.errors())


def _at(diagnostic: Diagnostic, position: Position) -> Diagnostic:
    if diagnostic.line:
        return diagnostic
    return Diagnostic(position.line, position.column, diagnostic.kind, diagnostic.message)


def build_problem(desc: ProblemDescription) -> DecisionProblem:
    """
    Turn a well-defined description into a validated DecisionProblem.

    Raises:
        ProblemDefinitionError: listing every semantic error with its position.
    """
    return _Compiler(desc).build()
