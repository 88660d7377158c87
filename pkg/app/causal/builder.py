import copy
from itertools import product
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from app.causal.graph import CpdRows, Edge, MechanisedGraph, rule_space
from app.models.graph import DecisionRule, MechanismValue, Variable, VariableKind, VariableLevel

CpdSpec = Union[CpdRows, Callable[[Dict[str, str]], Mapping[str, float]]]

MECHANISM_SUFFIX = "t"
PAYOFF_VALUE = "payoff"


def mechanism_name(object_name: str) -> str:
    """Name of the mechanism variable governing an object variable, e.g. D -> Dt."""
    return f"{object_name}{MECHANISM_SUFFIX}"


class GraphBuilder:
    """
    Incremental construction of a MechanisedGraph.

    Declaring an object variable X also declares its mechanism variable Xt
    and the edge Xt -> X. Decision mechanisms get the full rule space as
    their domain at build time; a utility's mechanism gets its single payoff
    value. Use ``fork()`` to share an object-level part between the
    physical and logical graphs of a problem.

    Usage Example
    =============

    .. code-block:: python

        b = GraphBuilder("coin")
        b.object("C", domain=["heads", "tails"])
        b.point_value("C", "heads")
        b.point_value("C", "tails")
        b.cpd("Ct", lambda _: {"heads": 0.5, "tails": 0.5})
        graph = b.build()
    """

    def __init__(self, name: str = ""):
        self.name = name
        self._objects: Dict[str, Variable] = {}
        self._mechanism_domains: Dict[str, Optional[Tuple[str, ...]]] = {}
        self._mechanism_of: Dict[str, str] = {}
        self._edges: List[Edge] = []
        self._information_edges: List[Edge] = []
        self._values: Dict[str, List[MechanismValue]] = {}
        self._cpds: Dict[str, CpdSpec] = {}
        self._priors: Dict[str, Optional[Dict[str, float]]] = {}

    def fork(self, name: Optional[str] = None) -> "GraphBuilder":
        clone = copy.deepcopy(self)
        if name is not None:
            clone.name = name
        return clone

    # Object level -------------------------------------------------------
    def object(self, name: str, kind: Union[str, VariableKind] = VariableKind.CHANCE,
               domain: Sequence[str] = (), utility_values: Optional[Mapping[str, float]] = None) -> "GraphBuilder":
        kind = VariableKind(kind)
        if kind == VariableKind.UTILITY and utility_values is not None and not domain:
            domain = list(utility_values)
        self._objects[name] = Variable(
            name=name, kind=kind, level=VariableLevel.OBJECT, domain=tuple(domain),
            utility_values=dict(utility_values) if utility_values is not None else None,
        )
        mech = mechanism_name(name)
        self._mechanism_domains[mech] = None
        self._mechanism_of[name] = mech
        self._edges.append((mech, name))
        return self

    def edge(self, parent: str, child: str) -> "GraphBuilder":
        self._edges.append((parent, child))
        return self

    def information_edge(self, parent: str, decision: str) -> "GraphBuilder":
        self._edges.append((parent, decision))
        self._information_edges.append((parent, decision))
        return self

    def remove_edge(self, parent: str, child: str) -> "GraphBuilder":
        self._edges = [e for e in self._edges if e != (parent, child)]
        self._information_edges = [e for e in self._information_edges if e != (parent, child)]
        return self

    def object_parents(self, name: str) -> Tuple[str, ...]:
        return tuple(sorted({p for p, c in self._edges if c == name and p in self._objects}))

    def observations(self, decision: str) -> Tuple[str, ...]:
        return tuple(sorted({p for p, c in self._information_edges if c == decision}))

    # Mechanism level ----------------------------------------------------
    def mechanism_root(self, name: str, domain: Sequence[str]) -> "GraphBuilder":
        """Declare a mechanism-level variable that governs no object variable (e.g. a common source)."""
        self._mechanism_domains[name] = tuple(domain)
        return self

    def mechanism_edge(self, parent: str, child: str) -> "GraphBuilder":
        return self.edge(parent, child)

    def value(self, value: MechanismValue) -> "GraphBuilder":
        """Add a named value to the mechanism of ``value.target``."""
        self._values.setdefault(mechanism_name(value.target), []).append(value)
        return self

    def point_value(self, target: str, outcome: str, id: Optional[str] = None) -> "GraphBuilder":
        """A value setting ``target`` to ``outcome`` whatever its object parents."""
        parents = self.object_parents(target)
        domains = [self._objects[p].domain for p in parents]
        return self.value(MechanismValue.from_function(id or outcome, target, parents, domains,
                                                       lambda _row: {outcome: 1.0}))

    def function_value(self, target: str, id: str,
                       fn: Callable[[Dict[str, str]], Mapping[str, float]]) -> "GraphBuilder":
        """A value given by ``fn(parent assignment) -> distribution over target``."""
        parents = self.object_parents(target)
        domains = [self._objects[p].domain for p in parents]
        return self.value(MechanismValue.from_function(id, target, parents, domains,
                                                       lambda row: fn(dict(zip(parents, row)))))

    def utility(self, name: str, payoff: Callable[[Dict[str, str]], str]) -> "GraphBuilder":
        """Set the single deterministic mechanism value of a utility variable."""
        self._values[mechanism_name(name)] = []
        return self.function_value(name, PAYOFF_VALUE, lambda a: {payoff(a): 1.0})

    def rules(self, decision: str) -> List[DecisionRule]:
        """The rule space of a decision given the information edges declared so far."""
        observations = [self._objects[o] for o in self.observations(decision)]
        return rule_space(self._objects[decision], observations)

    def cpd(self, name: str, spec: CpdSpec) -> "GraphBuilder":
        self._cpds[name] = spec
        return self

    def prior(self, decision: str, prior: Optional[Mapping[str, float]] = None) -> "GraphBuilder":
        """Rule prior of a decision, used as its mechanism's CPD wherever that mechanism is a root."""
        self._priors[mechanism_name(decision)] = dict(prior) if prior is not None else None
        return self

    def mechanism_domain(self, name: str) -> Tuple[str, ...]:
        if self._mechanism_domains.get(name) is not None:
            return self._mechanism_domains[name]
        obj = next((o for o, m in self._mechanism_of.items() if m == name), None)
        if obj is not None and self._objects[obj].kind == VariableKind.DECISION:
            return tuple(r.id for r in self.rules(obj))
        return tuple(v.id for v in self._values.get(name, []))

    # Build ----------------------------------------------------------------
    def build(self) -> MechanisedGraph:
        mechanism_values: Dict[str, List[MechanismValue]] = {k: list(v) for k, v in self._values.items()}
        for obj, mech in self._mechanism_of.items():
            if self._objects[obj].kind == VariableKind.DECISION:
                mechanism_values[mech] = list(self.rules(obj))

        variables = list(self._objects.values())
        domains: Dict[str, Tuple[str, ...]] = {v.name: v.domain for v in variables}
        for mech in self._mechanism_domains:
            domain = self.mechanism_domain(mech)
            variables.append(Variable(name=mech, level=VariableLevel.MECHANISM, domain=domain))
            domains[mech] = domain

        cpds: Dict[str, CpdRows] = {}
        for mech in self._mechanism_domains:
            parents = tuple(sorted({p for p, c in self._edges if c == mech}))
            spec = self._cpds.get(mech)
            if spec is None and not parents:
                if mech in self._priors:
                    spec = _prior_rows(domains[mech], self._priors[mech])
                elif len(domains[mech]) == 1:
                    spec = {(): {domains[mech][0]: 1.0}}
            if spec is None:
                continue
            cpds[mech] = _tabulate(spec, parents, domains)

        return MechanisedGraph(
            variables=variables,
            edges=set(self._edges),
            mechanism_of=self._mechanism_of,
            mechanism_values=mechanism_values,
            cpds=cpds,
            information_edges=set(self._information_edges),
            name=self.name,
        )


def _prior_rows(domain: Tuple[str, ...], prior: Optional[Mapping[str, float]]) -> CpdRows:
    if prior is None:
        return {(): {rule: 1.0 / len(domain) for rule in domain}}
    return {(): {rule: float(prior.get(rule, 0.0)) for rule in domain}}


def _tabulate(spec: CpdSpec, parents: Tuple[str, ...], domains: Mapping[str, Tuple[str, ...]]) -> CpdRows:
    if not callable(spec):
        return {tuple(row): dict(d) for row, d in spec.items()}
    return {row: dict(spec(dict(zip(parents, row)))) for row in product(*(domains[p] for p in parents))}
