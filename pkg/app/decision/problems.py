"""
Decision problems: a physical and a logical-causal mechanised graph over
the same object-level variables, with one decision and one utility.

Built-in problems: Newcomb, Transparent Newcomb, and the Twin Prisoner's
Dilemma (a twin version of a symmetric normal-form game).
"""

import logging
from itertools import product
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from app.causal.builder import GraphBuilder
from app.causal.errors import Diagnostic, InvalidGraphError, InvalidParameterError, ProblemDefinitionError
from app.causal.graph import MechanisedGraph, observation_set, validate_graph
from app.causal.inference import object_joint
from app.config import config
from app.models.decision import EquivalenceReport
from app.models.graph import DecisionRule, VariableKind, VariableLevel, parse_rule_spec


class DecisionProblem:
    """
    A single-decision problem with paired physical and logical graphs.

    The two graphs share their object-level variables, object-level edges
    and information edges; they differ only at the mechanism level.

    Args:
        name: Problem name.
        physical_graph: Graph under physical causality.
        logical_graph: Graph under logical causality.
        decision: Name of the decision variable.
        utility: Name of the utility variable.
        canonical_observation: Observation at which updateless verdicts are
            read off as actions.
        rule_prior: Rule spec -> probability; defaults to the root CPD of the
            decision mechanism in the logical graph.
        require_positive_prior: Reject priors with zero entries.
        parameters: Builder parameters, kept for display.

    Raises:
        ProblemDefinitionError: listing every violated invariant.
    """

    def __init__(
        self,
        name: str,
        physical_graph: MechanisedGraph,
        logical_graph: MechanisedGraph,
        decision: str,
        utility: str,
        canonical_observation: Optional[Mapping[str, str]] = None,
        rule_prior: Optional[Mapping[str, float]] = None,
        require_positive_prior: bool = True,
        parameters: Optional[Mapping[str, object]] = None,
    ):
        self.name = name
        self.physical_graph = physical_graph
        self.logical_graph = logical_graph
        self.decision = decision
        self.utility = utility
        self.canonical_observation = dict(canonical_observation) if canonical_observation is not None else None
        self.require_positive_prior = require_positive_prior
        self.parameters = dict(parameters or {})
        if rule_prior is None:
            rule_prior = _root_prior(logical_graph, decision) or _root_prior(physical_graph, decision) or {}
        self.rule_prior: Dict[str, float] = {k: float(v) for k, v in rule_prior.items()}

        violations = self.violations()
        if violations:
            raise ProblemDefinitionError([Diagnostic(0, 0, "semantic", f"{name}: {v}") for v in violations])

    @property
    def decision_mechanism(self) -> str:
        return self.physical_graph.mechanism_of[self.decision]

    @property
    def observations(self) -> Tuple[str, ...]:
        return observation_set(self.physical_graph, self.decision)

    def graph(self, which: str) -> MechanisedGraph:
        if which == "physical":
            return self.physical_graph
        if which == "logical":
            return self.logical_graph
        raise ValueError(f"unknown graph {which!r} (expected physical or logical)")

    def rules(self) -> List[DecisionRule]:
        return list(self.physical_graph.decision_rules(self.decision))

    def rule(self, spec: str) -> DecisionRule:
        """Look up a rule by its spec, ignoring whitespace and clause order."""
        parents, actions = parse_rule_spec(spec)
        for rule in self.rules():
            if rule.parents == parents and rule.actions == actions:
                return rule
        raise KeyError(f"{spec!r} is not a decision rule of {self.decision}")

    def violations(self) -> List[str]:
        """Every violated DecisionProblem invariant; empty iff well formed."""
        problems: List[str] = []
        tolerance = config.get_tolerance()
        for label, g in (("physical", self.physical_graph), ("logical", self.logical_graph)):
            problems += [f"{label} graph: {v}" for v in validate_graph(g)]
            decisions = g.decision_variables()
            utilities = g.utility_variables()
            if decisions != [self.decision]:
                problems.append(f"{label} graph must have exactly the decision variable {self.decision}, found {decisions}")
            if utilities != [self.utility]:
                problems.append(f"{label} graph must have exactly the utility variable {self.utility}, found {utilities}")
        if problems:
            return problems

        p, l = self.physical_graph, self.logical_graph
        p_objects = [p.variable(n) for n in p.object_variables()]
        l_objects = [l.variable(n) for n in l.object_variables()]
        if p_objects != l_objects:
            problems.append("physical and logical graphs declare different object-level variables")
        if _object_edges(p) != _object_edges(l):
            problems.append("physical and logical graphs have different object-level edges")
        if p.information_edges != l.information_edges:
            problems.append("physical and logical graphs have different information edges")

        rule_ids = [r.id for r in self.rules()]
        if set(self.rule_prior) != set(rule_ids):
            problems.append(f"rule prior must cover exactly the rules of {self.decision}")
        else:
            if any(v < 0 for v in self.rule_prior.values()):
                problems.append("rule prior has a negative entry")
            if abs(sum(self.rule_prior.values()) - 1.0) > tolerance:
                problems.append(f"rule prior not normalized (sum {sum(self.rule_prior.values()):g})")
            if self.require_positive_prior and any(v <= 0 for v in self.rule_prior.values()):
                problems.append("rule prior must be strictly positive")
            for label, g in (("physical", p), ("logical", l)):
                root = _root_prior(g, self.decision)
                if root is not None and any(abs(root[k] - self.rule_prior[k]) > tolerance for k in rule_ids):
                    problems.append(f"root CPD of {self.decision_mechanism} in the {label} graph differs from the rule prior")

        if self.canonical_observation is not None:
            if set(self.canonical_observation) != set(self.observations):
                problems.append(f"canonical observation must assign exactly ({', '.join(self.observations)})")
            for var, outcome in self.canonical_observation.items():
                if var in p and outcome not in p.variable(var).domain:
                    problems.append(f"canonical observation {var}={outcome} is not in the domain of {var}")
        return problems

    def with_rule_prior(self, prior: Mapping[str, float]) -> "DecisionProblem":
        """The same problem with another rule prior (applied wherever the decision mechanism is a root)."""
        mech = self.decision_mechanism

        def reprior(g: MechanisedGraph) -> MechanisedGraph:
            if g.parents(mech):
                return g
            cpds = g.explicit_cpds()
            cpds[mech] = {(): {rule: float(prior.get(rule, 0.0)) for rule in g.variable(mech).domain}}
            return g.replace(cpds=cpds)

        physical = reprior(self.physical_graph)
        logical = physical if self.logical_graph is self.physical_graph else reprior(self.logical_graph)
        return DecisionProblem(
            self.name, physical, logical, self.decision, self.utility,
            canonical_observation=self.canonical_observation, rule_prior=prior,
            require_positive_prior=self.require_positive_prior, parameters=self.parameters,
        )

    def structurally_equal(self, other: "DecisionProblem") -> bool:
        tolerance = config.get_tolerance()
        return (
            isinstance(other, DecisionProblem)
            and self.name == other.name
            and self.decision == other.decision
            and self.utility == other.utility
            and self.canonical_observation == other.canonical_observation
            and set(self.rule_prior) == set(other.rule_prior)
            and all(abs(self.rule_prior[k] - other.rule_prior[k]) <= tolerance for k in self.rule_prior)
            and self.physical_graph.structurally_equal(other.physical_graph)
            and self.logical_graph.structurally_equal(other.logical_graph)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionProblem):
            return NotImplemented
        return self.structurally_equal(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"DecisionProblem({self.name!r}, decision={self.decision!r}, utility={self.utility!r})"


def _object_edges(g: MechanisedGraph):
    return {(a, b) for a, b in g.edges if g.variable(a).level == VariableLevel.OBJECT}


def _root_prior(g: MechanisedGraph, decision: str) -> Optional[Dict[str, float]]:
    mech = g.mechanism_of.get(decision)
    if mech is None or g.parents(mech):
        return None
    rows = g.explicit_cpds().get(mech)
    if not rows or () not in rows:
        return None
    return {rule: rows[()].get(rule, 0.0) for rule in g.variable(mech).domain}


# ---------------------------------------------------------------------- #
# Built-in problems
# ---------------------------------------------------------------------- #
def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")


def _check_payoffs(**payoffs: float) -> None:
    for name, value in payoffs.items():
        if value < 0:
            raise InvalidParameterError(f"{name} must be non-negative, got {value}")


def _newcomb_builder(name: str, small: float, big: float) -> GraphBuilder:
    b = GraphBuilder(name)
    b.object("D", VariableKind.DECISION, ["one_box", "two_box"])
    b.object("P", VariableKind.CHANCE, ["full", "empty"])
    b.object("U", VariableKind.UTILITY,
             utility_values={"nothing": 0.0, "small": float(small), "big": float(big), "both": float(big + small)})
    b.edge("D", "U").edge("P", "U")
    b.point_value("P", "full", id="fill")
    b.point_value("P", "empty", id="leave")
    payoff = {("one_box", "full"): "big", ("one_box", "empty"): "nothing",
              ("two_box", "full"): "both", ("two_box", "empty"): "small"}
    b.utility("U", lambda a: payoff[(a["D"], a["P"])])
    b.mechanism_edge("Dt", "Pt")
    return b


def _prediction_cpd(rules: Sequence[DecisionRule], observation: Mapping[str, str], accuracy: float) -> Callable:
    by_id = {r.id: r for r in rules}

    def cpd(assignment: Dict[str, str]) -> Dict[str, float]:
        fill = accuracy if by_id[assignment["Dt"]].action_at(observation) == "one_box" else 1.0 - accuracy
        return {"fill": fill, "leave": 1.0 - fill}

    return cpd


def newcomb(accuracy: float = 0.99, small: float = 1_000, big: float = 1_000_000,
            rule_prior: Optional[Mapping[str, float]] = None) -> DecisionProblem:
    """
    Newcomb's problem.

    The predictor inspects the decision rule and fills the opaque box with
    probability ``accuracy`` when the rule one-boxes (``1 - accuracy``
    otherwise). Physical and logical graphs coincide.
    """
    _check_probability("accuracy", accuracy)
    _check_payoffs(small=small, big=big)
    b = _newcomb_builder("newcomb", small, big)
    b.cpd("Pt", _prediction_cpd(b.rules("D"), {}, accuracy))
    b.prior("D", rule_prior)
    graph = b.build()
    return DecisionProblem("newcomb", graph, graph, "D", "U", rule_prior=rule_prior,
                           parameters=dict(accuracy=accuracy, small=small, big=big))


def transparent_newcomb(accuracy: float = 0.99, small: float = 1_000, big: float = 1_000_000,
                        rule_prior: Optional[Mapping[str, float]] = None) -> DecisionProblem:
    """
    Transparent Newcomb: the agent sees the box before choosing.

    The predictor reads only what the rule does on seeing a full box.
    """
    _check_probability("accuracy", accuracy)
    _check_payoffs(small=small, big=big)
    b = _newcomb_builder("transparent_newcomb", small, big)
    b.information_edge("P", "D")
    b.cpd("Pt", _prediction_cpd(b.rules("D"), {"P": "full"}, accuracy))
    b.prior("D", rule_prior)
    graph = b.build()
    return DecisionProblem("transparent_newcomb", graph, graph, "D", "U",
                           canonical_observation={"P": "full"}, rule_prior=rule_prior,
                           parameters=dict(accuracy=accuracy, small=small, big=big))


def _copy_distribution(actions: Sequence[str], chosen: str, correlation: float, prefix: str) -> Dict[str, float]:
    others = [a for a in actions if a != chosen]
    spread = (1.0 - correlation) / len(others) if others else 0.0
    return {f"{prefix}{a}": (correlation if a == chosen else spread) for a in actions}


def twin_game(
    payoffs: Mapping[Tuple[str, str], float],
    actions: Sequence[str],
    payoff_labels: Optional[Mapping[Tuple[str, str], str]] = None,
    correlation: float = 1.0,
    logical_correlation: Optional[float] = None,
    name: str = "twin_game",
) -> DecisionProblem:
    """
    A twin version of a symmetric two-player normal-form game.

    Args:
        payoffs: (my action, twin's action) -> my utility.
        actions: Action labels shared by both players.
        payoff_labels: Optional utility outcome label per action pair.
        correlation: Probability that the twin's policy copies the source
            (physical) or the agent's policy (logical).
        logical_correlation: Overrides ``correlation`` in the logical graph.
        name: Problem name.

    Physical graph: a common source S determines both policies.
    Logical graph: the agent's policy determines the twin's.
    """
    _check_probability("correlation", correlation)
    logical_correlation = correlation if logical_correlation is None else logical_correlation
    _check_probability("logical_correlation", logical_correlation)
    pairs = list(product(actions, actions))
    if set(payoffs) != set(pairs):
        raise InvalidParameterError("payoffs must give a value for every pair of actions")
    labels = dict(payoff_labels or {pair: f"{pair[0]}__{pair[1]}" for pair in pairs})
    if len(set(labels.values())) != len(pairs):
        raise InvalidParameterError("payoff labels must be distinct")

    b = GraphBuilder(name)
    b.object("D", VariableKind.DECISION, actions)
    b.object("T", VariableKind.CHANCE, actions)
    b.object("U", VariableKind.UTILITY, utility_values={labels[pair]: float(payoffs[pair]) for pair in pairs})
    b.edge("D", "U").edge("T", "U")
    for action in actions:
        b.point_value("T", action, id=f"twin_{action}")
    b.utility("U", lambda a: labels[(a["D"], a["T"])])
    b.prior("D")
    rules = {r.id: r for r in b.rules("D")}

    physical = b.fork(f"{name}/physical")
    physical.mechanism_root("S", actions)
    physical.mechanism_edge("S", "Dt").mechanism_edge("S", "Tt")
    physical.cpd("S", lambda _: {a: 1.0 / len(actions) for a in actions})
    rule_for = {rules[r].action_at({}): r for r in rules}
    physical.cpd("Dt", lambda a: {rule: (1.0 if rule == rule_for[a["S"]] else 0.0) for rule in rules})
    physical.cpd("Tt", lambda a: _copy_distribution(actions, a["S"], correlation, "twin_"))

    logical = b.fork(f"{name}/logical")
    logical.mechanism_edge("Dt", "Tt")
    logical.cpd("Tt", lambda a: _copy_distribution(actions, rules[a["Dt"]].action_at({}), logical_correlation, "twin_"))

    return DecisionProblem(name, physical.build(), logical.build(), "D", "U",
                           parameters=dict(correlation=correlation, logical_correlation=logical_correlation))


def twin_pd(temptation: float = 5, reward: float = 3, punishment: float = 1, sucker: float = 0,
            correlation: float = 1.0, logical_correlation: Optional[float] = None) -> DecisionProblem:
    """
    Twin Prisoner's Dilemma against an opponent running the same source code.

    Payoffs must rank temptation > reward > punishment > sucker.
    """
    if not temptation > reward > punishment > sucker:
        raise InvalidParameterError(
            f"payoffs must satisfy temptation > reward > punishment > sucker, got "
            f"{temptation}, {reward}, {punishment}, {sucker}"
        )
    actions = ["co_operate", "defect"]
    payoffs = {("co_operate", "co_operate"): reward, ("co_operate", "defect"): sucker,
               ("defect", "co_operate"): temptation, ("defect", "defect"): punishment}
    labels = {("co_operate", "co_operate"): "reward", ("co_operate", "defect"): "sucker",
              ("defect", "co_operate"): "temptation", ("defect", "defect"): "punishment"}
    problem = twin_game(payoffs, actions, labels, correlation, logical_correlation, name="twin_pd")
    problem.parameters.update(temptation=temptation, reward=reward, punishment=punishment, sucker=sucker)
    return problem


BUILTINS: Dict[str, Callable[..., DecisionProblem]] = {
    "newcomb": newcomb,
    "transparent_newcomb": transparent_newcomb,
    "twin_pd": twin_pd,
}


def builtin(name: str, **params) -> DecisionProblem:
    """
    Build a built-in problem by name with keyword overrides.

    Raises:
        KeyError: for an unknown built-in.
    """
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in problem {name!r} (available: {', '.join(BUILTINS)})")
    logging.debug(f"building {name} with {params}")
    return BUILTINS[name](**params)


# ---------------------------------------------------------------------- #
# Physical / logical coherence
# ---------------------------------------------------------------------- #
def observational_equivalence(p: DecisionProblem, tolerance: Optional[float] = None) -> EquivalenceReport:
    """
    Compare the object-level joints of the physical and logical graphs.

    Returns:
        A report that is equivalent iff the joints agree pointwise within
        tolerance, with the worst-disagreeing assignment.

    Raises:
        InvalidGraphError: when the graphs disagree on object-level structure.
    """
    tolerance = config.get_tolerance() if tolerance is None else tolerance
    physical, logical = p.physical_graph, p.logical_graph
    if [physical.variable(n) for n in physical.object_variables()] != \
            [logical.variable(n) for n in logical.object_variables()] or _object_edges(physical) != _object_edges(logical):
        raise InvalidGraphError(["physical and logical graphs have different object-level structure"])
    p_joint = object_joint(physical)
    l_joint = object_joint(logical).marginalize(p_joint.names)
    difference, where = p_joint.max_abs_difference(l_joint)
    equivalent = difference <= tolerance
    if not equivalent:
        logging.info(f"{p.name}: physical and logical joints differ by {difference:g} at {where}")
    return EquivalenceReport(equivalent=equivalent, max_difference=difference,
                             worst_assignment=where if not equivalent else {})
