"""
The six decision theories as query plans over a DecisionProblem.

                 evidential              causal                    functional
    updateful    E[U | D, Obs]           E[U | do(D), Obs]         rule posterior pushed
                 physical graph          physical graph            through do(Dt), logical graph
    updateless   E[U | Dt]               E[U | do(Dt)]             E[U | do(Dt)]
                 physical graph          physical graph            logical graph
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence

from app.causal.errors import InvalidQueryError, UndefinedVerdictError, UnsupportedEvidenceError
from app.causal.graph import MechanisedGraph, observation_set
from app.causal.inference import query_expectation
from app.config import config
from app.decision.problems import DecisionProblem
from app.models.decision import ALL_THEORIES, BehaviourMatrix, DependenceAxis, TheorySpec, Verdict
from app.models.graph import DecisionRule
from app.models.queries import Query


def rule_action(r: DecisionRule, obs: Mapping[str, str]) -> str:
    """
    The action a rule takes at an observation.

    Raises:
        InvalidQueryError: when obs misses an observed variable, names one the
            rule does not observe, or holds an unknown outcome.
    """
    try:
        return r.action_at(obs)
    except KeyError as e:
        raise InvalidQueryError(str(e).strip("'\""))


def query_graph(p: DecisionProblem, t: TheorySpec) -> MechanisedGraph:
    """Functional theories query the logical graph, the others the physical one."""
    return p.logical_graph if t.dependence_axis == DependenceAxis.FUNCTIONAL else p.physical_graph


def _check_observation(p: DecisionProblem, g: MechanisedGraph, t: TheorySpec, obs: Mapping[str, str]) -> None:
    observed = set(observation_set(g, p.decision))
    if not t.is_updateless and observed and not obs:
        raise InvalidQueryError(f"{t.name} needs an observation of ({', '.join(sorted(observed))})")
    if obs and set(obs) != observed:
        raise InvalidQueryError(
            f"observation must assign exactly ({', '.join(sorted(observed))}), got ({', '.join(sorted(obs))})"
        )
    for name, outcome in obs.items():
        if outcome not in g.variable(name).domain:
            raise InvalidQueryError(f"observation {name}={outcome}: not in the domain of {name}")


def _expectation(g: MechanisedGraph, utility: str, interventions=None, evidence=None) -> float:
    return query_expectation(g, Query(interventions=dict(interventions or {}), evidence=dict(evidence or {}),
                                      target=(utility,)))


def _updateful_fdt(p: DecisionProblem, g: MechanisedGraph, action: str, obs: Mapping[str, str]) -> Optional[float]:
    mech = g.mechanism_of[p.decision]
    consistent = [r for r in g.decision_rules(p.decision)
                  if r.action_at(obs) == action and p.rule_prior.get(r.id, 0.0) > 0]
    total, weight = 0.0, 0.0
    for rule in consistent:
        try:
            value = _expectation(g, p.utility, interventions={mech: rule.id}, evidence=obs)
        except UnsupportedEvidenceError:
            logging.debug(f"updateful-FDT: {obs} impossible under do({mech}={rule.id}), rule skipped")
            continue
        total += p.rule_prior[rule.id] * value
        weight += p.rule_prior[rule.id]
    if weight <= 0.0:
        logging.warning(f"updateful-FDT: no consistent rule supports {action} at {dict(obs)} in {p.name}")
        return None
    return total / weight


def _candidate_eu(p: DecisionProblem, g: MechanisedGraph, t: TheorySpec, candidate: str,
                  obs: Mapping[str, str]) -> Optional[float]:
    mech = g.mechanism_of[p.decision]
    if t.is_updateless:
        if t.dependence_axis == DependenceAxis.EVIDENTIAL:
            return _expectation(g, p.utility, evidence={mech: candidate})
        return _expectation(g, p.utility, interventions={mech: candidate})
    if t.dependence_axis == DependenceAxis.EVIDENTIAL:
        return _expectation(g, p.utility, evidence={p.decision: candidate, **obs})
    if t.dependence_axis == DependenceAxis.CAUSAL:
        return _expectation(g, p.utility, interventions={p.decision: candidate}, evidence=obs)
    return _updateful_fdt(p, g, candidate, obs)


def evaluate_on(p: DecisionProblem, t: TheorySpec, g: MechanisedGraph,
                obs: Optional[Mapping[str, str]] = None) -> Verdict:
    """
    Evaluate a theory's query plan on a given graph of the problem.

    ``evaluate`` picks the graph from the theory; this variant lets a caller
    force it (e.g. UEDT on the logical graph).
    """
    obs = dict(obs or {})
    _check_observation(p, g, t, obs)
    tolerance = config.get_tolerance()
    rules = list(g.decision_rules(p.decision))
    if t.is_updateless:
        candidates = [r.id for r in rules]
    else:
        candidates = list(g.variable(p.decision).domain)

    eu_table: Dict[str, Optional[float]] = {}
    for candidate in candidates:
        eu_table[candidate] = _candidate_eu(p, g, t, candidate, obs)
        logging.debug(f"{t.name} on {p.name}: EU({candidate}) = {eu_table[candidate]}")

    undefined = [c for c in candidates if eu_table[c] is None]
    defined = [c for c in candidates if eu_table[c] is not None]
    if not defined:
        raise UndefinedVerdictError(f"{t.name} on {p.name}: no candidate has a defined expected utility")
    best = max(eu_table[c] for c in defined)
    argmax_set = [c for c in defined if eu_table[c] >= best - tolerance]
    recommendation = argmax_set[0]

    recommended_action = None
    if t.is_updateless:
        rule = next(r for r in rules if r.id == recommendation)
        if set(obs) == set(rule.parents):
            recommended_action = rule_action(rule, obs)

    logging.info(f"{t.name} on {p.name}: recommends {recommendation}")
    return Verdict(
        problem=p.name,
        theory=t.name,
        observation=obs,
        candidates=candidates,
        eu_table=eu_table,
        argmax_set=argmax_set,
        recommendation=recommendation,
        tie=len(argmax_set) > 1,
        undefined=undefined,
        recommended_action=recommended_action,
    )


def evaluate(p: DecisionProblem, t: TheorySpec, obs: Optional[Mapping[str, str]] = None) -> Verdict:
    """
    Expected utility of every candidate under theory ``t``.

    Args:
        p: The decision problem.
        t: The theory.
        obs: Assignment of the decision's observation set; required by
            updateful theories when that set is non-empty. Updateless
            theories use it only to read off the recommended rule's action.

    Returns:
        The Verdict, with deterministic tie-breaking in candidate order.

    Raises:
        UnsupportedEvidenceError: when a conditioning event has probability zero.
        UndefinedVerdictError: when no candidate has a defined expected utility.
    """
    return evaluate_on(p, t, query_graph(p, t), obs)


def _cell(p: DecisionProblem, t: TheorySpec) -> str:
    obs = p.canonical_observation or {}
    verdict = evaluate(p, t, obs)
    if not t.is_updateless:
        return verdict.recommendation
    return rule_action(p.rule(verdict.recommendation), obs)


def behaviour_matrix(problems: Sequence[DecisionProblem], theories: Sequence[TheorySpec] = ALL_THEORIES,
                     workers: Optional[int] = None) -> BehaviourMatrix:
    """
    The action each theory takes in each problem at its canonical observation.

    Updateless theories report their recommended rule's action at that
    observation. Cells are independent and may be evaluated concurrently;
    the table is assembled in input order.
    """
    workers = int(config.get("cli.table_workers", 1)) if workers is None else workers
    pairs = [(p, t) for t in theories for p in problems]
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            actions = list(pool.map(lambda pair: _cell(*pair), pairs))
    else:
        actions = [_cell(p, t) for p, t in pairs]

    cells: Dict[str, Dict[str, str]] = {t.display_name: {} for t in theories}
    for (p, t), action in zip(pairs, actions):
        cells[t.display_name][p.name] = action
    return BehaviourMatrix(theories=[t.display_name for t in theories],
                           problems=[p.name for p in problems], cells=cells)
