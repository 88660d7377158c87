"""
Monte Carlo ancestral sampling over mechanised graphs.

Every episode reads its uniforms from its own block of a Philox counter
stream keyed by the seed, so episode i is the same draw whether it is
sampled alone, in a chunk, or on another worker thread.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from app.causal.errors import InvalidQueryError, NoAcceptedEpisodesError
from app.causal.graph import MechanisedGraph, assert_valid, topological_order
from app.causal.inference import apply_intervention, check_state_space
from app.config import config
from app.decision.problems import DecisionProblem
from app.decision.theories import evaluate
from app.models.decision import DependenceAxis, TheorySpec
from app.models.queries import EpisodeResult, Estimate, Query

Batch = Dict[str, np.ndarray]

_OUTPUTS_PER_COUNTER = 4  # Philox4x64 yields four 64-bit words per counter step
SEED_LIMIT = 2 ** 128  # Philox keys are 128-bit


def _blocks_per_episode(g: MechanisedGraph) -> int:
    return max(1, -(-len(g.names) // _OUTPUTS_PER_COUNTER))


def _uniforms(seed: int, start: int, episodes: int, blocks: int) -> np.ndarray:
    bit_generator = np.random.Philox(key=seed, counter=start * blocks)
    width = blocks * _OUTPUTS_PER_COUNTER
    return np.random.Generator(bit_generator).random((episodes, width))


def _cumulative(g: MechanisedGraph, name: str) -> np.ndarray:
    tensor = g.cpd_tensor(name)
    rows = tensor.reshape(-1, tensor.shape[-1])
    cumulative = np.cumsum(rows, axis=1)
    return cumulative / cumulative[:, -1:]


def _sample_chunk(g: MechanisedGraph, order: List[str], seed: int, start: int, episodes: int) -> Batch:
    u = _uniforms(seed, start, episodes, _blocks_per_episode(g))
    batch: Batch = {}
    for column, name in enumerate(order):
        parents = g.parents(name)
        cumulative = _cumulative(g, name)
        if parents:
            shape = tuple(g.variable(p).cardinality for p in parents)
            row = np.ravel_multi_index(tuple(batch[p] for p in parents), shape)
        else:
            row = np.zeros(episodes, dtype=np.intp)
        batch[name] = (cumulative[row] <= u[:, column:column + 1]).sum(axis=1)
    return batch


def check_seed(seed: int) -> None:
    if not 0 <= seed < SEED_LIMIT:
        raise InvalidQueryError(f"seed must be in [0, 2**128), got {seed}")


def sample_indices(g: MechanisedGraph, episodes: int, seed: int, start: int = 0,
                   chunk_size: Optional[int] = None, workers: Optional[int] = None) -> Batch:
    """
    Sample episodes ``start .. start + episodes - 1`` of a graph.

    Args:
        g: A valid graph.
        episodes: Number of episodes.
        seed: Key of the counter-based generator.
        start: Index of the first episode.
        chunk_size: Episodes per generator block.
        workers: Threads sampling chunks concurrently.

    Returns:
        Variable name -> array of outcome indices, one entry per episode.
    """
    check_seed(seed)
    assert_valid(g)
    check_state_space(g, None)
    settings = config.get_simulation_config()
    chunk_size = int(chunk_size or settings["chunk_size"])
    workers = int(workers or settings["workers"])
    order = topological_order(g)
    starts = list(range(start, start + episodes, chunk_size))

    def run(chunk_start: int) -> Batch:
        return _sample_chunk(g, order, seed, chunk_start, min(chunk_size, start + episodes - chunk_start))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, starts))
    else:
        chunks = [run(s) for s in starts]
    if not chunks:
        return {name: np.zeros(0, dtype=np.intp) for name in order}
    return {name: np.concatenate([c[name] for c in chunks]) for name in order}


def _utilities(g: MechanisedGraph, batch: Batch) -> np.ndarray:
    total = np.zeros(len(next(iter(batch.values()))), dtype=float)
    for name in g.utility_variables():
        total += np.asarray(g.variable(name).utility_vector(), dtype=float)[batch[name]]
    return total


def _episode(g: MechanisedGraph, batch: Batch, i: int) -> EpisodeResult:
    assignment = {name: g.variable(name).domain[int(batch[name][i])] for name in g.names}
    return EpisodeResult(assignment=assignment, utility=float(_utilities(g, {k: v[i:i + 1] for k, v in batch.items()})[0]))


def sample_episodes(g: MechanisedGraph, episodes: int, seed: int, start: int = 0) -> List[EpisodeResult]:
    """Episodes ``start .. start + episodes - 1`` as full assignments with their utility."""
    batch = sample_indices(g, episodes, seed, start)
    return [_episode(g, batch, i) for i in range(episodes)]


def sample_episode(g: MechanisedGraph, seed: int, index: int = 0) -> EpisodeResult:
    """
    One ancestral sample: variables drawn in topological order from their CPDs.

    Deterministic given (seed, index).
    """
    return sample_episodes(g, 1, seed, start=index)[0]


def _accepted(g: MechanisedGraph, batch: Batch, evidence: Mapping[str, str]) -> np.ndarray:
    mask = np.ones(len(next(iter(batch.values()))), dtype=bool)
    for name, outcome in evidence.items():
        mask &= batch[name] == g.variable(name).index(outcome)
    return mask


def estimate_eu(p: DecisionProblem, graph: str, query: Query, episodes: Optional[int] = None,
                seed: Optional[int] = None, start: int = 0) -> Estimate:
    """
    Monte Carlo estimate of E[U | do(interventions), evidence] in one of the problem's graphs.

    Evidence is handled by rejection: episodes disagreeing with it are dropped.

    Args:
        p: The problem.
        graph: ``physical`` or ``logical``.
        query: Interventions and evidence; the target is the problem's utility.
        episodes: Number of sampled episodes (accepted or not).
        seed: Generator key.
        start: Index of the first episode.

    Returns:
        Mean utility of the accepted episodes and its standard error
        (sample standard deviation over the square root of the count).

    Raises:
        NoAcceptedEpisodesError: when no episode satisfies the evidence.
        InvalidQueryError: when episodes < 1 or the seed is outside [0, 2**128).
    """
    settings = config.get_simulation_config()
    episodes = int(settings["episodes"] if episodes is None else episodes)
    seed = int(settings["seed"] if seed is None else seed)
    if episodes < 1:
        raise InvalidQueryError(f"episodes must be at least 1, got {episodes}")
    check_seed(seed)
    g = p.graph(graph)
    overlap = set(query.interventions) & set(query.evidence)
    if overlap:
        raise InvalidQueryError(f"variables both intervened on and observed: {', '.join(sorted(overlap))}")
    for name, outcome in query.evidence.items():
        if outcome not in g.variable(name).domain:
            raise InvalidQueryError(f"evidence {name}={outcome}: not in the domain of {name}")
    mutilated = apply_intervention(g, query.interventions)
    batch = sample_indices(mutilated, episodes, seed, start)
    mask = _accepted(mutilated, batch, query.evidence)
    accepted = int(mask.sum())
    rate = accepted / episodes
    if accepted == 0:
        raise NoAcceptedEpisodesError(
            f"no accepted episodes: evidence {dict(query.evidence)} never occurred in {episodes} episodes"
        )
    if rate < float(settings["acceptance_warning"]):
        logging.warning(f"rejection sampling accepted {accepted} of {episodes} episodes ({rate:.2%})")
    values = _utilities(mutilated, batch)[mask]
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(accepted)) if accepted > 1 else 0.0
    logging.info(f"{p.name}/{graph}: estimate {mean:.6g} ± {stderr:.3g} from {accepted} episodes")
    return Estimate(mean=mean, stderr=stderr, episodes=episodes, accepted=accepted, acceptance_rate=rate)


def _combine(estimates: List[Estimate], weights: List[float]) -> Estimate:
    total = sum(weights)
    mean = sum(w * e.mean for w, e in zip(weights, estimates)) / total
    stderr = float(np.sqrt(sum((w / total) ** 2 * e.stderr ** 2 for w, e in zip(weights, estimates))))
    episodes = sum(e.episodes for e in estimates)
    accepted = sum(e.accepted for e in estimates)
    return Estimate(mean=mean, stderr=stderr, episodes=episodes, accepted=accepted,
                    acceptance_rate=accepted / episodes if episodes else 0.0)


def _updateful_fdt(p: DecisionProblem, candidate: str, obs: Mapping[str, str],
                   episodes: int, seed: int) -> Estimate:
    """Rule mixture: one stratum per consistent rule, weighted by the prior, unsupported strata dropped."""
    g = p.logical_graph
    mech = g.mechanism_of[p.decision]
    rules = [r for r in g.decision_rules(p.decision)
             if r.action_at(obs) == candidate and p.rule_prior.get(r.id, 0.0) > 0]
    estimates, weights = [], []
    for stratum, rule in enumerate(rules):
        query = Query(interventions={mech: rule.id}, evidence=dict(obs), target=(p.utility,))
        try:
            estimates.append(estimate_eu(p, "logical", query, episodes, seed, start=stratum * episodes))
        except NoAcceptedEpisodesError:
            logging.debug(f"updateful-FDT stratum {rule.id}: no accepted episodes")
            continue
        weights.append(p.rule_prior[rule.id])
    if not estimates:
        raise NoAcceptedEpisodesError(f"no accepted episodes for any rule consistent with {candidate} at {dict(obs)}")
    return _combine(estimates, weights)


def candidate_query(p: DecisionProblem, t: TheorySpec, candidate: str,
                    obs: Optional[Mapping[str, str]] = None) -> Tuple[str, Query]:
    """The graph and query a theory evaluates for one candidate (updateful-FDT excepted)."""
    obs = dict(obs or {})
    mech = p.decision_mechanism
    graph = "logical" if t.dependence_axis == DependenceAxis.FUNCTIONAL else "physical"
    if t.is_updateless:
        if t.dependence_axis == DependenceAxis.EVIDENTIAL:
            return graph, Query(evidence={mech: candidate}, target=(p.utility,))
        return graph, Query(interventions={mech: candidate}, target=(p.utility,))
    if t.dependence_axis == DependenceAxis.EVIDENTIAL:
        return graph, Query(evidence={p.decision: candidate, **obs}, target=(p.utility,))
    if t.dependence_axis == DependenceAxis.CAUSAL:
        return graph, Query(interventions={p.decision: candidate}, evidence=obs, target=(p.utility,))
    raise InvalidQueryError("updateful-FDT mixes several queries per candidate")


def estimate_candidate(p: DecisionProblem, t: TheorySpec, candidate: str,
                       obs: Optional[Mapping[str, str]] = None, episodes: Optional[int] = None,
                       seed: Optional[int] = None, with_exact: bool = False) -> Estimate:
    """
    Monte Carlo counterpart of one cell of a theory's expected-utility table.

    Args:
        p: The problem.
        t: The theory.
        candidate: An action (updateful) or rule spec (updateless).
        obs: Observation for updateful theories.
        episodes: Episodes per query.
        seed: Generator key.
        with_exact: Also compute the exact value by enumeration.
    """
    settings = config.get_simulation_config()
    episodes = int(settings["episodes"] if episodes is None else episodes)
    seed = int(settings["seed"] if seed is None else seed)
    obs = dict(obs or {})
    if t.is_updateless:
        try:
            candidate = p.rule(candidate).id
        except (KeyError, ValueError) as e:
            raise InvalidQueryError(str(e).strip("'\""))
    if not t.is_updateless and t.dependence_axis == DependenceAxis.FUNCTIONAL:
        estimate = _updateful_fdt(p, candidate, obs, episodes, seed)
    else:
        graph, query = candidate_query(p, t, candidate, obs)
        estimate = estimate_eu(p, graph, query, episodes, seed)
    if with_exact:
        estimate = estimate.model_copy(update={"exact": evaluate(p, t, obs).eu_table.get(candidate)})
    return estimate
