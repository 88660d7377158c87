import time

import numpy as np
import pytest

from app.causal.errors import InvalidQueryError, UnsupportedEvidenceError
from app.decision.problems import DecisionProblem, newcomb, transparent_newcomb, twin_pd
from app.decision.theories import behaviour_matrix, evaluate, evaluate_on, rule_action
from app.models.decision import ALL_THEORIES, TheorySpec

EDT = TheorySpec.from_name("edt")
CDT = TheorySpec.from_name("cdt")
UFDT = TheorySpec.from_name("ufdt")
UEDT = TheorySpec.from_name("uedt")
UCDT = TheorySpec.from_name("ucdt")
FDT = TheorySpec.from_name("fdt")

FULL = {"P": "full"}
BEST_TRANSPARENT_RULE = "(P=full->one_box,P=empty->two_box)"
ALWAYS_TWO_BOX = "(P=full->two_box,P=empty->two_box)"

EXPECTED_BEHAVIOUR = {
    "EDT": ["one_box", "two_box", "co_operate"],
    "CDT": ["two_box", "two_box", "defect"],
    "Updateful FDT": ["one_box", "two_box", "co_operate"],
    "Updateless EDT": ["one_box", "one_box", "co_operate"],
    "Updateless CDT": ["one_box", "one_box", "defect"],
    "FDT": ["one_box", "one_box", "co_operate"],
}


def test_theory_names():
    assert [t.name for t in ALL_THEORIES] == ["EDT", "CDT", "updateful-FDT", "UEDT", "UCDT", "FDT"]
    assert TheorySpec.from_name("Updateful FDT") == UFDT
    assert TheorySpec.from_name(" FDT ") == FDT
    with pytest.raises(ValueError):
        TheorySpec.from_name("xdt")


@pytest.mark.parametrize("workers", [1, 4])
def test_behaviour_matrix(builtin_problems, workers):
    matrix = behaviour_matrix(builtin_problems, ALL_THEORIES, workers=workers)
    assert matrix.problems == ["newcomb", "transparent_newcomb", "twin_pd"]
    assert matrix.theories == list(EXPECTED_BEHAVIOUR)
    for row in matrix.rows():
        assert row[1:] == EXPECTED_BEHAVIOUR[row[0]]


def test_newcomb_expected_utilities(newcomb_problem):
    edt = evaluate(newcomb_problem, EDT)
    assert edt.eu_table["one_box"] == pytest.approx(990_000)
    assert edt.eu_table["two_box"] == pytest.approx(11_000)
    cdt = evaluate(newcomb_problem, CDT)
    assert cdt.eu_table["one_box"] == pytest.approx(500_000)
    assert cdt.eu_table["two_box"] == pytest.approx(501_000)
    assert cdt.recommendation == "two_box"
    assert not cdt.tie


def test_twin_pd_expected_utilities(twin_problem):
    edt = evaluate(twin_problem, EDT)
    assert edt.eu_table == pytest.approx({"co_operate": 3.0, "defect": 1.0})
    cdt = evaluate(twin_problem, CDT)
    assert cdt.eu_table == pytest.approx({"co_operate": 1.5, "defect": 3.0})


def test_transparent_newcomb_fdt(transparent_problem):
    verdict = evaluate(transparent_problem, FDT)
    assert verdict.candidates == [
        "(P=full->one_box,P=empty->one_box)",
        "(P=full->one_box,P=empty->two_box)",
        "(P=full->two_box,P=empty->one_box)",
        "(P=full->two_box,P=empty->two_box)",
    ]
    assert verdict.recommendation == BEST_TRANSPARENT_RULE
    assert verdict.eu_table[BEST_TRANSPARENT_RULE] == pytest.approx(990_010)
    assert verdict.eu_table[ALWAYS_TWO_BOX] == pytest.approx(11_000)
    assert verdict.eu_table["(P=full->one_box,P=empty->one_box)"] == pytest.approx(990_000)
    assert verdict.recommended_action is None
    assert evaluate(transparent_problem, FDT, FULL).recommended_action == "one_box"


@pytest.mark.parametrize("accuracy", [0.5, 0.9, 0.99, 1.0])
def test_transparent_newcomb_rule_values_follow_accuracy(accuracy):
    big, small = 1_000_000, 1_000
    verdict = evaluate(transparent_newcomb(accuracy=accuracy), FDT)
    assert verdict.eu_table[BEST_TRANSPARENT_RULE] == pytest.approx(accuracy * big + (1 - accuracy) * small)
    assert verdict.eu_table[ALWAYS_TWO_BOX] == pytest.approx((1 - accuracy) * (big + small) + accuracy * small)


def test_cdt_gap_ignores_the_rule_prior(newcomb_problem):
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = float(rng.uniform(0.05, 0.95))
        problem = newcomb_problem.with_rule_prior({"(->one_box)": p, "(->two_box)": 1.0 - p})
        verdict = evaluate(problem, CDT)
        assert verdict.eu_table["two_box"] - verdict.eu_table["one_box"] == pytest.approx(1_000)


def test_fdt_matches_uedt_when_decision_mechanism_is_a_root(builtin_problems):
    for problem in builtin_problems:
        fdt = evaluate(problem, FDT)
        uedt = evaluate_on(problem, UEDT, problem.logical_graph)
        assert uedt.eu_table == pytest.approx(fdt.eu_table)


def test_coin_flip_predictor_makes_everyone_two_box():
    matrix = behaviour_matrix([newcomb(accuracy=0.5)], ALL_THEORIES, workers=1)
    assert all(row[1] == "two_box" for row in matrix.rows())


def test_ties_break_in_candidate_order():
    verdict = evaluate(newcomb(accuracy=0.5, small=0), EDT)
    assert verdict.tie
    assert verdict.argmax_set == ["one_box", "two_box"]
    assert verdict.recommendation == "one_box"


def test_updateful_theory_needs_observation(transparent_problem):
    with pytest.raises(InvalidQueryError):
        evaluate(transparent_problem, EDT)


@pytest.mark.parametrize("obs", [{"P": "half"}, {"Q": "full"}, {"P": "full", "U": "big"}])
def test_bad_observations(transparent_problem, obs):
    with pytest.raises(InvalidQueryError):
        evaluate(transparent_problem, CDT, obs)


def test_observation_on_problem_without_observations(newcomb_problem):
    with pytest.raises(InvalidQueryError):
        evaluate(newcomb_problem, EDT, FULL)


def test_perfect_predictor_makes_edt_evidence_impossible():
    with pytest.raises(UnsupportedEvidenceError):
        evaluate(transparent_newcomb(accuracy=1.0), EDT, FULL)


def test_updateful_fdt_skips_unsupported_rules():
    verdict = evaluate(transparent_newcomb(accuracy=1.0), UFDT, FULL)
    assert verdict.undefined == ["two_box"]
    assert verdict.eu_table["two_box"] is None
    assert verdict.recommendation == "one_box"
    assert verdict.eu_table["one_box"] == pytest.approx(1_000_000)


def test_updateless_theories_ignore_observation_when_evaluating(transparent_problem):
    without = evaluate(transparent_problem, UCDT)
    with_obs = evaluate(transparent_problem, UCDT, FULL)
    assert without.eu_table == with_obs.eu_table
    assert with_obs.recommended_action == "one_box"


def test_perfect_predictor_newcomb():
    verdict = evaluate(newcomb(accuracy=1.0), EDT)
    assert verdict.eu_table["one_box"] == 1_000_000
    assert verdict.eu_table["two_box"] == 1_000


def test_rule_action(transparent_problem):
    rule = transparent_problem.rule(BEST_TRANSPARENT_RULE)
    assert rule_action(rule, FULL) == "one_box"
    assert rule_action(rule, {"P": "empty"}) == "two_box"


@pytest.mark.parametrize("obs", [{}, {"P": "half"}, {"P": "full", "T": "co_operate"}])
def test_rule_action_rejects_bad_observations(transparent_problem, obs):
    with pytest.raises(InvalidQueryError):
        rule_action(transparent_problem.rule(BEST_TRANSPARENT_RULE), obs)


def test_uedt_agrees_across_graphs(builtin_problems):
    for problem in builtin_problems:
        physical = evaluate_on(problem, UEDT, problem.physical_graph)
        logical = evaluate_on(problem, UEDT, problem.logical_graph)
        assert physical.eu_table == pytest.approx(logical.eu_table, abs=1e-9)
        assert physical.argmax_set == logical.argmax_set


def _affine(problem: DecisionProblem, scale: float, shift: float) -> DecisionProblem:
    def rescale(g):
        variables = []
        for v in g.variables:
            if v.name == problem.utility:
                values = {label: scale * u + shift for label, u in v.utility_values.items()}
                v = v.model_copy(update={"utility_values": values})
            variables.append(v)
        return g.replace(variables=variables)

    physical = rescale(problem.physical_graph)
    logical = physical if problem.logical_graph is problem.physical_graph else rescale(problem.logical_graph)
    return DecisionProblem(problem.name, physical, logical, problem.decision, problem.utility,
                           canonical_observation=problem.canonical_observation, rule_prior=problem.rule_prior)


@pytest.mark.parametrize("scale, shift", [(2.0, 0.0), (0.001, -7.0), (3.0, 1e6)])
def test_positive_affine_utilities_keep_the_argmax(builtin_problems, scale, shift):
    for problem in builtin_problems:
        moved = _affine(problem, scale, shift)
        obs = problem.canonical_observation
        for theory in ALL_THEORIES:
            before, after = evaluate(problem, theory, obs), evaluate(moved, theory, obs)
            assert after.argmax_set == before.argmax_set
            for candidate, eu in before.eu_table.items():
                assert after.eu_table[candidate] == pytest.approx(scale * eu + shift)


def test_updatelessness_is_idle_without_observations(newcomb_problem, twin_problem):
    for problem in (newcomb_problem, twin_problem, newcomb(accuracy=0.5)):
        edt = evaluate(problem, EDT)
        uedt = evaluate(problem, UEDT)
        for action, eu in edt.eu_table.items():
            assert uedt.eu_table[f"(->{action})"] == pytest.approx(eu, abs=1e-9)


def test_behaviour_table_is_fast():
    started = time.perf_counter()
    matrix = behaviour_matrix([newcomb(), transparent_newcomb(), twin_pd()], ALL_THEORIES)
    assert time.perf_counter() - started < 5.0
    assert len(matrix.rows()) == 6
