import pytest

from app.causal.errors import InvalidParameterError, ProblemDefinitionError
from app.decision.problems import BUILTINS, builtin, newcomb, observational_equivalence, twin_game, twin_pd


def test_builtins_are_well_formed(builtin_problems):
    for problem in builtin_problems:
        assert problem.violations() == []
        assert observational_equivalence(problem).equivalent


def test_builtin_registry():
    assert list(BUILTINS) == ["newcomb", "transparent_newcomb", "twin_pd"]
    assert builtin("newcomb", accuracy=0.9).parameters["accuracy"] == 0.9
    with pytest.raises(KeyError):
        builtin("smoking_lesion")


def test_twin_graphs_differ_at_mechanism_level_only(twin_problem):
    physical, logical = twin_problem.physical_graph, twin_problem.logical_graph
    assert "S" in physical and "S" not in logical
    assert ("Dt", "Tt") in logical.edges
    assert physical.object_variables() == logical.object_variables()


def test_twin_with_weaker_logical_correlation_is_not_equivalent():
    report = observational_equivalence(twin_pd(logical_correlation=0.9))
    assert not report.equivalent
    assert report.max_difference == pytest.approx(0.05)
    assert report.worst_assignment


def test_rule_prior_defaults_to_uniform(newcomb_problem, transparent_problem):
    assert newcomb_problem.rule_prior == {"(->one_box)": 0.5, "(->two_box)": 0.5}
    assert set(transparent_problem.rule_prior.values()) == {0.25}


def test_rule_lookup_ignores_spacing(transparent_problem):
    rule = transparent_problem.rule("( P=empty->two_box, P=full->one_box )")
    assert rule.id == "(P=full->one_box,P=empty->two_box)"
    with pytest.raises(KeyError):
        transparent_problem.rule("(->one_box)")


@pytest.mark.parametrize("build", [
    lambda: newcomb(accuracy=1.5),
    lambda: newcomb(small=-1),
    lambda: twin_pd(temptation=2),
    lambda: twin_pd(correlation=-0.1),
    lambda: twin_game({("a", "a"): 1}, ["a", "b"]),
])
def test_invalid_parameters(build):
    with pytest.raises(InvalidParameterError):
        build()


def test_rule_prior_must_be_positive(newcomb_problem):
    with pytest.raises(ProblemDefinitionError) as excinfo:
        newcomb_problem.with_rule_prior({"(->one_box)": 1.0, "(->two_box)": 0.0})
    assert "strictly positive" in str(excinfo.value)


def test_rule_prior_must_cover_the_rules():
    with pytest.raises(ProblemDefinitionError) as excinfo:
        newcomb(rule_prior={"(->one_box)": 1.0})
    assert "cover exactly the rules" in str(excinfo.value)


def test_canonical_observation_must_match_observation_set(newcomb_problem):
    from app.decision.problems import DecisionProblem

    g = newcomb_problem.physical_graph
    with pytest.raises(ProblemDefinitionError) as excinfo:
        DecisionProblem("newcomb", g, g, "D", "U", canonical_observation={"P": "full"})
    assert "canonical observation" in str(excinfo.value)


def test_generic_twin_game():
    payoffs = {("stag", "stag"): 4, ("stag", "hare"): 0, ("hare", "stag"): 3, ("hare", "hare"): 3}
    problem = twin_game(payoffs, ["stag", "hare"], name="stag_hunt")
    assert problem.name == "stag_hunt"
    assert observational_equivalence(problem).equivalent
