import pytest

from app.causal.errors import ProblemDefinitionError
from app.decision.problems import builtin
from app.decision.reports import check_problem_text
from app.dsl.lexer import TokenType, tokenize
from app.dsl.parser import parse_description, parse_problem
from app.dsl.serializer import serialize_problem
from app.dsl.wellformed import check_well_defined

from conftest import MALFORMED_DIR, shipped_problem

SHIPPED_BUILTINS = {
    "newcomb.dtp": "newcomb",
    "transparent_newcomb.dtp": "transparent_newcomb",
    "twin_pd.dtp": "twin_pd",
}

# Line of the first syntax error in each malformed file
FIRST_ERROR_LINE = {
    "bad_kind.dtp": 2,
    "bad_number.dtp": 5,
    "bad_prior.dtp": 5,
    "bad_tag.dtp": 5,
    "invalid_character.dtp": 2,
    "missing_arrow.dtp": 5,
    "missing_problem.dtp": 1,
    "statement_mid_line.dtp": 5,
    "unclosed_rule.dtp": 5,
    "unknown_keyword.dtp": 5,
    "unterminated_string.dtp": 1,
    "utility_missing_equals.dtp": 8,
}


def test_tokens_carry_positions():
    tokens = tokenize("edge D -> U  # comment\n  obsedge P -> D")
    assert [t.type for t in tokens] == [
        TokenType.IDENTIFIER, TokenType.IDENTIFIER, TokenType.ARROW, TokenType.IDENTIFIER,
        TokenType.IDENTIFIER, TokenType.IDENTIFIER, TokenType.ARROW, TokenType.IDENTIFIER,
        TokenType.EOF,
    ]
    obsedge = tokens[4]
    assert (obsedge.line, obsedge.column, obsedge.first_on_line) == (2, 3, True)
    assert not tokens[5].first_on_line


@pytest.mark.parametrize("filename, name", SHIPPED_BUILTINS.items())
def test_shipped_files_match_builtins(filename, name):
    assert parse_problem(shipped_problem(filename)) == builtin(name)


@pytest.mark.parametrize("name", ["newcomb", "transparent_newcomb", "twin_pd"])
def test_serialized_builtins_parse_back(name):
    problem = builtin(name)
    text = serialize_problem(problem)
    assert parse_problem(text) == problem


def test_serialized_prior_is_kept():
    problem = builtin("newcomb", rule_prior={"(->one_box)": 0.3, "(->two_box)": 0.7})
    parsed = parse_problem(serialize_problem(problem))
    assert parsed.rule_prior == pytest.approx({"(->one_box)": 0.3, "(->two_box)": 0.7})


def test_untagged_file_gives_one_graph():
    problem = parse_problem(shipped_problem("newcomb.dtp"))
    assert problem.physical_graph is problem.logical_graph
    assert problem.physical_graph.name == "newcomb"


def test_tagged_file_gives_two_graphs():
    problem = parse_problem(shipped_problem("twin_pd.dtp"))
    assert problem.physical_graph.name == "twin_pd/physical"
    assert problem.logical_graph.name == "twin_pd/logical"


def test_coin_flip_file():
    report = check_problem_text(shipped_problem("newcomb_coinflip.dtp"))
    assert report.ok
    assert report.problem == "newcomb_coinflip"


@pytest.mark.parametrize("path", sorted(MALFORMED_DIR.glob("*.dtp")), ids=lambda p: p.name)
def test_malformed_files_report_positioned_syntax_errors(path):
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_problem(path.read_text(encoding="utf-8"))
    diagnostics = excinfo.value.diagnostics
    assert diagnostics
    assert all(d.kind == "syntax" and d.line >= 1 and d.column >= 1 for d in diagnostics)
    if path.name in FIRST_ERROR_LINE:
        assert diagnostics[0].line == FIRST_ERROR_LINE[path.name]
    assert " syntax error: " in str(excinfo.value)


def test_every_error_in_a_file_is_reported():
    text = 'problem "two_errors"\nobject D : choice { a }\nobject P : chance { x y }\n'
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_description(text)
    assert [d.line for d in excinfo.value.diagnostics] == [2, 3]


def test_unnormalised_row():
    text = shipped_problem("newcomb.dtp").replace("fill: 0.99, leave: 0.01", "fill: 0.89, leave: 0.01", 1)
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_problem(text)
    messages = [d.message for d in excinfo.value.diagnostics]
    assert "row not normalized (sum 0.9)" in messages
    assert all(d.kind == "semantic" for d in excinfo.value.diagnostics)


def test_unknown_variable_is_positioned():
    text = shipped_problem("newcomb.dtp").replace("edge D -> U", "edge D -> Q")
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_problem(text)
    unknown = [d for d in excinfo.value.diagnostics if d.message == "unknown variable Q"]
    assert unknown and unknown[0].line == 9


def test_rule_spec_for_non_decision_mechanism():
    text = shipped_problem("newcomb.dtp").replace("value fill : P = { full: 1 }",
                                                  "value fill : P = { (->one_box): 1 }")
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_problem(text)
    assert any("not a decision mechanism" in d.message for d in excinfo.value.diagnostics)


def test_prediction_of_the_decision_is_ill_defined():
    text = shipped_problem("cyclic_tn.dtp")
    report = check_well_defined(parse_description(text))
    assert not report.well_defined
    assert report.cycles == [["D", "P"]]
    with pytest.raises(ProblemDefinitionError) as excinfo:
        parse_problem(text)
    kinds = {d.kind for d in excinfo.value.diagnostics}
    assert kinds == {"well_defined"}
    assert any("prediction must depend on the decision rule" in d.message for d in excinfo.value.diagnostics)


def test_check_report_stages():
    assert check_problem_text(shipped_problem("transparent_newcomb.dtp")).ok
    cyclic = check_problem_text(shipped_problem("cyclic_tn.dtp"))
    assert not cyclic.ok and cyclic.well_defined is False
    broken = check_problem_text((MALFORMED_DIR / "missing_arrow.dtp").read_text(encoding="utf-8"))
    assert not broken.ok and broken.problem is None
