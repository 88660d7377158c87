import csv
import io
import json

import pytest

from app.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, main, run

from conftest import MALFORMED_DIR, PROBLEMS_DIR

TABLE_CSV = [
    ["theory", "newcomb", "transparent_newcomb", "twin_pd"],
    ["EDT", "one-box", "two-box", "co-operate"],
    ["CDT", "two-box", "two-box", "defect"],
    ["Updateful FDT", "one-box", "two-box", "co-operate"],
    ["Updateless EDT", "one-box", "one-box", "co-operate"],
    ["Updateless CDT", "one-box", "one-box", "defect"],
    ["FDT", "one-box", "one-box", "co-operate"],
]


def test_evaluate_text(capsys):
    assert main(["evaluate", "--problem", "builtin:newcomb", "--theory", "edt"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "recommendation: one_box" in out
    assert "990000.000000" in out


def test_evaluate_json(capsys):
    code = main(["evaluate", "--problem", "builtin:newcomb", "--theory", "cdt", "--format", "json"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["recommendation"] == "two_box"
    assert payload["eu_table"]["two_box"] == pytest.approx(501_000)


def test_evaluate_with_observation(capsys):
    args = ["evaluate", "--problem", "builtin:transparent_newcomb", "--theory", "ufdt", "--obs", "P=full"]
    assert main(args) == EXIT_OK
    assert "recommendation: two_box" in capsys.readouterr().out


def test_evaluate_shipped_file(capsys):
    args = ["evaluate", "--problem", str(PROBLEMS_DIR / "twin_pd.dtp"), "--theory", "fdt"]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "recommendation: (->co_operate)" in out


def test_parameter_override(capsys):
    args = ["evaluate", "--problem", "builtin:newcomb", "--param", "accuracy=0.5", "--theory", "edt"]
    assert main(args) == EXIT_OK
    assert "recommendation: two_box" in capsys.readouterr().out


@pytest.mark.parametrize("args, code", [
    (["evaluate", "--problem", "builtin:newcomb", "--theory", "xdt"], EXIT_USAGE),
    (["evaluate", "--problem", "builtin:smoking_lesion", "--theory", "edt"], EXIT_USAGE),
    (["evaluate", "--problem", "builtin:newcomb", "--param", "bogus=1", "--theory", "edt"], EXIT_USAGE),
    (["evaluate", "--problem", "builtin:newcomb", "--param", "accuracy=2", "--theory", "edt"], EXIT_DOMAIN),
    (["evaluate", "--problem", "builtin:transparent_newcomb", "--theory", "cdt", "--obs", "P=half"], EXIT_DOMAIN),
    (["evaluate", "--problem", "builtin:transparent_newcomb", "--theory", "cdt", "--obs", "P"], EXIT_USAGE),
    (["evaluate", "--problem", "missing.dtp", "--theory", "edt"], EXIT_USAGE),
    (["evaluate", "--theory", "edt"], EXIT_USAGE),
])
def test_failures_map_to_exit_codes(args, code, capsys):
    assert main(args) == code
    assert capsys.readouterr().err


def test_failed_command_has_no_output(capsys):
    envelope, output = run(["evaluate", "--problem", "builtin:newcomb", "--theory", "xdt", "--format", "json"])
    assert output is None
    assert envelope.exit_code == EXIT_USAGE
    assert "unknown theory" in envelope.payload["error"]
    assert capsys.readouterr().out == ""


def test_table_csv(capsys):
    assert main(["table", "--format", "csv", "--workers", "1"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows == TABLE_CSV


def test_table_subset(capsys):
    assert main(["table", "--problems", "newcomb", "--theories", "edt,cdt", "--format", "csv"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows == [["theory", "newcomb"], ["EDT", "one-box"], ["CDT", "two-box"]]


def test_table_text(capsys):
    assert main(["table"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["theory", "newcomb", "transparent_newcomb", "twin_pd"]
    assert set(lines[1]) <= {"-", " "}
    assert lines[-1].split() == ["FDT", "one-box", "one-box", "co-operate"]


def test_check_shipped_file(capsys):
    assert main(["check", str(PROBLEMS_DIR / "newcomb.dtp")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("newcomb: ok")


def test_check_builtin(capsys):
    assert main(["check", "builtin:twin_pd"]) == EXIT_OK
    assert "twin_pd: ok" in capsys.readouterr().out


def test_check_cyclic_file(capsys):
    assert main(["check", str(PROBLEMS_DIR / "cyclic_tn.dtp")]) == EXIT_DOMAIN
    err = capsys.readouterr().err
    assert "well_defined error: cycle: D→P→D" in err
    assert "prediction must depend on the decision rule" in err


def test_check_malformed_file(capsys):
    assert main(["check", str(MALFORMED_DIR / "missing_arrow.dtp")]) == EXIT_USAGE
    assert "5:" in capsys.readouterr().err


def test_check_json_lists_diagnostics(capsys):
    code = main(["check", str(MALFORMED_DIR / "unknown_keyword.dtp"), "--format", "json"])
    assert code == EXIT_USAGE
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] is False
    assert payload["diagnostics"][0].startswith("5:1: syntax error:")


def test_simulate_rule(capsys):
    args = ["simulate", "--problem", "builtin:transparent_newcomb", "--rule", "(P=full->one_box,P=empty->two_box)",
            "--episodes", "5000", "--seed", "1", "--format", "json"]
    assert main(args) == EXIT_OK
    results = json.loads(capsys.readouterr().out)["results"]
    assert len(results) == 1
    assert results[0]["estimate"]["exact"] == pytest.approx(990_010)
    assert results[0]["seed"] == 1


def test_simulate_theory_csv(capsys):
    args = ["simulate", "--problem", "builtin:twin_pd", "--theory", "edt", "--episodes", "500", "--format", "csv"]
    assert main(args) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["theory", "candidate", "mean", "stderr", "exact", "episodes", "accepted"]
    assert [r[1] for r in rows[1:]] == ["co_operate", "defect"]


def test_simulate_needs_rule_or_theory(capsys):
    assert main(["simulate", "--problem", "builtin:newcomb"]) == EXIT_USAGE
    assert "--rule or --theory" in capsys.readouterr().err


def test_explain_active_path(capsys):
    args = ["explain", "--problem", "builtin:newcomb", "--query", "Dt _||_ U | D"]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "not d-separated" in out
    assert "Dt→Pt→P→U" in out


def test_explain_separated(capsys):
    args = ["explain", "--problem", "builtin:transparent_newcomb", "--query", "Dt _||_ U | D, P", "--format", "json"]
    assert main(args) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["separated"] is True
    assert payload["path"] is None


@pytest.mark.parametrize("query", ["Dt U", "Dt _||_ U |", "Dt _||_ 1U"])
def test_explain_malformed_query(query, capsys):
    assert main(["explain", "--problem", "builtin:newcomb", "--query", query]) == EXIT_USAGE


def test_coin_flip_table_is_all_two_box(capsys):
    args = ["table", "--problems", str(PROBLEMS_DIR / "newcomb_coinflip.dtp"), "--format", "csv"]
    assert main(args) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["theory", "newcomb_coinflip"]
    assert [row[1] for row in rows[1:]] == ["two-box"] * 6


def test_check_unnormalised_row(tmp_path, capsys):
    text = (PROBLEMS_DIR / "newcomb.dtp").read_text(encoding="utf-8")
    path = tmp_path / "bad_row.dtp"
    path.write_text(text.replace("fill: 0.99, leave: 0.01", "fill: 0.89, leave: 0.01", 1), encoding="utf-8")
    assert main(["check", str(path)]) == EXIT_DOMAIN
    assert "row not normalized" in capsys.readouterr().err


def test_evidential_two_boxes_on_a_full_box(capsys):
    args = ["evaluate", "--problem", "builtin:transparent_newcomb", "--theory", "edt", "--obs", "P=full"]
    assert main(args) == EXIT_OK
    assert "recommendation: two_box" in capsys.readouterr().out


@pytest.mark.parametrize("seed", ["-1", str(2 ** 128)])
def test_simulate_out_of_range_seed(seed, capsys):
    args = ["simulate", "--problem", "builtin:newcomb", "--theory", "fdt", "--episodes", "10", "--seed", seed]
    assert main(args) == EXIT_DOMAIN
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "seed must be in [0, 2**128)" in captured.err


@pytest.mark.parametrize("command", [
    ["check", str(MALFORMED_DIR.parent / "invalid_utf8.dtp")],
    ["evaluate", "--problem", str(MALFORMED_DIR.parent / "invalid_utf8.dtp"), "--theory", "edt"],
])
def test_problem_file_with_invalid_utf8(command, capsys):
    assert main(command) == EXIT_USAGE
    assert "not valid UTF-8" in capsys.readouterr().err
