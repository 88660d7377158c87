"""
# Tests for the dtlab HTTP endpoints, served in-process through TestClient.
"""

import pytest
from fastapi.testclient import TestClient

from main import app

from conftest import shipped_problem

API_URL = "/api/v1/dtlab"


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json().startswith("dtlab")


def test_builtins(client):
    response = client.get(f"{API_URL}/builtins")
    assert response.status_code == 200
    assert response.json() == {"builtins": ["newcomb", "transparent_newcomb", "twin_pd"]}


def test_evaluate_endpoint(client):
    """Evaluate a built-in with a parameter override."""
    body = {"problem": "builtin:newcomb", "theory": "edt", "params": {"accuracy": 0.9}}
    response = client.post(f"{API_URL}/evaluate", json=body)
    assert response.status_code == 200
    verdict = response.json()
    assert verdict["recommendation"] == "one_box"
    assert verdict["eu_table"]["one_box"] == pytest.approx(900_000)


def test_evaluate_inline_problem(client):
    """Evaluate a problem posted as .dtp text."""
    body = {"problem_text": shipped_problem("transparent_newcomb.dtp"), "theory": "fdt", "obs": {"P": "full"}}
    response = client.post(f"{API_URL}/evaluate", json=body)
    assert response.status_code == 200
    verdict = response.json()
    assert verdict["recommendation"] == "(P=full->one_box,P=empty->two_box)"
    assert verdict["recommended_action"] == "one_box"


def test_evaluate_needs_a_problem(client):
    response = client.post(f"{API_URL}/evaluate", json={"theory": "edt"})
    assert response.status_code == 400


def test_unknown_theory_is_a_bad_request(client):
    response = client.post(f"{API_URL}/evaluate", json={"problem": "builtin:newcomb", "theory": "xdt"})
    assert response.status_code == 400
    assert "unknown theory" in response.json()["detail"]


def test_impossible_evidence_is_unprocessable(client):
    body = {"problem": "builtin:transparent_newcomb", "theory": "edt", "obs": {"P": "full"},
            "params": {"accuracy": 1.0}}
    response = client.post(f"{API_URL}/evaluate", json=body)
    assert response.status_code == 422
    assert "unsupported evidence" in response.json()["detail"]


def test_problem_errors_list_diagnostics(client):
    body = {"problem_text": shipped_problem("cyclic_tn.dtp"), "theory": "edt"}
    response = client.post(f"{API_URL}/evaluate", json=body)
    assert response.status_code == 400
    detail = response.json()["detail"]
    assert isinstance(detail, list)
    assert any("prediction must depend on the decision rule" in d for d in detail)


def test_table_endpoint(client):
    response = client.post(f"{API_URL}/table", json={"theories": ["cdt", "fdt"]})
    assert response.status_code == 200
    matrix = response.json()
    assert matrix["problems"] == ["newcomb", "transparent_newcomb", "twin_pd"]
    assert matrix["cells"]["CDT"]["twin_pd"] == "defect"
    assert matrix["cells"]["FDT"]["transparent_newcomb"] == "one_box"


def test_check_endpoint(client):
    ok = client.post(f"{API_URL}/check", json={"problem_text": shipped_problem("twin_pd.dtp")}).json()
    assert ok["ok"] is True
    assert ok["equivalent"] is True
    broken = client.post(f"{API_URL}/check", json={"problem_text": 'problem "x"\nedge D U\n'}).json()
    assert broken["ok"] is False
    assert broken["diagnostics"]


def test_simulate_endpoint(client):
    body = {"problem": "builtin:newcomb", "theory": "ucdt", "episodes": 2_000, "seed": 3}
    response = client.post(f"{API_URL}/simulate", json=body)
    assert response.status_code == 200
    results = response.json()["results"]
    assert [r["candidate"] for r in results] == ["(->one_box)", "(->two_box)"]
    assert all(r["estimate"]["episodes"] == 2_000 for r in results)


def test_simulate_rejects_zero_episodes(client):
    body = {"problem": "builtin:newcomb", "theory": "ucdt", "episodes": 0}
    assert client.post(f"{API_URL}/simulate", json=body).status_code == 422


def test_explain_endpoint(client):
    body = {"problem": "builtin:twin_pd", "query": "D _||_ T", "graph": "logical"}
    explanation = client.post(f"{API_URL}/explain", json=body).json()
    assert explanation["separated"] is False
    assert explanation["rendered_path"] == "D←Dt→Tt→T"


def test_explain_unknown_graph(client):
    body = {"problem": "builtin:newcomb", "query": "D _||_ U", "graph": "astral"}
    assert client.post(f"{API_URL}/explain", json=body).status_code == 400


@pytest.mark.parametrize("seed", [-1, 2 ** 128])
def test_simulate_rejects_out_of_range_seed(client, seed):
    body = {"problem": "builtin:newcomb", "theory": "fdt", "episodes": 10, "seed": seed}
    assert client.post(f"{API_URL}/simulate", json=body).status_code == 422
