from app.config.config import DEFAULTS, STATE_CAP_ENV, Config


def test_missing_file_falls_back_to_defaults(tmp_path):
    cfg = Config(str(tmp_path / "absent.yaml"))
    assert cfg.get_tolerance() == DEFAULTS["engine"]["tolerance"]
    assert cfg.get_rule_cap() == 16
    assert cfg.get_server_config()["port"] == 8000


def test_file_values_override_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("engine:\n  rule_cap: 4\nsimulation:\n  seed: 42\n", encoding="utf-8")
    cfg = Config(str(path))
    assert cfg.get_rule_cap() == 4
    assert cfg.get_state_cap() == DEFAULTS["engine"]["state_cap"]
    simulation = cfg.get_simulation_config()
    assert simulation["seed"] == 42
    assert simulation["episodes"] == DEFAULTS["simulation"]["episodes"]


def test_malformed_yaml_is_ignored(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("engine: [unclosed\n", encoding="utf-8")
    assert Config(str(path)).get("engine.rule_cap") == 16


def test_state_cap_environment(tmp_path, monkeypatch):
    cfg = Config(str(tmp_path / "absent.yaml"))
    monkeypatch.setenv(STATE_CAP_ENV, "1e3")
    assert cfg.get_state_cap() == 1_000
    monkeypatch.setenv(STATE_CAP_ENV, "lots")
    assert cfg.get_state_cap() == DEFAULTS["engine"]["state_cap"]


def test_unknown_key_uses_caller_default(tmp_path):
    assert Config(str(tmp_path / "absent.yaml")).get("engine.nothing", "x") == "x"
