# tests/unit/test_settings.py
import json
import logging
from pathlib import Path

import pytest

from ksdk.errors import ConfigError
from ksdk.settings import RunConfig, parse_config, regime_summary

REPO_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "ksdk.yaml"


def test_defaults_without_file():
    cfg = parse_config()
    assert cfg.spectral.M == 32
    assert cfg.spde_config().eps == 1e-3
    assert cfg.particle_config().correlation_length == pytest.approx(1000**-0.5)
    assert cfg.regime_warnings() == []


def test_repo_config_matches_defaults():
    assert parse_config(str(REPO_CONFIG)).resolved() == RunConfig().resolved()


def test_overrides_beat_yaml(tmp_dir):
    p = tmp_dir / "run.yaml"
    p.write_text("spectral:\n  M: 12\ndeterministic:\n  chi: 3.0\n", encoding="utf-8")
    cfg = parse_config(str(p), {"spectral.M": 16, "deterministic.chi": None, "run.seed": 7})
    assert cfg.spectral.M == 16
    assert cfg.deterministic.chi == 3.0
    assert cfg.det_config().M == 16
    assert cfg.spde_config().seed == 7


def test_unknown_key_names_its_path(tmp_dir):
    p = tmp_dir / "bad.yaml"
    p.write_text("deterministic:\n  chii: 1.0\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"deterministic\.chii"):
        parse_config(str(p))


@pytest.mark.parametrize(
    "overrides, key",
    [
        ({"schedule.eps_list": [1e-3, 1e-2]}, r"schedule\.eps_list"),
        ({"noise.gamma": 0.5}, r"noise\.gamma"),
        ({"deterministic.scheme": "rk4"}, r"deterministic\.scheme"),
        ({"run.seed": -1}, r"run\.seed"),
    ],
)
def test_invalid_values(overrides, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(overrides=overrides)


def test_yaml_errors(tmp_dir):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(str(tmp_dir / "missing.yaml"))
    broken = tmp_dir / "broken.yaml"
    broken.write_text("spectral: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config(str(broken))
    listing = tmp_dir / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config(str(listing))


def test_override_through_a_scalar_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(overrides={"spectral.M": 8, "spectral.M.x": 1})


def test_regime_warnings_are_logged(caplog):
    with caplog.at_level(logging.WARNING, logger="ksdk.settings"):
        cfg = parse_config(overrides={"noise.delta": 0.01})
    assert any("noise.delta" in w for w in cfg.regime_warnings())
    assert "noise.delta" in caplog.text


def test_fast_shrinking_delta_warns():
    # δ = ε^{1/2} shrinks too fast for ε^{1/2}δ^{-2} to decrease
    cfg = parse_config(overrides={"schedule.delta_rule.kind": "power", "schedule.delta_rule.p": 0.5})
    assert any("ε^{1/2}" in w for w in cfg.regime_warnings())


def test_runtime_views():
    cfg = parse_config(overrides={"initial.kind": "bump", "schedule.delta_rule.kind": "constant"})
    assert cfg.initial_condition().kind == "bump"
    sched = cfg.scaling_schedule()
    assert [d for _, d in sched.points()] == [1.0, 1.0, 1.0]
    summary = regime_summary(cfg)
    assert set(summary) == {"warnings", "spde", "schedule", "mollifier_cutoff_modes"}
    json.dumps(cfg.resolved())


def test_deterministic_section_builds_det_config(tmp_dir):
    p = tmp_dir / "det.yaml"
    p.write_text("deterministic:\n  chi: 2.5\n  T: 0.1\n  scheme: etd2\n", encoding="utf-8")
    det = parse_config(str(p)).det_config()
    assert (det.chi, det.T, det.scheme) == (2.5, 0.1, "etd2")
    assert det.M == 32
    assert det.n_steps == 400
