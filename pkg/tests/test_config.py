import json

import pytest

from sagnac_switch.config import (SEED_ENV, ConfigError, config_from_dict, load_config,
                                  parse_seconds)
from sagnac_switch.experiment import DEFAULT_SEED


@pytest.mark.parametrize("text, seconds", [("32ns", 32e-9), ("1.5 us", 1.5e-6), ("10", 10.0),
                                           ("2ms", 2e-3), ("-30ns", -30e-9), (0.25, 0.25)])
def test_parse_seconds(text, seconds):
    assert parse_seconds(text) == pytest.approx(seconds, rel=1e-15)


@pytest.mark.parametrize("bad", ["", "3 parsecs", "ns", "1e"])
def test_parse_seconds_rejects(bad):
    with pytest.raises(ConfigError):
        parse_seconds(bad)


def test_defaults(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    cfg = load_config()
    assert cfg.switch.v_pi == 4.0
    assert cfg.plan.seed == DEFAULT_SEED
    assert len(cfg.plan.voltages) == 17


def test_sections_and_units():
    cfg = config_from_dict({
        "switch": {"pulse_width": "40ns", "delay_length": 50},
        "detector": {"gate_width": "50ns"},
        "plan": {"voltages": [0, 4, 8], "integration_time": "500ms", "seed": 9},
    })
    assert cfg.switch.pulse_width == pytest.approx(40e-9)
    assert cfg.detector.gate_width == pytest.approx(50e-9)
    assert cfg.plan.voltages == (0.0, 4.0, 8.0)
    assert cfg.plan.integration_time == pytest.approx(0.5)
    assert cfg.plan.seed == 9


@pytest.mark.parametrize("doc", [
    {"switchh": {}},
    {"switch": {"vpi": 4}},
    {"switch": {"v_pi": -1}},
    {"plan": {"voltages": 3}},
    {"switch": []},
    [],
])
def test_bad_documents(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_env_seed(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "0x10")
    assert load_config().plan.seed == 16
    assert config_from_dict({"plan": {"seed": 3}}).plan.seed == 3
    monkeypatch.setenv(SEED_ENV, "abc")
    with pytest.raises(ConfigError):
        load_config()


def test_file_errors_name_the_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"switch": {"v_pi": 4,}}')
    with pytest.raises(ConfigError, match="c.json:1:"):
        load_config(p)
    with pytest.raises(ConfigError, match="missing.json"):
        load_config(tmp_path / "missing.json")
    p.write_text(json.dumps({"source": {"heralded_pair_rate": 10, "trigger_rate": 40}}))
    assert load_config(p).source.heralding == 0.25
