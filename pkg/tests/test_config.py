import pytest

from stash.config import Config
from stash.errors import ConfigError


def test_defaults_match_shipped_parameters():
    cfg = Config()
    assert cfg.detector.sigma1_deg == 3.0
    assert cfg.detector.sigma2_deg == 1.0
    assert cfg.detector.granularity_deg == 15.0
    assert cfg.detector.highpass_floor_dps == 8.6
    assert cfg.detector.flatten_std == 0.01
    assert cfg.hmm.emit_m_given_m == 0.98
    assert cfg.hmm.emit_s_given_s == 0.92
    assert cfg.hmm.self_transition == 0.99
    assert (cfg.scoring.match, cfg.scoring.mismatch, cfg.scoring.gap) == (1, -2, -1)
    assert cfg.decision.alpha == 0.5
    assert cfg.decision.max_attempts == 10
    assert cfg.ingest.rate_hz == 20.0


def test_file_overrides_defaults(tmp_path):
    path = tmp_path / "stash.toml"
    path.write_text(
        """
[detector]
sigma1_deg = 4.0

[scoring]
mismatch = -3

[decision]
alpha = 0.3
"""
    )
    cfg = Config.from_file(path)
    assert cfg.detector.sigma1_deg == 4.0
    assert cfg.detector.sigma2_deg == 1.0  # untouched default
    assert cfg.scoring.mismatch == -3
    assert cfg.decision.alpha == 0.3


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[mystery]\nx = 1\n")
    with pytest.raises(ConfigError):
        Config.from_file(path)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[detector]\nsigma99 = 1.0\n")
    with pytest.raises(ConfigError):
        Config.from_file(path)


def test_invalid_value_rejected():
    with pytest.raises(ConfigError):
        Config.from_dict({"decision": {"alpha": 1.5}})
    with pytest.raises(ConfigError):
        Config.from_dict({"detector": {"sigma1_deg": 0.5, "sigma2_deg": 1.0}})


def test_invalid_toml_rejected(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[detector\n")
    with pytest.raises(ConfigError):
        Config.from_file(path)
