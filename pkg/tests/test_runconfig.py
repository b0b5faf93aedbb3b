"""Config document validation: presets, strict keys, field-path errors."""

import pytest

from reliance_sim.episode import Aggregation, LossKind
from reliance_sim.reliance import FeedbackPolicy, TieBreak
from reliance_sim.runconfig import (
    ConfigError,
    builtin_preset_names,
    default_run_config,
    load_run_config,
    parse_run_config,
)


class TestPreset:
    def test_paper_v5_loads(self):
        config = load_run_config("paper-v5")
        assert config.n == 10
        assert config.reliance.alpha == 0.8
        assert config.reliance.r_hat == 0.7
        assert config.reliance.r_init == 0.8
        assert config.reliance.gamma == 1.0
        assert config.reliance.tie_break is TieBreak.DISTRUST_ON_EQUAL
        assert config.reliance.feedback_policy is FeedbackPolicy.ATTACK_CONDITIONED
        assert config.stochastic.p_m == 0.8
        assert config.stochastic.p_h == 0.9
        assert config.stochastic.p_a == 1.0
        assert config.stochastic.d_low_range == (0.0, 0.3)
        assert config.stochastic.d_high_range == (0.7, 1.0)
        assert config.loss.kind is LossKind.ZERO_ONE
        assert config.loss.aggregation is Aggregation.MEAN
        assert (config.d_attacked, config.d_clean) == (0.2, 0.8)
        assert len(config.profiles) == 10

    def test_preset_listing(self):
        assert "paper-v5" in builtin_preset_names()

    def test_missing_config(self):
        with pytest.raises(ConfigError, match="no preset"):
            load_run_config("definitely-not-a-preset")

    def test_defaults_match_preset(self):
        # The shipped preset spells out the built-in defaults.
        assert default_run_config().resolved_dict() == load_run_config("paper-v5").resolved_dict()


class TestValidation:
    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="attack: unknown section"):
            parse_run_config({"attack": {}})

    def test_unknown_key_path(self):
        with pytest.raises(ConfigError, match=r"stochastic\.p_x: unknown key"):
            parse_run_config({"stochastic": {"p_x": 0.5}})

    def test_out_of_range_field_path(self):
        with pytest.raises(ConfigError, match=r"reliance\.gamma"):
            parse_run_config({"reliance": {"gamma": 1.5}})

    def test_enum_error_lists_options(self):
        with pytest.raises(ConfigError, match="distrust_on_equal"):
            parse_run_config({"reliance": {"tie_break": "flip_a_coin"}})

    def test_type_errors(self):
        with pytest.raises(ConfigError, match=r"reliance\.alpha: expected a number"):
            parse_run_config({"reliance": {"alpha": "high"}})
        with pytest.raises(ConfigError, match=r"stochastic\.replications: expected an integer"):
            parse_run_config({"stochastic": {"replications": 2.5}})
        with pytest.raises(ConfigError, match=r"reliance\.clamp_reliance: expected true/false"):
            parse_run_config({"reliance": {"clamp_reliance": "yes"}})

    def test_range_pair_errors(self):
        with pytest.raises(ConfigError, match=r"stochastic\.d_low"):
            parse_run_config({"stochastic": {"d_low": [0.1]}})
        with pytest.raises(ConfigError, match=r"stochastic\.d_low_range"):
            parse_run_config({"stochastic": {"d_low": [0.4, 0.1]}})

    def test_profiles_length_must_match(self):
        doc = {"episode": {"n_tasks": 3}, "profiles": [{"risk": 0.1}] * 2}
        with pytest.raises(ConfigError, match="expected 3 entries"):
            parse_run_config(doc)

    def test_profile_and_profiles_conflict(self):
        doc = {"profile": {"risk": 0.1}, "profiles": [{"risk": 0.1}] * 10}
        with pytest.raises(ConfigError, match="not both"):
            parse_run_config(doc)

    def test_per_task_profiles(self):
        doc = {
            "episode": {"n_tasks": 2},
            "profiles": [{"risk": 0.5}, {"risk": 1.5, "self_confidence": 0.3}],
        }
        config = parse_run_config(doc)
        assert config.profiles[0].risk == 0.5
        assert config.profiles[1].risk == 1.5
        assert config.profiles[1].self_confidence == 0.3

    def test_profile_field_error_carries_index(self):
        doc = {"episode": {"n_tasks": 1}, "profiles": [{"self_confidence": 2.0}]}
        with pytest.raises(ConfigError, match=r"profiles\[0\]\.self_confidence"):
            parse_run_config(doc)

    def test_deterministic_bounds(self):
        with pytest.raises(ConfigError, match=r"deterministic\.d_clean"):
            parse_run_config({"deterministic": {"d_clean": 1.4}})

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("[reliance\nalpha = 0.5")
        with pytest.raises(ConfigError, match="not valid TOML"):
            load_run_config(path)

    def test_hash_is_stable_and_sensitive(self):
        a = parse_run_config({})
        b = parse_run_config({})
        c = parse_run_config({"reliance": {"alpha": 0.5}})
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()
