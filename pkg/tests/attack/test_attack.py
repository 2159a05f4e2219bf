import json
import math
from dataclasses import replace

import numpy as np
import pytest

from rxneural.attack import (
    PRESETS,
    AttackConfig,
    AttackResult,
    calibrate_thresholds,
    complexity_report,
    generate_challenge,
    run_attack,
    success_rate_harness,
    synthetic_setup,
    write_report,
)
from rxneural.ciphers import CipherId
from rxneural.config import parse_config
from rxneural.data import BaseFormat, DataFormatSpec
from rxneural.distinguisher import ConstantDistinguisher
from rxneural.error import AttackError, InvalidArgumentError
from rxneural.keyrank import JwkrProfile, WkrProfile, loglik


def oracle_config(preset, **overrides):
    cfg = AttackConfig.from_preset(preset)
    spec = DataFormatSpec(BaseFormat.D2, 1, cfg.d.lam, cfg.total_rounds - 1)
    return AttackConfig.from_preset(preset, spec=spec, **overrides)


@pytest.fixture(scope="module")
def simon():
    cfg = oracle_config("simon-desk", t=4)
    factory, profiles = synthetic_setup(cfg)
    c1, c2 = calibrate_thresholds(cfg, factory, trials=4)
    # Every true pair scores the same; leave room for summation order
    return cfg.with_thresholds(0.9 * c1, 0.9 * c2), factory, profiles


class TestAttackConfig:
    """Attack parameter sets."""

    def test_presets(self):
        """Test that every preset builds."""
        for name in PRESETS:
            cfg = AttackConfig.from_preset(name)
            assert cfg.spec.rounds == cfg.total_rounds - 1
            assert cfg.joint == (cfg.cipher is CipherId.SIMECK32_64)

    def test_unknown_preset(self):
        """Test that unknown presets are refused."""
        with pytest.raises(InvalidArgumentError):
            AttackConfig.from_preset("des-16r")

    def test_overrides(self):
        """Test that overrides replace preset values and None is ignored."""
        cfg = AttackConfig.from_preset("simon-14r", m=16, c1=None)
        assert cfg.m == 16
        assert cfg.c1 == 500.0

    def test_joint_needs_sensitive_sets(self):
        """Test that Simeck attacks require sensitive bit sets."""
        with pytest.raises(InvalidArgumentError):
            AttackConfig.from_preset("simeck-desk", sens_last_a=())

    @pytest.mark.parametrize("overrides", [{"total_rounds": 2}, {"m": 0}, {"c1": math.inf}, {"max_survivors": 0}])
    def test_invalid(self, overrides):
        """Test parameter validation."""
        with pytest.raises(InvalidArgumentError):
            AttackConfig.from_preset("simon-desk", **overrides)

    def test_from_experiment(self):
        """Test attack parameters taken from an experiment document."""
        cfg = AttackConfig.from_experiment(parse_config({"cipher": "simeck", "rounds": 7, "seed": 3,
                                                         "half_rxd": {"lambda": 1, "delta_r": "0x4"},
                                                         "attack": {"m": 8, "sens_last_a": [1], "sens_last_b": [2],
                                                                    "sens_penult_a": [3], "sens_penult_b": [4]}}))
        assert cfg.total_rounds == 8 and cfg.spec.rounds == 7
        assert cfg.m == 8 and cfg.seed == 3
        assert cfg.guessed_bits(1) == ((1,), (2,))

    def test_from_experiment_preset(self):
        """Test that a named preset wins over the document's own parameters."""
        cfg = AttackConfig.from_experiment(parse_config({"attack": {"preset": "simeck-17r", "c1": 2.0}}))
        assert cfg.total_rounds == 17
        assert cfg.c1 == 2.0 and cfg.c2 == 100.0


class TestComplexity:
    """Data and time complexity."""

    def test_simon_14r(self):
        """Test the complexity of the 14-round Simon attack."""
        data, time = complexity_report(AttackConfig.from_preset("simon-14r"))
        assert data == pytest.approx(15.81, abs=0.01)
        assert time == 32.0

    def test_simeck_16r(self):
        """Test the complexity of the 16-round Simeck attack."""
        cfg = AttackConfig.from_preset("simeck-16r")
        data, time = complexity_report(cfg)
        assert data == pytest.approx(16.17, abs=0.01)
        assert cfg.recovered_key_bits == 13
        assert time == 51.0

    def test_recovered_bits_range(self):
        """Test that recovered bits are bounded by the key size."""
        with pytest.raises(InvalidArgumentError):
            complexity_report(AttackConfig.from_preset("simon-desk"), 65)


class TestChallenge:
    """Attack challenges."""

    def test_deterministic(self):
        """Test that a seed fixes the key and ciphertexts."""
        cfg = oracle_config("simon-desk")
        a, b = generate_challenge(cfg, 5), generate_challenge(cfg, 5)
        assert a.key_pair == b.key_pair and a.c == b.c
        assert np.asarray(a.c.left).shape == (cfg.m, cfg.k)

    def test_true_pair_masks_bits(self):
        """Test the restriction of true subkeys to guessed bits."""
        cfg = oracle_config("simeck-desk")
        challenge = generate_challenge(cfg, 1)
        key, key_prime = challenge.true_pair(cfg.last_index, (0,), (1,))
        assert key == int(challenge.rk[cfg.last_index]) & 1
        assert key_prime == int(challenge.rk_prime[cfg.last_index]) & 2


class TestRunAttack:
    """Key recovery against structure oracles."""

    def test_graded_oracle_simon_recovers_both_subkeys(self, simon):
        """Test that the synthetic Simon attack recovers the last two subkeys."""
        cfg, factory, profiles = simon
        challenge = generate_challenge(cfg, 42)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        assert result.succeeded()
        assert not result.fallback
        assert result.attempts == 1
        assert result.last_round_key == challenge.rk[cfg.last_index]
        assert result.recovered_key_bits == 32

    def test_fallback_after_t_attempts(self, simon):
        """Test that an unreachable c2 returns the best pair after t attempts."""
        cfg, factory, profiles = simon
        cfg = replace(cfg, c2=1e9, t=2)
        challenge = generate_challenge(cfg, 43)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        assert result.fallback
        assert result.attempts == 2
        assert "fallback" in result.summary()

    def test_no_survivors(self, simon):
        """Test that an unreachable c1 still extends the best last-round guess."""
        cfg, factory, profiles = simon
        cfg = replace(cfg, c1=1e9, t=1)
        challenge = generate_challenge(cfg, 44)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        assert result.fallback
        assert result.last_round_correct

    def test_graded_oracle_simeck_recovers_last_round_bits(self):
        """Test the joint attack on the sensitive bits of the last subkey pair."""
        cfg = oracle_config("simeck-desk", t=2)
        factory, profiles = synthetic_setup(cfg)
        c1, _ = calibrate_thresholds(cfg, factory, trials=2)
        cfg = cfg.with_thresholds(0.9 * c1, 1e9)
        challenge = generate_challenge(cfg, 7)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        assert result.joint
        assert result.succeeded("last_round")
        assert result.guessed_bits["last_a"] == [5, 9, 10, 14, 15]

    def test_thresholds_required(self):
        """Test that an attack needs both thresholds."""
        cfg = oracle_config("simon-desk")
        factory, profiles = synthetic_setup(cfg)
        with pytest.raises(InvalidArgumentError):
            run_attack(cfg, *factory(generate_challenge(cfg, 1)), profiles)

    def test_invalid_success_criterion(self, simon):
        """Test the accepted success criteria."""
        cfg, factory, profiles = simon
        result = run_attack(cfg, *factory(generate_challenge(cfg, 3)), profiles, generate_challenge(cfg, 3))
        with pytest.raises(InvalidArgumentError):
            result.succeeded("most")


class TestCheckSetup:
    """Consistency of distinguishers, profiles and parameters."""

    def test_width_mismatch(self, simon):
        """Test that models must match the data format."""
        cfg, _, profiles = simon
        model = ConstantDistinguisher(0.5, 8)
        with pytest.raises(AttackError):
            run_attack(cfg, model, model, profiles)

    def test_profile_kind(self, simon):
        """Test that Simon attacks need single-key profiles."""
        cfg, _, profiles = simon
        model = ConstantDistinguisher(0.5, cfg.spec.width)
        joint = JwkrProfile((0,), (1,), np.zeros(4), np.zeros(4))
        with pytest.raises(AttackError):
            run_attack(cfg, model, model, (joint, profiles[1]))

    def test_profile_round(self, simon):
        """Test that profiles must target the guessed subkeys."""
        cfg, _, profiles = simon
        model = ConstantDistinguisher(0.5, cfg.spec.width)
        with pytest.raises(AttackError):
            run_attack(cfg, model, model, (profiles[1], profiles[0]))

    def test_attack_errors_are_invalid_arguments(self):
        """Test the error hierarchy."""
        assert issubclass(AttackError, InvalidArgumentError)

    def test_sensitive_set_mismatch(self):
        """Test that joint profiles must cover the guessed bits."""
        cfg = oracle_config("simeck-desk").with_thresholds(1.0, 1.0)
        model = ConstantDistinguisher(0.5, cfg.spec.width)
        other = JwkrProfile((1,), (2,), np.zeros(4), np.zeros(4), {"round_index": cfg.last_index})
        _, profiles = synthetic_setup(cfg)
        with pytest.raises(AttackError):
            run_attack(cfg, model, model, (other, profiles[1]))


class TestCalibration:
    """Threshold calibration from the scores of the true subkeys."""

    def test_constant_scorers(self):
        """Test that constant scorers give m times their log-odds at every quantile."""
        cfg = oracle_config("simon-desk")
        models = (ConstantDistinguisher(0.7, cfg.spec.width), ConstantDistinguisher(0.4, cfg.spec.width))
        for q in (0.0, 0.1, 0.5, 1.0):
            c1, c2 = calibrate_thresholds(cfg, models, trials=3, quantile=q)
            assert c1 == pytest.approx(cfg.m * loglik(0.7))
            assert c2 == pytest.approx(cfg.m * loglik(0.4))

    def test_monotone_in_quantile(self):
        """Test that a higher quantile never lowers either threshold."""
        cfg = oracle_config("simon-desk")
        factory, _ = synthetic_setup(cfg, noise=0.05)
        thresholds = [calibrate_thresholds(cfg, factory, trials=6, quantile=q) for q in (0.0, 0.1, 0.5, 0.9, 1.0)]
        for (a1, a2), (b1, b2) in zip(thresholds, thresholds[1:]):
            assert a1 <= b1 and a2 <= b2

    @pytest.mark.parametrize("kwargs", [{"trials": 0}, {"trials": 1, "quantile": 1.5},
                                        {"trials": 1, "quantile": -0.1}])
    def test_invalid(self, kwargs):
        """Test calibration argument validation."""
        cfg = oracle_config("simon-desk")
        models = (ConstantDistinguisher(0.5, cfg.spec.width),) * 2
        with pytest.raises(InvalidArgumentError):
            calibrate_thresholds(cfg, models, **kwargs)


class TestHarness:
    """Success-rate harness."""

    def test_success_rate(self, simon, tmp_path):
        """Test that independent synthetic attacks succeed and are logged."""
        cfg, factory, profiles = simon
        log = tmp_path / "trials.jsonl"
        report = success_rate_harness(cfg, factory, profiles, n_attacks=4, workers=2, log_path=str(log))
        assert report.n_attacks == 4
        assert report.rate == report.successes / 4
        assert report.rate >= 0.75
        lines = log.read_text().splitlines()
        assert [json.loads(line)["index"] for line in lines] == [0, 1, 2, 3]

    def test_workers_do_not_change_results(self, simon):
        """Test that trials are identical for any worker count."""
        cfg, factory, profiles = simon
        a = success_rate_harness(cfg, factory, profiles, n_attacks=2, workers=1)
        b = success_rate_harness(cfg, factory, profiles, n_attacks=2, workers=2)
        assert [t.result.last_round_key for t in a.trials] == [t.result.last_round_key for t in b.trials]

    def test_invalid(self, simon):
        """Test harness argument validation."""
        cfg, factory, profiles = simon
        with pytest.raises(InvalidArgumentError):
            success_rate_harness(cfg, factory, profiles, n_attacks=0)
        with pytest.raises(InvalidArgumentError):
            success_rate_harness(cfg, factory, profiles, n_attacks=1, success_on="most")

    def test_records_carry_config_hash(self, simon, tmp_path):
        """Test that the report and every logged trial carry the config hash."""
        cfg, factory, profiles = simon
        log = tmp_path / "trials.jsonl"
        report = success_rate_harness(cfg, factory, profiles, n_attacks=2, log_path=str(log), config_hash="ef" * 32)
        assert report.config_hash == "ef" * 32
        assert all(json.loads(line)["result"]["config_hash"] == "ef" * 32 for line in log.read_text().splitlines())
        assert success_rate_harness(cfg, factory, profiles, n_attacks=1).config_hash is None


class TestReport:
    """Attack reports on disk."""

    def test_without_timings(self, simon, tmp_path):
        """Test that reports can leave out the wall time."""
        cfg, factory, profiles = simon
        challenge = generate_challenge(cfg, 8)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        path = tmp_path / "attack.json"
        write_report(result, str(path), timings=False)
        doc = json.loads(path.read_text())
        assert "wall_time" not in doc
        assert AttackResult.parse_obj({**doc, "wall_time": 0.0}).last_round_key == result.last_round_key
        write_report(result, str(path))
        assert "wall_time" in json.loads(path.read_text())

    def test_config_hash_is_written(self, simon, tmp_path):
        """Test that a stamped config hash survives the report file."""
        cfg, factory, profiles = simon
        challenge = generate_challenge(cfg, 9)
        result = run_attack(cfg, *factory(challenge), profiles, challenge)
        assert result.config_hash is None
        path = tmp_path / "attack.json"
        write_report(result.copy(update={"config_hash": "01" * 32}), str(path), timings=False)
        assert json.loads(path.read_text())["config_hash"] == "01" * 32
