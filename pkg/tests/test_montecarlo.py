"""Stochastic engine tests: sampling, seeding, batch/scalar agreement,
replication harness, distribution stats, and sweep plumbing."""

import numpy as np
import pytest

from reliance_sim.episode import AttackVector, LossSpec, run_episode
from reliance_sim.montecarlo import (
    AttackCountResult,
    DistributionStats,
    StochasticSpec,
    SweepGrid,
    SweepParameter,
    _draw_world_arrays,
    apply_sweep_value,
    batch_episode_scores,
    distribution_by_attack_count,
    expected_distribution_by_attack_count,
    format_sweep_value,
    replicate,
    sample_world,
    sensitivity_sweep,
    strategy_generator,
    world_from_arrays,
)
from reliance_sim.reliance import (
    AssessmentMode,
    DomainError,
    FeedbackPolicy,
    RelianceConfig,
    TaskProfile,
    TieBreak,
)

LOSS = LossSpec()


def profiles_for(n):
    return (TaskProfile(),) * n


def base_config(**overrides):
    defaults = dict(gamma=1.0, alpha=0.8, r_hat=0.7, r_init=0.8)
    defaults.update(overrides)
    return RelianceConfig(**defaults)


class TestSampleWorld:
    def test_degenerate_accuracies(self):
        spec = StochasticSpec(p_m=1.0, p_h=1.0, p_a=0.0, n=16)
        world = sample_world(spec, 7)
        assert all(world.model_correct)
        assert all(world.human_correct)
        assert all(world.attacked_correct)  # attack never succeeds at p_a = 0

    def test_attack_always_succeeds_at_pa_one(self):
        spec = StochasticSpec(p_a=1.0, n=32)
        world = sample_world(spec, 11)
        assert not any(world.attacked_correct)

    def test_same_seed_identical(self):
        spec = StochasticSpec(n=12)
        assert sample_world(spec, 123) == sample_world(spec, 123)
        assert sample_world(spec, 123) != sample_world(spec, 124)

    def test_law_of_large_numbers(self):
        spec = StochasticSpec(p_m=0.8, n=100_000)
        world = sample_world(spec, 5)
        frac = sum(world.model_correct) / spec.n
        assert frac == pytest.approx(0.8, abs=0.01)

    def test_score_ranges(self):
        spec = StochasticSpec(d_low_range=(0.0, 0.3), d_high_range=(0.7, 1.0), n=200)
        world = sample_world(spec, 3)
        assert all(0.0 <= d < 0.3 + 1e-12 for d in world.d_low)
        assert all(0.7 <= d < 1.0 + 1e-12 for d in world.d_high)

    def test_spec_validation(self):
        with pytest.raises(DomainError, match="p_m"):
            StochasticSpec(p_m=1.5)
        with pytest.raises(DomainError, match="d_low_range"):
            StochasticSpec(d_low_range=(0.4, 0.2))
        with pytest.raises(DomainError, match="replications"):
            StochasticSpec(replications=0)


class TestBatchScalarAgreement:
    @pytest.mark.parametrize(
        "config",
        [
            base_config(),
            base_config(tie_break=TieBreak.TRUST_ON_EQUAL),
            base_config(feedback_policy=FeedbackPolicy.TRUST_CONDITIONED),
            base_config(feedback_policy=FeedbackPolicy.CORRECTNESS_CONDITIONED),
            base_config(
                assessment=AssessmentMode.THRESHOLDED, theta_m=0.6, theta_h=0.4
            ),
            base_config(gamma=0.5, w_k=0.3, w_c=0.2),
            base_config(clamp_reliance=False),
        ],
        ids=[
            "default",
            "trust_on_equal",
            "trust_conditioned",
            "correctness_conditioned",
            "thresholded",
            "factors_active",
            "unclamped",
        ],
    )
    def test_rows_match_run_episode_bitwise(self, config):
        spec = StochasticSpec(p_m=0.7, p_h=0.85, p_a=0.9, n=8, replications=16)
        profiles = tuple(
            TaskProfile(self_confidence=0.2, risk=0.5, complexity=0.3, time_sensitivity=0.1)
            for _ in range(spec.n)
        )
        mask = AttackVector((1, 0, 0, 1, 0, 1, 0, 0))
        rng = strategy_generator(spec.base_seed, 0, 0)
        arrays = _draw_world_arrays(spec, rng, spec.replications)
        batch = batch_episode_scores(config, profiles, mask, arrays, LOSS)
        for row in range(spec.replications):
            world = world_from_arrays(arrays, row)
            scalar = run_episode(config, profiles, mask, world, LOSS).attack_score
            assert scalar == batch[row]  # bitwise, not approximate

    def test_product_aggregation_matches(self):
        from reliance_sim.episode import Aggregation

        loss = LossSpec(aggregation=Aggregation.PRODUCT)
        config = base_config()
        spec = StochasticSpec(p_m=0.2, p_h=0.1, n=4, replications=32)
        mask = AttackVector((1, 1, 0, 0))
        rng = strategy_generator(spec.base_seed, 0, 0)
        arrays = _draw_world_arrays(spec, rng, spec.replications)
        batch = batch_episode_scores(config, profiles_for(4), mask, arrays, loss)
        for row in range(8):
            world = world_from_arrays(arrays, row)
            scalar = run_episode(config, profiles_for(4), mask, world, loss).attack_score
            assert scalar == batch[row]


class TestReplicate:
    def test_single_replication_reduces_to_run_episode(self):
        config = base_config()
        spec = StochasticSpec(n=10, replications=1, base_seed=99)
        mask = AttackVector.from_bitstring("1000000001")
        scores = replicate(config, profiles_for(10), mask, spec, LOSS)
        rng = strategy_generator(99, 0, 0)
        world = world_from_arrays(_draw_world_arrays(spec, rng, 1), 0)
        direct = run_episode(config, profiles_for(10), mask, world, LOSS).attack_score
        assert scores.shape == (1,)
        assert scores[0] == direct

    def test_always_trust_baseline(self):
        # No attacks, threshold at zero: the score converges on the model
        # error rate 1 - p_m.
        config = base_config(r_hat=0.0, tie_break=TieBreak.TRUST_ON_EQUAL)
        spec = StochasticSpec(p_m=0.8, n=10, replications=10_000, base_seed=7)
        scores = replicate(config, profiles_for(10), AttackVector((0,) * 10), spec, LOSS)
        assert float(scores.mean()) == pytest.approx(0.2, abs=0.01)

    def test_never_trust_baseline(self):
        # Unreachable threshold: the score converges on the human error rate.
        config = base_config(r_hat=1.0)
        spec = StochasticSpec(p_h=0.9, n=10, replications=10_000, base_seed=8)
        scores = replicate(config, profiles_for(10), AttackVector((1,) * 10), spec, LOSS)
        assert float(scores.mean()) == pytest.approx(0.1, abs=0.01)

    def test_deterministic_across_calls(self):
        config = base_config()
        spec = StochasticSpec(n=10, replications=64)
        mask = AttackVector.from_bitstring("0100000010")
        a = replicate(config, profiles_for(10), mask, spec, LOSS)
        b = replicate(config, profiles_for(10), mask, spec, LOSS)
        assert np.array_equal(a, b)

    def test_distinct_strategy_ordinals_get_distinct_worlds(self):
        config = base_config()
        spec = StochasticSpec(n=10, replications=64)
        mask = AttackVector.from_bitstring("0100000010")
        a = replicate(config, profiles_for(10), mask, spec, LOSS, ordinal=0)
        b = replicate(config, profiles_for(10), mask, spec, LOSS, ordinal=1)
        assert not np.array_equal(a, b)


class TestDistributionByAttackCount:
    def test_zero_budget_single_strategy(self):
        config = base_config()
        spec = StochasticSpec(n=6, replications=50)
        results = distribution_by_attack_count(config, profiles_for(6), spec, LOSS, [0])
        assert len(results) == 1
        result = results[0]
        assert len(result.strategies) == 1
        assert result.best_mask == result.worst_mask == "000000"

    def test_stats_ordering_invariants(self):
        config = base_config()
        spec = StochasticSpec(n=6, replications=80)
        results = distribution_by_attack_count(
            config, profiles_for(6), spec, LOSS, range(0, 7)
        )
        assert [r.n_attacks for r in results] == list(range(0, 7))
        for result in results:
            s = result.stats
            assert s.min <= s.q25 <= s.median <= s.q75 <= s.max
            assert len(result.strategies) == __import__("math").comb(6, result.n_attacks)

    def test_reproducibility(self):
        config = base_config()
        spec = StochasticSpec(n=6, replications=40)
        first = distribution_by_attack_count(config, profiles_for(6), spec, LOSS, [2])
        second = distribution_by_attack_count(config, profiles_for(6), spec, LOSS, [2])
        assert first == second

    def test_parallel_matches_sequential(self):
        config = base_config()
        spec = StochasticSpec(n=6, replications=40)
        seq = distribution_by_attack_count(config, profiles_for(6), spec, LOSS, [2], jobs=1)
        par = distribution_by_attack_count(config, profiles_for(6), spec, LOSS, [2], jobs=2)
        assert seq == par

    def test_expected_mode_matches_closed_form_structure(self):
        from reliance_sim.episode import ExpectedLosses

        config = base_config(tie_break=TieBreak.DISTRUST_ON_EQUAL)
        results = expected_distribution_by_attack_count(
            config,
            profiles_for(10),
            ExpectedLosses(human=0.1, model=0.2, attacked=1.0),
            0.2,
            0.8,
            10,
            LOSS,
            [2],
        )
        (result,) = results
        assert result.best_mask == "1000000001"
        assert result.best_mean == pytest.approx(0.35, abs=1e-12)
        assert all(s.n_replications == 0 for s in result.strategies)


class TestSweep:
    def test_grid_validation(self):
        with pytest.raises(DomainError, match="values"):
            SweepGrid(parameter=SweepParameter.MODEL_ACC, values=(), attack_counts=(0,))
        with pytest.raises(DomainError, match="parameter"):
            SweepGrid(parameter="nope", values=(0.5,), attack_counts=(0,))
        with pytest.raises(DomainError, match="combined_acc"):
            SweepGrid(parameter=SweepParameter.COMBINED_ACC, values=(0.5,), attack_counts=(0,))
        with pytest.raises(DomainError, match="values"):
            SweepGrid(parameter=SweepParameter.MODEL_ACC, values=(1.5,), attack_counts=(0,))

    def test_apply_value(self):
        config = base_config()
        spec = StochasticSpec()
        _, s = apply_sweep_value(SweepParameter.MODEL_ACC, 0.4, config, spec)
        assert s.p_m == 0.4
        _, s = apply_sweep_value(SweepParameter.COMBINED_ACC, (0.3, 0.6), config, spec)
        assert (s.p_m, s.p_h) == (0.3, 0.6)
        c, _ = apply_sweep_value(SweepParameter.RELIANCE_THRESHOLD, 0.25, config, spec)
        assert c.r_hat == 0.25

    def test_value_labels(self):
        assert format_sweep_value(SweepParameter.MODEL_ACC, 0.4) == "0.4"
        assert format_sweep_value(SweepParameter.COMBINED_ACC, (0.2, 0.8)) == "0.2:0.8"

    def test_sweep_shape_and_first_value_stability(self):
        config = base_config()
        spec = StochasticSpec(n=5, replications=30)
        counts = (0, 1, 2)
        grid_two = SweepGrid(SweepParameter.MODEL_ACC, (0.3, 0.7), counts)
        grid_one = SweepGrid(SweepParameter.MODEL_ACC, (0.3,), counts)
        rows_two = sensitivity_sweep(grid_two, config, profiles_for(5), spec, LOSS)
        rows_one = sensitivity_sweep(grid_one, config, profiles_for(5), spec, LOSS)
        assert len(rows_two) == 6 and len(rows_one) == 3
        # Grid values are seeded by index, so the shared prefix is identical.
        assert rows_two[:3] == rows_one

    def test_distribution_stats_helper(self):
        scores = np.array([0.1, 0.4, 0.2, 0.9, 0.6])
        stats = DistributionStats.from_scores(scores, argmax_strategy_id=3)
        assert stats.min == pytest.approx(0.1)
        assert stats.max == pytest.approx(0.9)
        assert stats.mean == pytest.approx(scores.mean())
        assert stats.argmax_strategy_id == 3
