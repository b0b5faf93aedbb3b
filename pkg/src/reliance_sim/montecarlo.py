"""Seeded stochastic worlds, replicated episodes, distribution statistics,
and sensitivity sweeps.

Seed derivation
---------------
Every strategy evaluation draws from its own substream:

    SeedSequence(entropy=base_seed, spawn_key=(context, ordinal))

feeding a PCG64 generator. `context` namespaces independent studies (0 for a
plain enumeration; sweep cells use the grid-value index), and `ordinal` is
the strategy's position in the call's enumeration order. Within a strategy,
the world arrays are drawn in a fixed order (model, human, attacked, d_low,
d_high), and replication j reads row j. The derivation is part of the output
contract: identical (base_seed, request) pairs reproduce every byte, and
parallel execution cannot change results because no stream is shared.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .episode import (
    Aggregation,
    AttackVector,
    EpisodeError,
    ExpectedLosses,
    LossSpec,
    WorldSample,
)
from .reliance import (
    AssessmentMode,
    DomainError,
    FallbackPolicy,
    FeedbackPolicy,
    RelianceConfig,
    TaskProfile,
    TieBreak,
    model_irrelevant_factor,
)
from .strategies import enumerate_strategies, strategy_count, DEFAULT_ENUMERATION_CAP


@dataclass(frozen=True)
class StochasticSpec:
    """Sampling model of one episode plus the replication budget."""

    p_m: float = 0.8
    p_h: float = 0.9
    p_a: float = 1.0
    d_low_range: tuple[float, float] = (0.0, 0.3)
    d_high_range: tuple[float, float] = (0.7, 1.0)
    n: int = 10
    replications: int = 1000
    base_seed: int = 20250801

    def __post_init__(self) -> None:
        for name in ("p_m", "p_h", "p_a"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}: expected a probability in [0, 1], got {v!r}")
        for name in ("d_low_range", "d_high_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise DomainError(
                    f"{name}: expected 0 <= lo <= hi <= 1, got ({lo!r}, {hi!r})"
                )
        if self.n < 1:
            raise DomainError(f"n: expected >= 1, got {self.n}")
        if self.replications < 1:
            raise DomainError(f"replications: expected >= 1, got {self.replications}")

    def expected_losses(self) -> ExpectedLosses:
        """Expected per-branch losses implied by the accuracy parameters."""
        return ExpectedLosses(
            human=1.0 - self.p_h, model=1.0 - self.p_m, attacked=self.p_a
        )


class SweepParameter:
    MODEL_ACC = "model_acc"
    HUMAN_ACC = "human_acc"
    COMBINED_ACC = "combined_acc"
    RELIANCE_THRESHOLD = "reliance_threshold"

    ALL = (MODEL_ACC, HUMAN_ACC, COMBINED_ACC, RELIANCE_THRESHOLD)


@dataclass(frozen=True)
class SweepGrid:
    """A swept parameter, its values, and the attack budgets to evaluate.

    COMBINED_ACC values are (p_m, p_h) pairs; the other parameters take
    scalars within their legal ranges.
    """

    parameter: str
    values: tuple
    attack_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.parameter not in SweepParameter.ALL:
            raise DomainError(
                f"parameter: expected one of {SweepParameter.ALL}, got {self.parameter!r}"
            )
        if not self.values:
            raise DomainError("values: the sweep grid must list at least one value")
        if not self.attack_counts:
            raise DomainError("attack_counts: at least one attack budget required")
        for v in self.values:
            if self.parameter == SweepParameter.COMBINED_ACC:
                if not (isinstance(v, tuple) and len(v) == 2):
                    raise DomainError(
                        f"values: combined_acc expects (p_m, p_h) pairs, got {v!r}"
                    )
                pm, ph = v
                self._check_prob("values", pm)
                self._check_prob("values", ph)
            else:
                self._check_prob("values", v)

    @staticmethod
    def _check_prob(name: str, v) -> None:
        if not (isinstance(v, (int, float)) and 0.0 <= float(v) <= 1.0):
            raise DomainError(f"{name}: expected a number in [0, 1], got {v!r}")


@dataclass(frozen=True)
class DistributionStats:
    """Order statistics of a pooled attack-score sample."""

    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    argmax_strategy_id: int

    @classmethod
    def from_scores(cls, scores: np.ndarray, argmax_strategy_id: int) -> "DistributionStats":
        return cls(
            mean=float(np.mean(scores)),
            std=float(np.std(scores)),
            min=float(np.min(scores)),
            q25=float(np.quantile(scores, 0.25)),
            median=float(np.quantile(scores, 0.5)),
            q75=float(np.quantile(scores, 0.75)),
            max=float(np.max(scores)),
            argmax_strategy_id=argmax_strategy_id,
        )


@dataclass(frozen=True)
class StrategyResult:
    """Replicated attack scores of one strategy, summarized."""

    strategy_id: int
    mask: str
    n_attacks: int
    as_mean: float
    as_std: float
    as_max: float
    as_min: float
    n_replications: int


@dataclass(frozen=True)
class AttackCountResult:
    """Pooled distribution and per-strategy summaries for one attack budget."""

    n_attacks: int
    stats: DistributionStats
    strategies: tuple[StrategyResult, ...]
    best_mask: str
    best_mean: float
    worst_mask: str
    worst_mean: float


@dataclass(frozen=True)
class SweepRow:
    """One (parameter value, attack count) cell of a sensitivity sweep."""

    parameter: str
    value: str
    n_attacks: int
    mean_as: float
    std_as: float
    max_as: float
    best_mask: str
    n_samples: int


def strategy_generator(base_seed: int, context: int, ordinal: int) -> np.random.Generator:
    """The documented substream for strategy `ordinal` under `context`."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(context, ordinal))
    return np.random.Generator(np.random.PCG64(ss))


def _draw_world_arrays(
    spec: StochasticSpec, rng: np.random.Generator, reps: int
) -> dict[str, np.ndarray]:
    """Draw all world arrays for `reps` replications in the contract order."""
    shape = (reps, spec.n)
    return {
        "model_ok": rng.random(shape) < spec.p_m,
        "human_ok": rng.random(shape) < spec.p_h,
        "attacked_ok": rng.random(shape) >= spec.p_a,
        "d_low": rng.uniform(spec.d_low_range[0], spec.d_low_range[1], shape),
        "d_high": rng.uniform(spec.d_high_range[0], spec.d_high_range[1], shape),
    }


def sample_world(spec: StochasticSpec, seed) -> WorldSample:
    """Sample a single episode world from an integer seed or SeedSequence.

    Equals row 0 of the batch sampler under the same seed, so scalar episode
    runs can be checked against the vectorized engine.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(entropy=seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    arrays = _draw_world_arrays(spec, rng, 1)
    return world_from_arrays(arrays, 0)


def world_from_arrays(arrays: dict[str, np.ndarray], row: int) -> WorldSample:
    """Materialize replication `row` of a batch draw as a WorldSample."""
    return WorldSample(
        model_correct=tuple(bool(x) for x in arrays["model_ok"][row]),
        human_correct=tuple(bool(x) for x in arrays["human_ok"][row]),
        attacked_correct=tuple(bool(x) for x in arrays["attacked_ok"][row]),
        d_low=tuple(float(x) for x in arrays["d_low"][row]),
        d_high=tuple(float(x) for x in arrays["d_high"][row]),
    )


def _gated_irrelevant_terms(
    config: RelianceConfig, profiles: Sequence[TaskProfile], n: int
) -> np.ndarray:
    """Model-irrelevant term entering the update after each task (0-based)."""
    if len(profiles) != n:
        raise EpisodeError(f"profiles: length {len(profiles)} != {n} tasks")
    terms = [model_irrelevant_factor(p, config) for p in profiles]
    return np.array([terms[min(t + 1, n - 1)] for t in range(n)], dtype=np.float64)


def batch_episode_scores(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    attack: AttackVector,
    arrays: dict[str, np.ndarray],
    loss: LossSpec,
) -> np.ndarray:
    """Attack scores of every replication row, vectorized across replications.

    Arithmetic mirrors `run_episode` operation for operation, so a row here is
    bitwise identical to the scalar episode run on the same world row.
    """
    n = attack.n
    reps = arrays["model_ok"].shape[0]
    if arrays["model_ok"].shape[1] != n:
        raise EpisodeError(
            f"world arrays cover {arrays['model_ok'].shape[1]} tasks, mask has {n}"
        )
    if (
        config.assessment is AssessmentMode.THRESHOLDED
        and config.feedback_policy is FeedbackPolicy.CORRECTNESS_CONDITIONED
    ):
        raise EpisodeError(
            "thresholded assessment needs the evaluation score before the "
            "prediction resolves; correctness_conditioned feedback is only "
            "valid with follows_trust assessment"
        )

    irrelevant = _gated_irrelevant_terms(config, profiles, n)
    trust_on_equal = config.tie_break is TieBreak.TRUST_ON_EQUAL
    policy = config.feedback_policy

    r = np.full(reps, config.r_init, dtype=np.float64)
    running_sum = np.zeros(reps, dtype=np.float64)
    running_prod = np.ones(reps, dtype=np.float64)
    for t in range(n):
        attacked = bool(attack.mask[t])
        trusted = (r >= config.r_hat) if trust_on_equal else (r > config.r_hat)
        model_branch_ok = arrays["attacked_ok"][:, t] if attacked else arrays["model_ok"][:, t]

        if config.assessment is AssessmentMode.THRESHOLDED:
            if policy is FeedbackPolicy.ATTACK_CONDITIONED:
                d = arrays["d_low"][:, t] if attacked else arrays["d_high"][:, t]
            else:  # TRUST_CONDITIONED
                d = np.where(trusted, arrays["d_high"][:, t], arrays["d_low"][:, t])
            theta = np.where(trusted, config.theta_m, config.theta_h)
            passed = d >= theta
            if config.fallback_policy is FallbackPolicy.FALLBACK_FIXED_CORRECT:
                fallback_ok = np.ones(reps, dtype=bool)
            elif config.fallback_policy is FallbackPolicy.FALLBACK_FIXED_WRONG:
                fallback_ok = np.zeros(reps, dtype=bool)
            else:
                fallback_ok = model_branch_ok
            correct = np.where(
                passed, model_branch_ok, np.where(trusted, fallback_ok, arrays["human_ok"][:, t])
            )
        else:
            # Simplified regime: assessment follows trust, so the executed
            # branch is the model's outcome when trusted, the human otherwise.
            correct = np.where(trusted, model_branch_ok, arrays["human_ok"][:, t])
            if policy is FeedbackPolicy.ATTACK_CONDITIONED:
                d = arrays["d_low"][:, t] if attacked else arrays["d_high"][:, t]
            elif policy is FeedbackPolicy.CORRECTNESS_CONDITIONED:
                d = np.where(correct, arrays["d_high"][:, t], arrays["d_low"][:, t])
            else:
                d = np.where(trusted, arrays["d_high"][:, t], arrays["d_low"][:, t])

        as_i = np.where(correct, 0.0, 1.0)
        running_sum = running_sum + as_i
        running_prod = running_prod * as_i

        r_new = config.gamma * (config.scaling_c * d) + (1.0 - config.gamma) * irrelevant[t]
        if config.clamp_reliance:
            r_new = np.minimum(1.0, np.maximum(0.0, r_new))
        r = config.alpha * r + (1.0 - config.alpha) * r_new
        if config.clamp_reliance:
            r = np.minimum(1.0, np.maximum(0.0, r))

    if loss.aggregation is Aggregation.PRODUCT:
        return running_prod
    return running_sum / n


def replicate(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    strategy: AttackVector,
    spec: StochasticSpec,
    loss: LossSpec,
    context: int = 0,
    ordinal: int = 0,
) -> np.ndarray:
    """Attack scores of `spec.replications` seeded episode runs of one strategy."""
    rng = strategy_generator(spec.base_seed, context, ordinal)
    arrays = _draw_world_arrays(spec, rng, spec.replications)
    return batch_episode_scores(config, profiles, strategy, arrays, loss)


def _evaluate_ordinal(args) -> tuple[int, str, int, np.ndarray]:
    """Worker: score one strategy. Top-level for pickling under --jobs."""
    config, profiles, mask, spec, loss, context, ordinal = args
    vector = AttackVector(mask)
    scores = replicate(config, profiles, vector, spec, loss, context, ordinal)
    return ordinal, vector.to_bitstring(), vector.budget, scores


def _run_strategy_batches(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    tasks: list[tuple[int, tuple[int, ...]]],
    spec: StochasticSpec,
    loss: LossSpec,
    context: int,
    jobs: int,
) -> list[tuple[int, str, int, np.ndarray]]:
    """Evaluate (ordinal, mask) pairs, optionally across processes.

    Results are merged in ordinal order, so the output is independent of the
    execution schedule.
    """
    args = [
        (config, tuple(profiles), mask, spec, loss, context, ordinal)
        for ordinal, mask in tasks
    ]
    if jobs <= 1 or len(args) <= 1:
        results = [_evaluate_ordinal(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(args) // (jobs * 4))
            results = list(pool.map(_evaluate_ordinal, args, chunksize=chunk))
    results.sort(key=lambda item: item[0])
    return results


def distribution_by_attack_count(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    spec: StochasticSpec,
    loss: LossSpec,
    attack_counts: Iterable[int],
    cap: int = DEFAULT_ENUMERATION_CAP,
    context: int = 0,
    jobs: int = 1,
) -> list[AttackCountResult]:
    """Replicate every placement of each attack budget and pool the scores.

    For each budget k the pooled sample spans all C(n, k) placements times
    `spec.replications` runs; per-strategy means are reported alongside so
    either pooling convention can be plotted. The best strategy is the one
    with the highest mean score (earliest mask on ties).
    """
    counts = list(attack_counts)
    for k in counts:
        strategy_count(spec.n, k)  # validates range before any work
    tasks: list[tuple[int, tuple[int, ...]]] = []
    ordinal = 0
    boundaries: list[tuple[int, int, int]] = []  # (k, start, stop) into tasks
    for k in counts:
        start = ordinal
        for vector in enumerate_strategies(spec.n, k, cap=cap):
            tasks.append((ordinal, vector.mask))
            ordinal += 1
        boundaries.append((k, start, ordinal))

    results = _run_strategy_batches(config, profiles, tasks, spec, loss, context, jobs)

    out: list[AttackCountResult] = []
    for k, start, stop in boundaries:
        chunk = results[start:stop]
        summaries = []
        pooled = []
        for ordinal_, mask, budget, scores in chunk:
            summaries.append(
                StrategyResult(
                    strategy_id=ordinal_,
                    mask=mask,
                    n_attacks=budget,
                    as_mean=float(np.mean(scores)),
                    as_std=float(np.std(scores)),
                    as_max=float(np.max(scores)),
                    as_min=float(np.min(scores)),
                    n_replications=len(scores),
                )
            )
            pooled.append(scores)
        out.append(
            _summarize_attack_count(k, summaries, np.concatenate(pooled))
        )
    return out


def _summarize_attack_count(
    k: int, summaries: list[StrategyResult], pooled: np.ndarray
) -> AttackCountResult:
    best = summaries[0]
    worst = summaries[0]
    for s in summaries[1:]:
        if s.as_mean > best.as_mean:
            best = s
        if s.as_mean < worst.as_mean:
            worst = s
    stats = DistributionStats.from_scores(pooled, best.strategy_id)
    return AttackCountResult(
        n_attacks=k,
        stats=stats,
        strategies=tuple(summaries),
        best_mask=best.mask,
        best_mean=best.as_mean,
        worst_mask=worst.mask,
        worst_mean=worst.as_mean,
    )


def expected_distribution_by_attack_count(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    losses: ExpectedLosses,
    d_attacked: float,
    d_clean: float,
    n: int,
    loss: LossSpec,
    attack_counts: Iterable[int],
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[AttackCountResult]:
    """Deterministic analogue of `distribution_by_attack_count`.

    Every placement is scored once with expected branch losses under fixed
    evaluation scores, so the per-strategy values are exact and the pooled
    sample is the set of placement scores. n_replications = 0 marks rows as
    analytic rather than sampled.
    """
    from .episode import expected_trace

    out: list[AttackCountResult] = []
    ordinal = 0
    for k in attack_counts:
        summaries = []
        scores = []
        for vector in enumerate_strategies(n, k, cap=cap):
            trace = expected_trace(
                config, profiles, vector, losses, d_attacked, d_clean, loss
            )
            score = trace.attack_score
            summaries.append(
                StrategyResult(
                    strategy_id=ordinal,
                    mask=vector.to_bitstring(),
                    n_attacks=k,
                    as_mean=score,
                    as_std=0.0,
                    as_max=score,
                    as_min=score,
                    n_replications=0,
                )
            )
            scores.append(score)
            ordinal += 1
        out.append(_summarize_attack_count(k, summaries, np.array(scores)))
    return out


def apply_sweep_value(
    parameter: str,
    value,
    config: RelianceConfig,
    spec: StochasticSpec,
) -> tuple[RelianceConfig, StochasticSpec]:
    """Return (config, spec) with one grid value applied."""
    if parameter == SweepParameter.MODEL_ACC:
        return config, replace(spec, p_m=float(value))
    if parameter == SweepParameter.HUMAN_ACC:
        return config, replace(spec, p_h=float(value))
    if parameter == SweepParameter.COMBINED_ACC:
        pm, ph = value
        return config, replace(spec, p_m=float(pm), p_h=float(ph))
    if parameter == SweepParameter.RELIANCE_THRESHOLD:
        return replace(config, r_hat=float(value)), spec
    raise DomainError(f"parameter: unknown sweep parameter {parameter!r}")


def format_sweep_value(parameter: str, value) -> str:
    if parameter == SweepParameter.COMBINED_ACC:
        return f"{value[0]:g}:{value[1]:g}"
    return f"{value:g}"


def sensitivity_sweep(
    grid: SweepGrid,
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    spec: StochasticSpec,
    loss: LossSpec,
    cap: int = DEFAULT_ENUMERATION_CAP,
    jobs: int = 1,
) -> list[SweepRow]:
    """Mean attack score per (grid value, attack count) cell.

    Each cell pools all placements of the budget; `max_as` and `best_mask`
    report the strategy with the highest mean score in that cell. Grid values
    are seeded by their index, so adding a value never perturbs the others.
    """
    rows: list[SweepRow] = []
    for idx, value in enumerate(grid.values):
        cell_config, cell_spec = apply_sweep_value(grid.parameter, value, config, spec)
        per_k = distribution_by_attack_count(
            cell_config,
            profiles,
            cell_spec,
            loss,
            grid.attack_counts,
            cap=cap,
            context=idx,
            jobs=jobs,
        )
        label = format_sweep_value(grid.parameter, value)
        for result in per_k:
            n_samples = sum(s.n_replications for s in result.strategies)
            rows.append(
                SweepRow(
                    parameter=grid.parameter,
                    value=label,
                    n_attacks=result.n_attacks,
                    mean_as=result.stats.mean,
                    std_as=result.stats.std,
                    max_as=result.best_mean,
                    best_mask=result.best_mask,
                    n_samples=n_samples,
                )
            )
    return rows
