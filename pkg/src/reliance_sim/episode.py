"""One episode of n sequential tasks: trust gate, prediction resolution,
feedback, reliance update, and attack-score accounting.

`run_episode` consumes a sampled world (boolean correctness per task) and is
fully deterministic given its inputs. `expected_trace` walks the identical
trust trajectory but scores each task with its expected loss, which is exact
when the feedback scores are fixed rather than sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .reliance import (
    AssessmentMode,
    DomainError,
    FeedbackKind,
    FeedbackPolicy,
    FeedbackScore,
    FallbackPolicy,
    RelianceConfig,
    RelianceState,
    TaskProfile,
    instantaneous_reliance,
    model_irrelevant_factor,
    performance_feedback,
    smoothed_reliance,
    trust_decision,
)


class EpisodeError(ValueError):
    """Inconsistent episode inputs (length mismatches, bad indices)."""


class Executed(Enum):
    MODEL = "MODEL"
    ATTACKED_MODEL = "ATTACKED_MODEL"
    HUMAN = "HUMAN"
    FALLBACK = "FALLBACK"


class LossKind(Enum):
    ZERO_ONE = "zero_one"
    ABSOLUTE = "absolute"


class Aggregation(Enum):
    MEAN = "mean"
    PRODUCT = "product"


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind = LossKind.ZERO_ONE
    aggregation: Aggregation = Aggregation.MEAN


@dataclass(frozen=True)
class AttackVector:
    """Binary timing plan over an episode; mask[i] == 1 attacks task i+1."""

    mask: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(a not in (0, 1) for a in self.mask):
            raise EpisodeError(f"mask: entries must be 0 or 1, got {self.mask!r}")

    @property
    def n(self) -> int:
        return len(self.mask)

    @property
    def budget(self) -> int:
        return sum(self.mask)

    def to_bitstring(self) -> str:
        return "".join(str(a) for a in self.mask)

    @classmethod
    def from_bitstring(cls, text: str) -> "AttackVector":
        bad = sorted(set(text) - {"0", "1"})
        if bad:
            raise EpisodeError(
                f"mask: only '0'/'1' characters allowed, found {bad[0]!r} in {text!r}"
            )
        return cls(tuple(int(ch) for ch in text))


@dataclass(frozen=True)
class WorldSample:
    """One stochastic realization of an episode.

    Correctness flags say whether the clean model, the human, and the attacked
    model would each resolve the task correctly. d_low / d_high hold the
    per-task evaluation scores used for unfavorable / favorable feedback.
    """

    model_correct: tuple[bool, ...]
    human_correct: tuple[bool, ...]
    attacked_correct: tuple[bool, ...]
    d_low: tuple[float, ...]
    d_high: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.model_correct)
        for name in ("human_correct", "attacked_correct", "d_low", "d_high"):
            if len(getattr(self, name)) != n:
                raise EpisodeError(
                    f"{name}: length {len(getattr(self, name))} != {n} tasks"
                )

    @property
    def n(self) -> int:
        return len(self.model_correct)

    @classmethod
    def fixed(
        cls,
        n: int,
        model_correct: bool = True,
        human_correct: bool = True,
        attacked_correct: bool = False,
        d_low: float = 0.2,
        d_high: float = 0.8,
    ) -> "WorldSample":
        """Constant world, handy for deterministic traces and tests."""
        return cls(
            model_correct=(model_correct,) * n,
            human_correct=(human_correct,) * n,
            attacked_correct=(attacked_correct,) * n,
            d_low=(d_low,) * n,
            d_high=(d_high,) * n,
        )


@dataclass(frozen=True)
class TaskRecord:
    """Everything observed while handling a single task."""

    task_index: int
    attacked: bool
    reliance_before: float
    trusted: bool
    assessment_passed: bool
    executed: Executed
    executed_correct: bool | None
    as_i: float
    d_i: float
    reliance_after: float


@dataclass(frozen=True)
class DecisionTrace:
    """Per-task records plus the aggregate attack score of the episode."""

    records: tuple[TaskRecord, ...]
    attack_score: float

    @property
    def n(self) -> int:
        return len(self.records)


def resolve_prediction(
    trusted: bool,
    assessment_passed: bool,
    attacked: bool,
    world: WorldSample,
    i: int,
    fallback_policy: FallbackPolicy,
) -> tuple[Executed, bool]:
    """Pick the executed prediction for 1-based task i and report its correctness.

    The four cases: a trusted, passing model executes directly (attacked or
    clean); a trusted, failing model triggers the fallback; an untrusted,
    passing model is verified and accepted; an untrusted, failing model is
    overridden by the human.
    """
    if not 1 <= i <= world.n:
        raise EpisodeError(f"task index {i} outside [1, {world.n}]")
    j = i - 1
    model_outcome = world.attacked_correct[j] if attacked else world.model_correct[j]
    if trusted and assessment_passed:
        return (Executed.ATTACKED_MODEL if attacked else Executed.MODEL), model_outcome
    if trusted and not assessment_passed:
        if fallback_policy is FallbackPolicy.FALLBACK_FIXED_CORRECT:
            return Executed.FALLBACK, True
        if fallback_policy is FallbackPolicy.FALLBACK_FIXED_WRONG:
            return Executed.FALLBACK, False
        return Executed.FALLBACK, model_outcome
    if not trusted and assessment_passed:
        return (Executed.ATTACKED_MODEL if attacked else Executed.MODEL), model_outcome
    return Executed.HUMAN, world.human_correct[j]


def generate_feedback(
    policy: FeedbackPolicy,
    trusted: bool,
    attacked: bool,
    executed_correct: bool | None,
    world: WorldSample,
    i: int,
) -> FeedbackScore:
    """Produce the evaluation score d_i for 1-based task i under a policy.

    The score is taken from the task's (d_low, d_high) pair; which side is
    used depends on the policy. The kind tags the assessment route implied by
    the trust state.
    """
    if not 1 <= i <= world.n:
        raise EpisodeError(f"task index {i} outside [1, {world.n}]")
    j = i - 1
    if policy is FeedbackPolicy.ATTACK_CONDITIONED:
        low = attacked
    elif policy is FeedbackPolicy.CORRECTNESS_CONDITIONED:
        if executed_correct is None:
            raise EpisodeError(
                "correctness_conditioned feedback requires an executed outcome"
            )
        low = not executed_correct
    else:
        low = not trusted
    d = world.d_low[j] if low else world.d_high[j]
    kind = FeedbackKind.MODEL_ONLY if trusted else FeedbackKind.HUMAN_MODEL
    return FeedbackScore(d=d, kind=kind)


def per_task_attack_score(executed_correct: bool, loss: LossSpec) -> float:
    """Per-task loss between ground truth and the executed prediction.

    Outcomes are abstracted to correct/incorrect, so the zero-one and
    absolute-difference losses coincide at unit distance.
    """
    return 0.0 if executed_correct else 1.0


def aggregate_attack_score(scores: Sequence[float], loss: LossSpec) -> float:
    """Combine per-task scores: arithmetic mean, or product (full compromise)."""
    if len(scores) == 0:
        raise EpisodeError("cannot aggregate an empty score sequence")
    if loss.aggregation is Aggregation.PRODUCT:
        total = 1.0
        for s in scores:
            total = total * s
        return total
    total = 0.0
    for s in scores:
        total = total + s
    return total / len(scores)


def _assessment_verdict(
    config: RelianceConfig,
    trusted: bool,
    d: float | None,
) -> bool:
    if config.assessment is AssessmentMode.FOLLOWS_TRUST:
        return trusted
    assert d is not None
    threshold = config.theta_m if trusted else config.theta_h
    return d >= threshold


def _validate_episode_inputs(
    config: RelianceConfig, profiles: Sequence[TaskProfile], n: int
) -> None:
    if len(profiles) != n:
        raise EpisodeError(f"profiles: length {len(profiles)} != {n} tasks")
    if (
        config.assessment is AssessmentMode.THRESHOLDED
        and config.feedback_policy is FeedbackPolicy.CORRECTNESS_CONDITIONED
    ):
        raise EpisodeError(
            "thresholded assessment needs the evaluation score before the "
            "prediction resolves; correctness_conditioned feedback is only "
            "valid with follows_trust assessment"
        )


def run_episode(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    attack: AttackVector,
    world: WorldSample,
    loss: LossSpec,
) -> DecisionTrace:
    """Run one episode over the sampled world. Deterministic given its inputs."""
    n = attack.n
    if world.n != n:
        raise EpisodeError(f"world has {world.n} tasks, attack vector has {n}")
    _validate_episode_inputs(config, profiles, n)

    state = RelianceState(smoothed=config.r_init, task_index=1)
    records: list[TaskRecord] = []
    running_sum = 0.0
    running_prod = 1.0
    for i in range(1, n + 1):
        attacked = bool(attack.mask[i - 1])
        trusted = trust_decision(state, config.r_hat, config.tie_break)

        if config.assessment is AssessmentMode.THRESHOLDED:
            # Score first: thresholded assessment inspects d before execution.
            fb = generate_feedback(
                config.feedback_policy, trusted, attacked, None, world, i
            )
            passed = _assessment_verdict(config, trusted, fb.d)
            executed, correct = resolve_prediction(
                trusted, passed, attacked, world, i, config.fallback_policy
            )
        else:
            passed = _assessment_verdict(config, trusted, None)
            executed, correct = resolve_prediction(
                trusted, passed, attacked, world, i, config.fallback_policy
            )
            fb = generate_feedback(
                config.feedback_policy, trusted, attacked, correct, world, i
            )

        as_i = per_task_attack_score(correct, loss)
        running_sum = running_sum + as_i
        running_prod = running_prod * as_i

        # The model-irrelevant factors belong to the task the update will gate.
        gated_profile = profiles[min(i, n - 1)]
        r_new = instantaneous_reliance(
            performance_feedback(fb, config.scaling_c),
            model_irrelevant_factor(gated_profile, config),
            config.gamma,
            clamp=config.clamp_reliance,
        )
        next_state = smoothed_reliance(
            state, r_new, config.alpha, clamp=config.clamp_reliance
        )

        records.append(
            TaskRecord(
                task_index=i,
                attacked=attacked,
                reliance_before=state.smoothed,
                trusted=trusted,
                assessment_passed=passed,
                executed=executed,
                executed_correct=correct,
                as_i=as_i,
                d_i=fb.d,
                reliance_after=next_state.smoothed,
            )
        )
        state = next_state

    score = running_prod if loss.aggregation is Aggregation.PRODUCT else running_sum / n
    return DecisionTrace(records=tuple(records), attack_score=score)


@dataclass(frozen=True)
class ExpectedLosses:
    """Expected per-task loss of each execution branch."""

    human: float
    model: float
    attacked: float

    def __post_init__(self) -> None:
        for name in ("human", "model", "attacked"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}: expected a loss in [0, 1], got {v!r}")

    def for_branch(self, executed: Executed, attacked: bool) -> float:
        if executed is Executed.HUMAN:
            return self.human
        if executed is Executed.ATTACKED_MODEL:
            return self.attacked
        if executed is Executed.MODEL:
            return self.model
        return self.attacked if attacked else self.model


def expected_trace(
    config: RelianceConfig,
    profiles: Sequence[TaskProfile],
    attack: AttackVector,
    losses: ExpectedLosses,
    d_attacked: float,
    d_clean: float,
    loss: LossSpec,
) -> DecisionTrace:
    """Episode scored with expected branch losses instead of sampled outcomes.

    Valid only when the trust trajectory does not depend on sampled
    correctness, i.e. with fixed evaluation scores and a feedback policy
    conditioned on attack or trust status. The fallback branch (thresholded
    assessment with fixed-correct/-wrong policies) keeps its configured value.
    """
    if config.feedback_policy is FeedbackPolicy.CORRECTNESS_CONDITIONED:
        raise EpisodeError(
            "expected-loss scoring is undefined for correctness_conditioned "
            "feedback; the trajectory would depend on sampled outcomes"
        )
    n = attack.n
    _validate_episode_inputs(config, profiles, n)
    world = WorldSample.fixed(n, d_low=d_attacked, d_high=d_clean)

    state = RelianceState(smoothed=config.r_init, task_index=1)
    records: list[TaskRecord] = []
    running_sum = 0.0
    running_prod = 1.0
    for i in range(1, n + 1):
        attacked = bool(attack.mask[i - 1])
        trusted = trust_decision(state, config.r_hat, config.tie_break)
        fb = generate_feedback(
            config.feedback_policy, trusted, attacked, None, world, i
        )
        passed = _assessment_verdict(config, trusted, fb.d)
        executed, _ = resolve_prediction(
            trusted, passed, attacked, world, i, config.fallback_policy
        )
        if executed is Executed.FALLBACK:
            if config.fallback_policy is FallbackPolicy.FALLBACK_FIXED_CORRECT:
                as_i = 0.0
            elif config.fallback_policy is FallbackPolicy.FALLBACK_FIXED_WRONG:
                as_i = 1.0
            else:
                as_i = losses.for_branch(executed, attacked)
        else:
            as_i = losses.for_branch(executed, attacked)
        running_sum = running_sum + as_i
        running_prod = running_prod * as_i

        gated_profile = profiles[min(i, n - 1)]
        r_new = instantaneous_reliance(
            performance_feedback(fb, config.scaling_c),
            model_irrelevant_factor(gated_profile, config),
            config.gamma,
            clamp=config.clamp_reliance,
        )
        next_state = smoothed_reliance(
            state, r_new, config.alpha, clamp=config.clamp_reliance
        )
        records.append(
            TaskRecord(
                task_index=i,
                attacked=attacked,
                reliance_before=state.smoothed,
                trusted=trusted,
                assessment_passed=passed,
                executed=executed,
                executed_correct=None,
                as_i=as_i,
                d_i=fb.d,
                reliance_after=next_state.smoothed,
            )
        )
        state = next_state

    score = running_prod if loss.aggregation is Aggregation.PRODUCT else running_sum / n
    return DecisionTrace(records=tuple(records), attack_score=score)
