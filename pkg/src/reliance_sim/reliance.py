"""Reliance dynamics: factor terms, feedback scaling, smoothing, and the trust gate.

Everything in this module is a pure function of its inputs. Values are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class DomainError(ValueError):
    """An input fell outside its documented domain. The message names the field."""


def _check_unit(name: str, value: float) -> float:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}: expected a value in [0, 1], got {value!r}")
    return value


def _check_nonneg(name: str, value: float) -> float:
    if not math.isfinite(value) or value < 0.0:
        raise DomainError(f"{name}: expected a finite value >= 0, got {value!r}")
    return value


class TieBreak(Enum):
    """Behavior of the trust gate when smoothed reliance equals the threshold."""

    TRUST_ON_EQUAL = "trust_on_equal"
    DISTRUST_ON_EQUAL = "distrust_on_equal"


class FeedbackPolicy(Enum):
    """What drives the evaluation score d for a task.

    ATTACK_CONDITIONED:      low score on attacked tasks, high otherwise.
    CORRECTNESS_CONDITIONED: low score when the executed prediction was wrong.
    TRUST_CONDITIONED:       low score whenever the model was not trusted.
    """

    ATTACK_CONDITIONED = "attack_conditioned"
    CORRECTNESS_CONDITIONED = "correctness_conditioned"
    TRUST_CONDITIONED = "trust_conditioned"


class FallbackPolicy(Enum):
    """Correctness of the fallback prediction when a trusted model fails assessment."""

    FALLBACK_EQUALS_EXECUTED_MODEL = "fallback_equals_executed_model"
    FALLBACK_FIXED_CORRECT = "fallback_fixed_correct"
    FALLBACK_FIXED_WRONG = "fallback_fixed_wrong"


class AssessmentMode(Enum):
    """How the performance assessment verdict is produced.

    FOLLOWS_TRUST: passes iff the model is trusted (simplified regime).
    THRESHOLDED:   passes iff the evaluation score clears theta_m / theta_h.
    """

    FOLLOWS_TRUST = "follows_trust"
    THRESHOLDED = "thresholded"


class FeedbackKind(Enum):
    MODEL_ONLY = "model_only"
    HUMAN_MODEL = "human_model"


@dataclass(frozen=True)
class RelianceConfig:
    """All knobs of the reliance/trust update loop.

    gamma weighs performance feedback against model-irrelevant factors,
    alpha is the momentum carried by the smoothed reliance, scaling_c scales
    raw evaluation scores, and r_hat / r_init are the trust threshold and the
    initial smoothed reliance.
    """

    gamma: float = 1.0
    alpha: float = 0.8
    scaling_c: float = 1.0
    r_hat: float = 0.7
    r_init: float = 0.8
    theta_m: float = 0.0
    theta_h: float = 0.0
    w_c: float = 0.0
    w_k: float = 0.0
    w_o: float = 0.0
    w_s: float = 0.0
    tie_break: TieBreak = TieBreak.DISTRUST_ON_EQUAL
    clamp_reliance: bool = True
    feedback_policy: FeedbackPolicy = FeedbackPolicy.ATTACK_CONDITIONED
    fallback_policy: FallbackPolicy = FallbackPolicy.FALLBACK_EQUALS_EXECUTED_MODEL
    assessment: AssessmentMode = AssessmentMode.FOLLOWS_TRUST

    def __post_init__(self) -> None:
        for name in ("gamma", "alpha", "r_hat", "r_init", "theta_m", "theta_h"):
            _check_unit(name, getattr(self, name))
        for name in ("w_c", "w_k", "w_o", "w_s"):
            _check_nonneg(name, getattr(self, name))
        _check_nonneg("scaling_c", self.scaling_c)


@dataclass(frozen=True)
class TaskProfile:
    """Model-irrelevant inputs of a single task.

    self_confidence lies in [0, 1]; risk, complexity and time_sensitivity are
    nonnegative. All quantities are unitless normalized scores.
    """

    self_confidence: float = 0.0
    risk: float = 0.0
    complexity: float = 0.0
    time_sensitivity: float = 0.0

    def __post_init__(self) -> None:
        _check_unit("self_confidence", self.self_confidence)
        _check_nonneg("risk", self.risk)
        _check_nonneg("complexity", self.complexity)
        _check_nonneg("time_sensitivity", self.time_sensitivity)


@dataclass(frozen=True)
class RelianceState:
    """Smoothed reliance carried across tasks. task_index is 1-based."""

    smoothed: float
    task_index: int = 1

    def __post_init__(self) -> None:
        if self.task_index < 1:
            raise DomainError(f"task_index: expected >= 1, got {self.task_index}")
        if math.isnan(self.smoothed):
            raise DomainError("smoothed: must be a real number")


@dataclass(frozen=True)
class FeedbackScore:
    """Raw human evaluation score in [0, 1], tagged with its assessment route."""

    d: float
    kind: FeedbackKind

    def __post_init__(self) -> None:
        _check_unit("d", self.d)


def self_confidence_term(c_i: float, w_c: float) -> float:
    """Self-confidence contribution, -w_c * c_i. Always <= 0."""
    _check_unit("c_i", c_i)
    _check_nonneg("w_c", w_c)
    return -w_c * c_i


def task_risk_term(k_i: float, w_k: float) -> float:
    """Risk contribution, w_k * exp(-k_i). Strictly decreasing in k_i."""
    _check_nonneg("k_i", k_i)
    _check_nonneg("w_k", w_k)
    return w_k * math.exp(-k_i)


def task_complexity_term(o_i: float, w_o: float) -> float:
    """Complexity contribution, w_o * o_i ** 2."""
    _check_nonneg("o_i", o_i)
    _check_nonneg("w_o", w_o)
    return w_o * o_i * o_i


def time_sensitivity_term(s_i: float, w_s: float) -> float:
    """Time-sensitivity contribution, w_s * s_i."""
    _check_nonneg("s_i", s_i)
    _check_nonneg("w_s", w_s)
    return w_s * s_i


def model_irrelevant_factor(profile: TaskProfile, config: RelianceConfig) -> float:
    """Sum of the four model-irrelevant terms for one task."""
    return (
        self_confidence_term(profile.self_confidence, config.w_c)
        + task_risk_term(profile.risk, config.w_k)
        + task_complexity_term(profile.complexity, config.w_o)
        + time_sensitivity_term(profile.time_sensitivity, config.w_s)
    )


def performance_feedback(score: FeedbackScore, scaling_c: float) -> float:
    """Scaled evaluation score c * d; both assessment routes share this form."""
    _check_nonneg("scaling_c", scaling_c)
    return scaling_c * score.d


def instantaneous_reliance(
    feedback: float, irrelevant: float, gamma: float, clamp: bool = False
) -> float:
    """Blend feedback and model-irrelevant factors: gamma*D + (1-gamma)*I."""
    _check_unit("gamma", gamma)
    r = gamma * feedback + (1.0 - gamma) * irrelevant
    if clamp:
        r = min(1.0, max(0.0, r))
    return r


def smoothed_reliance(
    prev: RelianceState, r_new: float, alpha: float, clamp: bool = False
) -> RelianceState:
    """Momentum update alpha*prev + (1-alpha)*r_new, advancing the task index."""
    _check_unit("alpha", alpha)
    smoothed = alpha * prev.smoothed + (1.0 - alpha) * r_new
    if clamp:
        smoothed = min(1.0, max(0.0, smoothed))
    return RelianceState(smoothed=smoothed, task_index=prev.task_index + 1)


def trust_decision(state: RelianceState, r_hat: float, tie_break: TieBreak) -> bool:
    """Trust gate: True above the threshold; equality resolved by tie_break."""
    _check_unit("r_hat", r_hat)
    if state.smoothed == r_hat:
        return tie_break is TieBreak.TRUST_ON_EQUAL
    return state.smoothed > r_hat
