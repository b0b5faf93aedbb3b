"""Deterministic, seedable simulator of sequential human-AI decision-making
under timing-based adversarial attacks: reliance dynamics, trust-gated
prediction resolution, closed-form strategy analytics, and Monte Carlo
sensitivity studies.
"""

from .episode import (
    Aggregation,
    AttackVector,
    DecisionTrace,
    EpisodeError,
    Executed,
    ExpectedLosses,
    LossKind,
    LossSpec,
    TaskRecord,
    WorldSample,
    aggregate_attack_score,
    expected_trace,
    generate_feedback,
    per_task_attack_score,
    resolve_prediction,
    run_episode,
)
from .montecarlo import (
    AttackCountResult,
    DistributionStats,
    StochasticSpec,
    StrategyResult,
    SweepGrid,
    SweepParameter,
    SweepRow,
    batch_episode_scores,
    distribution_by_attack_count,
    expected_distribution_by_attack_count,
    replicate,
    sample_world,
    sensitivity_sweep,
    strategy_generator,
)
from .reliance import (
    AssessmentMode,
    DomainError,
    FallbackPolicy,
    FeedbackKind,
    FeedbackPolicy,
    FeedbackScore,
    RelianceConfig,
    RelianceState,
    TaskProfile,
    TieBreak,
    instantaneous_reliance,
    model_irrelevant_factor,
    performance_feedback,
    self_confidence_term,
    smoothed_reliance,
    task_complexity_term,
    task_risk_term,
    time_sensitivity_term,
    trust_decision,
)
from .runconfig import ConfigError, RunConfig, default_run_config, load_run_config
from .strategies import (
    EnumerationCapError,
    ErrorRates,
    StrategyFamily,
    StrategyKind,
    UnsupportedFamilyError,
    best_strategy,
    closed_form_one_time,
    closed_form_two_time,
    enumerate_strategies,
    recovery_index,
    worst_strategy,
)

__version__ = "0.1.0"
