"""Attack timing strategies: enumeration, closed-form analytics, and search.

The closed forms give the exact expected attack score of the canonical
one-time and two-time strategies under the simplified regime (constant error
rates, feedback isolated from model-irrelevant factors). `best_strategy` and
`worst_strategy` run an exhaustive argmax/argmin over all placements of a
fixed attack budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Callable, Iterator

from .episode import AttackVector
from .reliance import DomainError, TieBreak

DEFAULT_ENUMERATION_CAP = 1_000_000


class EnumerationCapError(ValueError):
    """Enumeration refused because C(n, k) exceeds the configured cap."""

    def __init__(self, n: int, k: int, count: int, cap: int):
        self.count = count
        super().__init__(
            f"refusing to enumerate C({n}, {k}) = {count} strategies (cap {cap})"
        )


class UnsupportedFamilyError(ValueError):
    """No closed form is available for the requested strategy family."""


class StrategyKind(Enum):
    FIRST_TASK = "first_task"
    LAST_TASK = "last_task"
    FIRST_TWO = "first_two"
    LAST_TWO = "last_two"
    FIRST_AND_LAST = "first_and_last"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class StrategyFamily:
    """A named timing plan, or an explicit mask, over an episode of length n."""

    kind: StrategyKind
    n: int
    explicit_mask: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n: expected >= 1, got {self.n}")
        if self.kind is StrategyKind.EXPLICIT:
            if self.explicit_mask is None:
                raise DomainError("explicit strategy requires explicit_mask")
            if len(self.explicit_mask) != self.n:
                raise DomainError(
                    f"explicit_mask: length {len(self.explicit_mask)} != n={self.n}"
                )
        elif self.explicit_mask is not None:
            raise DomainError("explicit_mask is only valid with kind=EXPLICIT")

    def to_vector(self) -> AttackVector:
        n = self.n
        if self.kind is StrategyKind.EXPLICIT:
            return AttackVector(tuple(self.explicit_mask))  # type: ignore[arg-type]
        if self.kind in (StrategyKind.FIRST_TWO, StrategyKind.LAST_TWO,
                         StrategyKind.FIRST_AND_LAST) and n < 2:
            raise DomainError(f"{self.kind.value} needs n >= 2, got n={n}")
        mask = [0] * n
        if self.kind is StrategyKind.FIRST_TASK:
            mask[0] = 1
        elif self.kind is StrategyKind.LAST_TASK:
            mask[-1] = 1
        elif self.kind is StrategyKind.FIRST_TWO:
            mask[0] = mask[1] = 1
        elif self.kind is StrategyKind.LAST_TWO:
            mask[-2] = mask[-1] = 1
        else:
            mask[0] = mask[-1] = 1
        return AttackVector(tuple(mask))

    @property
    def budget(self) -> int:
        return self.to_vector().budget


@dataclass(frozen=True)
class ErrorRates:
    """Constant per-task expected losses of the three prediction sources."""

    e_H: float
    e_M: float
    e_A: float

    def __post_init__(self) -> None:
        for name in ("e_H", "e_M", "e_A"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}: expected a loss in [0, 1], got {v!r}")


def enumerate_strategies(
    n: int, k: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[AttackVector]:
    """Yield all C(n, k) attack vectors with k attacks over n tasks.

    Masks come out ordered by ascending attack-position tuples, so the plan
    hitting the earliest tasks appears first. Refuses oversized enumerations
    instead of truncating.
    """
    if not 0 <= k <= n:
        raise DomainError(f"k: expected 0 <= k <= n={n}, got {k}")
    count = math.comb(n, k)
    if count > cap:
        raise EnumerationCapError(n, k, count, cap)
    for positions in combinations(range(n), k):
        mask = [0] * n
        for p in positions:
            mask[p] = 1
        yield AttackVector(tuple(mask))


def strategy_count(n: int, k: int) -> int:
    return math.comb(n, k)


def recovery_index(
    r_after_attack: float,
    alpha: float,
    scaling_c: float,
    d_high: float,
    r_hat: float,
    n: int,
    tie_break: TieBreak = TieBreak.DISTRUST_ON_EQUAL,
) -> int | None:
    """Number of clean-feedback updates until the trust gate reopens.

    Starting from the smoothed reliance that gates the first post-attack task,
    iterate r <- alpha*r + (1-alpha)*c*d_high and return the smallest number
    of updates after which the gate holds (0 if it already does). Returns None
    when the gate stays shut for n updates; with c*d_high at or below the
    threshold it can never reopen.
    """
    def open_(r: float) -> bool:
        if r == r_hat:
            return tie_break is TieBreak.TRUST_ON_EQUAL
        return r > r_hat

    r = r_after_attack
    if open_(r):
        return 0
    target = scaling_c * d_high
    for step in range(1, n + 1):
        r = alpha * r + (1.0 - alpha) * target
        if open_(r):
            return step
    return None


def closed_form_one_time(n: int, position: StrategyKind, rates: ErrorRates) -> float:
    """Expected attack score of a single attack at the first or last task.

    A first-task hit burns trust immediately, leaving the run to the human:
    (e_A + (n-1)*e_H) / n. A last-task hit rides intact trust through n-1
    model tasks: (e_A + (n-1)*e_M) / n.
    """
    if n < 2:
        raise DomainError(f"n: one-time closed forms need n >= 2, got {n}")
    if position is StrategyKind.FIRST_TASK:
        return (rates.e_A + (n - 1) * rates.e_H) / n
    if position is StrategyKind.LAST_TASK:
        return (rates.e_A + (n - 1) * rates.e_M) / n
    raise UnsupportedFamilyError(
        f"one-time closed form needs FIRST_TASK or LAST_TASK, got {position}"
    )


def closed_form_two_time(
    n: int,
    family: StrategyKind,
    rates: ErrorRates,
    recovery_k: int | None = None,
) -> float:
    """Expected attack score of the three canonical two-attack plans.

    FIRST_TWO:      (e_A + (n-1)*e_H) / n       (second hit lands on a human task)
    LAST_TWO:       ((n-2)*e_M + e_A + e_H) / n
    FIRST_AND_LAST: (e_A + (k-1)*e_H + (n-k-1)*e_M + e_A) / n, where k is the
                    last task at which the model is not trusted, so trust has
                    recovered before the final hit. Requires k in [2, n-2].
    """
    if n < 3:
        raise DomainError(f"n: two-time closed forms need n >= 3, got {n}")
    if family is StrategyKind.FIRST_TWO:
        return (rates.e_A + (n - 1) * rates.e_H) / n
    if family is StrategyKind.LAST_TWO:
        return ((n - 2) * rates.e_M + rates.e_A + rates.e_H) / n
    if family is StrategyKind.FIRST_AND_LAST:
        if recovery_k is None:
            raise DomainError("FIRST_AND_LAST closed form requires recovery_k")
        if not 2 <= recovery_k <= n - 2:
            raise DomainError(
                f"recovery_k: expected in [2, {n - 2}] for n={n}, got {recovery_k}"
            )
        k = recovery_k
        return (rates.e_A + (k - 1) * rates.e_H + (n - k - 1) * rates.e_M + rates.e_A) / n
    raise UnsupportedFamilyError(
        f"no closed form for family {family}; supported: FIRST_TWO, LAST_TWO, "
        "FIRST_AND_LAST"
    )


Evaluator = Callable[[AttackVector], float]


def best_strategy(
    n: int, k: int, evaluator: Evaluator, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[AttackVector, float]:
    """Exhaustive argmax of the evaluator over all k-attack placements.

    Ties keep the earliest mask in enumeration order (lowest attack
    positions), so results are reproducible.
    """
    best: tuple[AttackVector, float] | None = None
    for vector in enumerate_strategies(n, k, cap=cap):
        score = evaluator(vector)
        if best is None or score > best[1]:
            best = (vector, score)
    assert best is not None
    return best


def worst_strategy(
    n: int, k: int, evaluator: Evaluator, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[AttackVector, float]:
    """Exhaustive argmin counterpart of `best_strategy`."""
    worst: tuple[AttackVector, float] | None = None
    for vector in enumerate_strategies(n, k, cap=cap):
        score = evaluator(vector)
        if worst is None or score < worst[1]:
            worst = (vector, score)
    assert worst is not None
    return worst
