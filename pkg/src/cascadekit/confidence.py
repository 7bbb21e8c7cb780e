"""Softmax and confidence scoring of probability vectors.

Three score functions are supported; for ``max`` and ``diff`` a higher score
means higher confidence, for ``entropy`` a lower score does. The threshold
test and the A-vs-B comparator both respect that direction.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache
from typing import Sequence

from .errors import DataError


class ScoreFunction(enum.Enum):
    """Confidence score kind; the value is the external config/CLI name."""

    MAX_PROBABILITY = "max"
    DIFFERENCE = "diff"
    ENTROPY_NORMALIZED = "entropy"

    @property
    def lower_is_better(self) -> bool:
        return self is ScoreFunction.ENTROPY_NORMALIZED

    @classmethod
    def parse(cls, name: str) -> "ScoreFunction":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise DataError(f"unknown score function {name!r} (valid: {valid})") from None


def softmax(logits: Sequence[float]) -> list[float]:
    """Numerically stable softmax: the max logit is subtracted before
    exponentiation, so arbitrarily large logits cannot overflow."""
    if len(logits) < 2:
        raise DataError("softmax needs at least 2 logits")
    for v in logits:
        if not math.isfinite(v):
            raise DataError("non-finite logit")
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    total = sum(exps)
    return [e / total for e in exps]


@lru_cache(maxsize=None)
def entropy_denominator(num_classes: int) -> float:
    """Normalization constant -sum_{i=1..K} (i/K) ln(i/K).

    Note this is not the max-entropy bound ln K; for K < 10 the normalized
    entropy of a near-uniform vector exceeds 1. Implemented as defined, no
    clamping.
    """
    k = num_classes
    return -sum((i / k) * math.log(i / k) for i in range(1, k + 1))


def _top_two(probs: Sequence[float]) -> tuple[float, float]:
    first = second = -math.inf
    for p in probs:
        if p > first:
            first, second = p, first
        elif p > second:
            second = p
    return first, second


def score(probs: Sequence[float], kind: ScoreFunction) -> float:
    """Confidence score of a probability vector under the given function.

    max: largest entry. diff: largest minus second largest (by position, so
    a repeated maximum scores 0). entropy: -sum p ln p over the K-dependent
    normalization, with the 0 ln 0 = 0 convention.
    """
    if kind is ScoreFunction.MAX_PROBABILITY:
        return max(probs)
    if kind is ScoreFunction.DIFFERENCE:
        first, second = _top_two(probs)
        return first - second
    entropy = -sum(p * math.log(p) for p in probs if p > 0.0)
    return entropy / entropy_denominator(len(probs))


def passes_threshold(s: float, threshold: float, kind: ScoreFunction) -> bool:
    """True iff the first model's answer is accepted (second model not
    invoked). Equality accepts, minimizing second-model usage."""
    if kind.lower_is_better:
        return s <= threshold
    return s >= threshold


def better_score(score_a: float, score_b: float, kind: ScoreFunction) -> str:
    """Post-check comparator: returns "a" or "b"; ties favor "a"."""
    if kind.lower_is_better:
        return "a" if score_a <= score_b else "b"
    return "a" if score_a >= score_b else "b"
