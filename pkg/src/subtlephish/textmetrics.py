"""Edit distance and correlation primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import LengthMismatch, TooFewSamples, ZeroVariance


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise TooFewSamples(f"correlation needs n >= 2, got {self.n}")
        if not -1.0 <= self.coefficient <= 1.0:
            raise ValueError(f"coefficient out of range: {self.coefficient}")


def levenshtein(x: Sequence[Hashable], y: Sequence[Hashable]) -> int:
    """Minimum number of insertions, deletions and substitutions turning x into y.

    Works on any pair of sequences; Python strings compare per code point.
    Two-row dynamic programme, O(len(x) * len(y)) time and O(min) memory.
    """
    if len(x) < len(y):
        x, y = y, x
    if not y:
        return len(x)
    previous = list(range(len(y) + 1))
    for i, cx in enumerate(x, start=1):
        current = [i]
        for j, cy in enumerate(y, start=1):
            cost = 0 if cx == cy else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def normalized_similarity(x: Sequence[Hashable], y: Sequence[Hashable]) -> float:
    longest = max(len(x), len(y))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(x, y) / longest


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Sample Pearson correlation of two equally long sequences."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"sequence lengths differ: {len(xs)} != {len(ys)}")
    n = len(xs)
    if n < 2:
        raise TooFewSamples(f"correlation needs at least 2 samples, got {n}")
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if not all(math.isfinite(v) for v in xs + ys):
        raise ValueError("pearson inputs must be finite")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    # the n - 1 factors of covariance and both variances cancel
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return CorrelationResult(max(-1.0, min(1.0, r)), n)
