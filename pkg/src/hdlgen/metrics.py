"""Pass@k estimation and error-rate histograms.

Everything is exact rational arithmetic; callers convert to float only when
formatting reports.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .errors import ContractViolation

HISTOGRAM_BUCKETS = 5
_BUCKET_STEP = Fraction(1, 5)


def pass_at_k(n: int, c: int, k: int) -> Fraction:
    """Probability that at least one of k drawn samples passes.

    Closed form 1 - C(n-c, k)/C(n, k), evaluated as the telescoping product
    1 - prod_{i=n-c+1..n} (1 - k/i); exact because the factors are rational.
    """
    if n < 1 or not 0 <= c <= n or not 1 <= k <= n:
        raise ContractViolation(f"invalid pass@k arguments n={n} c={c} k={k}")
    if n - c < k:
        return Fraction(1)
    product = Fraction(1)
    for i in range(n - c + 1, n + 1):
        product *= 1 - Fraction(k, i)
    return 1 - product


def aggregate_pass_at_k(outcomes: Iterable[tuple[int, int]], k: int) -> Fraction:
    """Mean per-task pass@k over (n, c) pairs."""
    values = [pass_at_k(n, c, k) for n, c in outcomes]
    if not values:
        raise ContractViolation("aggregate over an empty task set")
    return sum(values, Fraction(0)) / len(values)


def error_rate_bucket(rate: Fraction | float) -> int:
    """Bucket index for a rate in [0,1]: [0,0.2), ..., [0.8,1.0]."""
    r = Fraction(rate)
    if not 0 <= r <= 1:
        raise ContractViolation(f"error rate {rate} outside [0, 1]")
    return min(int(r / _BUCKET_STEP), HISTOGRAM_BUCKETS - 1)


def error_rate_histogram(best_error_rates: Iterable[Fraction | float]) -> list[int]:
    """Counts per 0.2-wide interval; one count per task."""
    counts = [0] * HISTOGRAM_BUCKETS
    for rate in best_error_rates:
        counts[error_rate_bucket(rate)] += 1
    return counts


def best_error_rate(pass_rates: Iterable[Fraction]) -> Fraction:
    """1 minus the best pass rate a task's executed samples achieved."""
    rates = list(pass_rates)
    if not rates:
        raise ContractViolation("task has no executed samples")
    return 1 - max(Fraction(r) for r in rates)
