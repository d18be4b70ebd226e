"""Two-tailed Welch t-test."""

import logging
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import betainc

from bayes_pso.core.swarm import UsageError

logger = logging.getLogger(__name__)


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float
    degenerate: bool = False


def student_t_two_tailed(t: float, df: float) -> float:
    """
    Two-tailed p-value of a Student-t statistic.

    Uses the regularized incomplete beta function:
    p = I_{df / (df + t^2)}(df / 2, 1 / 2).
    """
    if np.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(np.clip(betainc(0.5 * df, 0.5, x), 0.0, 1.0))


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> WelchResult:
    """
    Two-tailed Welch t-test for unequal variances.

    Args:
        sample_a: First sample, at least two values
        sample_b: Second sample, at least two values

    Returns:
        WelchResult: t statistic, Welch-Satterthwaite degrees of freedom and p.
        When both samples have zero variance the result is flagged degenerate
        with p = 1 for equal means and p = 0 otherwise.

    Raises:
        UsageError: If a sample has fewer than two values
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise UsageError(f"Welch t-test needs at least 2 values per sample, got {n1} and {n2}")

    m1, m2 = float(a.mean()), float(b.mean())
    v1 = float(a.var(ddof=1)) / n1
    v2 = float(b.var(ddof=1)) / n2
    pooled = v1 + v2

    if pooled == 0.0:
        df = float(n1 + n2 - 2)
        if m1 == m2:
            return WelchResult(t=0.0, df=df, p=1.0, degenerate=True)
        logger.warning(f"Welch t-test on zero-variance samples with different means ({m1} vs {m2})")
        return WelchResult(t=float(np.copysign(np.inf, m1 - m2)), df=df, p=0.0, degenerate=True)

    t = (m1 - m2) / np.sqrt(pooled)
    df = pooled**2 / (v1**2 / (n1 - 1) + v2**2 / (n2 - 1))
    return WelchResult(t=float(t), df=float(df), p=student_t_two_tailed(float(t), float(df)))
