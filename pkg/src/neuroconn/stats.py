"""Paired t-tests and Benjamini-Hochberg FDR correction.

The Student-t tail probability is computed from the regularized incomplete
beta function, evaluated with a Lentz-style continued fraction. No external
statistics library is used, so the module can serve as its own cross-check
against Monte Carlo simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MAX_ITER = 400
_CF_EPS = 1e-15
_TINY = 1e-300


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_tailed: float

    def __post_init__(self):
        if self.df < 1:
            raise ValueError(f"df must be >= 1, got {self.df}")
        if not (0 <= self.p_two_tailed <= 1):
            raise ValueError(f"p must be in [0, 1], got {self.p_two_tailed}")


@dataclass(frozen=True)
class FdrResult:
    adjusted_p: tuple[float, ...]
    rejected: tuple[bool, ...]
    q: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta continued fraction did not converge for "
                       f"a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be > 0, got a={a}, b={b}")
    if not (0 <= x <= 1):
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # use the fraction on the side where it converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_tailed(t: float, df: int) -> float:
    """Two-tailed tail probability P(|T_df| >= |t|).

    Uses whichever incomplete-beta argument is small: t*t/(df + t*t) keeps
    full precision for tiny |t| where df/(df + t*t) would round to 1.
    """
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if t == 0.0:
        return 1.0
    t2 = t * t
    if t2 <= df:
        return 1.0 - reg_inc_beta(0.5, df / 2.0, t2 / (df + t2))
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t2))


def paired_ttest(a, b) -> TTestResult:
    """Paired two-tailed Student t-test of equal means.

    t = mean(d) / (sd(d)/sqrt(n)) with d = a - b and sample sd (ddof=1).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"need two equal-length 1-D samples, got {a.shape} and {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"need n >= 2 paired values, got {n}")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        raise ValueError("zero variance of paired differences; t is undefined")
    t = float(d.mean() / (sd / math.sqrt(n)))
    return TTestResult(t=t, df=n - 1, p_two_tailed=t_sf_two_tailed(t, n - 1))


def bh_fdr(p_values, q: float = 0.05) -> FdrResult:
    """Benjamini-Hochberg step-up adjustment.

    adjusted_(i) = min_{j >= i} (m * p_(j) / j) clipped to 1, reported in the
    original order; rejected where adjusted <= q.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"p_values must be a nonempty 1-D list, got shape {p.shape}")
    if p.min() < 0 or p.max() > 1:
        raise ValueError(f"p-values must be in [0, 1], got range [{p.min()}, {p.max()}]")
    if not (0 < q < 1):
        raise ValueError(f"q must be in (0, 1), got {q}")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return FdrResult(
        adjusted_p=tuple(float(x) for x in adjusted),
        rejected=tuple(bool(x) for x in adjusted <= q),
        q=q,
    )
