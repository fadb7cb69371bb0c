"""Real-argument special functions: Γ, log Γ, Γ(s, x) and ζ(s).

Everything here is real-in / real-out.  Complex L-values are assembled by the
callers from real incomplete-gamma factors times complex coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "PrecisionBudget",
    "DEFAULT_BUDGET",
    "gamma",
    "log_gamma",
    "upper_incomplete_gamma",
    "log_upper_incomplete_gamma",
    "zeta",
]

_EPS = np.finfo(float).eps
_FPMIN = 1e-300
_MAX_ITER = 2000
# Largest s with Γ(s) finite in IEEE double.
GAMMA_OVERFLOW = 171.62
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class PrecisionBudget:
    """Error goals for a single function evaluation."""

    target_abs_error: float = 1e-14
    target_rel_error: float = 1e-13

    def __post_init__(self):
        if not (self.target_abs_error > 0 and self.target_rel_error > 0):
            raise DomainError("precision targets must be strictly positive")


DEFAULT_BUDGET = PrecisionBudget()


def gamma(s: float) -> float:
    """Γ(s) for real s > 0.

    Raises OverflowError past s ≈ 171.6; use :func:`log_gamma` there.
    """
    if not s > 0:
        raise DomainError(f"gamma: s must be > 0, got {s}")
    if s > GAMMA_OVERFLOW:
        raise OverflowError(f"gamma({s}) overflows double precision; use log_gamma")
    return math.gamma(s)


def log_gamma(s: float) -> float:
    """ln Γ(s) for real s > 0."""
    if not s > 0:
        raise DomainError(f"log_gamma: s must be > 0, got {s}")
    return math.lgamma(s)


def _series_sum(s, xp):
    """Σ_{j≥0} x^j / ((s+1)...(s+j)) for x > 0; γ(s, x) = x^s e^{-x} / s · sum."""
    term = np.full(xp.shape, 1.0)
    total = term.copy()
    active = np.ones(xp.shape, dtype=bool)
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term = np.where(active, term * xp / ap, term)
        total = np.where(active, total + term, total)
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            return total
    raise ConvergenceError(f"incomplete gamma series did not converge for s={s}")


def _log_gamma_series(s, x):
    """log Γ(s, x) through the lower-gamma power series.  Accurate for x < s + 1."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, math.lgamma(s))
    pos = x > 0
    if not np.any(pos):
        return out
    xp = x[pos]
    total = _series_sum(s, xp)
    log_p = -xp + s * np.log(xp) - math.lgamma(s + 1.0) + np.log(total)
    p = np.exp(log_p)
    with np.errstate(divide="ignore"):
        out[pos] = math.lgamma(s) + np.log1p(-p)
    return out


def _cf_value(s, x):
    """Legendre continued fraction h with Γ(s, x) = x^s e^{-x} h (modified Lentz).

    Accurate for x ≥ s + 1; requires x > 0.
    """
    b = x + 1.0 - s
    c = np.full(x.shape, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete gamma continued fraction did not converge for s={s}")
    return h


def _log_gamma_cf(s, x):
    """log Γ(s, x) through the continued fraction."""
    x = np.asarray(x, dtype=float)
    return -x + s * np.log(x) + np.log(_cf_value(s, x))


def _power_exp(s, x):
    """x^s e^{-x} as (x e^{-x/s})^s: one rounding inside the power, not ~|log| ulps."""
    with np.errstate(over="ignore", under="ignore"):
        direct = np.exp(s * np.log(x) - x)
        stable = np.power(x * np.exp(-x / s), s)
    # e^{-x/s} underflows when x/s is large; the plain exponential is exact enough there
    return np.where(x / s < 700, stable, direct)


def log_upper_incomplete_gamma(s: float, x):
    """ln Γ(s, x) for s > 0, x ≥ 0; vectorized over ``x``.

    Power series below x = s + 1, continued fraction above.
    """
    if not s > 0:
        raise DomainError(f"upper_incomplete_gamma: s must be > 0, got {s}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("upper_incomplete_gamma: x must be >= 0")
    out = np.empty(xa.shape)
    series = xa < s + 1.0
    if series.any():
        out[series] = _log_gamma_series(s, xa[series])
    if (~series).any():
        out[~series] = _log_gamma_cf(s, xa[~series])
    if np.ndim(x) == 0:
        return float(out)
    return out


def upper_incomplete_gamma(s: float, x):
    """Γ(s, x) = ∫_x^∞ t^{s-1} e^{-t} dt for s > 0, x ≥ 0; vectorized over ``x``."""
    logv = log_upper_incomplete_gamma(s, x)  # validates arguments
    if np.any(np.asarray(logv) > _LOG_MAX):
        raise OverflowError(f"Γ({s}, x) overflows double precision; use log_upper_incomplete_gamma")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xa.shape)
    series = xa < s + 1.0
    if series.any():
        xs = xa[series]
        full = math.exp(logv) if np.ndim(logv) == 0 else None
        gamma_s = math.gamma(s) if s <= GAMMA_OVERFLOW else math.inf
        vals = np.full(xs.shape, gamma_s)
        pos = xs > 0
        if pos.any():
            lower = _power_exp(s, xs[pos]) * _series_sum(s, xs[pos]) / s
            vals[pos] = gamma_s - lower
        if not np.all(np.isfinite(vals)):
            # Γ(s) alone overflows although Γ(s, x) does not: fall back to the log form
            vals = np.exp(np.atleast_1d(logv)[series]) if full is None else np.array([full])
        out[series] = vals
    if (~series).any():
        xc = xa[~series]
        out[~series] = _power_exp(s, xc) * _cf_value(s, xc)
    if np.ndim(x) == 0:
        return float(out[0])
    return out


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple:
    """B_2, B_4, ..., B_{2·count} as floats (Akiyama–Tanigawa on exact fractions)."""
    size = 2 * count + 1
    row = [Fraction(0)] * (size + 1)
    numbers = []
    for m in range(size + 1):
        row[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        numbers.append(row[0])
    return tuple(float(numbers[2 * j]) for j in range(1, count + 1))


def _zeta_em(s: float, n: int, order: int):
    """Euler–Maclaurin ζ(s) with head length ``n`` and ``order`` correction terms.

    Returns ``(value, bound)`` where ``bound`` is the first omitted term,
    which dominates the remainder for real s > 1.
    """
    head = math.fsum(k ** -s for k in range(1, n))
    tail = n ** (1.0 - s) / (s - 1.0) + 0.5 * n ** -s
    bern = _bernoulli_even(order + 1)
    corr = []
    rising = s  # s(s+1)...(s+2j-2)
    fact = 2.0  # (2j)!
    for j in range(1, order + 2):
        term = bern[j - 1] / fact * rising * n ** (-s - 2 * j + 1)
        corr.append(term)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + tail + math.fsum(corr[:-1]), abs(corr[-1])


def zeta(s: float, budget: PrecisionBudget = DEFAULT_BUDGET) -> float:
    """Riemann ζ(s) for real s > 1 (Euler–Maclaurin with explicit tail bound)."""
    if not s > 1:
        raise DomainError(f"zeta: s must be > 1, got {s}")
    target = budget.target_abs_error
    n = 10
    while n < 10**6:
        for order in range(1, 3 * n):
            value, bound = _zeta_em(s, n, order)
            if bound < 0.1 * target:
                return value
        n *= 2
    raise ConvergenceError(f"zeta({s}) did not reach the requested budget")
