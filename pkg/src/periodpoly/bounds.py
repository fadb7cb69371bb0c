"""Level thresholds beyond which every root of r_f provably lies on the circle.

For k = 2m + 2 (even) or k = 2m + 3 (odd) the certifying inequality holds for
all N ≥ N(m); levels below N(m) make up the exceptional region.  Weight 5 has
its own threshold, weight 3 and 4 have none.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from .errors import DomainError, MonotonicityViolation
from .specfun import gamma, zeta

__all__ = [
    "Parity",
    "CriterionEvaluation",
    "BoundsRow",
    "even_criterion",
    "odd_criterion",
    "weight5_criterion",
    "minimal_level",
    "weight5_minimal_level",
    "exceptional_table",
    "in_exceptional_set",
    "BOUNDARY_MARGIN",
]

BOUNDARY_MARGIN = 1e-12
ZETA2 = math.pi**2 / 6


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class CriterionEvaluation:
    lhs: float
    rhs: float
    holds: bool
    inputs: tuple

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class BoundsRow:
    m: int
    parity: Parity
    minimal_N: int

    @property
    def weight(self) -> int:
        return 2 * self.m + 2 if self.parity is Parity.EVEN else 2 * self.m + 3


def _parity(p) -> Parity:
    try:
        return Parity(p.value if isinstance(p, Parity) else str(p).lower())
    except ValueError:
        raise DomainError(f"unknown parity {p!r}") from None


def _even_sides(m, N, ctx):
    x = 2 * ctx.pi / ctx.sqrt(N)
    lhs = (
        ctx.mpf(16) / 5 * ctx.mpf(2) ** -m * (ctx.exp(2 * x) - 1)
        + ctx.mpf(17) / 4 / ctx.factorial(m - 1) * x ** (m - 1)
        + ctx.mpf(7) / 2 * (m + 1) / ctx.factorial(m) * x ** (m - 1)
    )
    return lhs, ctx.exp(-x)


def _odd_sides(m, N, ctx, form):
    x = 2 * ctx.pi / ctx.sqrt(N)
    z2sq = (ctx.pi**2 / 6) ** 2
    a = ctx.mpf(7) / 2 * ctx.mpf(2) ** -m * (ctx.exp(2 * x) - 1)
    b = (m + 2) / ctx.factorial(m) * x ** (m - 1)
    lhs = z2sq * (a + b) if form == "outer" else a + z2sq * b
    return lhs, ctx.exp(-x)


class _Float:
    """The handful of math functions the criteria need, in double precision."""

    pi = math.pi
    sqrt = staticmethod(math.sqrt)
    exp = staticmethod(math.exp)
    factorial = staticmethod(math.factorial)
    mpf = float


def _decide(sides, inputs):
    lhs, rhs = sides(_Float)
    if abs(lhs - rhs) < BOUNDARY_MARGIN:
        with mpmath.workdps(50):
            lhs_hp, rhs_hp = sides(mpmath.mp)
            holds = bool(lhs_hp < rhs_hp)
    else:
        holds = lhs < rhs
    return CriterionEvaluation(float(lhs), float(rhs), holds, inputs)


def even_criterion(m: int, N: int) -> CriterionEvaluation:
    """Certifying inequality for k = 2m + 2."""
    if m < 2 or N < 1:
        raise DomainError("even_criterion needs m >= 2 and N >= 1")
    return _decide(lambda ctx: _even_sides(m, N, ctx), (m, N))


def odd_criterion(m: int, N: int, form: str = "outer") -> CriterionEvaluation:
    """Certifying inequality for k = 2m + 3.

    ``form="outer"`` multiplies the whole left side by ζ(2)², which is the
    default and the form the level tables are computed from.  ``form="inner"``
    attaches ζ(2)² to the second term only and gives smaller thresholds.
    """
    if m < 2 or N < 1:
        raise DomainError("odd_criterion needs m >= 2 and N >= 1")
    if form not in ("outer", "inner"):
        raise DomainError(f"unknown odd criterion form {form!r}")
    return _decide(lambda ctx: _odd_sides(m, N, ctx, form), (m, N))


def weight5_criterion(N: int, eps: float = 0.4) -> CriterionEvaluation:
    """ζ(1+ε)²/ζ(2)² · (2π/√N)^{1-ε} · Γ(3+ε)/Γ(4) < 1/3."""
    if not 0 < eps < 1:
        raise DomainError("weight5_criterion needs 0 < eps < 1")
    if N < 1:
        raise DomainError("weight5_criterion needs N >= 1")
    const = zeta(1 + eps) ** 2 / ZETA2**2 * gamma(3 + eps) / 6

    def sides(ctx):
        if ctx is _Float:
            return const * (2 * math.pi / math.sqrt(N)) ** (1 - eps), 1 / 3
        e = ctx.mpf(eps)
        c = ctx.zeta(1 + e) ** 2 / (ctx.pi**2 / 6) ** 2 * ctx.gamma(3 + e) / 6
        return c * (2 * ctx.pi / ctx.sqrt(N)) ** (1 - e), ctx.mpf(1) / 3

    return _decide(sides, (5, N))


def _criterion(parity: Parity, m: int, form: str):
    if parity is Parity.EVEN:
        return lambda N: even_criterion(m, N).holds
    return lambda N: odd_criterion(m, N, form).holds


def _threshold(holds, label) -> int:
    """Smallest N ≥ 1 with holds(N), assuming holds is monotone in N."""
    if holds(1):
        hi = 1
    else:
        lo, hi = 1, 2
        while not holds(hi):
            lo, hi = hi, 2 * hi
            if hi > 2**62:
                raise DomainError(f"{label}: criterion never holds")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if holds(mid):
                hi = mid
            else:
                lo = mid
    # guard: no re-crossing on a geometric sample of (N, 10N]
    probes = sorted({hi + 1, *(math.ceil(hi * 10 ** (i / 32)) for i in range(1, 33))})
    for n in probes:
        if not holds(n):
            raise MonotonicityViolation(f"{label}: criterion fails again at N={n} > {hi}")
    return hi


@lru_cache(maxsize=None)
def minimal_level(m: int, parity, form: str = "outer") -> int:
    """N(m): the smallest level from which the criterion holds."""
    parity = _parity(parity)
    if m < 2:
        raise DomainError("minimal_level needs m >= 2")
    return _threshold(_criterion(parity, m, form), f"N({m}, {parity.value})")


@lru_cache(maxsize=None)
def weight5_minimal_level(eps: float = 0.4) -> int:
    return _threshold(lambda N: weight5_criterion(N, eps).holds, "weight 5")


def exceptional_table(parity, full: bool = False, form: str = "outer") -> list:
    """Thresholds N(m) for m = 2, 3, ... up to the first m with N(m) = 1.

    By default only the smallest m for each distinct N(m) is kept, so each
    row marks where a new threshold begins; ``full=True`` keeps every m.
    """
    parity = _parity(parity)
    rows = []
    m = 2
    while True:
        n = minimal_level(m, parity, form)
        if full or not rows or rows[-1].minimal_N != n:
            rows.append(BoundsRow(m, parity, n))
        if n == 1:
            return rows
        m += 1


def in_exceptional_set(k: int, N: int) -> bool:
    """True when (k, N) lies below the certified threshold for its weight."""
    if k < 3 or N < 1:
        raise DomainError("in_exceptional_set needs k >= 3 and N >= 1")
    if k in (3, 4):
        return False
    if k == 5:
        return N < weight5_minimal_level()
    if k % 2 == 0:
        return N < minimal_level((k - 2) // 2, Parity.EVEN)
    return N < minimal_level((k - 3) // 2, Parity.ODD)
