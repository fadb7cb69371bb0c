"""Completed L-function values Λ(s, f) at real s via the split Mellin integral.

With g(u) = f(iu/√N) the completed L-function is Λ(s) = ∫_0^∞ g(u) u^{s-1} du,
and g(1/u) = ε u^k ḡ(u).  Splitting the integral at u = t₀ gives

    Λ(s) = Σ a_n (√N/2πn)^s Γ(s, 2πn t₀/√N)
         + ε Σ ā_n (√N/2πn)^{k-s} Γ(k-s, 2πn/(t₀√N)),

which holds for every t₀ > 0.  That independence is what lets us recover ε
when it is unknown, and it is the main internal consistency check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    BudgetError,
    DomainError,
    IllConditionedError,
    MonotonicityViolation,
    PrecisionError,
)
from .newform import NewformDescriptor
from .specfun import DEFAULT_BUDGET, PrecisionBudget, log_gamma, log_upper_incomplete_gamma, zeta

__all__ = [
    "SPLIT_RANGE",
    "SPECFUN_REL_ERROR",
    "truncation_length",
    "lambda_value",
    "lambda_value_with_error",
    "EpsilonSolve",
    "solve_root_number",
    "LambdaTable",
    "build_lambda_table",
    "functional_equation_residual",
    "RatioCheck",
    "lemma_ratio_check",
    "l_from_lambda",
]

# Split parameters used anywhere lie in [1/SPLIT_RANGE, SPLIT_RANGE];
# truncation lengths are sized for the worst end.
SPLIT_RANGE = 1.25
# Relative accuracy of one incomplete-gamma factor (checked against mpmath in tests).
SPECFUN_REL_ERROR = 1e-14
DEFAULT_CAP = 10**7
FE_SPLIT = 1.25
_SOLVE_SPLITS = (1.0, 1.25, 0.8)


def _log_terms(N, k, s, n, t0):
    """log of the two real weights multiplying a_n and ā_n."""
    scale = np.log(math.sqrt(N) / (2 * math.pi * n))
    x = 2 * math.pi * n / math.sqrt(N)
    first = s * scale + log_upper_incomplete_gamma(s, x * t0)
    second = (k - s) * scale + log_upper_incomplete_gamma(k - s, x / t0)
    return first, second


def _s_grid(k):
    return [0.25] + [j / 2 for j in range(1, 2 * k)] + [k - 0.25]


@lru_cache(maxsize=256)
def truncation_length(
    N: int, k: int, budget: PrecisionBudget = DEFAULT_BUDGET, cap: int = DEFAULT_CAP
) -> int:
    """Number of coefficients M so the dropped tail of both sums is negligible.

    The tail Σ_{n>M} n^{(k+1)/2}·(weights) is bounded with the Deligne bound
    (|a_n| ≤ d(n) n^{(k-1)/2} ≤ n^{(k+1)/2}) and must stay below
    ``budget.target_rel_error`` times the n = 1 term, for every s on a
    half-integer grid in (0, k) and every split parameter in the supported range.
    """
    if N < 1 or k < 3:
        raise DomainError("truncation_length needs N >= 1 and k >= 3")
    t_lo = 1 / SPLIT_RANGE
    target = budget.target_rel_error
    length = 64
    while True:
        n = np.arange(1, length + 1, dtype=float)
        weight = ((k + 1) / 2) * np.log(n)
        need = 1
        settled = True
        for s in _s_grid(k):
            # t₀ = 1/SPLIT_RANGE slows the first sum, t₀ = SPLIT_RANGE the second.
            first, _ = _log_terms(N, k, s, n, t_lo)
            _, second = _log_terms(N, k, s, n, 1 / t_lo)
            log_t = np.logaddexp(first, second) + weight
            rel = np.exp(log_t - log_t[0])
            tail = np.cumsum(rel[::-1])[::-1]  # tail[i] = Σ_{n ≥ i+1}
            # last term must be far below target and decaying for the cut to be trustworthy
            if rel[-1] > target * 1e-6 or rel[-1] > rel[-2]:
                settled = False
                break
            ok = np.flatnonzero(tail <= target)
            need = max(need, int(ok[0]))  # keep n < ok[0] + 1, i.e. M = ok[0]
        if settled:
            if need > cap:
                raise BudgetError(f"truncation length {need} exceeds cap {cap}")
            return max(need, 1)
        if length > 2 * cap:
            raise BudgetError(f"truncation length for N={N}, k={k} exceeds cap {cap}")
        length *= 2


class _Sums(NamedTuple):
    first: complex
    second: complex
    mass: float
    tail: float
    used: int


def _sums(d: NewformDescriptor, s: float, t0: float, budget, coeffs=None) -> _Sums:
    N, k = d.level, d.weight
    m = truncation_length(N, k, budget)
    an = d.an if coeffs is None else coeffs
    if an.size < m:
        raise PrecisionError(
            f"{d.label}: {an.size} coefficients, need {m} for the precision budget"
        )
    an = an[:m]
    n = np.arange(1, m + 1, dtype=float)
    lf, ls = _log_terms(N, k, s, n, t0)
    wf, ws = np.exp(lf), np.exp(ls)
    first = complex(np.sum(an * wf))
    second = complex(np.sum(np.conj(an) * ws))
    mass = float(np.sum(np.abs(an) * (wf + ws)))
    head = float(wf[0] + ws[0])
    return _Sums(first, second, mass, budget.target_rel_error * head, m)


def _check_s(d, s):
    if not 0 < s < d.weight:
        raise DomainError(f"s must lie in (0, {d.weight}), got {s}")


def _check_eps(eps):
    if eps is None or abs(abs(eps) - 1) > 1e-8:
        raise DomainError(f"root number must have modulus 1, got {eps}")


def lambda_value_with_error(
    d: NewformDescriptor,
    s: float,
    eps: complex,
    t0: float = 1.0,
    budget: PrecisionBudget = DEFAULT_BUDGET,
):
    """(Λ(s, f), absolute error estimate, coefficients used)."""
    _check_s(d, s)
    _check_eps(eps)
    if not 1 / SPLIT_RANGE - 1e-12 <= t0 <= SPLIT_RANGE + 1e-12:
        raise DomainError(f"split parameter {t0} outside [{1 / SPLIT_RANGE}, {SPLIT_RANGE}]")
    sums = _sums(d, s, t0, budget)
    value = sums.first + eps * sums.second
    err = sums.tail + SPECFUN_REL_ERROR * sums.mass
    return value, err, sums.used


def lambda_value(
    d: NewformDescriptor,
    s: float,
    eps: complex,
    t0: float = 1.0,
    budget: PrecisionBudget = DEFAULT_BUDGET,
) -> complex:
    """Λ(s, f) = N^{s/2} ∫_0^∞ f(iy) y^{s-1} dy for real s in (0, k)."""
    return lambda_value_with_error(d, s, eps, t0, budget)[0]


def l_from_lambda(lam, s, N):
    """L(s, f) from Λ(s, f) = (√N/2π)^s Γ(s) L(s, f)."""
    return lam * math.exp(s * math.log(2 * math.pi / math.sqrt(N)) - log_gamma(s))


# --------------------------------------------------------------------------
# root number


@dataclass(frozen=True)
class EpsilonSolve:
    epsilon: complex
    residual: float
    method: str  # "GIVEN" or "SOLVED"

    @property
    def delta(self) -> complex:
        """Principal δ with δ² = ε^{-1}."""
        return cmath.sqrt(1 / self.epsilon)


def _split_defect(d, s, eps, budget):
    a = _sums(d, s, _SOLVE_SPLITS[0], budget)
    b = _sums(d, s, _SOLVE_SPLITS[2], budget)
    va = a.first + eps * a.second
    vb = b.first + eps * b.second
    return abs(va - vb) / max(a.mass, 1e-300)


def solve_root_number(
    d: NewformDescriptor, budget: PrecisionBudget = DEFAULT_BUDGET, s: float | None = None
) -> EpsilonSolve:
    """ε(f) from split invariance of the two-sum formula.

    Λ(s; t) = A(t) + ε B(t) must not depend on t, so two splits give
    ε = (A(t₁) - A(t₀)) / (B(t₀) - B(t₁)); a third split measures the residual.
    """
    if s is None:
        s = d.weight / 2 + 0.31
    _check_s(d, s)
    if d.epsilon is not None:
        eps = d.epsilon
        return EpsilonSolve(eps, _split_defect(d, s, eps, budget), "GIVEN")
    t0, t1, t2 = _SOLVE_SPLITS
    s0, s1, s2 = (_sums(d, s, t, budget) for t in (t0, t1, t2))
    denom = s0.second - s1.second
    if abs(denom) < 1e-10 * max(abs(s0.second), abs(s1.second), 1e-300):
        raise IllConditionedError("split variation of the dual sum vanishes; pick another s")
    eps = (s1.first - s0.first) / denom
    if abs(abs(eps) - 1) > 1e-8:
        raise PrecisionError(
            f"{d.label}: solved root number has modulus {abs(eps):.12f}; "
            "coefficients are inconsistent or too few"
        )
    eps /= abs(eps)
    v0 = s0.first + eps * s0.second
    v2 = s2.first + eps * s2.second
    residual = abs(v2 - v0) / max(s0.mass, 1e-300)
    if residual > 1e-8:
        raise PrecisionError(f"{d.label}: root-number residual {residual:.3g} exceeds 1e-8")
    return EpsilonSolve(eps, residual, "SOLVED")


# --------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class LambdaTable:
    """Λ(j, f) and L(j, f) for j = 1..k-1.

    ``lambdas[j - 1]`` is Λ(j, f).  Synthetic tables (no descriptor) are
    allowed; they only need the critical values and ε.
    """

    label: str
    level: int
    weight: int
    epsilon: complex
    lambdas: tuple
    errors: tuple
    truncation_length: int = 0
    fe_residual: float = 0.0
    monotonicity: tuple = ()
    descriptor: NewformDescriptor | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_lambdas(cls, level, weight, epsilon, lambdas, label="synthetic", errors=None):
        lambdas = tuple(complex(v) for v in lambdas)
        if len(lambdas) != weight - 1:
            raise DomainError(f"need {weight - 1} values, got {len(lambdas)}")
        if errors is None:
            scale = max(abs(v) for v in lambdas)
            errors = (1e-15 * scale,) * len(lambdas)
        return cls(label, level, weight, complex(epsilon), lambdas, tuple(errors))

    @classmethod
    def from_l_values(cls, level, weight, epsilon, l_values, label="synthetic"):
        lambdas = [
            complex(L) * math.exp(j * math.log(math.sqrt(level) / (2 * math.pi)) + log_gamma(j))
            for j, L in enumerate(l_values, start=1)
        ]
        return cls.from_lambdas(level, weight, epsilon, lambdas, label)

    @property
    def delta(self) -> complex:
        return cmath.sqrt(1 / self.epsilon)

    def Lambda(self, j: int) -> complex:
        if not 1 <= j <= self.weight - 1:
            raise DomainError(f"j must be in 1..{self.weight - 1}")
        return self.lambdas[j - 1]

    def L(self, j: int) -> complex:
        return l_from_lambda(self.Lambda(j), j, self.level)

    @property
    def values(self) -> dict:
        return {j: (self.Lambda(j), self.L(j)) for j in range(1, self.weight)}

    def scaled(self, factor: complex) -> "LambdaTable":
        return replace(
            self,
            lambdas=tuple(factor * v for v in self.lambdas),
            errors=tuple(abs(factor) * e for e in self.errors),
        )


def functional_equation_residual(table: LambdaTable, budget=DEFAULT_BUDGET) -> float:
    """max_j |Λ(j, f) - ε Λ(k-j, f̄)| / max_j |Λ(j, f)|.

    The dual side is evaluated with split t₀ = 1.25 so the comparison is not
    the same sum read twice.
    """
    from .newform import conjugate

    d = table.descriptor
    if d is None:
        k = table.weight
        diffs = [
            abs(table.Lambda(j) - table.epsilon * table.Lambda(k - j).conjugate())
            for j in range(1, k)
        ]
    else:
        dual = conjugate(d)
        eps_dual = table.epsilon.conjugate()
        k = d.weight
        diffs = []
        for j in range(1, k):
            other = lambda_value(dual, k - j, eps_dual, FE_SPLIT, budget)
            diffs.append(abs(table.Lambda(j) - table.epsilon * other))
    return max(diffs) / max(abs(v) for v in table.lambdas)


def _monotone_points(k):
    chain = []
    s = k / 2
    while s < k - 1e-9:
        chain.append(s)
        s += 1
    right = (k + 1) / 2
    grid = [right + a for a in np.linspace(0, (k - 1) / 2 - 0.1, 9)[1:]]
    return chain, grid


def _check_monotone(d, eps, budget):
    chain, grid = _monotone_points(d.weight)
    profile = []
    for points in (chain, grid):
        prev = None
        for s in points:
            val, err, _ = lambda_value_with_error(d, s, eps, 1.0, budget)
            profile.append((s, abs(val)))
            if prev is not None and abs(val) + err < prev[1] - prev[2]:
                raise MonotonicityViolation(
                    f"{d.label}: |Λ({s})| = {abs(val):.6g} < |Λ({prev[0]})| = {prev[1]:.6g}"
                )
            prev = (s, abs(val), err)
    return tuple(profile)


def build_lambda_table(
    d: NewformDescriptor,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    epsilon: complex | None = None,
    check: bool = True,
) -> LambdaTable:
    """All critical values Λ(j, f), L(j, f), j = 1..k-1, with error estimates.

    Checks the functional equation and the monotonicity of |Λ| right of the
    center; both are theorems, so a failure raises.
    """
    if epsilon is None:
        epsilon = solve_root_number(d, budget).epsilon
    _check_eps(epsilon)
    k = d.weight
    lambdas, errors = [], []
    used = 0
    for j in range(1, k):
        val, err, used = lambda_value_with_error(d, j, epsilon, 1.0, budget)
        lambdas.append(val)
        errors.append(err)
    table = LambdaTable(
        d.label, d.level, k, epsilon, tuple(lambdas), tuple(errors), used, descriptor=d
    )
    if not check:
        return table
    resid = functional_equation_residual(table, budget)
    scale = max(abs(v) for v in lambdas)
    if resid * scale > 1e3 * max(errors):
        raise PrecisionError(
            f"{d.label}: functional-equation residual {resid:.3g} (relative) exceeds error budget"
        )
    profile = _check_monotone(d, epsilon, budget)
    return replace(table, fe_residual=resid, monotonicity=profile)


class RatioCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _l_at(table: LambdaTable, s: float):
    if float(s).is_integer() and 1 <= s <= table.weight - 1:
        j = int(s)
        return table.L(j), table.errors[j - 1] / max(abs(table.Lambda(j)), 1e-300)
    if table.descriptor is None:
        raise DomainError(f"L({s}) is not tabulated and the table has no descriptor")
    val, err, _ = lambda_value_with_error(table.descriptor, s, table.epsilon)
    return l_from_lambda(val, s, table.level), err / max(abs(val), 1e-300)


def lemma_ratio_check(table: LambdaTable, a: float, b: float) -> RatioCheck:
    """|L(c+a)/L(c+b) - 1| ≤ ζ(1+a)²/ζ(1+b)² - 1 with c = (k+1)/2."""
    if not 0 < a <= b:
        raise DomainError("need 0 < a <= b")
    c = (table.weight + 1) / 2
    la, ra = _l_at(table, c + a)
    lb, rb = _l_at(table, c + b)
    lhs = abs(la / lb - 1)
    rhs = zeta(1 + a) ** 2 / zeta(1 + b) ** 2 - 1
    margin = 2 * (ra + rb) * (1 + lhs) + 1e-12
    return RatioCheck(lhs, rhs, lhs <= rhs + margin)
