"""Period polynomials r_f(z), the unit-circle form t_f(z), and root checks.

Expanding r_f(z) = ∫_0^{i∞} f(τ)(τ - z)^{k-2} dτ binomially along the imaginary
axis gives

    r_f(z) = Σ_n i^{k-1+n} N^{-(k-1-n)/2} C(k-2, n) Λ(k-1-n, f) z^n,

and t_f(z) = Σ_n C(k-2, n) z^{n-(k-2)/2} δ Λ(k-1-n, f) with δ² = ε^{-1}
vanishes exactly at z = i√N ρ for roots ρ of r_f.  t_f is real on |z| = 1.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import BranchError, ConvergenceError, DomainError, MatchingError
from .lvalues import LambdaTable
from .specfun import log_gamma

__all__ = [
    "PeriodPolynomial",
    "UnitCircleForm",
    "RootReport",
    "Certificate",
    "QfDiagnostics",
    "build_period_polynomial",
    "build_unit_circle_form",
    "eval_t",
    "find_roots",
    "circle_report",
    "sign_certificate",
    "qf_decomposition",
    "q_function",
    "theta_predictions",
    "equidistribution_report",
    "DEFAULT_CIRCLE_TOL",
]

TWO_PI = 2 * math.pi
DEFAULT_CIRCLE_TOL = 1e-6
RESIDUAL_TOL = 1e-10


def _log_binom(n, r):
    return log_gamma(n + 1) - log_gamma(r + 1) - log_gamma(n - r + 1)


def _wrap(angle):
    """Reduce to (-π, π]."""
    a = math.remainder(angle, TWO_PI)
    return math.pi if a == -math.pi else a


# --------------------------------------------------------------------------
# r_f


@dataclass(frozen=True, eq=False)
class PeriodPolynomial:
    """r_f(z) = exp(log_scale) · Σ coefficients[n] z^n, with max |coefficients| = 1.

    ``errors[n]`` bounds the error of ``coefficients[n]`` (same scale).
    """

    label: str
    level: int
    weight: int
    coefficients: np.ndarray
    log_scale: float
    errors: np.ndarray

    @property
    def degree(self) -> int:
        return self.weight - 2

    def __call__(self, z):
        """r_f(z) at true scale."""
        return np.polyval(self.coefficients[::-1], z) * math.exp(self.log_scale)

    def normalized(self, z):
        return np.polyval(self.coefficients[::-1], z)

    def scaled_coefficients(self) -> np.ndarray:
        """Coefficients of r_f(w/√N) in w, normalized to max modulus 1.

        In w the roots sit on the unit circle, which keeps root finding well
        conditioned for every level.
        """
        n = np.arange(self.degree + 1)
        logs = np.full(n.size, -np.inf)
        nz = self.coefficients != 0
        logs[nz] = np.log(np.abs(self.coefficients[nz])) - 0.5 * n[nz] * math.log(self.level)
        top = logs.max()
        return np.where(nz, np.exp(logs - top) * np.exp(1j * np.angle(self.coefficients)), 0)


def build_period_polynomial(table: LambdaTable) -> PeriodPolynomial:
    """Monomial coefficients of r_f from the critical values in ``table``.

    Magnitudes are combined in log space, so large weights do not overflow.
    """
    k, N = table.weight, table.level
    deg = k - 2
    logs = np.full(deg + 1, -np.inf)
    phases = np.zeros(deg + 1, dtype=complex)
    err_logs = np.full(deg + 1, -np.inf)
    for n in range(deg + 1):
        j = k - 1 - n
        lam = table.Lambda(j)
        if not cmath.isfinite(lam):
            raise OverflowError(f"Λ({j}) is not finite; weight {k} is beyond double range")
        base = _log_binom(deg, n) - 0.5 * j * math.log(N)
        if lam != 0:
            logs[n] = base + math.log(abs(lam))
            phases[n] = 1j ** ((k - 1 + n) % 4) * lam / abs(lam)
        if table.errors[j - 1] > 0:
            err_logs[n] = base + math.log(table.errors[j - 1])
    top = logs.max()
    if not math.isfinite(top):
        raise DomainError("all critical values vanish")
    coeffs = np.exp(logs - top) * phases
    errors = np.exp(err_logs - top)
    return PeriodPolynomial(table.label, N, k, coeffs, float(top), errors)


# --------------------------------------------------------------------------
# root finding


def _aberth(coeffs: np.ndarray, max_iter: int):
    """Aberth–Ehrlich iteration with starting points on the unit circle."""
    deg = coeffs.size - 1
    p = coeffs[::-1]
    dp = np.polyder(p)
    w = np.exp(1j * (TWO_PI * np.arange(deg) / deg + 0.4 / deg))
    for it in range(max_iter):
        ratio = np.polyval(p, w) / np.polyval(dp, w)
        diff = w[:, None] - w[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        corr = ratio / (1.0 - ratio * inv.sum(axis=1))
        corr = np.where(np.isfinite(corr), corr, 0)
        w = w - corr
        if np.max(np.abs(corr)) <= 4 * np.finfo(float).eps * max(1.0, np.max(np.abs(w))):
            return w, it + 1
    return None, max_iter


def _polish(coeffs, w, steps=2):
    p = coeffs[::-1]
    dp = np.polyder(p)
    for _ in range(steps):
        d = np.polyval(dp, w)
        step = np.where(d != 0, np.polyval(p, w) / np.where(d != 0, d, 1), 0)
        w = w - step
    return w


def _residuals(poly: PeriodPolynomial, roots):
    scale = np.max(np.abs(poly.coefficients))
    return np.abs(poly.normalized(np.asarray(roots))) / scale


def find_roots(poly: PeriodPolynomial, max_iter: int = 500) -> np.ndarray:
    """All k-2 roots of r_f, sorted by argument in [0, 2π)."""
    c = poly.coefficients
    deg = poly.degree
    if deg < 1:
        raise DomainError("period polynomial of weight < 3 is constant")
    if abs(c[-1]) <= 1e-14 * np.max(np.abs(c)) + poly.errors[-1]:
        raise DomainError("leading coefficient vanishes within its error bound")
    sqrt_n = math.sqrt(poly.level)
    if deg == 1:
        roots = np.array([-c[0] / c[1]])
    else:
        d = poly.scaled_coefficients()
        w, _ = _aberth(d, max_iter)
        if w is None or np.max(_residuals(poly, w / sqrt_n)) > RESIDUAL_TOL:
            w = np.roots(d[::-1])
        w = _polish(d, w)
        roots = w / sqrt_n
        if np.max(_residuals(poly, roots)) > RESIDUAL_TOL:
            raise ConvergenceError(
                f"{poly.label}: roots not found to residual {RESIDUAL_TOL} after {max_iter} iterations"
            )
    args = np.mod(np.angle(roots), TWO_PI)
    return roots[np.argsort(args, kind="stable")]


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class RootReport:
    label: str
    level: int
    weight: int
    roots: tuple
    deviations: tuple  # |√N|ρ| - 1|
    residuals: tuple
    arguments: tuple  # arg ρ in [0, 2π)
    tolerance: float = DEFAULT_CIRCLE_TOL
    predictions: tuple = ()  # matched θ_ℓ (t_f normalization), per root
    prediction_index: tuple = ()
    prediction_deviations: tuple = ()  # signed, per root
    phase_offset: float | None = None
    antipodal_deviation: float | None = None  # k = 4 only
    certificate: str | None = None

    @property
    def max_deviation(self) -> float:
        return max(self.deviations)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    @property
    def equidistribution_max_deviation(self) -> float | None:
        if not self.prediction_deviations:
            return None
        return max(abs(x) for x in self.prediction_deviations)


def circle_report(
    roots, N: int, k: int, tolerance: float = DEFAULT_CIRCLE_TOL, poly=None, label=""
) -> RootReport:
    """Distances of the roots from |z| = 1/√N."""
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        raise DomainError("no roots")
    dev = np.abs(math.sqrt(N) * np.abs(roots) - 1)
    res = _residuals(poly, roots) if poly is not None else np.zeros(roots.size)
    args = np.mod(np.angle(roots), TWO_PI)
    return RootReport(
        label or (poly.label if poly is not None else ""),
        N,
        k,
        tuple(complex(r) for r in roots),
        tuple(float(x) for x in dev),
        tuple(float(x) for x in res),
        tuple(float(x) for x in args),
        tolerance,
    )


# --------------------------------------------------------------------------
# t_f


@dataclass(frozen=True, eq=False)
class UnitCircleForm:
    """t_f(z) = Σ_n coefficients[n] z^{n-(k-2)/2}, coefficients[n] = C(k-2,n) δ Λ(k-1-n)."""

    label: str
    level: int
    weight: int
    delta: complex
    coefficients: np.ndarray

    @property
    def half_integer(self) -> bool:
        return self.weight % 2 == 1

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(self.weight - 1) - (self.weight - 2) / 2

    @property
    def phase_constant(self) -> float:
        """C with arg(δ^{-1} conj(L(k-1)) z^{(k-2)/2}) = C + (k-2)θ/2 on |z| = 1."""
        return -cmath.phase(self.coefficients[0])

    def symmetry_defect(self) -> float:
        b = self.coefficients
        return float(np.max(np.abs(b - np.conj(b[::-1]))) / np.max(np.abs(b)))

    def complex_values(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.exp(1j * np.outer(theta, self.exponents)) @ self.coefficients


def build_unit_circle_form(
    table: LambdaTable, eps: complex | None = None, branch: int = 1
) -> UnitCircleForm:
    """t_f with δ the principal square root of ε^{-1} (``branch=-1`` flips it)."""
    if eps is None:
        eps = table.epsilon
    if abs(abs(eps) - 1) > 1e-8:
        raise DomainError("root number must have modulus 1")
    delta = branch * cmath.sqrt(1 / eps)
    k = table.weight
    b = np.array(
        [math.comb(k - 2, n) * delta * table.Lambda(k - 1 - n) for n in range(k - 1)],
        dtype=complex,
    )
    return UnitCircleForm(table.label, table.level, k, delta, b)


def eval_t(form: UnitCircleForm, theta: float, tol: float = 1e-9) -> float:
    """t_f(e^{iθ}) with half-integer powers e^{i(n-(k-2)/2)θ}.

    θ is used as given: on [0, 2π) that is the branch z^{1/2} = e^{iθ/2};
    past 2π the odd-weight value changes sign.
    """
    value = complex(form.complex_values(theta)[0])
    if abs(value.imag) > tol * np.max(np.abs(form.coefficients)):
        raise BranchError(f"Im t_f(e^{{i{theta}}}) = {value.imag:.3g} exceeds tolerance")
    return value.real


# --------------------------------------------------------------------------
# θ_ℓ predictions


def _solve_phase_equation(slope, amp, target):
    g = lambda t: slope * t - amp * math.sin(t) - target  # noqa: E731
    if slope > amp:
        if target == 0:
            return 0.0
        return brentq(g, 0.0, TWO_PI, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    warnings.warn(
        f"phase equation is not monotone ((k-2)/2 = {slope} <= 2π/√N = {amp:.4g}); "
        "picking the solution nearest the unperturbed angle",
        RuntimeWarning,
        stacklevel=3,
    )
    grid = np.linspace(0.0, TWO_PI, 8193)
    vals = slope * grid - amp * np.sin(grid) - target
    sols = [float(grid[i]) for i in np.flatnonzero(vals == 0)]
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        sols.append(brentq(g, grid[i], grid[i + 1], xtol=1e-14))
    guess = target / slope
    return min(sols, key=lambda t: abs(t - guess))


def theta_predictions(N: float, k: int, phase: float = 0.0) -> np.ndarray:
    """θ_ℓ in [0, 2π) with (k-2)/2·θ + phase - (2π/√N) sin θ ≡ ℓπ, ℓ = 0..k-3.

    The equation is read modulo (k-2)π, i.e. θ modulo 2π.
    """
    if k < 4:
        raise DomainError("theta_predictions needs k >= 4")
    slope = (k - 2) / 2
    amp = TWO_PI / math.sqrt(N)
    span = (k - 2) * math.pi
    out = []
    for ell in range(k - 2):
        target = math.fmod(ell * math.pi - phase, span)
        if target < 0:
            target += span
        theta = _solve_phase_equation(slope, amp, target)
        out.append(0.0 if theta >= TWO_PI else theta)
    return np.array(out)


# --------------------------------------------------------------------------
# sign certificate


@dataclass(frozen=True)
class Certificate:
    """Alternating signs of t_f at increasing angles in [0, 2π).

    With κ = k-2 alternations, the intermediate value theorem gives κ-1 roots
    between consecutive angles and one more across the wraparound (for odd k
    the sign flip of the half-integer powers at θ = 2π supplies it), so all
    k-2 roots lie on |z| = 1.
    """

    status: str  # "certified" | "inconclusive"
    angles: tuple
    signs: tuple
    margin: float  # min |t_f| at the angles / max |coefficient|
    method: str  # "seeded" | "scan" | "none"
    convention: str = "branch cut at θ = 0; open arc [0, 2π); wraparound by parity"

    @property
    def found(self) -> bool:
        return self.status == "certified"


def _alternates(signs):
    return all(s != 0 for s in signs) and all(
        signs[i] == -signs[i - 1] for i in range(1, len(signs))
    )


def _seeded(form, need, scale):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        seeds = np.sort(theta_predictions(form.level, form.weight, form.phase_constant))
    values = form.complex_values(seeds).real
    window = math.pi / max(need, 1) / 2
    amplitude = 2 * abs(form.coefficients[0])
    for i, v in enumerate(values):
        if abs(v) < 0.1 * amplitude:
            local = np.linspace(seeds[i] - window, seeds[i] + window, 65)
            local = local[(local >= 0) & (local < TWO_PI)]
            lv = form.complex_values(local).real
            j = int(np.argmax(np.abs(lv)))
            seeds[i], values[i] = local[j], lv[j]
    order = np.argsort(seeds)
    seeds, values = seeds[order], values[order]
    signs = tuple(int(np.sign(v)) for v in values)
    if len(seeds) == need and _alternates(signs) and np.all(np.diff(seeds) > 0):
        return Certificate(
            "certified",
            tuple(float(t) for t in seeds),
            signs,
            float(np.min(np.abs(values)) / scale),
            "seeded",
        )
    return None


def _scan(form, need, scale, points_per_root=64):
    grid = np.linspace(0.0, TWO_PI, points_per_root * max(need, 1) + 1)[:-1]
    values = form.complex_values(grid).real
    signs = np.sign(values)
    runs = []  # (sign, index of max |t|)
    start = 0
    for i in range(1, grid.size + 1):
        if i == grid.size or signs[i] != signs[start]:
            seg = slice(start, i)
            j = start + int(np.argmax(np.abs(values[seg])))
            runs.append((int(signs[start]), j))
            start = i
    if not form.half_integer and len(runs) > 1 and runs[0][0] == runs[-1][0]:
        first, last = runs[0], runs.pop()
        if abs(values[last[1]]) > abs(values[first[1]]):
            runs[0] = last
    if any(s == 0 for s, _ in runs):
        return None
    if form.half_integer:
        runs = runs[:need] if len(runs) in (need, need + 1) else []
    elif len(runs) != need:
        runs = []
    if len(runs) != need:
        return None
    runs.sort(key=lambda r: grid[r[1]])
    angles = tuple(float(grid[j]) for _, j in runs)
    signs_t = tuple(s for s, _ in runs)
    if not _alternates(signs_t):
        return None
    margin = float(min(abs(values[j]) for _, j in runs) / scale)
    return Certificate("certified", angles, signs_t, margin, "scan")


def sign_certificate(form: UnitCircleForm, k: int | None = None, N: int | None = None) -> Certificate:
    """Search for k-2 angles where t_f alternates in sign.

    Seeds are the angles where the main term of Q_f has phase ℓπ; a uniform
    scan is the fallback.  Failure is reported as inconclusive, not raised.
    """
    if (k is not None and k != form.weight) or (N is not None and N != form.level):
        raise DomainError("k and N must match the form")
    need = form.weight - 2
    scale = float(np.max(np.abs(form.coefficients)))
    if need == 1:
        v = eval_t(form, 0.0)
        if v != 0:
            return Certificate("certified", (0.0,), (int(np.sign(v)),), abs(v) / scale, "seeded")
        v = eval_t(form, math.pi)
        return Certificate(
            "certified" if v else "inconclusive",
            (math.pi,),
            (int(np.sign(v)),),
            abs(v) / scale,
            "seeded",
        )
    cert = _seeded(form, need, scale) or _scan(form, need, scale)
    return cert or Certificate("inconclusive", (), (), 0.0, "none")


# --------------------------------------------------------------------------
# Q_f decomposition


@dataclass(frozen=True)
class QfDiagnostics:
    theta: float
    main_term: complex
    s1: complex
    s2: complex
    s3: complex
    floor: float  # |L(k-1)| e^{-2π/√N}

    @property
    def s_magnitudes(self) -> tuple:
        return (abs(self.s1), abs(self.s2), abs(self.s3))

    @property
    def margin(self) -> float:
        return self.floor - sum(self.s_magnitudes)

    @property
    def q_value(self) -> complex:
        return self.main_term + self.s1 + self.s2 + self.s3


def _q_setup(table, eps, theta):
    k, N = table.weight, table.level
    if k < 4:
        raise DomainError("Q_f is defined for k >= 4")
    delta = cmath.sqrt(1 / eps)
    x = TWO_PI / math.sqrt(N)
    z = cmath.exp(1j * theta)
    if k % 2 == 0:
        m = (k - 2) // 2
        zpow = cmath.exp(1j * m * theta)
    else:
        m = (k - 3) // 2
        zpow = cmath.exp(1j * (m + 0.5) * theta)
    return k, N, delta, x, z, m, zpow


def q_function(table: LambdaTable, eps: complex, theta: float) -> complex:
    """Q_f(e^{iθ}) summed directly from its definition (no decomposition)."""
    k, N, delta, x, z, m, zpow = _q_setup(table, eps, theta)
    top = m - 1 if k % 2 == 0 else m
    total = sum(
        (x / z) ** n / math.factorial(n) * table.L(k - 1 - n).conjugate() for n in range(top + 1)
    )
    q = zpow * total / delta
    if k % 2 == 0:
        q += delta * table.Lambda(m + 1) * x ** (2 * m + 1) / (2 * math.factorial(m) ** 2)
    return q


def _exp_tail(u: complex, start: int) -> complex:
    """Σ_{n ≥ start} u^n / n!."""
    term = u**start / math.factorial(start)
    total = 0j
    n = start
    while True:
        total += term
        n += 1
        term *= u / n
        if abs(term) < 1e-18 * max(abs(total), 1e-300) and n > abs(u):
            return total + term


def qf_decomposition(table: LambdaTable, eps: complex, theta: float) -> QfDiagnostics:
    """Main term and S₁, S₂, S₃ of Q_f(e^{iθ}) (m = (k-2)/2 even, (k-3)/2 odd)."""
    k, N, delta, x, z, m, zpow = _q_setup(table, eps, theta)
    if k < 6:
        raise DomainError("the S1/S2/S3 decomposition is used for k >= 6")
    top = table.L(k - 1)
    lead = top.conjugate() * zpow / delta
    u = x / z
    main = lead * cmath.exp(u)
    s1 = lead * sum(
        u**n / math.factorial(n) * ((table.L(k - 1 - n) / top).conjugate() - 1) for n in range(m)
    )
    s2 = -lead * _exp_tail(u, m)
    if k % 2 == 0:
        s3 = delta * table.Lambda(m + 1) * x ** (2 * m + 1) / (2 * math.factorial(m) ** 2)
    else:
        s3 = zpow / delta * u**m / math.factorial(m) * table.L(m + 2).conjugate()
    floor = abs(top) * math.exp(-x)
    return QfDiagnostics(theta, main, s1, s2, s3, floor)


# --------------------------------------------------------------------------
# equidistribution


def _root_angle(rho, N):
    return float(np.mod(np.angle(1j * math.sqrt(N) * rho), TWO_PI))


def equidistribution_report(
    report: RootReport, form: UnitCircleForm, N: int | None = None, k: int | None = None
) -> RootReport:
    """Match root arguments (as angles of t_f's roots) to the predicted θ_ℓ.

    Roots of t_f sit near the angles where the main term of Q_f has phase
    π/2 + ℓπ; the spread of (root - prediction) is reported, and its mean as
    the phase offset between the existential constant c_f and C.
    """
    N = form.level if N is None else N
    k = form.weight if k is None else k
    if not report.passed:
        raise DomainError("equidistribution needs all roots on the circle")
    if k < 4:
        return report
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        preds = theta_predictions(N, k, form.phase_constant - math.pi / 2)
    angles = [_root_angle(r, N) for r in report.roots]
    index, devs = [], []
    for a in angles:
        diffs = [_wrap(a - p) for p in preds]
        j = int(np.argmin(np.abs(diffs)))
        index.append(j)
        devs.append(diffs[j])
    if len(set(index)) != len(index):
        raise MatchingError(f"{report.label}: two roots matched the same predicted angle")
    antipodal = None
    if k == 4:
        a1, a2 = report.arguments
        antipodal = abs(_wrap(a1 - a2 - math.pi))
    return replace(
        report,
        predictions=tuple(float(preds[j]) for j in index),
        prediction_index=tuple(index),
        prediction_deviations=tuple(float(d) for d in devs),
        phase_offset=float(np.mean(devs)),
        antipodal_deviation=antipodal,
    )
