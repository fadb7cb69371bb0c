"""Newform data model, coefficient-file ingestion and validation.

Coefficient file (UTF-8 JSON)::

    {"label": "11.7.b.a", "level": 11, "weight": 7, "char": "11.b",
     "root_number": [1, 0],                 # optional
     "coeffs": [[1, 0], [0, 0], [10, 0], ...]}   # a_n at position n - 1

Numbers are kept exactly as given (ints stay ints, floats keep every bit), so
``dumps(load_from_file(p))`` reproduces a file written by :func:`dumps`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, GapError, ParseError, PrecisionError, SchemaError
from .specfun import DEFAULT_BUDGET, PrecisionBudget

__all__ = [
    "NewformDescriptor",
    "Violation",
    "ValidationReport",
    "CuspFormValue",
    "load_from_file",
    "loads",
    "dumps",
    "save",
    "validate",
    "conjugate",
    "eval_cusp_form",
    "primes_up_to",
]

DELIGNE_TOL = 1e-6
ROOT_NUMBER_TOL = 1e-10


def _pair(value):
    if isinstance(value, complex):
        return (value.real, value.imag)
    if isinstance(value, (tuple, list)):
        re, im = value
        return (re, im)
    if isinstance(value, (np.integer,)):
        return (int(value), 0)
    if isinstance(value, (np.floating,)):
        return (float(value), 0.0)
    if isinstance(value, (np.complexfloating,)):
        return (float(value.real), float(value.imag))
    return (value, 0)


@dataclass(frozen=True)
class NewformDescriptor:
    """A newform f ∈ S_k(Γ₀(N), χ) given by its first M Fourier coefficients.

    ``coefficients[n - 1]`` is a_n as an exact ``(re, im)`` pair.
    ``root_number`` is ε(f) as a pair, or None when unknown.
    """

    label: str
    level: int
    weight: int
    nebentypus: str
    coefficients: tuple
    root_number: tuple | None = None

    @classmethod
    def from_values(cls, label, level, weight, nebentypus, values, root_number=None):
        coeffs = tuple(_pair(v) for v in values)
        eps = None if root_number is None else _pair(root_number)
        return cls(label, int(level), int(weight), str(nebentypus), coeffs, eps)

    @cached_property
    def an(self) -> np.ndarray:
        """a_1..a_M as a complex array (index n - 1)."""
        return np.array([complex(float(re), float(im)) for re, im in self.coefficients])

    @property
    def num_coefficients(self) -> int:
        return len(self.coefficients)

    @property
    def epsilon(self) -> complex | None:
        if self.root_number is None:
            return None
        re, im = self.root_number
        return complex(float(re), float(im))

    @property
    def is_real(self) -> bool:
        return all(im == 0 for _, im in self.coefficients)

    def truncated(self, count: int) -> "NewformDescriptor":
        return replace(self, coefficients=self.coefficients[:count])

    def with_root_number(self, epsilon) -> "NewformDescriptor":
        return replace(self, root_number=None if epsilon is None else _pair(epsilon))

    def to_document(self) -> dict:
        doc = {
            "label": self.label,
            "level": self.level,
            "weight": self.weight,
            "char": self.nebentypus,
        }
        if self.root_number is not None:
            doc["root_number"] = list(self.root_number)
        doc["coeffs"] = [list(c) for c in self.coefficients]
        return doc


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {x!r}")
    return x


def _from_document(doc) -> NewformDescriptor:
    if not isinstance(doc, dict):
        raise SchemaError("coefficient file must be a JSON object")
    for key in ("label", "level", "weight", "char", "coeffs"):
        if key not in doc:
            raise SchemaError(f"missing field {key!r}")
    label, level, weight, char = doc["label"], doc["level"], doc["weight"], doc["char"]
    if not isinstance(label, str) or not isinstance(char, str):
        raise SchemaError("label and char must be strings")
    for key, val in (("level", level), ("weight", weight)):
        if isinstance(val, bool) or not isinstance(val, int):
            raise SchemaError(f"{key} must be an integer")
    coeffs = doc["coeffs"]
    if not isinstance(coeffs, list):
        raise SchemaError("coeffs must be an array")
    pairs = []
    for i, c in enumerate(coeffs):
        if c is None:
            raise GapError(f"coefficient a_{i + 1} is missing")
        if not isinstance(c, list) or len(c) != 2:
            raise SchemaError(f"a_{i + 1}: expected [re, im]")
        pairs.append((_number(c[0], f"a_{i + 1}"), _number(c[1], f"a_{i + 1}")))
    eps = doc.get("root_number")
    if eps is not None:
        if not isinstance(eps, list) or len(eps) != 2:
            raise SchemaError("root_number: expected [re, im]")
        eps = (_number(eps[0], "root_number"), _number(eps[1], "root_number"))
    return NewformDescriptor(label, level, weight, char, tuple(pairs), eps)


def loads(text: str) -> NewformDescriptor:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed coefficient file: {exc}") from exc
    return _from_document(doc)


def load_from_file(path) -> NewformDescriptor:
    """Read a coefficient file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text") from exc
    return loads(text)


def dumps(d: NewformDescriptor) -> str:
    return json.dumps(d.to_document(), separators=(",", ":"))


def save(d: NewformDescriptor, path) -> None:
    Path(path).write_text(dumps(d), encoding="utf-8")


# --------------------------------------------------------------------------
# validation


class Violation(NamedTuple):
    rule: str
    index: int | None
    magnitude: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations

    def rules(self) -> set:
        return {v.rule for v in self.violations}


def primes_up_to(n: int) -> list:
    if n < 2:
        return []
    sieve = bytearray(b"\x01") * (n + 1)
    sieve[:2] = b"\x00\x00"
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i, v in enumerate(sieve) if v]


def validate(d: NewformDescriptor, budget: PrecisionBudget = DEFAULT_BUDGET) -> ValidationReport:
    """Check every descriptor invariant and report all violations."""
    out = []
    if d.level < 1:
        out.append(Violation("level", None, d.level))
    if d.weight < 3:
        out.append(Violation("weight", None, d.weight))
    an = d.an
    if an.size == 0:
        out.append(Violation("normalization", 1, float("inf"), "no coefficients"))
        return ValidationReport(tuple(out))
    if not np.all(np.isfinite(an)):
        bad = int(np.flatnonzero(~np.isfinite(an))[0]) + 1
        out.append(Violation("finite", bad, float("inf")))
    if abs(an[0] - 1) > 1e-12:
        out.append(Violation("normalization", 1, float(abs(an[0] - 1))))
    eps = d.epsilon
    if eps is not None and abs(abs(eps) - 1) > ROOT_NUMBER_TOL:
        out.append(Violation("root number modulus", None, abs(eps)))

    k = d.weight
    unramified = [p for p in primes_up_to(an.size) if d.level % p]
    small = 0
    for p in unramified:
        ap = abs(an[p - 1])
        bound = 2 * p ** ((k - 1) / 2)
        if ap > bound + DELIGNE_TOL:
            out.append(Violation("deligne", p, float(ap / bound)))
        if ap <= 2 + DELIGNE_TOL:
            small += 1
    if k >= 3 and len(unramified) >= 10 and small == len(unramified):
        out.append(
            Violation(
                "analytic normalization",
                None,
                float(len(unramified)),
                "all |a_p| <= 2: coefficients look analytically normalized; "
                "multiply a_n by n^((k-1)/2)",
            )
        )

    if d.level >= 1 and k >= 3:
        from .lvalues import truncation_length

        try:
            need = truncation_length(d.level, k, budget)
        except PrecisionError:
            need = None
        if need is None or an.size < need:
            out.append(
                Violation("coefficient count", an.size, float("inf") if need is None else need)
            )
    return ValidationReport(tuple(out))


def conjugate(d: NewformDescriptor) -> NewformDescriptor:
    """The dual form f̄: conjugate every a_n and the root number."""
    coeffs = tuple((re, -im) for re, im in d.coefficients)
    eps = None if d.root_number is None else (d.root_number[0], -d.root_number[1])
    return replace(d, coefficients=coeffs, root_number=eps)


# --------------------------------------------------------------------------
# q-expansion


class CuspFormValue(NamedTuple):
    value: complex
    tail_bound: float


def _deligne_tail(m: int, k: int, y: float) -> float:
    """Bound for Σ_{n>m} n^{(k+1)/2} e^{-2πny} (d(n) ≤ n covers the divisor factor)."""
    a = (k + 1) / 2
    c = 2 * math.pi * y
    total = 0.0
    n = m + 1
    while True:
        log_term = a * math.log(n) - c * n
        ratio = math.exp(a * math.log1p(1 / n) - c)
        term = math.exp(log_term) if log_term > -745 else 0.0
        if ratio < 1:
            return total + term / (1 - ratio)
        total += term
        n += 1


def eval_cusp_form(
    d: NewformDescriptor, y: float, budget: PrecisionBudget = DEFAULT_BUDGET, strict: bool = True
) -> CuspFormValue:
    """f(iy) = Σ_{n≤M} a_n e^{-2πny} with a Deligne tail bound.

    With ``strict=False`` an oversized tail bound is returned instead of raised.
    """
    if not y >= 0.1 / math.sqrt(d.level):
        raise DomainError(f"eval_cusp_form: need y >= 0.1/sqrt(N), got {y}")
    an = d.an
    n = np.arange(1, an.size + 1)
    value = complex(np.sum(an * np.exp(-2 * math.pi * n * y)))
    tail = _deligne_tail(an.size, d.weight, y)
    if strict and tail > max(budget.target_abs_error, budget.target_rel_error * abs(value)):
        raise PrecisionError(
            f"q-expansion tail {tail:.3g} at y={y} exceeds the budget; need more coefficients"
        )
    return CuspFormValue(value, tail)
