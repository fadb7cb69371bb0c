"""Exactly constructed newforms used as an offline corpus.

Three classical constructions give newforms with exact integer (or Gaussian
integer) coefficients:

* eta products ∏ η(dz)^{r_d} that span one-dimensional newform spaces,
* CM forms ½w⁻¹ Σ_{α ∈ O_K, α ≠ 0} α^{k-1} q^{N(α)} for imaginary quadratic
  K of class number one (level |D|, character (D/·)),
* level-one forms Δ·E₄^a·E₆^b in the one-dimensional spaces S_k(SL₂(ℤ)),

plus twists f ⊗ χ by primitive characters of conductor prime to N, which give
newforms of level N·cond(χ)² (non-self-dual when χ is complex).

Labels follow LMFDB's scheme only where the space is one-dimensional (or for
the weight-7 level-11 CM form); other forms get descriptive labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .newform import NewformDescriptor

__all__ = [
    "eta_product",
    "level_one_form",
    "cm_form",
    "twist",
    "kronecker",
    "CorpusEntry",
    "CORPUS",
    "corpus_labels",
    "corpus_form",
]


def _sigma(n: int) -> int:
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
    return total


def _sigma_k(n: int, k: int) -> int:
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            total += d**k
            if d * d != n:
                total += (n // d) ** k
    return total


@lru_cache(maxsize=64)
def _eta_series(exponents: tuple, count: int) -> tuple:
    """Coefficients c_0..c_{count-1} of ∏_d ∏_n (1 - q^{dn})^{r_d}.

    Uses n c_n = Σ_{j=1}^n B_j c_{n-j} with B_j = -Σ_{d|j} r_d d σ(j/d).
    """
    b = [0] * count
    for d, r in exponents:
        for j in range(d, count, d):
            b[j] -= r * d * _sigma(j // d)
    c = [0] * count
    c[0] = 1
    for n in range(1, count):
        acc = 0
        for j in range(1, n + 1):
            if b[j]:
                acc += b[j] * c[n - j]
        assert acc % n == 0
        c[n] = acc // n
    return tuple(c)


def eta_product(exponents: dict, count: int) -> list:
    """a_1..a_count of ∏ η(dz)^{r_d}, which must start at q¹ (Σ d r_d = 24)."""
    if sum(d * r for d, r in exponents.items()) != 24:
        raise ValueError("eta product must have q-order 1")
    return list(_eta_series(tuple(sorted(exponents.items())), count))


def _mul(a, b, count):
    out = [0] * count
    for i, x in enumerate(a[:count]):
        if x:
            for j in range(count - i):
                out[i + j] += x * b[j]
    return out


def level_one_form(k: int, count: int) -> list:
    """a_1..a_count of Δ·E₄^a·E₆^b, the newform spanning S_k(SL₂(ℤ)) for
    k ∈ {12, 16, 18, 20, 22, 26}."""
    splits = {12: (0, 0), 16: (1, 0), 18: (0, 1), 20: (2, 0), 22: (1, 1), 26: (2, 1)}
    if k not in splits:
        raise ValueError(f"S_{k}(SL2(Z)) is not one-dimensional")
    a, b = splits[k]
    n = count + 1
    e4 = [1] + [240 * _sigma_k(m, 3) for m in range(1, n)]
    e6 = [1] + [-504 * _sigma_k(m, 5) for m in range(1, n)]
    series = [0] + list(_eta_series(((1, 24),), n - 1))  # Δ = q ∏(1-q^n)^24
    for _ in range(a):
        series = _mul(series, e4, n)
    for _ in range(b):
        series = _mul(series, e6, n)
    return series[1:n]


_CM_UNITS = {-3: 6, -4: 4}


def cm_form(D: int, k: int, count: int) -> list:
    """a_1..a_count of the CM newform of weight k attached to Q(√D), h(D) = 1.

    f = (1/w) Σ_{α ≠ 0} α^{k-1} q^{N(α)}; needs α^{k-1} trivial on units.
    """
    if D not in (-3, -4, -7, -8, -11, -19, -43, -67, -163):
        raise ValueError(f"D={D} is not a class-number-one fundamental discriminant")
    w = _CM_UNITS.get(D, 2)
    if (k - 1) % w:
        raise ValueError(f"weight {k} is incompatible with the units of Q(sqrt({D}))")
    # O_K = Z[ω] with ω² = tω - n
    if D % 4 == 1:
        t, nw = 1, (1 - D) // 4
    else:
        t, nw = 0, -D // 4

    def mul(x, y):
        a, b = x
        c, d = y
        return (a * c - nw * b * d, a * d + b * c + t * b * d)

    def power(x, e):
        out = (1, 0)
        while e:
            if e & 1:
                out = mul(out, x)
            x = mul(x, x)
            e >>= 1
        return out

    sums = [0] * (count + 1)
    ymax = math.isqrt(4 * count // (4 * nw - t * t)) + 2
    for y in range(-ymax, ymax + 1):
        xmax = math.isqrt(count) + abs(y) + 2
        for x in range(-xmax, xmax + 1):
            norm = x * x + t * x * y + nw * y * y
            if 0 < norm <= count:
                a, b = power((x, y), k - 1)
                sums[norm] += 2 * a + t * b  # twice the real part
    out = []
    for v in sums[1:]:
        assert v % (2 * w) == 0
        out.append(v // (2 * w))
    return out


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n ≥ 1."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    while n % 2 == 0:
        n //= 2
        if d % 2 == 0:
            return 0
        if d % 8 in (3, 5):
            result = -result
    a = d % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


# Order-4 character mod 5 with χ(2) = i, as Gaussian integers.
CHI5_ORDER4 = {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (0, -1), 4: (-1, 0)}


def twist(values, chi: Callable[[int], tuple]) -> list:
    """a_n χ(n) with χ returning Gaussian-integer pairs; coefficients may be
    ints or (re, im) pairs."""
    out = []
    for n, a in enumerate(values, start=1):
        ar, ai = a if isinstance(a, tuple) else (a, 0)
        cr, ci = chi(n)
        out.append((ar * cr - ai * ci, ar * ci + ai * cr))
    return out


@dataclass(frozen=True)
class CorpusEntry:
    label: str
    level: int
    weight: int
    char: str
    build: Callable[[int], list]
    root_number: tuple | None = None
    note: str = ""


def _quad(d):
    return lambda n: (kronecker(d, n), 0)


def _tw(base: Callable[[int], list], chi):
    return lambda count: twist(base(count), chi)


_ENTRIES = [
    CorpusEntry("7.3.b.a", 7, 3, "7.b", lambda M: eta_product({1: 3, 7: 3}, M),
                note="eta(z)^3 eta(7z)^3, CM by Q(sqrt(-7))"),
    CorpusEntry("5.4.a.a", 5, 4, "5.a", lambda M: eta_product({1: 4, 5: 4}, M)),
    CorpusEntry("6.4.a.a", 6, 4, "6.a", lambda M: eta_product({1: 2, 2: 2, 3: 2, 6: 2}, M)),
    CorpusEntry("8.4.a.a", 8, 4, "8.a", lambda M: eta_product({2: 4, 4: 4}, M)),
    CorpusEntry("4.5.b.a", 4, 5, "4.b", lambda M: eta_product({1: 4, 2: 2, 4: 4}, M),
                note="CM by Q(i)"),
    CorpusEntry("3.6.a.a", 3, 6, "3.a", lambda M: eta_product({1: 6, 3: 6}, M)),
    CorpusEntry("4.6.a.a", 4, 6, "4.a", lambda M: eta_product({2: 12}, M)),
    CorpusEntry("11.7.b.a", 11, 7, "11.b", lambda M: cm_form(-11, 7, M), root_number=(1, 0),
                note="CM by Q(sqrt(-11)), q + 10q^3 + 64q^4 + 74q^5 + ..."),
    CorpusEntry("2.8.a.a", 2, 8, "2.a", lambda M: eta_product({1: 8, 2: 8}, M)),
    CorpusEntry("1.12.a.a", 1, 12, "1.a", lambda M: level_one_form(12, M)),
    CorpusEntry("1.16.a.a", 1, 16, "1.a", lambda M: level_one_form(16, M)),
    CorpusEntry("1.18.a.a", 1, 18, "1.a", lambda M: level_one_form(18, M)),
    CorpusEntry("1.20.a.a", 1, 20, "1.a", lambda M: level_one_form(20, M)),
    CorpusEntry("1.22.a.a", 1, 22, "1.a", lambda M: level_one_form(22, M)),
    CorpusEntry("1.26.a.a", 1, 26, "1.a", lambda M: level_one_form(26, M)),
    CorpusEntry("cm.-8.3", 8, 3, "(-8/.)", lambda M: cm_form(-8, 3, M)),
    CorpusEntry("cm.-7.5", 7, 5, "(-7/.)", lambda M: cm_form(-7, 5, M)),
    CorpusEntry("cm.-3.7", 3, 7, "(-3/.)", lambda M: cm_form(-3, 7, M)),
    CorpusEntry("cm.-4.9", 4, 9, "(-4/.)", lambda M: cm_form(-4, 9, M)),
    CorpusEntry("cm.-19.9", 19, 9, "(-19/.)", lambda M: cm_form(-19, 9, M)),
    CorpusEntry("cm.-43.11", 43, 11, "(-43/.)", lambda M: cm_form(-43, 11, M)),
    CorpusEntry("cm.-7.21", 7, 21, "(-7/.)", lambda M: cm_form(-7, 21, M)),
    CorpusEntry("cm.-4.21", 4, 21, "(-4/.)", lambda M: cm_form(-4, 21, M)),
    CorpusEntry("tw.3.6.a.a.chi5", 75, 6, "3.a x (5/.)",
                _tw(lambda M: eta_product({1: 6, 3: 6}, M), lambda n: CHI5_ORDER4[n % 5]),
                note="twist by the order-4 character mod 5 (complex coefficients)"),
    CorpusEntry("tw.7.3.b.a.chi5", 175, 3, "7.b x (5/.)",
                _tw(lambda M: eta_product({1: 3, 7: 3}, M), lambda n: CHI5_ORDER4[n % 5])),
    CorpusEntry("tw.2.8.a.a.chi5", 50, 8, "(5/.)",
                _tw(lambda M: eta_product({1: 8, 2: 8}, M), lambda n: CHI5_ORDER4[n % 5])),
    CorpusEntry("tw.1.12.a.a.chi5", 25, 12, "(5/.)",
                _tw(lambda M: level_one_form(12, M), lambda n: CHI5_ORDER4[n % 5])),
    CorpusEntry("tw.5.4.a.a.-3", 45, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(-3))),
    CorpusEntry("tw.5.4.a.a.-4", 80, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(-4))),
    CorpusEntry("tw.5.4.a.a.-7", 245, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(-7))),
    CorpusEntry("tw.5.4.a.a.8", 320, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(8))),
    CorpusEntry("tw.5.4.a.a.-11", 605, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(-11))),
    CorpusEntry("tw.5.4.a.a.13", 845, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(13))),
    CorpusEntry("tw.5.4.a.a.-8", 320, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(-8))),
    CorpusEntry("tw.5.4.a.a.21", 2205, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(21))),
    CorpusEntry("tw.5.4.a.a.24", 2880, 4, "5.a", _tw(lambda M: eta_product({1: 4, 5: 4}, M), _quad(24))),
    CorpusEntry("tw.6.4.a.a.5", 150, 4, "6.a",
                _tw(lambda M: eta_product({1: 2, 2: 2, 3: 2, 6: 2}, M), _quad(5))),
    CorpusEntry("tw.6.4.a.a.-7", 294, 4, "6.a",
                _tw(lambda M: eta_product({1: 2, 2: 2, 3: 2, 6: 2}, M), _quad(-7))),
    CorpusEntry("tw.6.4.a.a.-11", 726, 4, "6.a",
                _tw(lambda M: eta_product({1: 2, 2: 2, 3: 2, 6: 2}, M), _quad(-11))),
    CorpusEntry("tw.8.4.a.a.17", 2312, 4, "8.a", _tw(lambda M: eta_product({2: 4, 4: 4}, M), _quad(17))),
    CorpusEntry("tw.8.4.a.a.5", 200, 4, "8.a", _tw(lambda M: eta_product({2: 4, 4: 4}, M), _quad(5))),
    CorpusEntry("tw.8.4.a.a.-3", 72, 4, "8.a", _tw(lambda M: eta_product({2: 4, 4: 4}, M), _quad(-3))),
]

CORPUS = {e.label: e for e in _ENTRIES}


def corpus_labels() -> list:
    return list(CORPUS)


@lru_cache(maxsize=128)
def corpus_form(label: str, count: int | None = None) -> NewformDescriptor:
    """Descriptor for a corpus label with ``count`` coefficients (default: the
    truncation length for the default budget plus a margin)."""
    from .lvalues import truncation_length

    entry = CORPUS[label]
    if count is None:
        count = truncation_length(entry.level, entry.weight) + 16
    values = entry.build(count)
    return NewformDescriptor.from_values(
        entry.label, entry.level, entry.weight, entry.char, values, entry.root_number
    )
