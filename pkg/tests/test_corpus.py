import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from periodpoly.corpus import (
    CORPUS,
    cm_form,
    corpus_form,
    corpus_labels,
    eta_product,
    kronecker,
    level_one_form,
    twist,
)
from periodpoly.newform import primes_up_to, validate

COUNT = 300




def _a(label, count=COUNT):
    return list(corpus_form(label, count).coefficients)


def _mul(x, y):
    """Exact product of Gaussian integers given as (re, im)."""
    return (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0])


class TestConstructions:
    def test_delta(self):
        assert level_one_form(12, 6) == [1, -24, 252, -1472, 4830, -6048]

    def test_weight16(self):
        assert level_one_form(16, 3) == [1, 216, -3348]

    def test_eta_equals_cm(self):
        assert eta_product({1: 3, 7: 3}, COUNT) == cm_form(-7, 3, COUNT)
        assert eta_product({1: 4, 2: 2, 4: 4}, COUNT) == cm_form(-4, 5, COUNT)

    def test_weight7_example(self):
        assert cm_form(-11, 7, 5) == [1, 0, 10, 64, 74]

    def test_eta_order(self):
        with pytest.raises(ValueError):
            eta_product({1: 2}, 5)

    def test_bad_cm(self):
        with pytest.raises(ValueError):
            cm_form(-5, 3, 5)
        with pytest.raises(ValueError):
            cm_form(-4, 4, 5)

    def test_bad_level_one(self):
        with pytest.raises(ValueError):
            level_one_form(14, 5)

    def test_twist(self):
        assert twist([1, 2, (3, 1)], lambda n: (0, 1)) == [(0, 1), (0, 2), (-1, 3)]


class TestKronecker:
    @given(st.integers(-200, 200), st.sampled_from(primes_up_to(60)[1:]))
    def test_euler_criterion(self, d, p):
        r = pow(d % p, (p - 1) // 2, p)
        expected = 0 if d % p == 0 else (1 if r == 1 else -1)
        assert kronecker(d, p) == expected

    @given(st.integers(-200, 200), st.integers(1, 300), st.integers(1, 300))
    def test_multiplicative(self, d, m, n):
        assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)

    def test_two(self):
        assert [kronecker(d, 2) for d in (-7, -3, 1, 5, 8)] == [1, -1, 1, -1, 0]


class TestHeckeRelations:
    @pytest.mark.parametrize("label", corpus_labels())
    def test_multiplicative(self, label):
        a = _a(label)
        for m in range(2, 18):
            for n in range(m + 1, COUNT // m + 1):
                if math.gcd(m, n) == 1:
                    assert a[m * n - 1] == _mul(a[m - 1], a[n - 1])

    @pytest.mark.parametrize("label", corpus_labels())
    def test_prime_square(self, label):
        a = _a(label)
        d = corpus_form(label, 2)
        k, N = d.weight, d.level
        for p in primes_up_to(17):
            if N % p == 0:
                assert a[p * p - 1] == _mul(a[p - 1], a[p - 1])
                continue
            # a_{p²} = a_p² − χ(p) p^{k−1} with χ(p) a fourth root of unity here
            sq = _mul(a[p - 1], a[p - 1])
            diff = (sq[0] - a[p * p - 1][0], sq[1] - a[p * p - 1][1])
            assert diff in {(p ** (k - 1), 0), (-(p ** (k - 1)), 0), (0, p ** (k - 1)), (0, -(p ** (k - 1)))}


class TestCorpus:
    @pytest.mark.parametrize("label", corpus_labels())
    def test_validates(self, label):
        report = validate(corpus_form(label))
        assert report.passed, report.violations

    def test_levels(self):
        for label, entry in CORPUS.items():
            d = corpus_form(label, 4)
            assert (d.level, d.weight) == (entry.level, entry.weight)
            assert d.coefficients[0] == (1, 0)

    def test_complex_twists(self):
        assert not corpus_form("tw.3.6.a.a.chi5", 10).is_real
        assert corpus_form("tw.5.4.a.a.-3", 10).is_real

    def test_truncation(self):
        d = corpus_form("5.4.a.a", 100)
        assert d.truncated(10).coefficients == d.coefficients[:10]
