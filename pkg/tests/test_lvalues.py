import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import WEIGHT7
from oracles import QuadratureOracle
from periodpoly import lvalues
from periodpoly.corpus import corpus_form
from periodpoly.errors import (
    BudgetError,
    DomainError,
    IllConditionedError,
    MonotonicityViolation,
    PrecisionError,
)
from periodpoly.lvalues import (
    LambdaTable,
    build_lambda_table,
    functional_equation_residual,
    lambda_value,
    lambda_value_with_error,
    lemma_ratio_check,
    l_from_lambda,
    solve_root_number,
    truncation_length,
)
from periodpoly.newform import NewformDescriptor, conjugate
from periodpoly.specfun import PrecisionBudget

BUDGET_12 = PrecisionBudget(1e-12, 1e-12)


@pytest.fixture(scope="module")
def weight7():
    return corpus_form(WEIGHT7)


def _mp_tail(N, k, M, s, t0):
    """Σ_{n>M} n^{(k+1)/2}·(both weights) relative to the n = 1 term, at 30 digits."""
    with mp.workdps(30):
        c = mp.sqrt(N) / (2 * mp.pi)

        def term(n):
            x = 2 * mp.pi * n / mp.sqrt(N)
            w = (c / n) ** s * mp.gammainc(s, x * t0) + (c / n) ** (k - s) * mp.gammainc(k - s, x / t0)
            return mp.mpf(n) ** ((k + 1) / 2) * w

        head = term(1)
        total = mp.fsum(term(n) for n in range(M + 1, M + 400))
        return float(total / head)


class TestTruncationLength:
    def test_weight7(self):
        M = truncation_length(11, 7, BUDGET_12)
        assert M <= 100
        for s in (0.25, 1, 3, 3.5, 6, 6.75):
            for t0 in (0.8, 1.25):
                assert _mp_tail(11, 7, M, s, t0) <= 1e-12

    def test_level_one(self):
        M = truncation_length(1, 12, BUDGET_12)
        assert M <= 30
        for s in (1, 6, 11):
            assert _mp_tail(1, 12, M, s, 0.8) <= 1e-12

    def test_cap(self):
        with pytest.raises(BudgetError):
            truncation_length(10**6, 4, BUDGET_12, cap=10)

    def test_grows_with_level(self):
        lengths = [truncation_length(N, 6) for N in (1, 10, 100, 1000, 10000)]
        assert lengths == sorted(lengths)
        # roughly linear in √N at large N
        assert 0.8 * math.sqrt(10) < lengths[-1] / lengths[-2] < 2 * math.sqrt(10)

    def test_domain(self):
        with pytest.raises(DomainError):
            truncation_length(0, 5)
        with pytest.raises(DomainError):
            truncation_length(5, 2)


class TestLambdaValue:
    @pytest.mark.parametrize(
        "label,points",
        [
            (WEIGHT7, (3, 6, 2.7)),
            ("4.5.b.a", (1, 4, 2.5)),
            ("2.8.a.a", (4, 7, 1.3)),
            ("1.12.a.a", (6, 11)),
            ("cm.-19.9", (5, 8)),
        ],
    )
    def test_quadrature_oracle(self, label, points):
        d = corpus_form(label)
        oracle = QuadratureOracle(corpus_form(label, 4000))
        eps = solve_root_number(d).epsilon
        for s in points:
            got = lambda_value(d, s, eps)
            assert abs(got - oracle.completed_l(s)) <= 1e-9 * abs(got)

    def test_self_dual_symmetry(self, weight7):
        for x in (0.1, 0.75, 1.9):
            right = lambda_value(weight7, 3.5 + x, 1)
            left = lambda_value(conjugate(weight7), 3.5 - x, 1)
            assert right == pytest.approx(left.conjugate(), rel=1e-12)

    def test_single_coefficient_closed_form(self):
        N, k, s = 11, 7, 2.5
        M = truncation_length(N, k)
        d = NewformDescriptor.from_values("toy", N, k, "x", [1] + [0] * M)
        with mp.workdps(30):
            c = mp.sqrt(N) / (2 * mp.pi)
            x = 2 * mp.pi / mp.sqrt(N)
            expected = c**s * mp.gammainc(s, x) + c ** (k - s) * mp.gammainc(k - s, x)
        assert lambda_value(d, s, 1) == pytest.approx(float(expected), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.2, 6.8))
    def test_split_invariance(self, s):
        d = corpus_form(WEIGHT7)
        vals = [lambda_value_with_error(d, s, 1, t0) for t0 in (0.8, 1.0, 1.25)]
        err = max(e for _, e, _ in vals)
        for v, _, _ in vals[1:]:
            assert abs(v - vals[0][0]) <= 10 * err

    def test_split_invariance_complex(self):
        d = corpus_form("tw.3.6.a.a.chi5")
        eps = solve_root_number(d).epsilon
        for s in (1, 2.2, 3, 4.9):
            vals = [lambda_value_with_error(d, s, eps, t0) for t0 in (0.8, 1.0, 1.25)]
            err = max(e for _, e, _ in vals)
            assert max(abs(v - vals[0][0]) for v, _, _ in vals) <= 10 * err

    @pytest.mark.parametrize("s", [0, 7, -1, 8])
    def test_domain(self, weight7, s):
        with pytest.raises(DomainError):
            lambda_value(weight7, s, 1)

    def test_bad_epsilon(self, weight7):
        with pytest.raises(DomainError):
            lambda_value(weight7, 3, 2)

    def test_too_few_coefficients(self, weight7):
        with pytest.raises(PrecisionError):
            lambda_value(weight7.truncated(10), 3, 1)


class TestSolveRootNumber:
    def test_weight7(self, weight7):
        sol = solve_root_number(weight7.with_root_number(None))
        assert sol.method == "SOLVED"
        assert abs(sol.epsilon - 1) <= 1e-8
        assert sol.residual <= 1e-8

    def test_given(self, weight7):
        sol = solve_root_number(weight7)
        assert sol.method == "GIVEN"
        assert sol.epsilon == 1
        assert sol.residual <= 1e-12

    def test_truncated(self, weight7):
        with pytest.raises(PrecisionError):
            solve_root_number(weight7.with_root_number(None).truncated(8))

    def test_complex_form(self):
        sol = solve_root_number(corpus_form("tw.3.6.a.a.chi5"))
        assert abs(abs(sol.epsilon) - 1) < 1e-12
        assert abs(sol.epsilon.imag) > 0.1
        assert sol.delta**2 * sol.epsilon == pytest.approx(1)

    def test_minus_one(self):
        assert solve_root_number(corpus_form("1.18.a.a")).epsilon == pytest.approx(-1, abs=1e-10)

    def test_ill_conditioned(self, weight7, monkeypatch):
        monkeypatch.setattr(lvalues, "_SOLVE_SPLITS", (1.0, 1.0, 0.8))
        with pytest.raises(IllConditionedError):
            solve_root_number(weight7.with_root_number(None))


class TestLambdaTable:
    def test_l_lambda_relation(self, weight7_table):
        N = weight7_table.level
        for j in range(1, weight7_table.weight):
            lam, L = weight7_table.values[j]
            assert L == pytest.approx(lam * (2 * math.pi / math.sqrt(N)) ** j / math.gamma(j), rel=1e-14)
            assert l_from_lambda(lam, j, N) == L

    def test_weight3_moduli(self, corpus_tables):
        for label in ("7.3.b.a", "cm.-8.3", "tw.7.3.b.a.chi5"):
            t = corpus_tables[label]
            assert abs(t.Lambda(1)) == pytest.approx(abs(t.Lambda(2)), rel=1e-12)

    def test_quadrature_at_top(self):
        d = corpus_form("3.6.a.a")
        t = build_lambda_table(d)
        oracle = QuadratureOracle(corpus_form("3.6.a.a", 4000))
        assert t.Lambda(5) == pytest.approx(oracle.completed_l(5), rel=1e-9)

    def test_fe_residual(self, corpus_tables):
        for t in corpus_tables.values():
            assert t.fe_residual <= 1e-10

    def test_wrong_root_number_rejected(self, weight7):
        with pytest.raises(PrecisionError):
            build_lambda_table(weight7, epsilon=-1)

    def test_monotonicity_violation(self, weight7, monkeypatch):
        real = lvalues.lambda_value_with_error

        def shrinking(d, s, eps, t0=1.0, budget=lvalues.DEFAULT_BUDGET):
            v, e, m = real(d, s, eps, t0, budget)
            return v / s**40, e / s**40, m

        monkeypatch.setattr(lvalues, "lambda_value_with_error", shrinking)
        with pytest.raises(MonotonicityViolation):
            lvalues._check_monotone(weight7, 1, lvalues.DEFAULT_BUDGET)

    def test_synthetic_constructors(self):
        lam = [1 + 1j, 2, 1 - 1j]
        t = LambdaTable.from_lambdas(5, 4, 1, lam)
        assert t.Lambda(2) == 2
        assert functional_equation_residual(t) == pytest.approx(0)
        L = [t.L(j) for j in range(1, 4)]
        t2 = LambdaTable.from_l_values(5, 4, 1, L)
        for a, b in zip(t2.lambdas, t.lambdas):
            assert a == pytest.approx(b, rel=1e-14)
        with pytest.raises(DomainError):
            LambdaTable.from_lambdas(5, 4, 1, [1, 2])

    def test_scaled(self, weight7_table):
        s = weight7_table.scaled(3j)
        assert s.Lambda(2) == pytest.approx(3j * weight7_table.Lambda(2))
        assert s.errors[0] == pytest.approx(3 * weight7_table.errors[0])


class TestLemmaRatio:
    def test_weight7(self, weight7_table):
        r = lemma_ratio_check(weight7_table, 0.5, 1.5)
        assert r.holds and r.lhs <= r.rhs

    def test_rhs_value(self, weight7_table):
        r = lemma_ratio_check(weight7_table, 0.4, 1)
        expected = float(mp.zeta(1.4) ** 2 / mp.zeta(2) ** 2 - 1)
        assert r.rhs == pytest.approx(expected, rel=1e-12)

    def test_equal_arguments(self, weight7_table):
        r = lemma_ratio_check(weight7_table, 1.0, 1.0)
        assert r.lhs == 0 and r.rhs == 0 and r.holds

    def test_shrinking_gap(self, weight7_table):
        gaps = [lemma_ratio_check(weight7_table, 0.7, 0.7 + h) for h in (0.5, 0.1, 0.01)]
        assert [g.lhs for g in gaps] == sorted((g.lhs for g in gaps), reverse=True)
        assert gaps[-1].rhs < 0.05

    def test_domain(self, weight7_table):
        with pytest.raises(DomainError):
            lemma_ratio_check(weight7_table, 1.0, 0.5)
