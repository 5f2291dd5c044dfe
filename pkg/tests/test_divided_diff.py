import itertools
import math

import numpy as np
import pytest

from entroscope.divdiff import (
    NEG_T_LOG_T,
    DomainError,
    ScalarFunction,
    divided_diff1,
    divided_diff2,
    expand,
    perturbation_linear,
    perturbation_quadratic,
    perturbation_quadratic_trace,
    perturbation_terms,
)

SQUARE = ScalarFunction(f=lambda t: t * t, df=lambda t: 2 * t, d2f=lambda t: 2.0, name="t^2")
CUBE = ScalarFunction(f=lambda t: t**3, df=lambda t: 3 * t * t, d2f=lambda t: 6 * t, name="t^3")


def monomial(m):
    return ScalarFunction(
        f=lambda t: t**m,
        df=lambda t: m * t ** (m - 1),
        d2f=lambda t: m * (m - 1) * t ** (m - 2),
        name=f"t^{m}",
    )


class TestFirstDividedDiff:
    def test_square_is_sum(self):
        assert divided_diff1(SQUARE, 1.0, 3.0) == pytest.approx(4.0)

    def test_confluent_matches_derivative(self):
        for a in (0.2, 0.5, 0.9):
            assert divided_diff1(NEG_T_LOG_T, a, a) == pytest.approx(-1.0 - math.log(a))

    def test_against_direct_evaluation(self):
        g = NEG_T_LOG_T
        expected = (g.f(0.2) - g.f(0.7)) / (0.2 - 0.7)
        assert divided_diff1(g, 0.2, 0.7) == pytest.approx(expected, rel=1e-14)

    def test_symmetry(self):
        assert divided_diff1(CUBE, 0.3, 1.1) == divided_diff1(CUBE, 1.1, 0.3)

    def test_domain_violation(self):
        with pytest.raises(DomainError):
            divided_diff1(NEG_T_LOG_T, -1.0, 0.5)


class TestSecondDividedDiff:
    def test_square_is_constant_one(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a, b, c = rng.uniform(0.1, 2.0, 3)
            assert divided_diff2(SQUARE, a, b, c) == pytest.approx(1.0)

    def test_triple_point_half_second_derivative(self):
        for x in (0.3, 1.0, 2.5):
            assert divided_diff2(CUBE, x, x, x) == pytest.approx(3.0 * x)

    def test_monomial_power_sum(self):
        rng = np.random.default_rng(1)
        for m in range(2, 7):
            fn = monomial(m)
            a, b, c = rng.uniform(0.3, 1.5, 3)
            expected = sum(
                a**p * b**q * c**r
                for p in range(m - 1)
                for q in range(m - 1 - p)
                for r in [m - 2 - p - q]
            )
            assert divided_diff2(fn, a, b, c) == pytest.approx(expected, rel=1e-11)

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            pts = rng.uniform(0.05, 0.95, 3)
            vals = [divided_diff2(NEG_T_LOG_T, *perm) for perm in itertools.permutations(pts)]
            assert max(vals) - min(vals) < 1e-12

    def test_pair_confluence_limit(self):
        a, c = 0.4, 0.8
        base = divided_diff2(NEG_T_LOG_T, a, a, c)
        errs = [abs(divided_diff2(NEG_T_LOG_T, a, a + h, c) - base) for h in (1e-4, 1e-5)]
        assert errs[0] < 1e-3
        assert errs[1] < 1e-4

    def test_full_confluence_limit(self):
        a = 0.6
        base = divided_diff2(NEG_T_LOG_T, a, a, a)
        for h in (1e-4, 1e-5):
            assert abs(divided_diff2(NEG_T_LOG_T, a, a, a + h) - base) < 10 * h


class TestExpansionTerms:
    def test_linear_identity_function(self):
        ident = ScalarFunction(f=lambda t: t, df=lambda t: 1.0, d2f=lambda t: 0.0)
        rng = np.random.default_rng(3)
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        out = perturbation_linear(ident, rng.uniform(0.1, 1.0, 4), b)
        assert np.allclose(out, b)

    def test_linear_diagonal_direction(self):
        # diagonal B picks up the plain derivative on the diagonal
        a = np.array([0.2, 0.5, 0.9])
        b = np.diag([1.0, 2.0, -1.0]).astype(complex)
        out = perturbation_linear(NEG_T_LOG_T, a, b)
        expected = np.diag([NEG_T_LOG_T.df(ai) * b[i, i] for i, ai in enumerate(a)])
        assert np.allclose(out, expected)

    def test_quadratic_of_square_is_b_squared(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(0.1, 1.0, 5)
        b = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        assert np.allclose(perturbation_quadratic(SQUARE, a, b), b @ b, atol=1e-12)

    def test_monomial_power_sums(self):
        rng = np.random.default_rng(5)
        n = 5
        for m in range(2, 9):
            fn = monomial(m)
            a = np.sort(rng.uniform(0.2, 1.0, n))
            while np.diff(a).min() < 0.04:
                a = np.sort(rng.uniform(0.2, 1.0, n))
            b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            b /= np.linalg.norm(b)
            amat = np.diag(a).astype(complex)
            lin = sum(
                np.linalg.matrix_power(amat, p) @ b @ np.linalg.matrix_power(amat, m - 1 - p)
                for p in range(m)
            )
            quad = sum(
                np.linalg.matrix_power(amat, p) @ b
                @ np.linalg.matrix_power(amat, q) @ b
                @ np.linalg.matrix_power(amat, m - 2 - p - q)
                for p in range(m - 1)
                for q in range(m - 1 - p)
            )
            assert np.abs(perturbation_linear(fn, a, b) - lin).max() < 1e-12
            assert np.abs(perturbation_quadratic(fn, a, b) - quad).max() < 1e-12

    def test_linear_trace_rule(self):
        rng = np.random.default_rng(6)
        a = rng.uniform(0.1, 1.0, 4)
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        tr = np.trace(perturbation_linear(NEG_T_LOG_T, a, b))
        expected = sum(NEG_T_LOG_T.df(ai) * b[i, i] for i, ai in enumerate(a))
        assert tr == pytest.approx(expected)


class TestQuadraticTrace:
    def test_zero_direction(self):
        assert perturbation_quadratic_trace(NEG_T_LOG_T, [0.3, 0.7], np.zeros((2, 2))) == 0.0

    def test_fully_confluent(self):
        p = 0.5
        b = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        out = perturbation_quadratic_trace(NEG_T_LOG_T, [p, p], b)
        expected = 0.5 * NEG_T_LOG_T.d2f(p) * np.sum(np.abs(b) ** 2)
        assert out == pytest.approx(expected)

    def test_matches_trace_of_quadratic(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = rng.uniform(0.1, 1.0, 5)
            z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            b = 0.5 * (z + z.conj().T)
            direct = np.trace(perturbation_quadratic(NEG_T_LOG_T, a, b)).real
            assert perturbation_quadratic_trace(NEG_T_LOG_T, a, b) == pytest.approx(direct, abs=1e-11)

    def test_requires_hermitian(self):
        with pytest.raises(ValueError):
            perturbation_quadratic_trace(NEG_T_LOG_T, [0.4, 0.6], np.array([[0, 1], [0, 0]], dtype=complex))


class TestAssembledExpansion:
    def test_t_zero_returns_zeroth_term(self):
        rng = np.random.default_rng(8)
        a = rng.uniform(0.1, 1.0, 3)
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        out = expand(NEG_T_LOG_T, a, b, 0.0)
        assert np.allclose(out, np.diag([NEG_T_LOG_T.f(ai) for ai in a]))

    def test_quadratic_function_is_exact(self):
        rng = np.random.default_rng(9)
        a = rng.uniform(0.1, 1.0, 4)
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = 0.5 * (z + z.conj().T)
        for t in (0.1, 0.7, 2.0):
            direct = np.diag(a) @ np.diag(a) + t * (np.diag(a) @ b + b @ np.diag(a)) + t * t * (b @ b)
            assert np.abs(expand(SQUARE, a, b, t) - direct).max() < 1e-12

    def test_residual_is_cubic(self):
        from entroscope.matrices import herm_eig

        rng = np.random.default_rng(10)
        a = np.array([0.6, 0.3, 0.1])
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = 0.5 * (z + z.conj().T)
        b -= (np.trace(b).real / 3) * np.eye(3)
        terms = perturbation_terms(NEG_T_LOG_T, a, b)
        residuals = []
        for t in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
            dec = herm_eig(np.diag(a) + t * b)
            direct = (dec.basis * (-dec.eigenvalues * np.log(dec.eigenvalues))) @ dec.basis.conj().T
            residuals.append(np.linalg.norm(direct - terms.at(t)))
        ratios = [residuals[i] / residuals[i + 1] for i in range(3)]
        assert all(5.0 < r < 11.0 for r in ratios)

    def test_domain_guard_on_shifted_spectrum(self):
        b = -np.eye(2)
        with pytest.raises(DomainError):
            expand(NEG_T_LOG_T, [0.5, 0.5], b, 0.6)
