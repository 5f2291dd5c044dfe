import math

import numpy as np
import pytest

from entroscope.derivatives import (
    BRANCH_NONSINGULAR,
    BRANCH_SINGULAR_DIVERGENT,
    BRANCH_SINGULAR_FINITE,
    DirectionPair,
    StateMatrix,
    affine_split_check,
    curvature_weight,
    curvature_weight_avg,
    curve_entropy,
    divergence_probe,
    entropy,
    first_derivative,
    hadamard_weights,
    kernel_block_partition,
    local_minimum_conditions,
    regularize,
    relative_entropy,
    second_derivative,
    second_derivative_full_rank,
    second_derivative_parts,
    weight_subadditivity_gap,
)
from entroscope.matrices import SingularLogError
from entroscope.sampling import (
    random_kernel_free_tangent,
    random_singular_state,
    random_state,
    random_tangent,
    random_unitary,
)


def unit(mat):
    mat = np.asarray(mat, dtype=complex)
    return mat / np.linalg.norm(mat)


def basis_matrix(n, m, i, j):
    out = np.zeros((n, m), dtype=complex)
    out[i, j] = 1.0
    return out


class TestStateMatrix:
    def test_norm_enforced(self):
        with pytest.raises(ValueError, match="unit Frobenius"):
            StateMatrix(np.eye(2, dtype=complex))

    def test_schmidt_cache(self):
        x = StateMatrix(unit(np.diag([2.0, 1.0])))
        assert x.probs == pytest.approx([0.8, 0.2])
        assert x.rank == 2

    def test_rank_detects_kernel(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        assert x.rank == 1


class TestDirectionPair:
    def test_invariants(self):
        rng = np.random.default_rng(0)
        x = random_state(rng, 3, 4)
        y = random_tangent(rng, x)
        pair = DirectionPair.build(x, y)
        assert abs(np.trace(pair.gamma0)) < 1e-11
        assert abs(np.trace(pair.gamma1)) < 1e-11
        embedded = np.zeros((4, 4), dtype=complex)
        embedded[:3, :4] = y
        assert np.abs(pair.w - 1j * pair.z - embedded).max() < 1e-12

    def test_rejects_non_orthogonal(self):
        x = StateMatrix(unit(np.diag([1.0, 1.0])))
        with pytest.raises(ValueError, match="orthogonal"):
            DirectionPair.build(x, x.matrix)


class TestEntropy:
    def test_rank_one_is_zero(self):
        assert entropy(StateMatrix(basis_matrix(2, 3, 0, 1))) == 0.0

    def test_uniform_schmidt(self):
        x = StateMatrix(unit(np.eye(2)))
        assert entropy(x) == pytest.approx(math.log(2))

    def test_unitary_invariance(self):
        rng = np.random.default_rng(1)
        x = random_state(rng, 4, 4, floor=0.0)
        u = random_unitary(rng, 4)
        v = random_unitary(rng, 4)
        assert entropy(StateMatrix(u @ x.matrix @ v)) == pytest.approx(entropy(x), abs=1e-12)

    def test_bounded_by_log_min_dim(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = random_state(rng, 3, 5, floor=0.0)
            assert -1e-12 <= entropy(x) <= math.log(3) + 1e-12


class TestCurveEntropy:
    def test_t_zero(self):
        rng = np.random.default_rng(3)
        x = random_state(rng, 3, 3)
        y = random_tangent(rng, x)
        assert curve_entropy(x, y, 0.0) == pytest.approx(entropy(x))

    def test_reparametrization_symmetry(self):
        rng = np.random.default_rng(4)
        x = random_state(rng, 3, 3)
        y = random_tangent(rng, x)
        for t in (0.1, 0.5, 2.0):
            assert curve_entropy(x, y, t) == pytest.approx(curve_entropy(x, -y, -t))


class TestAffineSplit:
    def test_t_zero_both_sides_equal(self):
        rng = np.random.default_rng(5)
        x = random_state(rng, 3, 3, floor=0.05)
        y = random_tangent(rng, x)
        lhs, rhs = affine_split_check(x, y, 0.0)
        assert lhs == pytest.approx(rhs)
        assert lhs == pytest.approx(entropy(x))

    def test_vanishing_quadratic_correction(self):
        # y = x W with unitary W has yy* = xx*, so the correction term is
        # zero and the gap decays at least cubically (quartic here, by the
        # t -> -t symmetry of this direction)
        p = np.array([0.7, 0.3])
        x = StateMatrix(np.diag(np.sqrt(p)).astype(complex))
        w = np.array([[0, 1], [1, 0]], dtype=complex)
        y = x.matrix @ w
        res = []
        for t in (1e-2, 5e-3):
            lhs, rhs = affine_split_check(x, y, t)
            res.append(abs(lhs - rhs))
        assert res[0] < 1e-6
        assert res[0] / res[1] >= 7.0

    def test_cubic_scaling(self):
        rng = np.random.default_rng(6)
        x = random_state(rng, 4, 4, floor=0.05)
        y = random_tangent(rng, x)
        res = []
        for t in (1e-2, 5e-3):
            lhs, rhs = affine_split_check(x, y, t)
            res.append(abs(lhs - rhs))
        assert res[0] / res[1] == pytest.approx(8.0, rel=0.25)

    def test_singular_state_rejected(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(SingularLogError):
            affine_split_check(x, basis_matrix(2, 2, 0, 1), 1e-3)


class TestFirstDerivative:
    def test_off_diagonal_direction_gives_zero(self):
        p = 0.6
        x = StateMatrix(np.diag([math.sqrt(p), math.sqrt(1 - p)]).astype(complex))
        y = unit(basis_matrix(2, 2, 0, 1) + 0.5 * basis_matrix(2, 2, 1, 0))
        assert first_derivative(x, y) == pytest.approx(0.0, abs=1e-14)

    def test_diagonal_direction_closed_form(self):
        p = 0.75
        x = StateMatrix(np.diag([math.sqrt(p), math.sqrt(1 - p)]).astype(complex))
        y = np.diag([math.sqrt(1 - p), -math.sqrt(p)]).astype(complex)
        expected = -2.0 * math.sqrt(p * (1 - p)) * math.log(p / (1 - p))
        value = first_derivative(x, y)
        assert value == pytest.approx(expected, rel=1e-12)
        # frozen from the finite-difference oracle below
        assert value == pytest.approx(-0.9514261508963, abs=1e-12)
        h = 1e-5
        fd = (curve_entropy(x, y, h) - curve_entropy(x, y, -h)) / (2 * h)
        assert value == pytest.approx(fd, rel=1e-7)

    def test_finite_difference_sweep(self):
        rng = np.random.default_rng(7)
        h = 1e-5
        for i in range(25):
            n = 2 + i % 4
            x = random_state(rng, n, n, floor=0.02)
            y = random_tangent(rng, x)
            d1 = first_derivative(x, y)
            fd = (curve_entropy(x, y, h) - curve_entropy(x, y, -h)) / (2 * h)
            assert abs(d1 - fd) / max(1.0, abs(d1)) < 1e-6

    def test_every_direction_critical_at_max_entangled(self):
        x = StateMatrix(unit(np.eye(3)))
        rng = np.random.default_rng(8)
        for _ in range(5):
            y = random_tangent(rng, x)
            assert first_derivative(x, y) == pytest.approx(0.0, abs=1e-12)
            assert first_derivative(x, 1j * y) == pytest.approx(0.0, abs=1e-12)

    def test_kernel_feeding_direction_rejected(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(SingularLogError):
            first_derivative(x, basis_matrix(2, 2, 1, 1))

    def test_masked_direction_allowed_at_singular_state(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        assert first_derivative(x, basis_matrix(2, 2, 0, 1)) == pytest.approx(0.0)


class TestSecondDerivative:
    def test_max_entangled_nonpositive(self):
        x = StateMatrix(unit(np.eye(3)))
        rng = np.random.default_rng(9)
        for _ in range(5):
            y = random_tangent(rng, x)
            parts = second_derivative_parts(x, y)
            assert parts.log_term == pytest.approx(0.0, abs=1e-12)
            assert parts.value == pytest.approx(-2.0 * parts.hadamard_term, abs=1e-12)
            assert parts.value <= 1e-12

    def test_finite_difference_sweep(self):
        rng = np.random.default_rng(10)
        h = 1e-3
        for i in range(25):
            n = 2 + i % 4
            x = random_state(rng, n, n, floor=0.02)
            y = random_tangent(rng, x)
            d2 = second_derivative_full_rank(x, y)
            fd = (curve_entropy(x, y, h) - 2 * entropy(x) + curve_entropy(x, y, -h)) / (h * h)
            assert abs(d2 - fd) / max(1.0, abs(d2)) < 1e-4

    def test_split_equivalence(self):
        rng = np.random.default_rng(11)
        for i in range(30):
            n = 2 + i % 5
            x = random_state(rng, n, n, floor=0.02)
            y = random_tangent(rng, x)
            d2 = second_derivative_full_rank(x, y)
            assert abs(d2 - second_derivative_parts(x, y).value) < 1e-10

    def test_report_invariant_on_nonsingular_branch(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            x = random_state(rng, 4, 4, floor=0.02)
            y = random_tangent(rng, x)
            rep = second_derivative(x, y)
            assert rep.branch == BRANCH_NONSINGULAR
            assert abs(rep.d2 - 2.0 * (rep.log_term - rep.hadamard_term)) < 1e-10

    def test_wide_state_uses_finite_singular_branch(self):
        rng = np.random.default_rng(13)
        x = random_state(rng, 2, 4, floor=0.05)
        y = random_tangent(rng, x)
        rep = second_derivative(x, y)
        assert rep.branch == BRANCH_SINGULAR_FINITE
        h = 1e-3
        fd = (curve_entropy(x, y, h) - 2 * entropy(x) + curve_entropy(x, y, -h)) / (h * h)
        assert abs(rep.d2 - fd) / max(1.0, abs(rep.d2)) < 1e-4


class TestCurvatureWeights:
    def test_special_values(self):
        assert curvature_weight(1.0) == 2.0
        assert curvature_weight(-1.0) == 0.0
        assert curvature_weight(2.0) == pytest.approx(3 * math.log(2))
        assert curvature_weight(2.0) == pytest.approx(2.07944, abs=1e-5)
        assert curvature_weight_avg(1.0) == 1.0
        assert curvature_weight_avg(-1.0) == 1.0
        assert curvature_weight_avg(2.0) == pytest.approx((5.0 / 6.0) * math.log(4))
        assert curvature_weight_avg(2.0) == pytest.approx(1.15525, abs=1e-5)

    def test_series_joins_closed_form(self):
        # continuity across the series cut near the removable points
        for base in (1.0, -1.0):
            inside = curvature_weight(base * (1 + 0.5e-6) if base > 0 else base - 0.5e-6)
            outside = curvature_weight(base * (1 + 2e-6) if base > 0 else base - 2e-6)
            assert abs(inside - outside) < 1e-11

    def test_inversion_symmetry_of_average(self):
        for r in (0.3, 0.9, 2.5, 7.0):
            assert curvature_weight_avg(r) == pytest.approx(curvature_weight_avg(1.0 / r), rel=1e-13)
            assert curvature_weight_avg(-r) == pytest.approx(curvature_weight_avg(r), rel=1e-13)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            curvature_weight(0.0)

    def test_weight_matrices(self):
        p = np.array([0.5, 0.3, 0.2])
        weights = hadamard_weights(p)
        assert np.allclose(np.diag(weights.plus), 2.0)
        assert np.allclose(np.diag(weights.minus), 0.0)
        assert np.allclose(np.diag(weights.avg), 1.0)
        assert np.abs(weights.avg - 0.5 * (weights.plus + weights.minus)).max() < 1e-12
        assert weights.ratios[0, 1] == pytest.approx(math.sqrt(p[0] / p[1]))

    def test_rejects_nonpositive_spectrum(self):
        with pytest.raises(ValueError):
            hadamard_weights([0.5, 0.0])


class TestAveragingIdentity:
    def test_identity_holds(self):
        rng = np.random.default_rng(14)
        for i in range(20):
            n = 2 + i % 4
            x = random_state(rng, n, n, floor=0.02)
            y = random_tangent(rng, x)
            m_y = second_derivative_parts(x, y).hadamard_term
            m_iy = second_derivative_parts(x, 1j * y).hadamard_term
            yt = x.rotate(y)
            direct = float(np.sum(np.abs(yt) ** 2 * hadamard_weights(x.probs).avg))
            assert abs(0.5 * (m_y + m_iy) - direct) < 1e-11


class TestSubadditivityGap:
    def test_equality_on_diagonal(self):
        for r in (0.2, 1.0, -3.0, 8.5):
            assert abs(weight_subadditivity_gap(r, r)) < 1e-12

    def test_unit_pair(self):
        assert weight_subadditivity_gap(1.0, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_grid_nonnegative_and_localized(self):
        mags = np.logspace(-1, 1, 40)
        values = np.concatenate([-mags[::-1], mags])
        avg = curvature_weight_avg(values)
        gaps = avg[:, None] + avg[None, :] - curvature_weight(np.outer(values, values))
        assert gaps.min() >= -1e-12
        rr, ss = np.meshgrid(values, values, indexing="ij")
        tight = gaps < 1e-6
        assert np.all(np.abs(rr - ss)[tight] < 1e-3)

    def test_rejects_zero_arguments(self):
        with pytest.raises(ValueError):
            weight_subadditivity_gap(0.0, 1.0)


class TestNecessaryConditions:
    def test_equal_gram_direction_reduces_to_unit_bound(self):
        # y with yy* = y*y = xx* makes both relative entropies vanish
        x = StateMatrix(unit(np.eye(2)))
        y = unit(np.diag([1.0, -1.0]))
        conditions = local_minimum_conditions(x, y)
        assert conditions.entropy_bound == pytest.approx(1.0, abs=1e-10)
        assert conditions.entropy_gap == pytest.approx(0.0, abs=1e-12)
        assert not conditions.entropy_holds  # the entropy maximum is no minimum

    def test_averaged_quad_between_parts(self):
        rng = np.random.default_rng(15)
        x = random_state(rng, 3, 3, floor=0.05)
        y = random_tangent(rng, x)
        conditions = local_minimum_conditions(x, y)
        mean = 0.5 * (conditions.hadamard_term + conditions.hadamard_term_rotated)
        assert conditions.averaged_quad == pytest.approx(mean, abs=1e-11)


class TestRelativeEntropy:
    def test_zero_iff_equal(self):
        rng = np.random.default_rng(16)
        x = random_state(rng, 3, 3, floor=0.05)
        rho = x.matrix @ x.matrix.conj().T
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            a = random_state(rng, 3, 3, floor=0.05)
            b = random_state(rng, 3, 3, floor=0.05)
            ra = a.matrix @ a.matrix.conj().T
            rb = b.matrix @ b.matrix.conj().T
            assert relative_entropy(ra, rb) >= -1e-12

    def test_kernel_overlap_raises(self):
        a = np.diag([0.0, 1.0]).astype(complex)
        b = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(SingularLogError):
            relative_entropy(a, b)


class TestKernelBlocks:
    def test_canonical_divergent(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        blocks = kernel_block_partition(x, basis_matrix(2, 2, 1, 1))
        assert blocks.rank == 1
        assert blocks.divergence_coefficient == pytest.approx(1.0)

    def test_canonical_finite(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        blocks = kernel_block_partition(x, basis_matrix(2, 2, 0, 1))
        assert blocks.divergence_coefficient == pytest.approx(0.0, abs=1e-20)

    def test_coefficient_invariant_under_kernel_mixing(self):
        rng = np.random.default_rng(18)
        x = random_singular_state(rng, 4, 2)
        y = random_tangent(rng, x)
        k0 = kernel_block_partition(x, y).divergence_coefficient
        # rotate x and y by unitaries acting inside the kernel block only
        w = np.eye(4, dtype=complex)
        w[2:, 2:] = random_unitary(rng, 2)
        u_full = x.left @ w @ x.left.conj().T
        v_full = x.right.conj().T @ w.conj().T @ x.right
        x2 = StateMatrix(u_full.conj().T @ x.matrix @ v_full.conj().T)
        y2 = u_full.conj().T @ y @ v_full.conj().T
        k1 = kernel_block_partition(x2, y2).divergence_coefficient
        assert k1 == pytest.approx(k0, abs=1e-12)

    def test_rotation_preserves_inner_products(self):
        rng = np.random.default_rng(19)
        x = random_singular_state(rng, 3, 2)
        y = random_tangent(rng, x)
        blocks = kernel_block_partition(x, y)
        yt = x.rotate(y)
        assert np.vdot(yt, yt).real == pytest.approx(1.0, abs=1e-12)
        assert np.abs(blocks.x_rotated - np.diag(x.schmidt)).max() < 1e-12


class TestRegularize:
    def test_entrywise_recovery(self):
        rng = np.random.default_rng(20)
        x = random_singular_state(rng, 3, 2)
        for eps in (1e-2, 1e-4, 1e-6):
            xr = regularize(x, eps)
            assert np.abs(xr.matrix - x.matrix).max() < 3 * eps

    def test_explicit_formula(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        xr = regularize(x, 0.1)
        expected = np.diag([1.0, 0.1]) / math.sqrt(1.01)
        assert np.abs(xr.matrix - expected).max() < 1e-14

    def test_entropy_limit(self):
        rng = np.random.default_rng(21)
        x = random_singular_state(rng, 4, 2)
        for eps in (1e-3, 1e-5):
            gap = abs(entropy(regularize(x, eps)) - entropy(x))
            assert gap < 6 * eps * eps * abs(math.log(eps * eps)) + 1e-14

    def test_eps_range_checked(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(ValueError):
            regularize(x, 1.5)


class TestDispatch:
    def test_canonical_divergent(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        rep = second_derivative(x, basis_matrix(2, 2, 1, 1))
        assert rep.branch == BRANCH_SINGULAR_DIVERGENT
        assert rep.is_divergent
        assert rep.d2 is None
        assert rep.d2_for_report() == math.inf

    def test_rank_one_curve_gives_zero(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        y = basis_matrix(2, 2, 0, 1)
        rep = second_derivative(x, y)
        assert rep.branch == BRANCH_SINGULAR_FINITE
        assert rep.d2 == pytest.approx(0.0, abs=1e-14)
        for t in (0.2, 0.7):
            assert curve_entropy(x, y, t) == pytest.approx(0.0, abs=1e-14)

    def test_totality_and_branch_rule(self):
        rng = np.random.default_rng(22)
        for i in range(30):
            n = 2 + i % 3
            if i % 2:
                x = random_state(rng, n, n, floor=0.02)
                y = random_tangent(rng, x)
            else:
                x = random_singular_state(rng, n + 1, n)
                y = random_tangent(rng, x) if i % 4 else random_kernel_free_tangent(rng, x)
            rep = second_derivative(x, y)
            coeff = kernel_block_partition(x, y).divergence_coefficient
            assert rep.branch in (BRANCH_NONSINGULAR, BRANCH_SINGULAR_FINITE, BRANCH_SINGULAR_DIVERGENT)
            assert rep.is_divergent == (coeff > 1e-12)

    def test_closed_form_matches_regularized_limit(self):
        rng = np.random.default_rng(23)
        for i in range(12):
            n = 2 + i % 3
            x = random_singular_state(rng, n, n - 1)
            y = random_kernel_free_tangent(rng, x)
            rep = second_derivative(x, y)
            assert rep.branch == BRANCH_SINGULAR_FINITE
            cs = []
            for eps in (1e-3, 1e-4):
                gap = abs(second_derivative(regularize(x, eps), y).d2 - rep.d2)
                cs.append(gap / (eps * abs(math.log(eps * eps))))
            assert max(cs) < 1e-2 or (1.0 / 3.0 <= cs[0] / cs[1] <= 3.0)

    def test_closed_form_matches_curve(self):
        rng = np.random.default_rng(24)
        x = random_singular_state(rng, 3, 2)
        y = random_kernel_free_tangent(rng, x)
        rep = second_derivative(x, y)
        h = 1e-3
        fd = (curve_entropy(x, y, h) - 2 * entropy(x) + curve_entropy(x, y, -h)) / (h * h)
        assert rep.d2 == pytest.approx(fd, rel=1e-3)


class TestDivergenceProbe:
    def test_unit_coefficient_slope(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        probe = divergence_probe(x, basis_matrix(2, 2, 1, 1), np.logspace(-5, -2, 13))
        assert probe.divergence_coefficient == pytest.approx(1.0)
        assert probe.predicted_slope == pytest.approx(4 * math.log(10))
        assert probe.relative_slope_error < 0.1

    def test_kernel_free_direction_has_flat_quotients(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        probe = divergence_probe(x, basis_matrix(2, 2, 0, 1), np.logspace(-5, -2, 13))
        assert abs(probe.slope_per_decade) < 1e-3
        spread = probe.quotients.max() - probe.quotients.min()
        assert spread < 1e-3

    def test_coefficient_scaling_quadruples_slope(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        slopes = {}
        for alpha in (0.3, 0.6):
            y = alpha * basis_matrix(2, 2, 1, 1) + math.sqrt(1 - alpha**2) * basis_matrix(2, 2, 0, 1)
            probe = divergence_probe(x, y, np.logspace(-5, -2, 13))
            assert probe.divergence_coefficient == pytest.approx(alpha**2)
            slopes[alpha] = probe.slope_per_decade
        assert slopes[0.6] / slopes[0.3] == pytest.approx(4.0, rel=0.15)

    def test_rejects_zero_in_grid(self):
        x = StateMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(ValueError):
            divergence_probe(x, basis_matrix(2, 2, 1, 1), [0.0, 1e-3])
