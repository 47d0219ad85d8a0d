import math

import numpy as np
import pytest

from invman.errors import RankDeficiencyError, ShapeError, SingularMatrixError
from invman.linalg import (
    frobenius,
    invert,
    matmul,
    rank,
    right_pseudoinverse,
    right_pseudoinverse_derivative,
    stacked_pseudoinverse,
)

from helpers import fd_matrix_derivative, random_well_conditioned_stack, triple_loop_matmul


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matmul(np.eye(2), a), a)

    def test_column_swap(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(matmul(a, swap), [[2.0, 1.0], [4.0, 3.0]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4))
        np.testing.assert_allclose(matmul(a, b), triple_loop_matmul(a, b), atol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(np.eye(2), np.eye(3))


class TestInvert:
    def test_identity(self):
        np.testing.assert_array_equal(invert(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(invert(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_rotation_inverse_is_transpose(self):
        theta = 0.8
        r = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        np.testing.assert_allclose(invert(r), r.T, atol=1e-13)

    def test_residual_scaled(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.standard_normal((5, 5)) + 2.0 * np.eye(5)
            resid = frobenius(a @ invert(a) - np.eye(5))
            assert resid <= 1e-10 * np.linalg.cond(a)

    def test_singular(self):
        with pytest.raises(SingularMatrixError, match="singular"):
            invert(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_zero_matrix(self):
        with pytest.raises(SingularMatrixError):
            invert(np.zeros((2, 2)))

    def test_not_square(self):
        with pytest.raises(ShapeError):
            invert(np.ones((2, 3)))


class TestRank:
    def test_zero(self):
        assert rank(np.zeros((3, 4))) == 0

    def test_identity(self):
        for m in (1, 3, 6):
            assert rank(np.eye(m)) == m

    def test_projector_rank_equals_trace(self):
        # rank of an exact projector equals its trace
        t = 0.3
        chart = np.array([[math.cos(t), math.sin(t)]])
        proj = right_pseudoinverse(chart) @ chart
        assert rank(proj) == round(np.trace(proj)) == 1

    def test_rectangular(self):
        a = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        assert rank(a) == 1

    def test_tolerance_knob(self):
        a = np.diag([1.0, 1e-6])
        assert rank(a, tol=1e-9) == 2
        assert rank(a, tol=1e-3) == 1

    def test_requires_positive_tol(self):
        with pytest.raises(ValueError):
            rank(np.eye(2), tol=0.0)


class TestStackedPseudoinverse:
    def test_identity_stack(self):
        pair = stacked_pseudoinverse(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        np.testing.assert_array_equal(pair.top_pinv, [[1.0], [0.0]])
        np.testing.assert_array_equal(pair.bottom_pinv, [[0.0], [1.0]])

    def test_orthonormal_rows_give_transpose(self):
        t = 0.5
        top = np.array([[math.cos(t), math.sin(t)]])
        bottom = np.array([[-math.sin(t), math.cos(t)]])
        pair = stacked_pseudoinverse(top, bottom)
        np.testing.assert_allclose(pair.top_pinv, top.T, atol=1e-13)
        np.testing.assert_allclose(pair.bottom_pinv, bottom.T, atol=1e-13)
        stacked = np.vstack([top, bottom])
        inv = np.hstack([pair.top_pinv, pair.bottom_pinv])
        assert frobenius(stacked @ inv - np.eye(2)) <= 1e-13

    def test_shear_stack_hand_inverse(self):
        # [[1,1],[0,1]] inverts to [[1,-1],[0,1]] by hand
        top = np.array([[1.0, 1.0]])
        bottom = np.array([[0.0, 1.0]])
        pair = stacked_pseudoinverse(top, bottom)
        np.testing.assert_allclose(pair.top_pinv, [[1.0], [0.0]], atol=1e-15)
        np.testing.assert_allclose(pair.bottom_pinv, [[-1.0], [1.0]], atol=1e-15)
        # all four block identities
        np.testing.assert_allclose(top @ pair.top_pinv, [[1.0]], atol=1e-15)
        np.testing.assert_allclose(bottom @ pair.bottom_pinv, [[1.0]], atol=1e-15)
        np.testing.assert_allclose(top @ pair.bottom_pinv, [[0.0]], atol=1e-15)
        np.testing.assert_allclose(bottom @ pair.top_pinv, [[0.0]], atol=1e-15)

    def test_singular_stack_names_condition(self):
        with pytest.raises(SingularMatrixError, match="determinant"):
            stacked_pseudoinverse(np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]]))

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            stacked_pseudoinverse(np.ones((1, 3)), np.ones((1, 3)))
        with pytest.raises(ShapeError):
            stacked_pseudoinverse(np.ones((1, 2)), np.ones((1, 3)))

    def test_pair_identity_residual_property(self):
        # stacked inverse identity within 1e-11 * m on well-conditioned stacks
        rng = np.random.default_rng(42)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            n = int(rng.integers(1, m))
            top, bottom = random_well_conditioned_stack(rng, m, n)
            stacked = np.vstack([top, bottom])
            if np.linalg.cond(stacked) > 1e6:
                continue
            pair = stacked_pseudoinverse(top, bottom)
            inv = np.hstack([pair.top_pinv, pair.bottom_pinv])
            assert frobenius(stacked @ inv - np.eye(m)) <= 1e-11 * m


class TestRightPseudoinverse:
    def test_unit_row(self):
        np.testing.assert_array_equal(right_pseudoinverse(np.array([[1.0, 0.0]])), [[1.0], [0.0]])

    def test_rotating_unit_row_is_transpose(self):
        for t in np.linspace(-3.0, 3.0, 13):
            chart = np.array([[math.cos(t), math.sin(t)]])
            pinv = right_pseudoinverse(chart)
            np.testing.assert_allclose(pinv, chart.T, atol=1e-14)
            np.testing.assert_allclose(chart @ pinv, [[1.0]], atol=1e-14)

    def test_scaling(self):
        np.testing.assert_allclose(
            right_pseudoinverse(np.array([[2.0, 0.0, 0.0]])), [[0.5], [0.0], [0.0]]
        )

    def test_rank_deficient(self):
        with pytest.raises(RankDeficiencyError):
            right_pseudoinverse(np.array([[1.0, 0.0], [2.0, 0.0]]))

    def test_right_inverse_property(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            n = int(rng.integers(1, m))
            mat = rng.standard_normal((n, m))
            pinv = right_pseudoinverse(mat)
            assert frobenius(mat @ pinv - np.eye(n)) <= 1e-11
            assert rank(pinv) == n

    def test_matches_stacked_for_orthogonal_complement(self):
        # when the bottom block spans the orthogonal complement of the top's
        # rows, both pseudoinverse routes give the same right inverse
        rng = np.random.default_rng(9)
        for _ in range(20):
            m = int(rng.integers(2, 7))
            n = int(rng.integers(1, m))
            top = rng.standard_normal((n, m))
            # SVD-based orthogonal complement oracle
            _, _, vt = np.linalg.svd(top)
            bottom = vt[n:]
            pair = stacked_pseudoinverse(top, bottom)
            np.testing.assert_allclose(pair.top_pinv, right_pseudoinverse(top), atol=1e-10)


class TestRightPseudoinverseDerivative:
    def test_constant_chart(self):
        mat = np.array([[1.0, 2.0, 0.0]])
        np.testing.assert_array_equal(
            right_pseudoinverse_derivative(mat, np.zeros_like(mat)), np.zeros((3, 1))
        )

    def test_rotating_row_hand_value(self):
        # pinv of [cos t, sin t] is its transpose; derivative at 0 is (0, 1)^T
        mat = np.array([[1.0, 0.0]])
        dmat = np.array([[0.0, 1.0]])
        dpinv = right_pseudoinverse_derivative(mat, dmat)
        np.testing.assert_allclose(dpinv, [[0.0], [1.0]], atol=1e-15)

        def pinv_at(t):
            return right_pseudoinverse(np.array([[math.cos(t), math.sin(t)]]))

        fd = fd_matrix_derivative(pinv_at, 0.0, h=1e-6)
        np.testing.assert_allclose(dpinv, fd, atol=1e-9)

    def test_polynomial_chart_against_fd(self):
        rng = np.random.default_rng(17)
        coeff0 = rng.standard_normal((2, 4))
        coeff1 = 0.3 * rng.standard_normal((2, 4))
        coeff2 = 0.1 * rng.standard_normal((2, 4))

        def chart_at(t):
            return coeff0 + coeff1 * t + coeff2 * t * t

        def dchart_at(t):
            return coeff1 + 2.0 * coeff2 * t

        for t in rng.uniform(-2.0, 2.0, size=20):
            sym = right_pseudoinverse_derivative(chart_at(t), dchart_at(t))
            fd = fd_matrix_derivative(lambda x: right_pseudoinverse(chart_at(x)), t, h=1e-6)
            np.testing.assert_allclose(sym, fd, atol=1e-7)
