"""Unit tests for the linear-algebra primitives."""

import unittest

import numpy as np

from orthoris.errors import DegenerateProjectionError
from orthoris.matcore import (
    SelectorKind,
    commutation_matrix,
    condition_number,
    condition_number_db,
    crandn,
    frobenius_norm,
    haar_semi_unitary,
    kron,
    numeric_rank,
    pinv,
    selector,
    selector_pairs,
    semi_unitary_defect,
    spectral_norm,
    stiefel_project,
    top_identity,
    unvec,
    vec,
)


class TestVectorization(unittest.TestCase):
    """Tests for vec/unvec and the Kronecker identity."""

    def setUp(self):
        self.rng = np.random.default_rng(1)

    def test_vec_is_column_major(self):
        """Test that vec stacks columns."""
        A = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(vec(A), [1, 3, 2, 4])

    def test_unvec_inverts_vec(self):
        """Test unvec folds back to the original shape."""
        A = crandn(self.rng, 3, 5)
        np.testing.assert_array_equal(unvec(vec(A), 3, 5), A)

    def test_unvec_rejects_wrong_length(self):
        """Test unvec raises for a length that does not match m*n."""
        with self.assertRaises(ValueError):
            unvec(np.zeros(7), 2, 4)

    def test_kron_identity(self):
        """Test vec(A X B) == kron(B.T, A) vec(X)."""
        A = crandn(self.rng, 4, 3)
        X = crandn(self.rng, 3, 3)
        B = crandn(self.rng, 3, 2)
        np.testing.assert_allclose(kron(B.T, A) @ vec(X), vec(A @ X @ B), atol=1e-12)


class TestSelectors(unittest.TestCase):
    """Tests for the commutation and selector matrices."""

    def test_commutation_transposes(self):
        """Test K vec(A) == vec(A.T) for several sizes."""
        rng = np.random.default_rng(2)
        for N in (1, 2, 3, 5):
            A = crandn(rng, N, N)
            np.testing.assert_array_equal(commutation_matrix(N) @ vec(A), vec(A.T))

    def test_commutation_is_involution(self):
        """Test K K == I."""
        K = commutation_matrix(4)
        np.testing.assert_array_equal(K @ K, np.eye(16))

    def test_selector_widths(self):
        """Test selector column counts for each kind."""
        self.assertEqual(selector(SelectorKind.DIAGONAL, 4).matrix.shape, (16, 4))
        self.assertEqual(selector(SelectorKind.UPPER, 4).matrix.shape, (16, 10))
        self.assertEqual(selector(SelectorKind.LOWER, 4).matrix.shape, (16, 10))

    def test_lower_is_commuted_upper(self):
        """Test Z_L == K Z_U."""
        N = 4
        Z_U = selector("upper", N).matrix
        Z_L = selector("lower", N).matrix
        np.testing.assert_array_equal(Z_L, commutation_matrix(N) @ Z_U)

    def test_upper_columns_follow_vec_order(self):
        """Test upper selector positions increase."""
        positions = selector("upper", 5).positions
        self.assertTrue(np.all(np.diff(positions) > 0))

    def test_upper_pairs(self):
        """Test the entries addressed by the upper selector for N=3."""
        self.assertEqual(
            selector_pairs("upper", 3),
            [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)],
        )

    def test_diagonal_pads_zeros(self):
        """Test unvec(Z_D x) is diag(x)."""
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(unvec(selector("diagonal", 3).matrix @ x, 3, 3), np.diag(x))

    def test_invalid_size(self):
        """Test N < 1 is rejected."""
        with self.assertRaises(ValueError):
            selector("diagonal", 0)
        with self.assertRaises(ValueError):
            commutation_matrix(0)


class TestPseudoinverse(unittest.TestCase):
    """Tests for pinv and numeric_rank."""

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_wide_right_inverse(self):
        """Test A pinv(A) == I for a full-row-rank wide matrix."""
        A = crandn(self.rng, 4, 9)
        np.testing.assert_allclose(A @ pinv(A), np.eye(4), atol=1e-10)

    def test_penrose_conditions_on_rank_deficient(self):
        """Test A A+ A == A for a rank-2 matrix."""
        A = crandn(self.rng, 5, 2) @ crandn(self.rng, 2, 6)
        P = pinv(A)
        np.testing.assert_allclose(A @ P @ A, A, atol=1e-10)
        np.testing.assert_allclose(P @ A @ P, P, atol=1e-10)
        self.assertEqual(numeric_rank(A), 2)

    def test_zero_matrix(self):
        """Test the pseudoinverse of zero is zero with transposed shape."""
        P = pinv(np.zeros((3, 5)))
        self.assertEqual(P.shape, (5, 3))
        self.assertFalse(np.any(P))
        self.assertEqual(numeric_rank(np.zeros((3, 5))), 0)


class TestNorms(unittest.TestCase):
    """Tests for spectral norm and condition number."""

    def setUp(self):
        self.rng = np.random.default_rng(4)

    def test_spectral_norm_small(self):
        """Test spectral norm against the SVD."""
        A = crandn(self.rng, 6, 3)
        self.assertAlmostEqual(spectral_norm(A), np.linalg.svd(A, compute_uv=False)[0], places=12)

    def test_spectral_norm_power_iteration(self):
        """Test the power-iteration path on a large matrix."""
        A = crandn(self.rng, 100, 80)
        expected = np.linalg.svd(A, compute_uv=False)[0]
        self.assertAlmostEqual(spectral_norm(A) / expected, 1.0, places=6)

    def test_norm_sandwich(self):
        """Test spectral <= Frobenius <= sqrt(rank) spectral on varied matrices."""
        low_rank = crandn(self.rng, 7, 2) @ crandn(self.rng, 2, 9)
        matrices = [
            crandn(self.rng, 6, 3),
            crandn(self.rng, 100, 80),
            low_rank,
            2.0 * haar_semi_unitary(5, 3, self.rng),
            np.diag([3.0, 1e-3, 0.0]),
        ]
        for A in matrices:
            spectral, frob = spectral_norm(A), frobenius_norm(A)
            self.assertLessEqual(spectral, frob * (1.0 + 1e-12))
            self.assertLessEqual(frob, np.sqrt(numeric_rank(A)) * spectral * (1.0 + 1e-6))

    def test_condition_of_semi_unitary(self):
        """Test a scaled semi-unitary matrix has condition number one."""
        U = 3.0 * haar_semi_unitary(5, 3, self.rng)
        self.assertAlmostEqual(condition_number(U), 1.0, places=10)
        self.assertAlmostEqual(condition_number_db(U), 0.0, places=8)

    def test_condition_of_singular(self):
        """Test a rank-deficient matrix has infinite condition number."""
        self.assertEqual(condition_number(np.array([[1.0, 0.0], [0.0, 0.0]])), float("inf"))


class TestStiefel(unittest.TestCase):
    """Tests for Stiefel projection and related helpers."""

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_projection_is_semi_unitary(self):
        """Test the projection has orthonormal columns."""
        U = stiefel_project(crandn(self.rng, 6, 3))
        self.assertLess(semi_unitary_defect(U), 1e-12)

    def test_projection_fixes_semi_unitary(self):
        """Test a semi-unitary input is returned unchanged."""
        U = haar_semi_unitary(4, 2, self.rng)
        np.testing.assert_allclose(stiefel_project(U), U, atol=1e-12)

    def test_projection_rejects_wide(self):
        """Test more columns than rows raises."""
        with self.assertRaises(ValueError):
            stiefel_project(crandn(self.rng, 2, 3))

    def test_projection_rejects_rank_deficient(self):
        """Test a rank-deficient input raises."""
        A = np.zeros((4, 2), dtype=complex)
        A[0, 0] = 1.0
        with self.assertRaises(DegenerateProjectionError):
            stiefel_project(A)

    def test_top_identity(self):
        """Test the top block is the identity."""
        U = top_identity(4, 2)
        np.testing.assert_array_equal(U[:2], np.eye(2))
        self.assertFalse(np.any(U[2:]))

    def test_crandn_power(self):
        """Test crandn matches the requested average power."""
        x = crandn(self.rng, 200000, power=2.0)
        self.assertAlmostEqual(float(np.mean(np.abs(x) ** 2)), 2.0, delta=0.03)


if __name__ == "__main__":
    unittest.main()
