"""Unit tests for the closed-form channel solvers."""

import unittest

import numpy as np

from orthoris.errors import InfeasibleError
from orthoris.matcore import crandn, unvec, vec
from orthoris.rs_models import RsKind
from orthoris.solvers import (
    ChannelTriple,
    EffectiveMap,
    build_effective_map,
    min_elements,
    rank_feasible,
    solve,
    solve_fris_compact,
)


def random_triple(rng, M, K, N, blocked=False):
    H0 = np.zeros((M, K)) if blocked else crandn(rng, M, K)
    return ChannelTriple(H0=H0, H1=crandn(rng, M, N), H2=crandn(rng, N, K))


class TestChannelTriple(unittest.TestCase):
    """Tests for ChannelTriple validation."""

    def test_shapes(self):
        """Test dimension properties."""
        channels = random_triple(np.random.default_rng(0), 4, 2, 6)
        self.assertEqual((channels.M, channels.K, channels.N), (4, 2, 6))

    def test_mismatched_shapes(self):
        """Test inconsistent shapes raise."""
        rng = np.random.default_rng(0)
        with self.assertRaises(ValueError):
            ChannelTriple(H0=crandn(rng, 4, 2), H1=crandn(rng, 3, 5), H2=crandn(rng, 5, 2))
        with self.assertRaises(ValueError):
            ChannelTriple(H0=crandn(rng, 4, 2), H1=crandn(rng, 4, 5), H2=crandn(rng, 4, 2))

    def test_non_finite(self):
        """Test NaN entries raise."""
        rng = np.random.default_rng(0)
        H0 = crandn(rng, 2, 2)
        H0[0, 0] = np.nan
        with self.assertRaises(ValueError):
            ChannelTriple(H0=H0, H1=crandn(rng, 2, 2), H2=crandn(rng, 2, 2))


class TestMinElements(unittest.TestCase):
    """Tests for the minimum surface sizes."""

    def test_values(self):
        """Test the minimum N per kind for M=4, K=2."""
        self.assertEqual(min_elements("aris", 4, 2), 8)
        self.assertEqual(min_elements("bdris", 4, 2), 5)
        self.assertEqual(min_elements("fris", 4, 2), 4)

    def test_ris_unsupported(self):
        """Test RIS has no closed-form solver."""
        with self.assertRaises(ValueError):
            min_elements("ris", 4, 2)


class TestEffectiveMap(unittest.TestCase):
    """Tests for effective map construction."""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_shapes(self):
        """Test matrix and lift shapes per kind."""
        M, K, N = 3, 2, 4
        H1, H2 = crandn(self.rng, M, N), crandn(self.rng, N, K)
        for kind, d in ((RsKind.ARIS, N), (RsKind.BDRIS, N * (N + 1) // 2), (RsKind.FRIS, N * N)):
            emap = build_effective_map(kind, H1, H2)
            self.assertEqual(emap.matrix.shape, (M * K, d))
            self.assertEqual(emap.lift.shape, (N * N, M * K))

    def test_bdris_matrix_columns(self):
        """Test BD-RIS columns are the cascaded response of symmetric unit updates."""
        M, K, N = 2, 2, 3
        H1, H2 = crandn(self.rng, M, N), crandn(self.rng, N, K)
        emap = build_effective_map("bdris", H1, H2)
        # Column 0 is entry (0, 0); its symmetric update is doubled
        E = np.zeros((N, N))
        E[0, 0] = 2.0
        np.testing.assert_allclose(emap.matrix[:, 0], vec(H1 @ E @ H2), atol=1e-12)
        # Column 1 is entry (0, 1)
        E = np.zeros((N, N))
        E[0, 1] = E[1, 0] = 1.0
        np.testing.assert_allclose(emap.matrix[:, 1], vec(H1 @ E @ H2), atol=1e-12)

    def test_rank_at_minimum(self):
        """Test generic channels are rank-feasible at the minimum N and not below."""
        M, K = 4, 2
        for kind in ("aris", "bdris"):
            N = min_elements(kind, M, K)
            self.assertTrue(rank_feasible(kind, crandn(self.rng, M, N), crandn(self.rng, N, K)))
            self.assertFalse(rank_feasible(kind, crandn(self.rng, M, N - 1), crandn(self.rng, N - 1, K)))

    def test_from_matrix_shape_check(self):
        """Test a mis-shaped estimated matrix is rejected."""
        with self.assertRaises(ValueError):
            EffectiveMap.from_matrix("aris", 4, 2, 2, np.zeros((4, 3)))

    def test_restricted(self):
        """Test restricting keeps the chosen columns."""
        M, K, N = 2, 2, 4
        emap = build_effective_map("aris", crandn(self.rng, M, N), crandn(self.rng, N, K))
        sub = emap.restricted([0, 2])
        self.assertEqual(sub.columns, (0, 2))
        np.testing.assert_array_equal(sub.matrix, emap.matrix[:, [0, 2]])


class TestSolve(unittest.TestCase):
    """Tests for solve()."""

    def setUp(self):
        self.rng = np.random.default_rng(12)

    def test_exact_at_minimum(self):
        """Test each solvable kind hits an arbitrary target with its own structure."""
        M, K = 4, 2
        for kind in ("aris", "bdris", "fris"):
            N = min_elements(kind, M, K)
            channels = random_triple(self.rng, M, K, N)
            target = crandn(self.rng, M, K)
            report = solve(kind, channels, target)
            self.assertTrue(report.rank_feasible)
            self.assertLess(report.residual, 1e-8 * np.linalg.norm(target))
            if kind == "bdris":
                self.assertLess(report.constraint.symmetry_defect, 1e-9)
            if kind == "aris":
                self.assertLess(report.constraint.diagonality_defect, 1e-12)

    def test_infeasible_least_squares(self):
        """Test a rank-infeasible map returns a least-squares answer flagged as such."""
        M, K = 4, 2
        channels = random_triple(self.rng, M, K, 3)
        report = solve("aris", channels, crandn(self.rng, M, K))
        self.assertFalse(report.rank_feasible)
        self.assertGreater(report.residual, 0.0)

    def test_target_shape(self):
        """Test mismatched target shapes raise."""
        channels = random_triple(self.rng, 4, 2, 4)
        with self.assertRaises(ValueError):
            solve("fris", channels, np.zeros((2, 4)))

    def test_fris_compact_matches(self):
        """Test the compact FRIS solve reaches the target."""
        channels = random_triple(self.rng, 3, 2, 5)
        target = crandn(self.rng, 3, 2)
        theta = solve_fris_compact(channels, target)
        np.testing.assert_allclose(channels.achieved(theta), target, atol=1e-9)

    def test_fris_compact_minimum_norm(self):
        """Test null-space perturbations keep the channel and never shrink the Frobenius norm."""
        M, K, N = 3, 2, 6
        channels = random_triple(self.rng, M, K, N)
        target = crandn(self.rng, M, K)
        theta = solve_fris_compact(channels, target)
        np.testing.assert_allclose(channels.achieved(theta), target, atol=1e-10)
        left = np.eye(N) - np.linalg.pinv(channels.H1) @ channels.H1
        right = np.eye(N) - channels.H2 @ np.linalg.pinv(channels.H2)
        for _ in range(20):
            alternative = theta + left @ crandn(self.rng, N, N) + crandn(self.rng, N, N) @ right
            np.testing.assert_allclose(channels.achieved(alternative), target, atol=1e-9)
            self.assertLessEqual(np.linalg.norm(theta), np.linalg.norm(alternative) + 1e-12)

    def test_fris_compact_rank_deficient(self):
        """Test the compact solve refuses a rank-deficient H1."""
        rng = self.rng
        H1 = np.outer(crandn(rng, 3), crandn(rng, 5))
        channels = ChannelTriple(H0=crandn(rng, 3, 2), H1=H1, H2=crandn(rng, 5, 2))
        with self.assertRaises(InfeasibleError):
            solve_fris_compact(channels, crandn(rng, 3, 2))

    def test_reflection_unvec(self):
        """Test EffectiveMap.reflection folds the lift output."""
        emap = build_effective_map("fris", crandn(self.rng, 2, 2), crandn(self.rng, 2, 2))
        c = crandn(self.rng, 4)
        np.testing.assert_array_equal(emap.reflection(c), unvec(emap.lift @ c, 2, 2))


if __name__ == "__main__":
    unittest.main()
