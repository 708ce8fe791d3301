"""Structural linear-algebra primitives shared by the solvers.

All vectorization in orthoris is column-major, so that for conformable
matrices ``kron(B.T, A) @ vec(X) == vec(A @ X @ B)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from orthoris.errors import DegenerateProjectionError

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

PINV_RTOL = 1e-12
RANK_RTOL = 1e-10

# Above this size the spectral norm switches from a full SVD to power iteration
SVD_SIZE_LIMIT = 64
POWER_ITER_TOL = 1e-10
POWER_ITER_MAX = 1000


class SelectorKind(str, Enum):
    """Which entries of an N x N matrix a selector matrix addresses."""

    DIAGONAL = "diagonal"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class SelectorMatrix:
    """0/1 matrix of shape N^2 x d that pads zeros around d free entries.

    ``unvec(matrix @ x, N, N)`` places the entries of ``x`` on the selected
    positions and leaves every other entry zero.
    """

    kind: SelectorKind
    N: int
    matrix: npt.NDArray[np.float64]

    @property
    def positions(self) -> npt.NDArray[np.int64]:
        """Vec positions selected by each column, in column order."""
        return np.argmax(self.matrix, axis=0)


def ensure_finite(A: np.ndarray, name: str = "matrix") -> None:
    """Raise ValueError when ``A`` holds NaN or Inf entries."""
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")


def vec(A: np.ndarray) -> np.ndarray:
    """Stack the columns of ``A`` into a single vector."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(v: np.ndarray, m: int, n: int) -> np.ndarray:
    """Inverse of :func:`vec`: fold a length ``m*n`` vector into an ``m x n`` matrix.

    Raises:
        ValueError: If ``len(v) != m * n``
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.size != m * n:
        raise ValueError(f"Cannot fold a vector of shape {v.shape} into a {m}x{n} matrix")
    return v.reshape((m, n), order="F")


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product, ``kron(A, B)[i*p + k, j*q + l] == A[i, j] * B[k, l]``."""
    return np.kron(A, B)


def commutation_matrix(N: int) -> npt.NDArray[np.float64]:
    """Permutation K with ``K @ vec(A) == vec(A.T)`` for every N x N matrix A."""
    if N < 1:
        raise ValueError(f"Commutation matrix needs N >= 1, got {N}")
    K = np.zeros((N * N, N * N))
    for i in range(N):
        for j in range(N):
            K[j + i * N, i + j * N] = 1.0
    return K


def _upper_pairs(N: int) -> list[tuple[int, int]]:
    # (row, col) with row <= col, in increasing vec position
    return [(i, j) for j in range(N) for i in range(j + 1)]


def selector(kind: SelectorKind | str, N: int) -> SelectorMatrix:
    """Build the zero-padding selector for diagonal or triangular entries.

    Diagonal and upper-triangular columns follow vec order of the selected
    positions. Lower-triangular column c addresses the transpose of
    upper-triangular column c, so ``Z_L == commutation_matrix(N) @ Z_U``.
    """
    if N < 1:
        raise ValueError(f"Selector needs N >= 1, got {N}")
    kind = SelectorKind(kind)

    if kind is SelectorKind.DIAGONAL:
        pairs = [(n, n) for n in range(N)]
    elif kind is SelectorKind.UPPER:
        pairs = _upper_pairs(N)
    else:
        pairs = [(j, i) for i, j in _upper_pairs(N)]

    Z = np.zeros((N * N, len(pairs)))
    for col, (i, j) in enumerate(pairs):
        Z[i + j * N, col] = 1.0
    return SelectorMatrix(kind=kind, N=N, matrix=Z)


def selector_pairs(kind: SelectorKind | str, N: int) -> list[tuple[int, int]]:
    """The (row, col) entry addressed by each selector column, in column order."""
    positions = selector(kind, N).positions
    return [(int(p % N), int(p // N)) for p in positions]


def pinv(A: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values at or below ``rtol * sigma_max`` are treated as zero.
    """
    A = np.asarray(A)
    m, n = A.shape
    if A.size == 0:
        return np.zeros((n, m), dtype=A.dtype)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, m), dtype=np.result_type(A.dtype, np.float64))
    keep = s > rtol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T


def numeric_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Number of singular values above ``rtol * sigma_max``."""
    A = np.asarray(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def frobenius_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, "fro"))


def _power_iteration(A: np.ndarray) -> float:
    # Fixed start vector keeps the result reproducible
    rng = np.random.default_rng(0)
    x = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    sigma_old = np.inf
    sigma = 0.0
    for iteration in range(POWER_ITER_MAX):
        y = A @ x
        sigma = float(np.linalg.norm(y))
        if sigma == 0.0:
            return 0.0
        if abs(sigma - sigma_old) <= POWER_ITER_TOL * sigma:
            logger.debug("Power iteration converged after %d iterations", iteration + 1)
            break
        sigma_old = sigma
        x = A.conj().T @ y
        x /= np.linalg.norm(x)
    else:
        logger.debug("Power iteration hit the %d iteration cap", POWER_ITER_MAX)
    return sigma


def spectral_norm(A: np.ndarray) -> float:
    """Largest singular value of ``A``.

    Uses a full SVD up to 64 x 64 and power iteration above that.
    """
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if max(A.shape) <= SVD_SIZE_LIMIT:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    return _power_iteration(A)


def top_right_singular_vector(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest singular value and a unit right singular vector attaining it."""
    _, s, Vh = np.linalg.svd(np.asarray(A))
    return float(s[0]), Vh[0].conj()


def condition_number(A: np.ndarray) -> float:
    """sigma_max / sigma_min over the min(m, n) singular values; inf if singular."""
    s = np.linalg.svd(np.asarray(A), compute_uv=False)
    if s[-1] <= 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def condition_number_db(A: np.ndarray) -> float:
    """Condition number in dB, ``20 * log10(sigma_max / sigma_min)``."""
    return float(20.0 * np.log10(condition_number(A)))


def stiefel_project(A: np.ndarray) -> np.ndarray:
    """Closest semi-unitary matrix to ``A`` (polar rotation factor).

    Raises:
        ValueError: If ``A`` has more columns than rows
        DegenerateProjectionError: If ``A`` is rank deficient
    """
    A = np.asarray(A, dtype=np.complex128)
    M, K = A.shape
    if M < K:
        raise ValueError(f"Stiefel projection needs rows >= cols, got {M}x{K}")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= PINV_RTOL * s[0]:
        raise DegenerateProjectionError(
            f"Projection of a rank-deficient {M}x{K} matrix onto the Stiefel manifold is not unique"
        )
    return U @ Vh


def top_identity(M: int, K: int) -> np.ndarray:
    """The M x K matrix holding I_K in its top block."""
    return np.eye(M, K, dtype=np.complex128)


def semi_unitary_defect(U: np.ndarray) -> float:
    """``||U^H U - I||_F``."""
    K = U.shape[1]
    return float(np.linalg.norm(U.conj().T @ U - np.eye(K), "fro"))


def crandn(rng: np.random.Generator, *shape: int, power: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|x|^2 == power``."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def haar_semi_unitary(M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed M x K matrix with orthonormal columns."""
    Q, R = np.linalg.qr(crandn(rng, M, K))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases
