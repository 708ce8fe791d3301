"""Closed-form reflection solvers that force a target channel.

Every RS kind reduces to the linear system ``matrix @ phi == c`` with
``c = vec(target - H0)``, where ``phi`` holds the free reflection variables.
``expand`` maps ``phi`` back to ``vec(Theta)``:

* FRIS: every entry is free, ``expand = I``.
* BD-RIS: upper-triangular entries, ``expand = (K + I) Z_U``. Diagonal columns
  of ``matrix`` therefore carry a factor of two, which the lift undoes.
* ARIS: diagonal entries, ``expand = Z_D``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from orthoris.errors import InfeasibleError
from orthoris.matcore import (
    RANK_RTOL,
    SelectorKind,
    commutation_matrix,
    ensure_finite,
    kron,
    numeric_rank,
    pinv,
    selector,
    unvec,
    vec,
)
from orthoris.rs_models import ConstraintReport, RsKind, check

logger = logging.getLogger(__name__)

SOLVE_TOL = 1e-8

SOLVABLE_KINDS = (RsKind.ARIS, RsKind.BDRIS, RsKind.FRIS)


@dataclass(frozen=True)
class ChannelTriple:
    """Direct link H0 (M x K), RS-to-BS link H1 (M x N) and UE-to-RS link H2 (N x K)."""

    H0: np.ndarray
    H1: np.ndarray
    H2: np.ndarray

    def __post_init__(self):
        for name in ("H0", "H1", "H2"):
            matrix = np.asarray(getattr(self, name), dtype=np.complex128)
            if matrix.ndim != 2:
                raise ValueError(f"{name} must be a matrix, got shape {matrix.shape}")
            ensure_finite(matrix, name)
            object.__setattr__(self, name, matrix)

        M, K = self.H0.shape
        if self.H1.shape[0] != M:
            raise ValueError(f"H1 has {self.H1.shape[0]} rows, expected M={M}")
        if self.H2.shape[1] != K:
            raise ValueError(f"H2 has {self.H2.shape[1]} columns, expected K={K}")
        if self.H1.shape[1] != self.H2.shape[0]:
            raise ValueError(
                f"H1 has {self.H1.shape[1]} columns but H2 has {self.H2.shape[0]} rows"
            )

    @property
    def M(self) -> int:
        return self.H0.shape[0]

    @property
    def K(self) -> int:
        return self.H0.shape[1]

    @property
    def N(self) -> int:
        return self.H1.shape[1]

    def achieved(self, theta: np.ndarray) -> np.ndarray:
        """Channel seen by the BS for reflection matrix ``theta``: H0 + H1 Theta H2."""
        return self.H0 + self.H1 @ theta @ self.H2

    def with_direct(self, H0: np.ndarray) -> "ChannelTriple":
        return ChannelTriple(H0=H0, H1=self.H1, H2=self.H2)


def require_solvable(kind: RsKind | str) -> RsKind:
    kind = RsKind.parse(kind)
    if kind not in SOLVABLE_KINDS:
        raise ValueError(f"{kind.value} has no closed-form channel solver (use aris, bdris or fris)")
    return kind


def min_elements(kind: RsKind | str, M: int, K: int) -> int:
    """Smallest N for which the surface can force an arbitrary M x K channel."""
    kind = require_solvable(kind)
    if M < 1 or K < 1:
        raise ValueError(f"M and K must be positive, got M={M}, K={K}")
    if kind is RsKind.FRIS:
        return max(M, K)
    if kind is RsKind.BDRIS:
        return M + K - 1
    return M * K


def cascaded_map(H1: np.ndarray, H2: np.ndarray) -> np.ndarray:
    """The MK x N^2 map ``kron(H2.T, H1)`` taking vec(Theta) to vec(H1 Theta H2)."""
    return kron(np.asarray(H2).T, np.asarray(H1))


def variable_expansion(kind: RsKind | str, N: int) -> np.ndarray:
    """N^2 x d matrix mapping the free reflection variables to vec(Theta)."""
    kind = require_solvable(kind)
    if kind is RsKind.FRIS:
        return np.eye(N * N)
    if kind is RsKind.ARIS:
        return selector(SelectorKind.DIAGONAL, N).matrix
    Z_U = selector(SelectorKind.UPPER, N).matrix
    return (commutation_matrix(N) + np.eye(N * N)) @ Z_U


@dataclass(frozen=True)
class EffectiveMap:
    """Linear map from the free reflection variables to the channel update.

    Attributes:
        kind: RS model
        N, M, K: surface size and channel dimensions
        matrix: MK x d effective map
        pinv_matrix: d x MK right pseudoinverse of ``matrix``
        expand: N^2 x d map from free variables to vec(Theta)
        lift: N^2 x MK, ``expand @ pinv_matrix``
        columns: indices of the full variable set kept (all of them unless restricted)
    """

    kind: RsKind
    N: int
    M: int
    K: int
    matrix: np.ndarray
    pinv_matrix: np.ndarray
    expand: np.ndarray
    lift: np.ndarray
    columns: tuple[int, ...] = field(default=())

    @classmethod
    def from_matrix(
        cls,
        kind: RsKind | str,
        N: int,
        M: int,
        K: int,
        matrix: np.ndarray,
        columns: Optional[Sequence[int]] = None,
    ) -> "EffectiveMap":
        """Build the map around an externally supplied (e.g. estimated) matrix.

        ``matrix`` holds one column per entry of ``columns`` (default: the
        whole variable set of ``kind``).
        """
        kind = require_solvable(kind)
        expand = variable_expansion(kind, N)
        if columns is None:
            columns = range(expand.shape[1])
        columns = tuple(int(c) for c in columns)
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (M * K, len(columns)):
            raise ValueError(
                f"Effective map for {kind.value} with {len(columns)} variables must be "
                f"{M * K}x{len(columns)}, got {matrix.shape}"
            )
        expand = expand[:, list(columns)]
        pinv_matrix = pinv(matrix)
        return cls(
            kind=kind,
            N=N,
            M=M,
            K=K,
            matrix=matrix,
            pinv_matrix=pinv_matrix,
            expand=expand,
            lift=expand @ pinv_matrix,
            columns=columns,
        )

    def restricted(self, columns: Sequence[int]) -> "EffectiveMap":
        """Keep only the given variables; the others are pinned to zero."""
        positions = [self.columns.index(c) for c in columns]
        return EffectiveMap.from_matrix(
            self.kind, self.N, self.M, self.K, self.matrix[:, positions], columns=columns
        )

    @property
    def rank(self) -> int:
        return numeric_rank(self.matrix, RANK_RTOL)

    @property
    def rank_feasible(self) -> bool:
        return self.rank == self.M * self.K

    def reflection(self, c: np.ndarray) -> np.ndarray:
        """Reflection matrix ``unvec(lift @ c)`` producing channel update ``c``."""
        return unvec(self.lift @ c, self.N, self.N)


def build_effective_map(
    kind: RsKind | str,
    H1: np.ndarray,
    H2: np.ndarray,
    columns: Optional[Sequence[int]] = None,
) -> EffectiveMap:
    """Effective map of ``kind`` for the cascaded channel (H1, H2)."""
    kind = require_solvable(kind)
    H1 = np.asarray(H1, dtype=np.complex128)
    H2 = np.asarray(H2, dtype=np.complex128)
    M, N = H1.shape
    if H2.shape[0] != N:
        raise ValueError(f"H1 is {M}x{N} but H2 has {H2.shape[0]} rows")
    K = H2.shape[1]

    full = cascaded_map(H1, H2) @ variable_expansion(kind, N)
    if columns is not None:
        full = full[:, list(columns)]
    return EffectiveMap.from_matrix(kind, N, M, K, full, columns=columns)


def rank_feasible(kind: RsKind | str, H1: np.ndarray, H2: np.ndarray) -> bool:
    """True when the effective map has full row rank MK (arbitrary channels reachable)."""
    return build_effective_map(kind, H1, H2).rank_feasible


@dataclass(frozen=True)
class SolveReport:
    """Result of forcing a target channel.

    Attributes:
        theta: N x N reflection matrix (least-squares when rank infeasible)
        residual: ||H0 + H1 Theta H2 - target||_F
        rank_feasible: whether the effective map reaches every channel
        passive: whether theta satisfies the passivity constraint
        constraint: full constraint report for the kind
    """

    theta: np.ndarray
    residual: float
    rank_feasible: bool
    passive: bool
    constraint: ConstraintReport


def solve(
    kind: RsKind | str,
    channels: ChannelTriple,
    target: np.ndarray,
    emap: Optional[EffectiveMap] = None,
) -> SolveReport:
    """Reflection matrix of ``kind`` that turns ``channels`` into ``target``.

    Passivity is reported, not enforced. A rank-infeasible map yields the
    least-squares reflection matrix with ``rank_feasible`` false.
    """
    kind = require_solvable(kind)
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != channels.H0.shape:
        raise ValueError(f"Target shape {target.shape} differs from H0 shape {channels.H0.shape}")
    if emap is None:
        emap = build_effective_map(kind, channels.H1, channels.H2)

    theta = emap.reflection(vec(target - channels.H0))
    residual = float(np.linalg.norm(channels.achieved(theta) - target, "fro"))
    feasible = emap.rank_feasible
    if not feasible:
        logger.debug("Rank-infeasible %s map; returning least-squares reflection (residual %.3e)", kind.value, residual)
    constraint = check(theta, kind)
    return SolveReport(
        theta=theta,
        residual=residual,
        rank_feasible=feasible,
        passive=constraint.passive,
        constraint=constraint,
    )


def solve_fris_compact(channels: ChannelTriple, target: np.ndarray) -> np.ndarray:
    """FRIS reflection ``pinv(H1) (target - H0) pinv(H2)``.

    Raises:
        InfeasibleError: If H1 lacks full row rank or H2 lacks full column rank
    """
    if numeric_rank(channels.H1) < channels.M or numeric_rank(channels.H2) < channels.K:
        raise InfeasibleError(
            f"Compact FRIS solve needs rank(H1) = M = {channels.M} and rank(H2) = K = {channels.K}"
        )
    target = np.asarray(target, dtype=np.complex128)
    return pinv(channels.H1) @ (target - channels.H0) @ pinv(channels.H2)
