"""Pilot-based estimation of the direct channel and the effective map.

The direct channel is measured with the surface switched off (Theta = 0).
The effective map is then measured one column at a time: every step
configures a sparse reflection matrix, the UEs send the same orthogonal
pilots, and the direct-channel estimate is subtracted from the
de-spread response.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from orthoris.matcore import SelectorKind, crandn, selector_pairs, vec
from orthoris.rs_models import RsKind
from orthoris.solvers import ChannelTriple, EffectiveMap, min_elements, require_solvable

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-12


class EstimationMode(str, Enum):
    """FULL measures every free reflection entry; REDUCED only MK of them."""

    FULL = "full"
    REDUCED = "reduced"


@dataclass(frozen=True)
class PilotMatrix:
    """K x K pilot block with ``P P^H == Es I``."""

    P: np.ndarray
    Es: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.complex128)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"Pilot matrix must be square, got shape {P.shape}")
        if not self.Es > 0.0:
            raise ValueError(f"Pilot symbol energy must be positive, got {self.Es}")
        defect = np.linalg.norm(P @ P.conj().T - self.Es * np.eye(P.shape[0]), "fro")
        if defect > ORTHOGONALITY_TOL * max(1.0, self.Es * P.shape[0]):
            raise ValueError(f"Pilots are not orthogonal (||P P^H - Es I||_F = {defect:.3e})")
        object.__setattr__(self, "P", P)

    @property
    def K(self) -> int:
        return self.P.shape[0]

    def despread(self, Y: np.ndarray) -> np.ndarray:
        return Y @ self.P.conj().T / self.Es


def dft_pilots(K: int, Es: float = 1.0) -> PilotMatrix:
    """Scaled unitary DFT pilots."""
    if K < 1:
        raise ValueError(f"Pilot length must be positive, got {K}")
    n = np.arange(K)
    F = np.exp(-2j * np.pi * np.outer(n, n) / K) / np.sqrt(K)
    return PilotMatrix(P=np.sqrt(Es) * F, Es=Es)


@dataclass(frozen=True)
class BasisElement:
    """One measurement step.

    ``theta`` is the configured reflection matrix, ``column`` the index of the
    effective-map column it measures and ``weight`` the factor turning the
    measured channel update into that column.
    """

    theta: np.ndarray
    column: int
    weight: float = 1.0


def _unit(N: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((N, N), dtype=np.complex128)
    E[i, j] = 1.0
    return E


def _element(kind: RsKind, N: int, column: int) -> BasisElement:
    if kind is RsKind.FRIS:
        return BasisElement(theta=_unit(N, column % N, column // N), column=column)
    if kind is RsKind.ARIS:
        return BasisElement(theta=_unit(N, column, column), column=column)

    i, j = selector_pairs(SelectorKind.UPPER, N)[column]
    if i == j:
        # The effective-map column of a diagonal entry is twice the response to E_nn
        return BasisElement(theta=_unit(N, i, i), column=column, weight=2.0)
    return BasisElement(theta=_unit(N, i, j) + _unit(N, j, i), column=column)


def _variable_count(kind: RsKind, N: int) -> int:
    if kind is RsKind.FRIS:
        return N * N
    if kind is RsKind.BDRIS:
        return N * (N + 1) // 2
    return N


def reduced_support(kind: RsKind | str, M: int, K: int, N: int) -> list[int]:
    """MK effective-map columns kept by reduced-mode estimation.

    FRIS keeps the top-left M x K block of Theta, BD-RIS the pairs (i, j)
    with ``i < M`` and ``M - 1 <= j < M + K - 1``, ARIS the first MK
    diagonal entries. Every other entry stays at zero.

    Raises:
        ValueError: If N is below the minimum for the kind
    """
    kind = require_solvable(kind)
    needed = min_elements(kind, M, K)
    if N < needed:
        raise ValueError(f"Reduced {kind.value} support needs N >= {needed}, got {N}")

    if kind is RsKind.FRIS:
        return [i + j * N for j in range(K) for i in range(M)]
    if kind is RsKind.ARIS:
        return list(range(M * K))

    index = {pair: c for c, pair in enumerate(selector_pairs(SelectorKind.UPPER, N))}
    return sorted(index[(i, j)] for i in range(M) for j in range(M - 1, M + K - 1))


def basis_sequence(
    kind: RsKind | str,
    N: int,
    mode: EstimationMode | str = EstimationMode.FULL,
    M: Optional[int] = None,
    K: Optional[int] = None,
) -> list[BasisElement]:
    """Measurement configurations in effective-map column order.

    Reduced mode needs M and K to pick the support.
    """
    kind = require_solvable(kind)
    mode = EstimationMode(mode)
    if mode is EstimationMode.FULL:
        columns: Sequence[int] = range(_variable_count(kind, N))
    else:
        if M is None or K is None:
            raise ValueError("Reduced-mode basis needs M and K")
        columns = reduced_support(kind, M, K, N)
    return [_element(kind, N, c) for c in columns]


def pilot_budget(
    kind: RsKind | str,
    M: int,
    K: int,
    N: int,
    mode: EstimationMode | str = EstimationMode.FULL,
) -> int:
    """Pilot slots spent on the effective map (one per basis configuration)."""
    kind = require_solvable(kind)
    if EstimationMode(mode) is EstimationMode.REDUCED:
        return M * K
    return _variable_count(kind, N)


def printed_bdris_budget(M: int, K: int) -> int:
    """Closed-form BD-RIS budget ``(M + K - 1)(M + K - 2) / 2`` as commonly quoted.

    It undercounts the basis steps at ``N = M + K - 1``, which number
    ``N (N + 1) / 2``; :func:`pilot_budget` reports the counted value.
    """
    return (M + K - 1) * (M + K - 2) // 2


@dataclass(frozen=True)
class EstimationResult:
    """Estimated direct channel and effective-map columns.

    Attributes:
        kind: RS model
        H0_hat: M x K direct-channel estimate
        effective_hat: MK x d estimated columns of the effective map
        columns: effective-map column index of each estimated column
        steps_used: number of basis configurations measured
        noise_power: receiver noise power N0
        mode: full or reduced
    """

    kind: RsKind
    H0_hat: np.ndarray
    effective_hat: np.ndarray
    columns: tuple[int, ...]
    steps_used: int
    noise_power: float
    mode: EstimationMode

    def effective_map(self, N: int) -> EffectiveMap:
        M, K = self.H0_hat.shape
        return EffectiveMap.from_matrix(self.kind, N, M, K, self.effective_hat, columns=self.columns)


def estimate_direct(
    channels: ChannelTriple,
    pilots: PilotMatrix,
    N0: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Estimate H0 with the surface configured to Theta = 0."""
    if pilots.K != channels.K:
        raise ValueError(f"Pilot length {pilots.K} differs from K={channels.K}")
    noise = crandn(rng, channels.M, channels.K, power=N0)
    return pilots.despread(channels.H0 @ pilots.P + noise)


def estimate_effective_map(
    kind: RsKind | str,
    channels: ChannelTriple,
    pilots: PilotMatrix,
    N0: float,
    rng: np.random.Generator,
    mode: EstimationMode | str = EstimationMode.FULL,
    H0_hat: Optional[np.ndarray] = None,
    basis: Optional[Sequence[BasisElement]] = None,
) -> EstimationResult:
    """Measure the effective-map columns of ``kind`` step by step.

    ``H0_hat`` defaults to a fresh :func:`estimate_direct` run. ``basis``
    overrides the canonical sparse configurations.
    """
    kind = require_solvable(kind)
    mode = EstimationMode(mode)
    if H0_hat is None:
        H0_hat = estimate_direct(channels, pilots, N0, rng)
    if basis is None:
        basis = basis_sequence(kind, channels.N, mode, channels.M, channels.K)

    received = channels.H0 @ pilots.P
    columns = np.empty((channels.M * channels.K, len(basis)), dtype=np.complex128)
    for n, element in enumerate(basis):
        noise = crandn(rng, channels.M, channels.K, power=N0)
        Y = received + channels.H1 @ element.theta @ channels.H2 @ pilots.P + noise
        columns[:, n] = element.weight * vec(pilots.despread(Y) - H0_hat)

    logger.debug("Estimated %d %s map columns (N0=%g, %s mode)", len(basis), kind.value, N0, mode.value)
    return EstimationResult(
        kind=kind,
        H0_hat=H0_hat,
        effective_hat=columns,
        columns=tuple(element.column for element in basis),
        steps_used=len(basis),
        noise_power=N0,
        mode=mode,
    )


def estimate_channels(
    kind: RsKind | str,
    channels: ChannelTriple,
    N0: float,
    rng: np.random.Generator,
    mode: EstimationMode | str = EstimationMode.FULL,
    pilots: Optional[PilotMatrix] = None,
) -> tuple[EstimationResult, EffectiveMap]:
    """Run both estimation stages and build the estimated effective map."""
    if pilots is None:
        pilots = dft_pilots(channels.K)
    H0_hat = estimate_direct(channels, pilots, N0, rng)
    result = estimate_effective_map(kind, channels, pilots, N0, rng, mode=mode, H0_hat=H0_hat)
    return result, result.effective_map(channels.N)
