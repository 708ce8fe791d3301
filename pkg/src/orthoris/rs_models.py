"""Reconfigurable surface models, their constraint sets and the impedance map."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from orthoris.errors import MapUndefinedError, OpenCircuitError
from orthoris.matcore import crandn, spectral_norm

STRUCTURE_TOL = 1e-9

# Condition number above which Z + I or I - Theta is treated as singular
SINGULAR_COND = 1e13


class RsKind(str, Enum):
    """Reconfigurable surface model.

    RIS: diagonal, unit-modulus entries.
    ARIS: diagonal, entry magnitudes at most one.
    BDRIS: symmetric, spectral norm at most one.
    FRIS: unrestricted, spectral norm at most one.
    """

    RIS = "ris"
    ARIS = "aris"
    BDRIS = "bdris"
    FRIS = "fris"

    @classmethod
    def parse(cls, value: "RsKind | str") -> "RsKind":
        if isinstance(value, RsKind):
            return value
        normalized = value.strip().lower().replace("-", "").replace("_", "")
        try:
            return cls(normalized)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"Unknown RS kind {value!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of checking a reflection matrix against an RS model.

    ``passivity_margin`` is ``1 - ||Theta||_2^2`` and goes negative when the
    surface would need amplification.
    """

    kind: RsKind
    structure_ok: bool
    passivity_margin: float
    symmetry_defect: float
    diagonality_defect: float
    modulus_defect: float = 0.0

    @property
    def passive(self) -> bool:
        return self.passivity_margin >= -STRUCTURE_TOL


@dataclass(frozen=True)
class ReflectionMatrix:
    """An N x N reflection matrix tagged with its model and constraint report."""

    theta: np.ndarray
    kind: RsKind
    report: ConstraintReport

    @classmethod
    def of(cls, theta: np.ndarray, kind: RsKind | str, tol: float = STRUCTURE_TOL) -> "ReflectionMatrix":
        kind = RsKind.parse(kind)
        return cls(theta=np.asarray(theta), kind=kind, report=check(theta, kind, tol))

    @property
    def N(self) -> int:
        return self.theta.shape[0]


def check(theta: np.ndarray, kind: RsKind | str, tol: float = STRUCTURE_TOL) -> ConstraintReport:
    """Check ``theta`` against the constraint set of ``kind``.

    The passivity boundary ``||Theta||_2^2 == 1`` counts as feasible.

    Raises:
        ValueError: If ``theta`` is not square
    """
    theta = np.asarray(theta)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"Reflection matrix must be square, got shape {theta.shape}")
    kind = RsKind.parse(kind)

    diagonal = np.diag(theta)
    off_diagonal = theta - np.diag(diagonal)
    symmetry_defect = float(np.linalg.norm(theta - theta.T, "fro"))
    diagonality_defect = float(np.linalg.norm(off_diagonal, "fro"))
    modulus_defect = float(np.max(np.abs(np.abs(diagonal) - 1.0))) if diagonal.size else 0.0

    if kind in (RsKind.RIS, RsKind.ARIS):
        # Eigenvalues of Theta^H Theta for a diagonal Theta are |alpha_i|^2
        peak = float(np.max(np.abs(diagonal) ** 2)) if diagonal.size else 0.0
    else:
        peak = spectral_norm(theta) ** 2
    passivity_margin = 1.0 - peak

    if kind is RsKind.RIS:
        shape_ok = diagonality_defect <= tol and modulus_defect <= tol
    elif kind is RsKind.ARIS:
        shape_ok = diagonality_defect <= tol
    elif kind is RsKind.BDRIS:
        shape_ok = symmetry_defect <= tol
    else:
        shape_ok = True

    return ConstraintReport(
        kind=kind,
        structure_ok=bool(shape_ok and passivity_margin >= -tol),
        passivity_margin=passivity_margin,
        symmetry_defect=symmetry_defect,
        diagonality_defect=diagonality_defect,
        modulus_defect=modulus_defect,
    )


def impedance_to_reflection(Z: np.ndarray) -> np.ndarray:
    """Reflection matrix of an N-port impedance network, ``(Z + I)^-1 (Z - I)``.

    Raises:
        MapUndefinedError: If ``Z + I`` is singular
    """
    Z = np.asarray(Z, dtype=np.complex128)
    eye = np.eye(Z.shape[0])
    if np.linalg.cond(Z + eye) > SINGULAR_COND:
        raise MapUndefinedError("Z + I is singular; the impedance network has no reflection matrix")
    return np.linalg.solve(Z + eye, Z - eye)


def reflection_to_impedance(theta: np.ndarray) -> np.ndarray:
    """Impedance matrix realizing ``theta``, ``(I + Theta)(I - Theta)^-1``.

    Symmetric reflection matrices map to symmetric (reciprocal) impedance matrices.

    Raises:
        OpenCircuitError: If ``I - Theta`` is singular
    """
    theta = np.asarray(theta, dtype=np.complex128)
    eye = np.eye(theta.shape[0])
    if np.linalg.cond(eye - theta) > SINGULAR_COND:
        raise OpenCircuitError("I - Theta is singular; the reflection matrix needs an open-circuit load")
    # Right division: X (I - Theta) = I + Theta
    return np.linalg.solve((eye - theta).T, (eye + theta).T).T


def impedance_ports(kind: RsKind | str, N: int) -> int:
    """Ports of the impedance network implementing an N-element surface.

    The circulator-based FRIS implementation needs twice as many ports.
    """
    return 2 * N if RsKind.parse(kind) is RsKind.FRIS else N


def random_member(kind: RsKind | str, N: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a random element of the constraint set of ``kind``."""
    kind = RsKind.parse(kind)
    phases = np.exp(2j * np.pi * rng.random(N))
    if kind is RsKind.RIS:
        return np.diag(phases)
    if kind is RsKind.ARIS:
        return np.diag(rng.random(N) * phases)

    A = crandn(rng, N, N)
    if kind is RsKind.BDRIS:
        A = A + A.T
    return A * (rng.random() / spectral_norm(A))
