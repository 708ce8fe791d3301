"""Orthogonal channel selection.

Picks a gain beta and a semi-unitary U so that the reflection matrix forcing
the channel ``sqrt(beta) U`` stays passive, with beta as large as possible.
For a fixed lift the reflection matrix is

    Theta(beta, U) = unvec(lift @ (sqrt(beta) vec(U) - vec(H0)))

and its squared Frobenius norm is the quadratic
``beta g(U) - 2 sqrt(beta) f(U) + kappa`` built from :class:`CostCoefficients`.

Gradients are returned in the real-gradient convention: ``grad`` is the
matrix with ``F(U + t D) = F(U) + t Re tr(grad^H D) + o(t)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import expm

from orthoris.errors import DegenerateProjectionError, DegenerateSelectionError, InfeasibleError
from orthoris.matcore import (
    haar_semi_unitary,
    semi_unitary_defect,
    spectral_norm,
    stiefel_project,
    top_identity,
    top_right_singular_vector,
    unvec,
    vec,
)
from orthoris.rs_models import ConstraintReport, RsKind, check
from orthoris.solvers import ChannelTriple, EffectiveMap, build_effective_map

logger = logging.getLogger(__name__)

SEMI_UNITARY_TOL = 1e-10
PASSIVITY_SLACK = 1e-8


@dataclass(frozen=True)
class SelectionOptions:
    """Numerical knobs of the selection algorithm."""

    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo_slope: float = 1e-4
    max_backtracks: int = 30
    max_descent_iterations: int = 200
    gradient_tol: float = 1e-10
    beta_rtol: float = 1e-6
    max_outer_iterations: int = 50
    max_beta_iterations: int = 100
    boundary_tol: float = 1e-9
    reorthonormalize_tol: float = 1e-8


DEFAULT_OPTIONS = SelectionOptions()


class SelectionMode(str, Enum):
    """How the orthogonal target is chosen.

    ALGORITHM1: heuristic start, ratio ascent, then alternating power descent
        and gain maximization.
    SIMPLIFIED: heuristic start only, gain pushed to the passivity boundary.
    RANDOM: Haar-random U, gain pushed to the passivity boundary.
    """

    ALGORITHM1 = "algorithm1"
    SIMPLIFIED = "simplified"
    RANDOM = "random"


class SelectionStatus(str, Enum):
    ORTHOGONALIZED = "orthogonalized"
    NEEDS_AMPLIFICATION = "infeasible-needs-amplification"


class DescentObjective(str, Enum):
    MAXIMIZE_RATIO = "maximize-ratio"
    MINIMIZE_POWER = "minimize-power-fixed-beta"


@dataclass(frozen=True)
class OrthoTarget:
    """Desired channel ``sqrt(beta) U`` with U semi-unitary."""

    beta: float
    U: np.ndarray

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError(f"Channel gain must be positive, got {self.beta}")
        defect = semi_unitary_defect(self.U)
        if defect > SEMI_UNITARY_TOL:
            raise ValueError(f"Target U is not semi-unitary (||U^H U - I||_F = {defect:.3e})")

    @property
    def channel(self) -> np.ndarray:
        return np.sqrt(self.beta) * self.U


@dataclass(frozen=True)
class CostCoefficients:
    """G = lift^H lift, w = G vec(H0), kappa = vec(H0)^H G vec(H0)."""

    G: np.ndarray
    w: np.ndarray
    kappa: float
    M: int
    K: int

    def g(self, U: np.ndarray) -> float:
        u = vec(U)
        return float(np.real(np.vdot(u, self.G @ u)))

    def f(self, U: np.ndarray) -> float:
        return float(np.real(np.vdot(vec(U), self.w)))


def cost_coefficients(lift: np.ndarray, H0: np.ndarray) -> CostCoefficients:
    H0 = np.asarray(H0, dtype=np.complex128)
    G = lift.conj().T @ lift
    G = 0.5 * (G + G.conj().T)
    w = G @ vec(H0)
    kappa = float(max(np.real(np.vdot(vec(H0), w)), 0.0))
    M, K = H0.shape
    return CostCoefficients(G=G, w=w, kappa=kappa, M=M, K=K)


def reflection_for(beta: float, U: np.ndarray, lift: np.ndarray, H0: np.ndarray) -> np.ndarray:
    """Theta(beta, U) for the given lift and direct channel."""
    N = int(round(np.sqrt(lift.shape[0])))
    return unvec(lift @ (np.sqrt(beta) * vec(U) - vec(H0)), N, N)


def reflection_power(beta: float, U: np.ndarray, lift: np.ndarray, H0: np.ndarray) -> float:
    """||Theta(beta, U)||_2^2, the passivity measure used throughout selection."""
    return spectral_norm(reflection_for(beta, U, lift, H0)) ** 2


def frobenius_power(beta: float, U: np.ndarray, coeffs: CostCoefficients) -> float:
    """||Theta(beta, U)||_F^2 = beta g(U) - 2 sqrt(beta) f(U) + kappa."""
    return beta * coeffs.g(U) - 2.0 * np.sqrt(beta) * coeffs.f(U) + coeffs.kappa


def beta_opt(U: np.ndarray, coeffs: CostCoefficients) -> tuple[float, np.ndarray]:
    """Gain minimizing the Frobenius power for fixed U, ``sqrt(beta) = f / g``.

    A negative f is absorbed by flipping the sign of U, so the returned pair
    is ``(beta, U)`` or ``(beta, -U)``.

    Raises:
        DegenerateSelectionError: If g(U) is zero
    """
    g = coeffs.g(U)
    if g <= 0.0:
        raise DegenerateSelectionError("g(U) = 0; the Frobenius power does not depend on beta")
    root = coeffs.f(U) / g
    if root < 0.0:
        return root * root, -U
    return root * root, U


@dataclass(frozen=True)
class Gradients:
    """Euclidean gradients at U.

    ``f_prime = unvec(w)`` and ``g_prime = unvec(G vec(U))``; in the
    real-gradient convention these are the gradients of f and of g / 2.
    ``ratio_grad`` and ``fixed_beta_grad`` are the exact real gradients of
    f^2 / g and of the fixed-beta Frobenius power.
    """

    f_prime: np.ndarray
    g_prime: np.ndarray
    ratio_grad: np.ndarray
    fixed_beta_grad: np.ndarray


def gradients(U: np.ndarray, beta: float, coeffs: CostCoefficients) -> Gradients:
    M, K = U.shape
    f_prime = unvec(coeffs.w, M, K)
    g_prime = unvec(coeffs.G @ vec(U), M, K)
    f = coeffs.f(U)
    g = coeffs.g(U)
    if g > 0.0:
        ratio_grad = (2.0 * f * g * f_prime - 2.0 * f * f * g_prime) / (g * g)
    else:
        ratio_grad = np.zeros_like(f_prime)
    fixed_beta_grad = 2.0 * beta * g_prime - 2.0 * np.sqrt(beta) * f_prime
    return Gradients(f_prime=f_prime, g_prime=g_prime, ratio_grad=ratio_grad, fixed_beta_grad=fixed_beta_grad)


@dataclass
class DescentResult:
    """Outcome of a geodesic descent run.

    ``trace`` holds the objective in its natural sense (the ratio for ascent,
    the power for descent) at U0 and after every accepted step.
    """

    U: np.ndarray
    trace: list[float]
    iterations: int
    truncated: bool


def _descent_functions(objective: DescentObjective, coeffs: CostCoefficients, beta: Optional[float]):
    if objective is DescentObjective.MAXIMIZE_RATIO:

        def value(U):
            g = coeffs.g(U)
            return coeffs.f(U) ** 2 / g if g > 0.0 else 0.0

        def cost(U):
            return -value(U)

        def egrad(U):
            return -gradients(U, 0.0, coeffs).ratio_grad

        return value, cost, egrad

    if beta is None:
        raise ValueError("Fixed-beta power descent needs beta")

    def power(U):
        return frobenius_power(beta, U, coeffs)

    def power_grad(U):
        return gradients(U, beta, coeffs).fixed_beta_grad

    return power, power, power_grad


def riemannian_descent(
    objective: DescentObjective | str,
    U0: np.ndarray,
    coeffs: CostCoefficients,
    beta: Optional[float] = None,
    opts: SelectionOptions = DEFAULT_OPTIONS,
) -> DescentResult:
    """Geodesic steepest descent on the Stiefel manifold with Armijo steps.

    U is treated as the first K columns of an M x M unitary whose padding
    columns have zero Euclidean gradient, so the skew-Hermitian Riemannian
    gradient is ``R = E U^H - U E^H`` and a step of size mu rotates
    ``U <- expm(-mu R) U``. The directional derivative along that geodesic is
    ``-||R||_F^2 / 2``.
    """
    objective = DescentObjective(objective)
    value, cost, egrad = _descent_functions(objective, coeffs, beta)

    U = np.asarray(U0, dtype=np.complex128)
    J = cost(U)
    trace = [value(U)]
    mu = opts.initial_step

    for iteration in range(opts.max_descent_iterations):
        E = egrad(U)
        R = E @ U.conj().T - U @ E.conj().T
        rate = 0.5 * float(np.real(np.vdot(R, R)))
        if np.sqrt(2.0 * rate) <= opts.gradient_tol * max(1.0, abs(J)):
            return DescentResult(U=U, trace=trace, iterations=iteration, truncated=False)

        def armijo_ok(step: float) -> tuple[bool, np.ndarray, float]:
            candidate = expm(-step * R) @ U
            J_candidate = cost(candidate)
            return J - J_candidate >= opts.armijo_slope * step * rate, candidate, J_candidate

        accepted, U_new, J_new = armijo_ok(mu)
        if accepted:
            # Grow the step while the doubled step still gives sufficient decrease
            for _ in range(opts.max_backtracks):
                bigger_ok, U_big, J_big = armijo_ok(2.0 * mu)
                if not bigger_ok or J_big > J_new:
                    break
                mu, U_new, J_new = 2.0 * mu, U_big, J_big
        else:
            for _ in range(opts.max_backtracks):
                mu *= opts.backtrack
                accepted, U_new, J_new = armijo_ok(mu)
                if accepted:
                    break
            if not accepted:
                logger.debug("Armijo search stalled after %d iterations", iteration)
                return DescentResult(U=U, trace=trace, iterations=iteration, truncated=False)

        if semi_unitary_defect(U_new) > opts.reorthonormalize_tol:
            U_new = stiefel_project(U_new)
            J_new = cost(U_new)
            if J_new > J:
                return DescentResult(U=U, trace=trace, iterations=iteration, truncated=False)

        improvement = J - J_new
        U, J = U_new, J_new
        trace.append(value(U))
        if improvement <= 1e-14 * max(1.0, abs(J)):
            return DescentResult(U=U, trace=trace, iterations=iteration + 1, truncated=False)

    logger.debug("Geodesic descent truncated at %d iterations", opts.max_descent_iterations)
    return DescentResult(U=U, trace=trace, iterations=opts.max_descent_iterations, truncated=True)


def _heuristic_direction(lift: np.ndarray, H0: np.ndarray) -> np.ndarray:
    # Right singular vector of the lift for its smallest singular value
    _, _, Vh = np.linalg.svd(lift, full_matrices=False)
    v_min = Vh[-1].conj()
    M, K = H0.shape
    try:
        return stiefel_project(unvec(v_min + vec(H0), M, K))
    except DegenerateProjectionError:
        logger.debug("Heuristic projection is degenerate; falling back to the identity block")
        return top_identity(M, K)


def _is_blocked(H0: np.ndarray) -> bool:
    return not np.any(H0)


def _boundary_beta_blocked(
    U: np.ndarray, lift: np.ndarray, H0: np.ndarray, tol: float = DEFAULT_OPTIONS.boundary_tol
) -> float:
    # With H0 = 0 the reflection is linear in sqrt(beta); aim just inside the boundary
    unit = reflection_power(1.0, U, lift, H0)
    if unit <= 0.0:
        raise DegenerateSelectionError("Reflection vanishes for every beta")
    beta = (1.0 - tol) / unit
    while reflection_power(beta, U, lift, H0) > 1.0:
        beta *= 1.0 - 1e-12
    return beta


def heuristic_init(coeffs: CostCoefficients, lift: np.ndarray, H0: np.ndarray) -> OrthoTarget:
    """Closed-form starting target.

    U projects ``unvec(v_min + vec(H0))`` onto the Stiefel manifold, where
    v_min is the lift's right singular vector for its smallest singular value.
    beta comes from :func:`beta_opt`, or from the passivity boundary when the
    direct channel is blocked.
    """
    H0 = np.asarray(H0, dtype=np.complex128)
    U = _heuristic_direction(lift, H0)
    if _is_blocked(H0):
        return OrthoTarget(beta=_boundary_beta_blocked(U, lift, H0), U=U)
    beta, U = beta_opt(U, coeffs)
    if beta <= 0.0:
        raise DegenerateSelectionError("Heuristic target has f(U) = 0 with a non-zero direct channel")
    return OrthoTarget(beta=beta, U=U)


@dataclass(frozen=True)
class BetaFixedPoint:
    """Result of pushing beta to the passivity boundary for fixed U.

    ``betas`` and ``norms`` trace the fixed-point iterates and their
    ``||Theta||_2^2``; ``beta`` and ``final_norm`` are the settled values.
    """

    beta: float
    final_norm: float
    betas: list[float]
    norms: list[float]


def maximize_beta_fixed_U(
    U: np.ndarray,
    coeffs: CostCoefficients,
    lift: np.ndarray,
    H0: np.ndarray,
    beta0: float,
    opts: SelectionOptions = DEFAULT_OPTIONS,
) -> BetaFixedPoint:
    """Largest beta with ``||Theta(beta, U)||_2^2 == 1``, starting from a passive beta0.

    Alternates between the top right singular vector x of Theta(beta_i) and
    the largest root in sqrt(beta) of ``||Theta(beta) x||^2 == 1``. The norm
    is convex in sqrt(beta), so after the first step the iterates approach
    the boundary from above with non-increasing norm. A final bisection
    settles on the passive side of the boundary.

    A beta0 already within ``boundary_tol`` of the boundary is returned
    unchanged.

    Raises:
        ValueError: If beta0 is active beyond the passivity slack
        DegenerateSelectionError: If the quadratic has no positive root
    """
    N = int(round(np.sqrt(lift.shape[0])))
    A = unvec(lift @ vec(U), N, N)
    B = unvec(lift @ vec(np.asarray(H0, dtype=np.complex128)), N, N)

    def norm_sq(s: float) -> float:
        return reflection_power(s * s, U, lift, H0)

    beta0 = max(beta0, 0.0)
    s0 = np.sqrt(beta0)
    phi0 = reflection_power(beta0, U, lift, H0)
    if phi0 > 1.0 + PASSIVITY_SLACK:
        raise ValueError(f"Starting gain is not passive (||Theta||_2^2 = {phi0:.6g})")
    if phi0 >= 1.0 - opts.boundary_tol:
        return BetaFixedPoint(beta=beta0, final_norm=phi0, betas=[beta0], norms=[phi0])

    betas = [beta0]
    norms = [phi0]
    s = s0
    for _ in range(opts.max_beta_iterations):
        _, x = top_right_singular_vector(s * A - B)
        a = A @ x
        b = B @ x
        qa = float(np.real(np.vdot(a, a)))
        qb = float(np.real(np.vdot(a, b)))
        qc = float(np.real(np.vdot(b, b))) - 1.0
        disc = qb * qb - qa * qc
        if qa <= 0.0 or disc < 0.0:
            raise DegenerateSelectionError("Boundary quadratic has no real root")
        s_new = (qb + np.sqrt(disc)) / qa
        if s_new <= 0.0:
            raise DegenerateSelectionError("Boundary quadratic has no positive root")
        phi = norm_sq(s_new)
        betas.append(s_new * s_new)
        norms.append(phi)
        converged = abs(s_new * s_new - s * s) <= opts.beta_rtol * s_new * s_new
        s = s_new
        if converged:
            break
    else:
        logger.debug("Gain fixed point hit the %d iteration cap", opts.max_beta_iterations)

    lo, hi = s0, s
    phi_hi = norms[-1]
    if phi_hi <= 1.0:
        return BetaFixedPoint(beta=hi * hi, final_norm=phi_hi, betas=betas, norms=norms)

    phi_lo = phi0
    for _ in range(200):
        if 1.0 - phi_lo <= opts.boundary_tol:
            break
        mid = 0.5 * (lo + hi)
        phi_mid = norm_sq(mid)
        if phi_mid <= 1.0:
            lo, phi_lo = mid, phi_mid
        else:
            hi = mid
    return BetaFixedPoint(beta=lo * lo, final_norm=phi_lo, betas=betas, norms=norms)


@dataclass
class SelectionTrace:
    """Iteration log of a selection run."""

    ratio: list[float] = field(default_factory=list)
    power: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    truncated_descents: int = 0


@dataclass
class SelectionOutcome:
    """Selected target and the reflection matrix that produces it."""

    target: Optional[OrthoTarget]
    theta: np.ndarray
    status: SelectionStatus
    trace: SelectionTrace
    residual: float
    constraint: ConstraintReport

    @property
    def orthogonalized(self) -> bool:
        return self.status is SelectionStatus.ORTHOGONALIZED

    @property
    def beta_or_zero(self) -> float:
        """Gain with the failure convention: zero unless orthogonalized."""
        if self.orthogonalized and self.target is not None:
            return self.target.beta
        return 0.0


def _outcome(
    kind: RsKind,
    beta: float,
    U: np.ndarray,
    lift: np.ndarray,
    H0: np.ndarray,
    channels: ChannelTriple,
    status: SelectionStatus,
    trace: SelectionTrace,
) -> SelectionOutcome:
    theta = reflection_for(max(beta, 0.0), U, lift, H0)
    target = OrthoTarget(beta=beta, U=U) if beta > 0.0 else None
    desired = np.sqrt(max(beta, 0.0)) * U
    residual = float(np.linalg.norm(channels.achieved(theta) - desired, "fro"))
    return SelectionOutcome(
        target=target,
        theta=theta,
        status=status,
        trace=trace,
        residual=residual,
        constraint=check(theta, kind),
    )


def select_channel(
    kind: RsKind | str,
    channels: ChannelTriple,
    opts: SelectionOptions = DEFAULT_OPTIONS,
    mode: SelectionMode | str = SelectionMode.ALGORITHM1,
    emap: Optional[EffectiveMap] = None,
    rng: Optional[np.random.Generator] = None,
) -> SelectionOutcome:
    """Select an orthogonal channel reachable with a passive surface.

    ``emap`` may carry an estimated effective map; the reflection matrix is
    then configured from it while ``channels`` supplies the direct channel
    used in the selection and the channels used for the residual.

    Raises:
        InfeasibleError: If the effective map is rank infeasible
    """
    kind = RsKind.parse(kind)
    mode = SelectionMode(mode)
    if emap is None:
        emap = build_effective_map(kind, channels.H1, channels.H2)
    if not emap.rank_feasible:
        raise InfeasibleError(
            f"{kind.value} map with N={emap.N} has rank {emap.rank} < MK = {emap.M * emap.K}"
        )

    lift = emap.lift
    H0 = channels.H0
    coeffs = cost_coefficients(lift, H0)
    blocked = _is_blocked(H0)
    trace = SelectionTrace()

    def power(beta: float, U: np.ndarray) -> float:
        return reflection_power(beta, U, lift, H0)

    def failure(beta: float, U: np.ndarray) -> SelectionOutcome:
        return _outcome(kind, beta, U, lift, H0, channels, SelectionStatus.NEEDS_AMPLIFICATION, trace)

    # RS power minimization for initialization
    try:
        if mode is SelectionMode.RANDOM:
            if rng is None:
                raise ValueError("Random selection needs an rng")
            U = haar_semi_unitary(channels.M, channels.K, rng)
            if blocked:
                beta = _boundary_beta_blocked(U, lift, H0, opts.boundary_tol)
            else:
                beta, U = beta_opt(U, coeffs)
        else:
            start = heuristic_init(coeffs, lift, H0)
            beta, U = start.beta, start.U
    except DegenerateSelectionError as e:
        logger.debug("Selection start is degenerate: %s", e)
        return failure(0.0, top_identity(channels.M, channels.K))

    if not blocked and beta > 0.0:
        trace.ratio.append(coeffs.f(U) ** 2 / coeffs.g(U))

    if mode is SelectionMode.ALGORITHM1 and not blocked and power(beta, U) > 1.0:
        ascent = riemannian_descent(DescentObjective.MAXIMIZE_RATIO, U, coeffs, opts=opts)
        trace.ratio.extend(ascent.trace[1:])
        trace.truncated_descents += int(ascent.truncated)
        try:
            beta, U = beta_opt(stiefel_project(ascent.U), coeffs)
        except DegenerateSelectionError as e:
            logger.debug("Ratio ascent ended at a degenerate point: %s", e)
            return failure(0.0, U)

    if beta <= 0.0 or power(beta, U) > 1.0 + PASSIVITY_SLACK:
        return failure(beta, U)

    # Channel gain maximization
    def push_to_boundary(beta: float, U: np.ndarray) -> float:
        return maximize_beta_fixed_U(U, coeffs, lift, H0, beta, opts).beta

    try:
        beta = push_to_boundary(beta, U)
    except DegenerateSelectionError as e:
        logger.debug("Gain maximization failed at the start: %s", e)
        return failure(beta, U)
    trace.betas.append(beta)

    if mode is SelectionMode.ALGORITHM1:
        for outer in range(opts.max_outer_iterations):
            descent = riemannian_descent(DescentObjective.MINIMIZE_POWER, U, coeffs, beta=beta, opts=opts)
            trace.power.extend(descent.trace)
            trace.truncated_descents += int(descent.truncated)
            U_next = stiefel_project(descent.U)
            if power(beta, U_next) >= 1.0:
                break
            try:
                beta_next = maximize_beta_fixed_U(U_next, coeffs, lift, H0, beta, opts).beta
            except DegenerateSelectionError as e:
                logger.debug("Gain maximization stopped at outer iteration %d: %s", outer, e)
                break
            if beta_next < beta:
                break
            previous = beta
            U, beta = U_next, beta_next
            trace.betas.append(beta)
            if beta - previous <= opts.beta_rtol * beta:
                break
        else:
            logger.debug("Channel selection hit the %d outer iteration cap", opts.max_outer_iterations)

    U = stiefel_project(U)
    if power(beta, U) > 1.0 + PASSIVITY_SLACK:
        return failure(beta, U)
    return _outcome(kind, beta, U, lift, H0, channels, SelectionStatus.ORTHOGONALIZED, trace)
