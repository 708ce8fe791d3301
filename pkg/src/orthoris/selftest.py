"""Fast invariant checks run by ``orthoris selftest``."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from orthoris.estimation import dft_pilots, estimate_effective_map
from orthoris.matcore import condition_number, crandn, haar_semi_unitary, spectral_norm, stiefel_project
from orthoris.rs_models import RsKind
from orthoris.selection import (
    cost_coefficients,
    frobenius_power,
    gradients,
    select_channel,
)
from orthoris.solvers import ChannelTriple, build_effective_map, min_elements, solve

logger = logging.getLogger(__name__)

M, K = 4, 2
SOLVABLE = (RsKind.ARIS, RsKind.BDRIS, RsKind.FRIS)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_triple(rng: np.random.Generator, N: int, blocked: bool = False) -> ChannelTriple:
    H0 = np.zeros((M, K)) if blocked else crandn(rng, M, K)
    return ChannelTriple(H0=H0, H1=crandn(rng, M, N), H2=crandn(rng, N, K))


def check_solver_exactness(rng: np.random.Generator, trials: int = 20) -> CheckResult:
    worst = 0.0
    for kind in SOLVABLE:
        N = min_elements(kind, M, K)
        for _ in range(trials):
            channels = _random_triple(rng, N)
            target = crandn(rng, M, K)
            report = solve(kind, channels, target)
            worst = max(worst, report.residual / np.linalg.norm(target, "fro"))
    return CheckResult("solver exactness at minimum N", worst <= 1e-8, f"worst relative residual {worst:.2e}")


def check_bound_sharpness(rng: np.random.Generator, trials: int = 20) -> CheckResult:
    feasible = 0
    for kind in (RsKind.ARIS, RsKind.BDRIS):
        N = min_elements(kind, M, K) - 1
        for _ in range(trials):
            channels = _random_triple(rng, N)
            feasible += int(build_effective_map(kind, channels.H1, channels.H2).rank_feasible)
    return CheckResult("rank infeasible below minimum N", feasible == 0, f"{feasible} feasible draws")


def check_blocked_feasibility(rng: np.random.Generator, trials: int = 5) -> CheckResult:
    failures = []
    for kind in SOLVABLE:
        N = min_elements(kind, M, K)
        for _ in range(trials):
            channels = _random_triple(rng, N, blocked=True)
            outcome = select_channel(kind, channels)
            power = spectral_norm(outcome.theta) ** 2
            achieved = channels.achieved(outcome.theta)
            if (
                not outcome.orthogonalized
                or not 1.0 - 1e-6 <= power <= 1.0 + 1e-9
                or condition_number(achieved) > 1.0 + 1e-6
            ):
                failures.append(kind.value)
    detail = "all orthogonalized on the passivity boundary" if not failures else f"failed: {', '.join(failures)}"
    return CheckResult("blocked direct channel is always orthogonalized", not failures, detail)


def check_gradients(rng: np.random.Generator, points: int = 5, h: float = 1e-6) -> CheckResult:
    worst = 0.0
    emap = build_effective_map(RsKind.FRIS, crandn(rng, M, M), crandn(rng, M, K))
    H0 = crandn(rng, M, K)
    coeffs = cost_coefficients(emap.lift, H0)
    for _ in range(points):
        U = haar_semi_unitary(M, K, rng)
        D = crandn(rng, M, K)
        beta = float(rng.uniform(0.1, 2.0))
        grads = gradients(U, beta, coeffs)

        def ratio(X):
            return coeffs.f(X) ** 2 / coeffs.g(X)

        def power(X):
            return frobenius_power(beta, X, coeffs)

        pairs: list[tuple[Callable[[np.ndarray], float], np.ndarray]] = [
            (coeffs.f, grads.f_prime),
            (coeffs.g, 2.0 * grads.g_prime),
            (ratio, grads.ratio_grad),
            (power, grads.fixed_beta_grad),
        ]
        for fn, grad in pairs:
            numeric = (fn(U + h * D) - fn(U - h * D)) / (2.0 * h)
            analytic = float(np.real(np.vdot(grad, D)))
            worst = max(worst, abs(numeric - analytic) / max(1.0, abs(analytic)))
    return CheckResult("gradients match finite differences", worst <= 1e-5, f"worst relative error {worst:.2e}")


def check_estimation_identifiability(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for kind in SOLVABLE:
        channels = _random_triple(rng, min_elements(kind, M, K))
        result = estimate_effective_map(kind, channels, dft_pilots(K), 0.0, rng, H0_hat=channels.H0)
        exact = build_effective_map(kind, channels.H1, channels.H2).matrix
        worst = max(worst, float(np.max(np.abs(result.effective_hat - exact))))
    return CheckResult("noiseless estimation recovers the effective map", worst <= 1e-10, f"max deviation {worst:.2e}")


def check_stiefel_projection(rng: np.random.Generator, trials: int = 10) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        U = stiefel_project(crandn(rng, M, K))
        worst = max(worst, float(np.linalg.norm(U.conj().T @ U - np.eye(K))))
    return CheckResult("Stiefel projection is semi-unitary", worst <= 1e-12, f"worst defect {worst:.2e}")


CHECKS = [
    check_solver_exactness,
    check_bound_sharpness,
    check_blocked_feasibility,
    check_gradients,
    check_estimation_identifiability,
    check_stiefel_projection,
]


def run_selftest(seed: int = 0) -> list[CheckResult]:
    """Run every check with its own stream derived from ``seed``."""
    results = []
    for index, check in enumerate(CHECKS):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        result = check(rng)
        logger.debug("%s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
        results.append(result)
    return results
