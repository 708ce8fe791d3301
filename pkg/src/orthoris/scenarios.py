"""Channel generators and baseline receivers.

Two channel families are supported: IID Rayleigh with a tunable direct-link
power, and an indoor Rician room where a BS panel and an RS panel hang on
two walls and single-antenna UEs stand in the far corner.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from orthoris.errors import GeometryError
from orthoris.matcore import condition_number, crandn, numeric_rank
from orthoris.solvers import ChannelTriple

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

# Distances below this (in wavelengths) count as a UE sitting on an element
MIN_DISTANCE_WAVELENGTHS = 1e-9

CALIBRATION_DRAWS = 1000
CALIBRATION_SEED = 0


def db_to_linear(value_db: float) -> float:
    """Power ratio for a dB value; ``inf`` maps to ``inf``."""
    return float(10.0 ** (value_db / 10.0))


@dataclass(frozen=True)
class RayleighConfig:
    """IID Rayleigh triple with unit-power cascaded links and direct power ``eta``."""

    M: int
    K: int
    N: int
    eta: float = 1.0

    def __post_init__(self):
        if min(self.M, self.K, self.N) < 1:
            raise ValueError(f"M, K and N must be positive, got M={self.M}, K={self.K}, N={self.N}")
        if self.eta < 0.0:
            raise ValueError(f"Direct channel power must be non-negative, got {self.eta}")


def gen_rayleigh(cfg: RayleighConfig, rng: np.random.Generator) -> ChannelTriple:
    """Draw H0 (power eta), H1 and H2 (unit power), all element-IID CN."""
    H0 = crandn(rng, cfg.M, cfg.K, power=cfg.eta) if cfg.eta > 0.0 else np.zeros((cfg.M, cfg.K))
    H1 = crandn(rng, cfg.M, cfg.N)
    H2 = crandn(rng, cfg.N, cfg.K)
    return ChannelTriple(H0=H0, H1=H1, H2=H2)


@dataclass(frozen=True)
class RicianGeometry:
    """Room layout in wavelengths.

    The room spans ``[0, room] x [0, room]`` on the floor plan. The BS panel
    hangs on the wall ``y = 0`` facing +y, the RS panel on the wall ``x = 0``
    facing +x. Panels are centred at ``bs_center`` / ``rs_center`` and their
    second axis is vertical. UEs are drawn uniformly in the rectangle
    ``ue_area = (x_lo, x_hi, y_lo, y_hi)`` at height ``ue_height``.
    """

    room: float = 30.0
    spacing: float = 0.5
    bs_panel: tuple[int, int] = (2, 2)
    rs_panel: tuple[int, int] = (6, 2)
    bs_center: tuple[float, float, float] = (20.0, 0.0, 3.0)
    rs_center: tuple[float, float, float] = (0.0, 12.0, 3.0)
    ue_area: tuple[float, float, float, float] = (8.0, 28.0, 14.0, 28.0)
    ue_height: float = 1.0

    @property
    def M(self) -> int:
        return self.bs_panel[0] * self.bs_panel[1]

    @property
    def N(self) -> int:
        return self.rs_panel[0] * self.rs_panel[1]

    def _panel(self, center, shape, along) -> np.ndarray:
        offsets_h = (np.arange(shape[0]) - (shape[0] - 1) / 2.0) * self.spacing
        offsets_v = (np.arange(shape[1]) - (shape[1] - 1) / 2.0) * self.spacing
        points = []
        for dv in offsets_v:
            for dh in offsets_h:
                p = np.array(center, dtype=float)
                p[along] += dh
                p[2] += dv
                points.append(p)
        return np.array(points)

    def bs_elements(self) -> np.ndarray:
        return self._panel(self.bs_center, self.bs_panel, along=0)

    def rs_elements(self) -> np.ndarray:
        return self._panel(self.rs_center, self.rs_panel, along=1)

    @property
    def bs_normal(self) -> np.ndarray:
        return np.array([0.0, 1.0, 0.0])

    @property
    def rs_normal(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0])

    def sample_ues(self, K: int, rng: np.random.Generator) -> np.ndarray:
        x_lo, x_hi, y_lo, y_hi = self.ue_area
        x = rng.uniform(x_lo, x_hi, K)
        y = rng.uniform(y_lo, y_hi, K)
        return np.column_stack([x, y, np.full(K, self.ue_height)])


@dataclass(frozen=True)
class RicianConfig:
    """Indoor Rician scenario.

    Attributes:
        frequency_hz: carrier frequency
        rician_factor_db: LoS-to-NLoS power ratio, applied to every link
        K: number of UEs
        blockage_db: extra attenuation of the direct link (``inf`` removes it)
        geometry: room layout in wavelengths
    """

    frequency_hz: float = 3e9
    rician_factor_db: float = 5.0
    K: int = 3
    blockage_db: float = 0.0
    geometry: RicianGeometry = field(default_factory=RicianGeometry)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def M(self) -> int:
        return self.geometry.M

    @property
    def N(self) -> int:
        return self.geometry.N


@dataclass(frozen=True)
class _Link:
    amplitude: np.ndarray
    phase: np.ndarray


def _link(
    sources: np.ndarray,
    sinks: np.ndarray,
    sink_normal: np.ndarray,
    source_normal: Optional[np.ndarray] = None,
) -> _Link:
    """Free-space link from ``sources`` to ``sinks`` (shape sinks x sources), in wavelengths.

    Each sink element captures ``A_e cos(theta_in)`` of the incident power
    density, with ``A_e = (1/2)^2`` for half-wavelength elements. A re-radiating
    source adds the element gain ``4 pi A_e cos(theta_out)``.
    """
    area = 0.25
    delta = sinks[:, None, :] - sources[None, :, :]
    distance = np.linalg.norm(delta, axis=2)
    if np.any(distance < MIN_DISTANCE_WAVELENGTHS):
        raise GeometryError("A UE coincides with a panel element")

    cos_in = np.abs(delta @ sink_normal) / distance
    power = area * cos_in / (4.0 * np.pi * distance**2)
    if source_normal is not None:
        cos_out = np.abs(delta @ source_normal) / distance
        power = power * 4.0 * np.pi * area * cos_out
    return _Link(amplitude=np.sqrt(power), phase=-2.0 * np.pi * distance)


def _mix(link: _Link, kappa: float, rng: np.random.Generator) -> np.ndarray:
    los = link.amplitude * np.exp(1j * link.phase)
    if np.isinf(kappa):
        return los
    nlos = link.amplitude * crandn(rng, *link.amplitude.shape)
    return np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * nlos


@lru_cache(maxsize=32)
def direct_link_scale(geometry: RicianGeometry, K: int) -> float:
    """Amplitude scale giving the unblocked direct link unit mean element power.

    Averages the direct-link path gain over ``CALIBRATION_DRAWS`` UE
    placements drawn from a fixed stream.
    """
    rng = np.random.default_rng(CALIBRATION_SEED)
    bs = geometry.bs_elements()
    total = 0.0
    for _ in range(CALIBRATION_DRAWS):
        ues = geometry.sample_ues(K, rng)
        total += float(np.mean(_link(ues, bs, geometry.bs_normal).amplitude ** 2))
    return float(np.sqrt(CALIBRATION_DRAWS / total))


def gen_rician(
    cfg: RicianConfig,
    rng: np.random.Generator,
    positions: Optional[np.ndarray] = None,
) -> ChannelTriple:
    """Draw a Rician triple for UEs at ``positions`` (K x 3, in wavelengths).

    Positions are sampled from the UE area when omitted. H0 and H1 carry the
    normalization that puts the mean direct-link element SNR at the nominal
    SNR; H0 is further attenuated by ``blockage_db``.

    Raises:
        GeometryError: If a UE sits on a panel element
    """
    geometry = cfg.geometry
    if positions is None:
        positions = geometry.sample_ues(cfg.K, rng)
    positions = np.asarray(positions, dtype=float)
    if positions.shape != (cfg.K, 3):
        raise ValueError(f"UE positions must be {cfg.K}x3, got {positions.shape}")

    kappa = db_to_linear(cfg.rician_factor_db)
    bs = geometry.bs_elements()
    rs = geometry.rs_elements()
    scale = direct_link_scale(geometry, cfg.K)

    H1 = scale * _mix(_link(rs, bs, geometry.bs_normal, source_normal=geometry.rs_normal), kappa, rng)
    H2 = _mix(_link(positions, rs, geometry.rs_normal), kappa, rng)
    H0 = scale * _mix(_link(positions, bs, geometry.bs_normal), kappa, rng)

    if np.isinf(cfg.blockage_db):
        H0 = np.zeros_like(H0)
    else:
        H0 = H0 / np.sqrt(db_to_linear(cfg.blockage_db))
    return ChannelTriple(H0=H0, H1=H1, H2=H2)


@dataclass(frozen=True)
class RateReport:
    """Per-UE spectral efficiencies in bits/s/Hz."""

    per_ue_rates: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_ue_rates))

    @property
    def min(self) -> float:
        return float(np.min(self.per_ue_rates))

    @property
    def max(self) -> float:
        return float(np.max(self.per_ue_rates))


def rate_report(rates) -> RateReport:
    return RateReport(per_ue_rates=tuple(float(r) for r in rates))


def sinr_mrc(H: np.ndarray, snr: float) -> np.ndarray:
    """Per-UE SINR of the matched filter ``h_k^H``."""
    H = np.asarray(H, dtype=np.complex128)
    gram = H.conj().T @ H
    norms = np.real(np.diag(gram))
    cross = np.abs(gram) ** 2
    interference = np.sum(cross, axis=1) - norms**2
    denominator = snr * interference + norms
    sinr = np.zeros_like(norms)
    active = norms > 0.0
    sinr[active] = snr * norms[active] ** 2 / denominator[active]
    return sinr


def mrc_rates(H: np.ndarray, snr: float) -> RateReport:
    return rate_report(np.log2(1.0 + sinr_mrc(H, snr)))


def zf_rates(H: np.ndarray, snr: float) -> RateReport:
    """Zero-forcing rates; a rank-deficient channel yields zero for every UE."""
    H = np.asarray(H, dtype=np.complex128)
    K = H.shape[1]
    if numeric_rank(H) < K:
        logger.debug("Rank-deficient channel under zero forcing")
        return rate_report(np.zeros(K))
    enhancement = np.real(np.diag(np.linalg.inv(H.conj().T @ H)))
    return rate_report(np.log2(1.0 + snr / enhancement))


def orthogonal_rates(beta: float, snr: float, K: int) -> RateReport:
    """Rates of an orthogonal channel ``sqrt(beta) U``: every UE gets ``log2(1 + beta snr)``."""
    return rate_report(np.full(K, np.log2(1.0 + beta * snr)))


@dataclass(frozen=True)
class RisBaselineOptions:
    iterations: int = 200
    restarts: int = 5
    initial_step: float = np.pi / 4
    min_step: float = 1e-9

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"RIS baseline needs at least one restart, got {self.restarts}")


@dataclass
class RisBaselineResult:
    """Best phase configuration found and its condition number."""

    theta: np.ndarray
    condition: float
    trace: list[float]


def _condition_and_gradient(channels: ChannelTriple, phases: np.ndarray) -> tuple[float, np.ndarray]:
    weights = np.exp(1j * phases)
    H = channels.H0 + (channels.H1 * weights) @ channels.H2
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s[-1] <= 0.0:
        return float("inf"), np.zeros_like(phases)

    def singular_value_gradient(i: int) -> np.ndarray:
        # d sigma_i / d phi_n = Re(j e^{j phi_n} (u_i^H h1_n)(h2_n^T v_i))
        left = U[:, i].conj() @ channels.H1
        right = channels.H2 @ Vh[i].conj()
        return np.real(1j * weights * left * right)

    top, bottom = s[0], s[-1]
    grad = (singular_value_gradient(0) * bottom - top * singular_value_gradient(len(s) - 1)) / bottom**2
    return float(top / bottom), grad


def ris_phase_baseline(
    channels: ChannelTriple,
    rng: np.random.Generator,
    opts: RisBaselineOptions = RisBaselineOptions(),
) -> RisBaselineResult:
    """Unit-modulus diagonal reflection minimizing the channel condition number.

    Gradient descent on the phases with the step halved whenever a step
    fails to improve, restarted from ``opts.restarts`` random phase vectors.
    """
    best: Optional[RisBaselineResult] = None
    for restart in range(opts.restarts):
        phases = rng.uniform(0.0, 2.0 * np.pi, channels.N)
        cond, grad = _condition_and_gradient(channels, phases)
        trace = [cond]
        step = opts.initial_step
        for _ in range(opts.iterations):
            scale = float(np.max(np.abs(grad)))
            if not np.isfinite(cond) or scale == 0.0 or step < opts.min_step:
                break
            candidate = phases - step * grad / scale
            cond_new, grad_new = _condition_and_gradient(channels, candidate)
            if cond_new < cond:
                phases, cond, grad = candidate, cond_new, grad_new
                trace.append(cond)
            else:
                step *= 0.5

        result = RisBaselineResult(theta=np.diag(np.exp(1j * phases)), condition=cond, trace=trace)
        if best is None or result.condition < best.condition:
            best = result
        logger.debug("RIS baseline restart %d reached condition number %.4g", restart, cond)

    assert best is not None
    return best


def ris_condition_number(channels: ChannelTriple, theta: np.ndarray) -> float:
    return condition_number(channels.achieved(theta))
