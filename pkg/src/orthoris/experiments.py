"""Monte Carlo sweeps and their CSV output.

Three sweep families are provided:

* gain sweep: channel gain and failure rate against the direct-link power
  on IID Rayleigh channels;
* CSI sweep: condition number of the true channel when the surface is
  configured from noisy estimates, against the estimation SNR;
* Rician sweep: per-UE spectral efficiency in the indoor room against the
  SNR, for several blockage levels, next to MRC and ZF without a surface.

Every trial draws from its own stream derived from (seed, point, trial), so
results do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, fields
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from orthoris.config import ExperimentKind, SweepSpec
from orthoris.errors import ConfigError, InfeasibleError
from orthoris.estimation import EstimationMode, estimate_channels
from orthoris.matcore import condition_number_db
from orthoris.rs_models import RsKind
from orthoris.runner import TrialKey, TrialRunner, trial_keys
from orthoris.scenarios import (
    RateReport,
    RayleighConfig,
    RicianConfig,
    db_to_linear,
    gen_rayleigh,
    gen_rician,
    mrc_rates,
    orthogonal_rates,
    ris_phase_baseline,
    zf_rates,
)
from orthoris.selection import SelectionMode, SelectionOutcome, select_channel
from orthoris.solvers import ChannelTriple

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.9g}"

BASELINE_MRC = "mrc"
BASELINE_ZF = "zf"

# Extra stream indices split off a trial key
_RIS_STREAM = 1
_PLACEMENT_STREAM = 2
_SELECTION_STREAM = 3


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one trial for one method."""

    beta: float
    failed: bool
    cond_db: float
    rate_mean: float
    rate_min: float
    rate_max: float

    @classmethod
    def from_rates(cls, beta: float, failed: bool, cond_db: float, rates: RateReport) -> "TrialRecord":
        return cls(
            beta=beta,
            failed=failed,
            cond_db=cond_db,
            rate_mean=rates.mean,
            rate_min=rates.min,
            rate_max=rates.max,
        )


@dataclass(frozen=True)
class ExperimentRow:
    """One aggregated CSV row; field order is the column order."""

    sweep_value: float
    blockage_db: Optional[float]
    kind: str
    N: int
    mean_beta: float
    p_fail: float
    mean_cond_db: float
    rate_mean: float
    rate_min: float
    rate_max: float
    trials: int
    seed: int

    @classmethod
    def csv_header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def csv_fields(self) -> list[str]:
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                out.append("")
            elif isinstance(value, float):
                out.append(FLOAT_FORMAT.format(value))
            else:
                out.append(str(value))
        return out


def write_csv(rows: Iterable[ExperimentRow], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(ExperimentRow.csv_header())
    for row in rows:
        writer.writerow(row.csv_fields())


def aggregate(
    records: Sequence[TrialRecord],
    sweep_value: float,
    kind: str,
    N: int,
    seed: int,
    blockage_db: Optional[float] = None,
) -> ExperimentRow:
    """Reduce trial records in order.

    Failed trials count with beta = 0 and zero rates; the condition number is
    averaged over the successful trials only (NaN when there are none).
    """
    if not records:
        raise ValueError("Cannot aggregate an empty set of trials")
    successes = [r.cond_db for r in records if not r.failed]
    for index, record in enumerate(records):
        logger.debug(
            "point %g kind %s trial %d: beta=%.9g failed=%s cond_db=%.6g",
            sweep_value,
            kind,
            index,
            record.beta,
            record.failed,
            record.cond_db,
        )
    return ExperimentRow(
        sweep_value=float(sweep_value),
        blockage_db=None if blockage_db is None else float(blockage_db),
        kind=kind,
        N=N,
        mean_beta=float(np.mean([r.beta for r in records])),
        p_fail=float(np.mean([r.failed for r in records])),
        mean_cond_db=float(np.mean(successes)) if successes else math.nan,
        rate_mean=float(np.mean([r.rate_mean for r in records])),
        rate_min=float(np.mean([r.rate_min for r in records])),
        rate_max=float(np.mean([r.rate_max for r in records])),
        trials=len(records),
        seed=seed,
    )


def _zero_rates(K: int) -> RateReport:
    return RateReport(per_ue_rates=(0.0,) * K)


def _mean_gain(H: np.ndarray) -> float:
    return float(np.mean(np.linalg.svd(H, compute_uv=False) ** 2))


def _ris_records(channels: ChannelTriple, rng: np.random.Generator, snrs: Sequence[float]) -> list[TrialRecord]:
    # RIS never fails; its gain is the mean squared singular value
    H = channels.achieved(ris_phase_baseline(channels, rng).theta)
    beta = _mean_gain(H)
    cond = condition_number_db(H)
    return [TrialRecord.from_rates(beta, False, cond, mrc_rates(H, snr)) for snr in snrs]


def _selection_record(outcome: Optional[SelectionOutcome], true_channel: Optional[np.ndarray], snr: float, K: int) -> TrialRecord:
    if outcome is None or not outcome.orthogonalized or true_channel is None:
        return TrialRecord.from_rates(0.0, True, math.nan, _zero_rates(K))
    beta = outcome.beta_or_zero
    return TrialRecord.from_rates(beta, False, condition_number_db(true_channel), orthogonal_rates(beta, snr, K))


@dataclass(frozen=True)
class _GainJob:
    key: TrialKey
    kind: RsKind
    kind_index: int
    M: int
    K: int
    N: int
    eta: float
    snr: float
    selection: SelectionMode


def _gain_trial(job: _GainJob) -> TrialRecord:
    rng = job.key.rng(job.kind_index)
    channels = gen_rayleigh(RayleighConfig(M=job.M, K=job.K, N=job.N, eta=job.eta), rng)
    if job.kind is RsKind.RIS:
        return _ris_records(channels, job.key.rng(job.kind_index, _RIS_STREAM), [job.snr])[0]
    try:
        outcome = select_channel(job.kind, channels, mode=job.selection, rng=rng)
    except InfeasibleError:
        return _selection_record(None, None, job.snr, job.K)
    return _selection_record(outcome, channels.achieved(outcome.theta), job.snr, job.K)


def run_gain_sweep(spec: SweepSpec, runner: Optional[TrialRunner] = None) -> list[ExperimentRow]:
    """Channel gain and failure rate per (eta, kind) on Rayleigh channels."""
    runner = runner or TrialRunner(spec.workers)
    snr = db_to_linear(spec.snr_db)
    rows = []
    for point, eta_db in enumerate(spec.sweep.values()):
        eta = db_to_linear(eta_db)
        for kind_index, kind in enumerate(spec.kinds):
            N = spec.elements(kind)
            jobs = [
                _GainJob(key, kind, kind_index, spec.M, spec.K, N, eta, snr, spec.selection)
                for key in trial_keys(spec.seed, point, spec.trials)
            ]
            records = runner.map(_gain_trial, jobs)
            rows.append(aggregate(records, eta_db, kind.value, N, spec.seed))
    return rows


@dataclass(frozen=True)
class _CsiJob:
    key: TrialKey
    kind: RsKind
    kind_index: int
    M: int
    K: int
    N: int
    noise_power: float
    snr: float
    selection: SelectionMode
    mode: EstimationMode


def _csi_trial(job: _CsiJob) -> TrialRecord:
    rng = job.key.rng(job.kind_index)
    channels = gen_rayleigh(RayleighConfig(M=job.M, K=job.K, N=job.N, eta=0.0), rng)
    if job.kind is RsKind.RIS:
        # Phase-only surfaces have no estimation procedure; they see the true channel
        return _ris_records(channels, job.key.rng(job.kind_index, _RIS_STREAM), [job.snr])[0]

    estimate, emap = estimate_channels(job.kind, channels, job.noise_power, rng, mode=job.mode)
    try:
        outcome = select_channel(
            job.kind, channels.with_direct(estimate.H0_hat), mode=job.selection, emap=emap, rng=rng
        )
    except InfeasibleError:
        return _selection_record(None, None, job.snr, job.K)
    if not outcome.orthogonalized:
        return _selection_record(outcome, None, job.snr, job.K)
    H = channels.achieved(outcome.theta)
    return TrialRecord.from_rates(outcome.beta_or_zero, False, condition_number_db(H), mrc_rates(H, job.snr))


def run_csi_sweep(spec: SweepSpec, runner: Optional[TrialRunner] = None) -> list[ExperimentRow]:
    """Condition number of the true channel per (estimation SNR, kind), direct link blocked.

    Pilots carry unit symbol energy, so the noise power is the inverse of the
    estimation SNR.
    """
    runner = runner or TrialRunner(spec.workers)
    snr = db_to_linear(spec.snr_db)
    rows = []
    for point, est_snr_db in enumerate(spec.sweep.values()):
        noise_power = 1.0 / db_to_linear(est_snr_db)
        for kind_index, kind in enumerate(spec.kinds):
            N = spec.elements(kind)
            jobs = [
                _CsiJob(
                    key, kind, kind_index, spec.M, spec.K, N,
                    noise_power, snr, spec.selection, spec.estimation_mode,
                )
                for key in trial_keys(spec.seed, point, spec.trials)
            ]
            records = runner.map(_csi_trial, jobs)
            rows.append(aggregate(records, est_snr_db, kind.value, N, spec.seed))
    return rows


@dataclass(frozen=True)
class _RicianJob:
    key: TrialKey
    placement: TrialKey
    config: RicianConfig
    kinds: tuple[RsKind, ...]
    snrs: tuple[float, ...]
    selection: SelectionMode


def _rician_trial(job: _RicianJob) -> dict[str, list[TrialRecord]]:
    """Records per method, one per SNR point, for a single channel draw."""
    positions = job.config.geometry.sample_ues(job.config.K, job.placement.rng(_PLACEMENT_STREAM))
    rng = job.key.rng()
    channels = gen_rician(job.config, rng, positions=positions)
    K = job.config.K
    out: dict[str, list[TrialRecord]] = {}

    for kind_index, kind in enumerate(job.kinds):
        if kind is RsKind.RIS:
            out[kind.value] = _ris_records(channels, job.key.rng(_RIS_STREAM), job.snrs)
            continue
        try:
            outcome: Optional[SelectionOutcome] = select_channel(
                kind, channels, mode=job.selection, rng=job.key.rng(_SELECTION_STREAM, kind_index)
            )
        except InfeasibleError:
            outcome = None
        true_channel = channels.achieved(outcome.theta) if outcome is not None else None
        out[kind.value] = [_selection_record(outcome, true_channel, snr, K) for snr in job.snrs]

    H0 = channels.H0
    beta0 = _mean_gain(H0)
    cond0 = condition_number_db(H0) if np.any(H0) else math.inf
    out[BASELINE_MRC] = [TrialRecord.from_rates(beta0, False, cond0, mrc_rates(H0, snr)) for snr in job.snrs]
    out[BASELINE_ZF] = [TrialRecord.from_rates(beta0, False, cond0, zf_rates(H0, snr)) for snr in job.snrs]
    return out


def run_rician_sweep(spec: SweepSpec, runner: Optional[TrialRunner] = None) -> list[ExperimentRow]:
    """Per-UE spectral efficiency per (blockage, SNR, method) in the indoor room.

    Each blockage level runs ``placements x fading`` channel draws; draws
    sharing a placement share the UE positions. Every method sees the same
    draws, and the selection runs once per draw for all SNR points.

    Raises:
        ConfigError: If M or the surface sizes disagree with the room's panels
    """
    runner = runner or TrialRunner(spec.workers)
    base = RicianConfig(K=spec.K)
    if spec.M != base.M:
        raise ConfigError(f"The Rician room has an M={base.M} BS panel, got M={spec.M}")
    for kind in spec.kinds:
        if kind in spec.N and spec.N[kind] != base.N:
            raise ConfigError(f"The Rician room has an N={base.N} surface, got N={spec.N[kind]} for {kind.value}")

    snr_dbs = spec.sweep.values()
    snrs = tuple(db_to_linear(s) for s in snr_dbs)
    trials = spec.placements * spec.fading
    methods = [kind.value for kind in spec.kinds] + [BASELINE_MRC, BASELINE_ZF]
    sizes = {kind.value: base.N for kind in spec.kinds}

    rows = []
    for level, blockage_db in enumerate(spec.blockage_db):
        config = RicianConfig(K=spec.K, blockage_db=blockage_db)
        jobs = [
            _RicianJob(
                key=TrialKey(spec.seed, level, t),
                placement=TrialKey(spec.seed, level, t // spec.fading),
                config=config,
                kinds=tuple(spec.kinds),
                snrs=snrs,
                selection=spec.selection,
            )
            for t in range(trials)
        ]
        results = runner.map(_rician_trial, jobs)
        for index, snr_db in enumerate(snr_dbs):
            for method in methods:
                records = [result[method][index] for result in results]
                rows.append(aggregate(records, snr_db, method, sizes.get(method, 0), spec.seed, blockage_db=blockage_db))
    return rows


def run_sweep(spec: SweepSpec, runner: Optional[TrialRunner] = None) -> list[ExperimentRow]:
    """Dispatch on the experiment kind."""
    if spec.experiment is ExperimentKind.GAIN:
        return run_gain_sweep(spec, runner)
    if spec.experiment is ExperimentKind.CSI:
        return run_csi_sweep(spec, runner)
    return run_rician_sweep(spec, runner)
