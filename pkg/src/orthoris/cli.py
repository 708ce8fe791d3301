from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from orthoris import __version__
from orthoris.config import ExperimentKind, build_spec
from orthoris.errors import OpenCircuitError, OrthorisError
from orthoris.estimation import (
    EstimationMode,
    estimate_channels,
    pilot_budget,
    printed_bdris_budget,
)
from orthoris.experiments import run_sweep, write_csv
from orthoris.matcore import haar_semi_unitary
from orthoris.rs_models import RsKind, impedance_ports, reflection_to_impedance
from orthoris.runner import TrialRunner
from orthoris.scenarios import RayleighConfig, db_to_linear, gen_rayleigh
from orthoris.selection import SelectionMode
from orthoris.selftest import run_selftest
from orthoris.solvers import build_effective_map, min_elements, solve
from orthoris.types import SweepRange, get_click_type

app = typer.Typer(
    help="orthoris - Channel orthogonalization with passive reconfigurable surfaces",
    add_completion=False,
    no_args_is_help=True,
)
# CSV goes to stdout; status lines and logs go to stderr
console = Console(stderr=True)
report_console = Console()


def _supports_unicode() -> bool:
    """Check if the terminal supports Unicode characters."""
    # Hard stop: classic Windows console (conhost)
    if os.name == "nt" and "WT_SESSION" not in os.environ:
        return False

    encoding = sys.stderr.encoding
    if not encoding:
        return False

    try:
        "✓✗".encode(encoding)
        return True
    except UnicodeEncodeError:
        return False


def get_action_success_string() -> str:
    """Unicode tick (✓) if the terminal supports it, otherwise "[ OK ]"."""
    return "✓" if _supports_unicode() else "[ OK ]"


def get_action_failure_string() -> str:
    """Unicode cross (✗) if the terminal supports it, otherwise "[ FAIL ]"."""
    return "✗" if _supports_unicode() else "[ FAIL ]"


def _configure_logging(verbose: bool) -> None:
    logger = logging.getLogger("orthoris")
    logger.handlers.clear()
    logger.addHandler(RichHandler(console=console, show_path=False, markup=False))
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False


def _convert(type_name: str, value: Optional[str]) -> Any:
    if value is None:
        return None
    return get_click_type(type_name).convert(value, None, None)


def _fail(message: str) -> None:
    console.print(f"[red]{get_action_failure_string()} {message}[/red]")
    raise typer.Exit(1)


def _run_sweep_command(
    experiment: ExperimentKind,
    config: Optional[Path],
    out: Optional[Path],
    overrides: dict[str, Any],
) -> None:
    try:
        spec = build_spec(experiment, config, overrides)
        rows = run_sweep(spec, TrialRunner(spec.workers))
    except (OrthorisError, ValueError) as e:
        _fail(str(e))

    if out is None:
        write_csv(rows, sys.stdout)
    else:
        with open(out, "w", newline="") as f:
            write_csv(rows, f)
    console.print(
        f"[green]{get_action_success_string()} {experiment.value} sweep finished: "
        f"{len(rows)} rows{'' if out is None else f' written to {out}'}[/green]"
    )


ConfigOption = typer.Option(None, "--config", "-c", help="YAML sweep configuration (CLI flags override it)")
OutOption = typer.Option(None, "--out", "-o", help="Write CSV here instead of stdout")
SeedOption = typer.Option(None, "--seed", help="Base seed; identical seeds give identical CSV")
WorkersOption = typer.Option(None, "--workers", help="Worker processes (capped by ORTHORIS_THREADS)")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log debug output, including one line per trial")
KindsOption = typer.Option(None, "--kinds", help="Comma-separated RS kinds: ris, aris, bdris, fris")
SelectionOption = typer.Option(None, "--selection", case_sensitive=False, help="Target selection method")


@app.command("gain-sweep")
def gain_sweep(
    config: Optional[Path] = ConfigOption,
    M: Optional[int] = typer.Option(None, "--M", help="BS antennas"),
    K: Optional[int] = typer.Option(None, "--K", help="UEs"),
    N: Optional[int] = typer.Option(None, "--N", help="Surface elements for every kind (default: minimum per kind)"),
    kinds: Optional[str] = KindsOption,
    eta_db: Optional[SweepRange] = typer.Option(
        None, "--eta-db", click_type=get_click_type("range"), help="Direct-link power range lo:step:hi in dB"
    ),
    trials: Optional[int] = typer.Option(None, "--trials", help="Trials per point"),
    seed: Optional[int] = SeedOption,
    selection: Optional[SelectionMode] = SelectionOption,
    snr_db: Optional[float] = typer.Option(None, "--snr-db", help="SNR for the rate columns in dB"),
    workers: Optional[int] = WorkersOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """Channel gain and failure rate against the direct-link power (Rayleigh)."""
    _configure_logging(verbose)
    _run_sweep_command(
        ExperimentKind.GAIN,
        config,
        out,
        {
            "workers": workers,
            "M": M,
            "K": K,
            "N": N,
            "kinds": _convert("kinds", kinds),
            "sweep": eta_db,
            "trials": trials,
            "seed": seed,
            "selection": selection,
            "snr_db": snr_db,
        },
    )


@app.command("csi-sweep")
def csi_sweep(
    config: Optional[Path] = ConfigOption,
    M: Optional[int] = typer.Option(None, "--M", help="BS antennas"),
    K: Optional[int] = typer.Option(None, "--K", help="UEs"),
    N: Optional[int] = typer.Option(None, "--N", help="Surface elements for every kind (default: minimum per kind)"),
    kinds: Optional[str] = KindsOption,
    est_snr_db: Optional[SweepRange] = typer.Option(
        None, "--est-snr-db", click_type=get_click_type("range"), help="Estimation SNR range lo:step:hi in dB"
    ),
    estimation_mode: Optional[EstimationMode] = typer.Option(
        None, "--estimation-mode", case_sensitive=False, help="Measure every entry or only MK of them"
    ),
    trials: Optional[int] = typer.Option(None, "--trials", help="Trials per point"),
    seed: Optional[int] = SeedOption,
    selection: Optional[SelectionMode] = SelectionOption,
    snr_db: Optional[float] = typer.Option(None, "--snr-db", help="SNR for the rate columns in dB"),
    workers: Optional[int] = WorkersOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """Condition number under imperfect CSI against the estimation SNR (direct link blocked)."""
    _configure_logging(verbose)
    _run_sweep_command(
        ExperimentKind.CSI,
        config,
        out,
        {
            "workers": workers,
            "M": M,
            "K": K,
            "N": N,
            "kinds": _convert("kinds", kinds),
            "sweep": est_snr_db,
            "estimation_mode": estimation_mode,
            "trials": trials,
            "seed": seed,
            "selection": selection,
            "snr_db": snr_db,
        },
    )


@app.command("rician-sweep")
def rician_sweep(
    config: Optional[Path] = ConfigOption,
    K: Optional[int] = typer.Option(None, "--K", help="UEs in the room"),
    kinds: Optional[str] = KindsOption,
    snr_db: Optional[SweepRange] = typer.Option(
        None, "--snr-db", click_type=get_click_type("range"), help="SNR range lo:step:hi in dB"
    ),
    blockage_db: Optional[str] = typer.Option(None, "--blockage-db", help="Comma-separated blockage levels, e.g. 0,20,30,inf"),
    placements: Optional[int] = typer.Option(None, "--placements", help="UE placements per blockage level"),
    fading: Optional[int] = typer.Option(None, "--fading", help="Fading draws per placement"),
    seed: Optional[int] = SeedOption,
    selection: Optional[SelectionMode] = SelectionOption,
    workers: Optional[int] = WorkersOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
):
    """Per-UE spectral efficiency against the SNR in the indoor Rician room."""
    _configure_logging(verbose)
    _run_sweep_command(
        ExperimentKind.RICIAN,
        config,
        out,
        {
            "workers": workers,
            "K": K,
            "kinds": _convert("kinds", kinds),
            "sweep": snr_db,
            "blockage_db": _convert("floats", blockage_db),
            "placements": placements,
            "fading": fading,
            "seed": seed,
            "selection": selection,
        },
    )


@app.command("solve")
def solve_command(
    kind: str = typer.Option("bdris", "--kind", help="aris, bdris or fris"),
    M: int = typer.Option(4, "--M", help="BS antennas"),
    K: int = typer.Option(2, "--K", help="UEs"),
    N: Optional[int] = typer.Option(None, "--N", help="Surface elements (default: minimum for the kind)"),
    eta_db: float = typer.Option(0.0, "--eta-db", help="Direct-link power in dB"),
    beta: float = typer.Option(1.0, "--beta", help="Gain of the random orthogonal target"),
    seed: int = typer.Option(0, "--seed", help="Seed for the random instance"),
    impedance: bool = typer.Option(False, "--impedance", help="Also report the impedance network"),
    verbose: bool = VerboseOption,
):
    """Force a random orthogonal target on a random Rayleigh instance and report the result."""
    _configure_logging(verbose)
    try:
        rs_kind = RsKind.parse(kind)
        size = N if N is not None else min_elements(rs_kind, M, K)
        rng = np.random.default_rng(seed)
        channels = gen_rayleigh(RayleighConfig(M=M, K=K, N=size, eta=db_to_linear(eta_db)), rng)
        target = np.sqrt(beta) * haar_semi_unitary(M, K, rng)
        report = solve(rs_kind, channels, target)
    except (OrthorisError, ValueError) as e:
        _fail(str(e))

    table = Table(show_header=False, box=None, padding=(0, 2))
    table.add_column("Quantity", style="bold cyan", no_wrap=True)
    table.add_column("Value")
    table.add_row("kind", rs_kind.value)
    table.add_row("N", str(size))
    table.add_row("rank feasible", str(report.rank_feasible))
    table.add_row("residual", f"{report.residual:.3e}")
    table.add_row("passivity margin", f"{report.constraint.passivity_margin:.6g}")
    table.add_row("passive", str(report.passive))
    table.add_row("impedance ports", str(impedance_ports(rs_kind, size)))
    if impedance:
        try:
            Z = reflection_to_impedance(report.theta)
            table.add_row("impedance symmetry defect", f"{np.linalg.norm(Z - Z.T, 'fro'):.3e}")
            table.add_row("impedance max |Z_ij|", f"{np.max(np.abs(Z)):.6g}")
        except OpenCircuitError as e:
            table.add_row("impedance", f"unavailable ({e})")
    report_console.print(table)


@app.command("estimate")
def estimate_command(
    kind: str = typer.Option("bdris", "--kind", help="aris, bdris or fris"),
    M: int = typer.Option(4, "--M", help="BS antennas"),
    K: int = typer.Option(2, "--K", help="UEs"),
    N: Optional[int] = typer.Option(None, "--N", help="Surface elements (default: minimum for the kind)"),
    mode: EstimationMode = typer.Option(EstimationMode.FULL, "--mode", case_sensitive=False, help="Measure every entry or only MK of them"),
    est_snr_db: float = typer.Option(20.0, "--est-snr-db", help="Estimation SNR in dB"),
    seed: int = typer.Option(0, "--seed", help="Seed for the random instance"),
    verbose: bool = VerboseOption,
):
    """Estimate a random instance and report the pilot budget and estimation error."""
    _configure_logging(verbose)
    try:
        rs_kind = RsKind.parse(kind)
        size = N if N is not None else min_elements(rs_kind, M, K)
        rng = np.random.default_rng(seed)
        channels = gen_rayleigh(RayleighConfig(M=M, K=K, N=size, eta=1.0), rng)
        noise_power = 1.0 / db_to_linear(est_snr_db)
        result, emap = estimate_channels(rs_kind, channels, noise_power, rng, mode=mode)
    except (OrthorisError, ValueError) as e:
        _fail(str(e))

    exact = build_effective_map(rs_kind, channels.H1, channels.H2, columns=result.columns).matrix
    error = np.linalg.norm(result.effective_hat - exact, "fro") / np.linalg.norm(exact, "fro")
    direct_error = np.linalg.norm(result.H0_hat - channels.H0, "fro") / np.linalg.norm(channels.H0, "fro")

    table = Table(show_header=False, box=None, padding=(0, 2))
    table.add_column("Quantity", style="bold cyan", no_wrap=True)
    table.add_column("Value")
    table.add_row("kind", rs_kind.value)
    table.add_row("N", str(size))
    table.add_row("mode", mode.value)
    table.add_row("pilot slots (effective map)", str(pilot_budget(rs_kind, M, K, size, mode)))
    table.add_row("pilot slots (direct channel)", "1")
    if rs_kind is RsKind.BDRIS:
        table.add_row("closed-form BD-RIS budget", str(printed_bdris_budget(M, K)))
    table.add_row("steps used", str(result.steps_used))
    table.add_row("estimated map rank feasible", str(emap.rank_feasible))
    table.add_row("relative map error", f"{error:.3e}")
    table.add_row("relative direct error", f"{direct_error:.3e}")
    report_console.print(table)


@app.command("selftest")
def selftest_command(
    seed: int = typer.Option(0, "--seed", help="Seed for the random instances"),
    verbose: bool = VerboseOption,
):
    """Run the built-in invariant checks."""
    _configure_logging(verbose)
    results = run_selftest(seed)
    for result in results:
        if result.passed:
            console.print(f"[green]{get_action_success_string()} {result.name}[/green] [dim]({result.detail})[/dim]")
        else:
            console.print(f"[red]{get_action_failure_string()} {result.name}[/red] ({result.detail})")
    failed = sum(not r.passed for r in results)
    if failed:
        console.print(f"[red]{failed} of {len(results)} checks failed[/red]")
        raise typer.Exit(1)
    console.print(f"[green]All {len(results)} checks passed[/green]")


def _version_callback(value: bool) -> None:
    if value:
        console.print(f"orthoris {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None, "--version", callback=_version_callback, is_eager=True, help="Show version and exit"
    ),
):
    """orthoris - Channel orthogonalization with passive reconfigurable surfaces.

    Examples:

      orthoris gain-sweep --M 4 --K 2 --kinds aris,bdris,fris --eta-db -20:5:10 --trials 200 --seed 7
      orthoris csi-sweep --est-snr-db 0:10:40 --out csi.csv
      orthoris rician-sweep --blockage-db 0,inf --placements 5 --fading 5
      orthoris solve --kind bdris --impedance
      orthoris selftest
    """


def cli():
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    app()
