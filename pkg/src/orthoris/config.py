"""Sweep configuration: YAML files, CLI overrides and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import yaml

from orthoris.errors import ConfigError
from orthoris.estimation import EstimationMode
from orthoris.rs_models import RsKind
from orthoris.selection import SelectionMode
from orthoris.solvers import min_elements
from orthoris.types import SweepRange, parse_float_list, parse_kind_list, parse_sweep_range


class ExperimentKind(str, Enum):
    """Sweep families.

    GAIN: channel gain and failure rate against the direct-link power.
    CSI: condition number against the estimation SNR (direct link blocked).
    RICIAN: per-UE spectral efficiency against the SNR in the indoor room.
    """

    GAIN = "gain"
    CSI = "csi"
    RICIAN = "rician"


_DEFAULT_SWEEPS = {
    ExperimentKind.GAIN: SweepRange(-20.0, 5.0, 10.0),
    ExperimentKind.CSI: SweepRange(0.0, 10.0, 40.0),
    ExperimentKind.RICIAN: SweepRange(-10.0, 10.0, 30.0),
}

_DEFAULT_KINDS = [RsKind.ARIS, RsKind.BDRIS, RsKind.FRIS]


@dataclass
class SweepSpec:
    """Everything a sweep needs to run reproducibly.

    ``N`` maps each kind to its surface size; kinds missing from it use the
    minimum size (RIS uses the ARIS minimum).
    """

    experiment: ExperimentKind
    M: int = 4
    K: int = 2
    kinds: list[RsKind] = field(default_factory=lambda: list(_DEFAULT_KINDS))
    N: dict[RsKind, int] = field(default_factory=dict)
    sweep: Optional[SweepRange] = None
    trials: int = 200
    seed: int = 0
    selection: SelectionMode = SelectionMode.ALGORITHM1
    snr_db: float = 10.0
    estimation_mode: EstimationMode = EstimationMode.FULL
    placements: int = 10
    fading: int = 10
    blockage_db: list[float] = field(default_factory=lambda: [0.0, 20.0, 30.0, math.inf])
    workers: Optional[int] = None

    def __post_init__(self):
        if self.sweep is None:
            self.sweep = _DEFAULT_SWEEPS[self.experiment]
        self.validate()

    def validate(self) -> None:
        """Check ranges and sizes.

        Raises:
            ConfigError: On the first invalid field
        """
        if self.M < 1 or self.K < 1:
            raise ConfigError(f"M and K must be positive, got M={self.M}, K={self.K}")
        if self.K > self.M:
            raise ConfigError(f"Orthogonalization needs K <= M, got M={self.M}, K={self.K}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.placements < 1 or self.fading < 1:
            raise ConfigError("placements and fading must be at least 1")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not self.kinds:
            raise ConfigError("At least one RS kind is required")
        if not self.blockage_db:
            raise ConfigError("At least one blockage level is required")
        for kind, n in self.N.items():
            if n < 1:
                raise ConfigError(f"N for {kind.value} must be positive, got {n}")

    def elements(self, kind: RsKind) -> int:
        if kind in self.N:
            return self.N[kind]
        return min_elements(RsKind.ARIS if kind is RsKind.RIS else kind, self.M, self.K)


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    return value


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be a number, got {value!r}") from None


def _as_enum(enum_type, key: str, value: Any):
    try:
        return enum_type(str(value).strip().lower())
    except ValueError:
        valid = ", ".join(v.value for v in enum_type)
        raise ConfigError(f"'{key}' must be one of: {valid}; got {value!r}") from None


def _as_kinds(key: str, value: Any) -> list[RsKind]:
    if isinstance(value, str):
        text = value
    elif isinstance(value, list):
        text = ",".join(str(v) for v in value)
    else:
        raise ConfigError(f"'{key}' must be a list of RS kinds, got {value!r}")
    try:
        return parse_kind_list(text)
    except ValueError as e:
        raise ConfigError(f"'{key}': {e}") from None


def _as_sizes(key: str, value: Any) -> dict[RsKind, int] | int:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be an integer or a mapping of kind to integer, got {value!r}")
    sizes = {}
    for kind, n in value.items():
        try:
            sizes[RsKind.parse(str(kind))] = _as_int(f"{key}.{kind}", n)
        except ValueError as e:
            raise ConfigError(f"'{key}': {e}") from None
    return sizes


def _as_sweep(key: str, value: Any) -> SweepRange:
    try:
        if isinstance(value, dict):
            unknown = set(value) - {"start", "step", "stop"}
            if unknown:
                raise ConfigError(f"'{key}' has unknown fields: {', '.join(sorted(unknown))}")
            return SweepRange(
                _as_float(f"{key}.start", value["start"]),
                _as_float(f"{key}.step", value.get("step", 1.0)),
                _as_float(f"{key}.stop", value.get("stop", value["start"])),
            )
        return parse_sweep_range(str(value))
    except KeyError:
        raise ConfigError(f"'{key}' needs at least a 'start' field") from None
    except ValueError as e:
        raise ConfigError(f"'{key}': {e}") from None


def _as_floats(key: str, value: Any) -> list[float]:
    if isinstance(value, list):
        return [_as_float(key, v) for v in value]
    try:
        return parse_float_list(str(value))
    except ValueError as e:
        raise ConfigError(f"'{key}': {e}") from None


# Keys accepted in a sweep YAML file, mapped to their parser
_FIELD_PARSERS = {
    "experiment": lambda k, v: _as_enum(ExperimentKind, k, v),
    "M": _as_int,
    "K": _as_int,
    "kinds": _as_kinds,
    "N": _as_sizes,
    "sweep": _as_sweep,
    "trials": _as_int,
    "seed": _as_int,
    "selection": lambda k, v: _as_enum(SelectionMode, k, v),
    "snr_db": _as_float,
    "estimation_mode": lambda k, v: _as_enum(EstimationMode, k, v),
    "placements": _as_int,
    "fading": _as_int,
    "blockage_db": _as_floats,
    "workers": _as_int,
}


def parse_config_data(data: Any, source: str = "<config>") -> dict[str, Any]:
    """Validate raw YAML data and convert it into SweepSpec field values.

    Raises:
        ConfigError: On unknown keys or values of the wrong type
    """
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping, got {type(data).__name__}")

    fields: dict[str, Any] = {}
    for key, value in data.items():
        if key not in _FIELD_PARSERS:
            valid = ", ".join(_FIELD_PARSERS)
            raise ConfigError(f"{source}: unknown key '{key}' (valid keys: {valid})")
        fields[key] = _FIELD_PARSERS[key](key, value)
    return fields


def load_config(path: Path) -> dict[str, Any]:
    """Read a sweep YAML file.

    Raises:
        ConfigError: If the file is missing, not valid YAML or has invalid fields
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from None
    return parse_config_data(data, source=str(path))


def build_spec(
    experiment: ExperimentKind | str,
    config_path: Optional[Path] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> SweepSpec:
    """Assemble a SweepSpec: defaults, then the YAML file, then CLI overrides.

    Overrides whose value is None are ignored, so unset CLI flags keep the
    file's values.

    Raises:
        ConfigError: If the file names a different experiment or a value is invalid
    """
    experiment = ExperimentKind(experiment)
    fields = load_config(config_path) if config_path is not None else {}

    file_experiment = fields.pop("experiment", experiment)
    if file_experiment is not experiment:
        raise ConfigError(
            f"Config describes a '{file_experiment.value}' sweep, not '{experiment.value}'"
        )

    for key, value in (overrides or {}).items():
        if value is not None:
            fields[key] = value

    if experiment is ExperimentKind.RICIAN:
        # The room has a fixed 2x2 BS panel serving three UEs
        fields.setdefault("M", 4)
        fields.setdefault("K", 3)

    sizes = fields.pop("N", None)
    spec = SweepSpec(experiment=experiment, **fields)
    if isinstance(sizes, int):
        spec = replace(spec, N={kind: sizes for kind in spec.kinds})
    elif sizes:
        spec = replace(spec, N=dict(sizes))
    return spec
