"""orthoris - Channel orthogonalization with passive reconfigurable surfaces."""

try:
    from importlib.metadata import version

    __version__ = version("orthoris")
except Exception:
    __version__ = "0.0.0.dev0+local"  # Fallback for development

from orthoris.errors import (
    ConfigError,
    DegenerateProjectionError,
    DegenerateSelectionError,
    GeometryError,
    InfeasibleError,
    MapUndefinedError,
    OpenCircuitError,
    OrthorisError,
)
from orthoris.estimation import (
    EstimationMode,
    EstimationResult,
    PilotMatrix,
    basis_sequence,
    dft_pilots,
    estimate_channels,
    estimate_direct,
    estimate_effective_map,
    pilot_budget,
)
from orthoris.rs_models import ConstraintReport, RsKind, check, impedance_to_reflection, reflection_to_impedance
from orthoris.selection import (
    OrthoTarget,
    SelectionMode,
    SelectionOptions,
    SelectionOutcome,
    SelectionStatus,
    select_channel,
)
from orthoris.solvers import ChannelTriple, EffectiveMap, build_effective_map, min_elements, rank_feasible, solve

__all__ = [
    "__version__",
    "ConfigError",
    "DegenerateProjectionError",
    "DegenerateSelectionError",
    "GeometryError",
    "InfeasibleError",
    "MapUndefinedError",
    "OpenCircuitError",
    "OrthorisError",
    "EstimationMode",
    "EstimationResult",
    "PilotMatrix",
    "basis_sequence",
    "dft_pilots",
    "estimate_channels",
    "estimate_direct",
    "estimate_effective_map",
    "pilot_budget",
    "ConstraintReport",
    "RsKind",
    "check",
    "impedance_to_reflection",
    "reflection_to_impedance",
    "OrthoTarget",
    "SelectionMode",
    "SelectionOptions",
    "SelectionOutcome",
    "SelectionStatus",
    "select_channel",
    "ChannelTriple",
    "EffectiveMap",
    "build_effective_map",
    "min_elements",
    "rank_feasible",
    "solve",
]
