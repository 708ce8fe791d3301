"""Custom Click parameter types for sweep command values.

Conversion errors are raised as ``typer.BadParameter`` so the CLI reports
them as usage errors whichever click the installed typer runs on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

import click
import typer

from orthoris.rs_models import RsKind


@dataclass(frozen=True)
class SweepRange:
    """Inclusive arithmetic range ``start, start + step, ..., stop``."""

    start: float
    step: float
    stop: float

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError(f"Sweep step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ValueError(f"Sweep range {self.start}:{self.step}:{self.stop} is empty")

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]

    def __str__(self) -> str:
        return f"{self.start:g}:{self.step:g}:{self.stop:g}"


def parse_sweep_range(text: str) -> SweepRange:
    """Parse ``"lo:step:hi"`` (or a single number for a one-point sweep).

    Raises:
        ValueError: If the text is malformed or the range is empty
    """
    parts = [p.strip() for p in str(text).split(":")]
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"{text!r} is not a numeric range (expected lo:step:hi)") from None
    if len(numbers) == 1:
        return SweepRange(numbers[0], 1.0, numbers[0])
    if len(numbers) != 3:
        raise ValueError(f"{text!r} is not a range (expected lo:step:hi)")
    return SweepRange(*numbers)


def parse_kind_list(text: str) -> list[RsKind]:
    """Parse a comma-separated list of RS kinds, keeping order and dropping repeats."""
    kinds: list[RsKind] = []
    for item in str(text).split(","):
        if not item.strip():
            continue
        kind = RsKind.parse(item)
        if kind not in kinds:
            kinds.append(kind)
    if not kinds:
        raise ValueError(f"{text!r} names no RS kind")
    return kinds


def parse_float_list(text: str) -> list[float]:
    """Comma-separated floats; ``inf`` is accepted."""
    try:
        return [float(item) for item in str(text).split(",") if item.strip()]
    except ValueError:
        raise ValueError(f"{text!r} is not a list of numbers") from None


class SweepRangeType(click.ParamType):
    """Validates a ``lo:step:hi`` sweep range."""

    name = "range"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> SweepRange:
        if isinstance(value, SweepRange):
            return value
        try:
            return parse_sweep_range(value)
        except ValueError as e:
            raise typer.BadParameter(str(e), ctx=ctx, param=param) from None


class KindListType(click.ParamType):
    """Validates a comma-separated list of RS kinds (ris, aris, bdris, fris)."""

    name = "kinds"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> list[RsKind]:
        if isinstance(value, list):
            return value
        try:
            return parse_kind_list(value)
        except ValueError as e:
            raise typer.BadParameter(str(e), ctx=ctx, param=param) from None


class FloatListType(click.ParamType):
    """Validates a comma-separated list of floats such as ``0,20,30,inf``."""

    name = "floats"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> list[float]:
        if isinstance(value, list):
            return value
        try:
            return parse_float_list(value)
        except ValueError as e:
            raise typer.BadParameter(str(e), ctx=ctx, param=param) from None


# Type registry for building options by name
TYPE_MAPPING = {
    "range": SweepRangeType(),
    "kinds": KindListType(),
    "floats": FloatListType(),
}


def get_click_type(type_name: str) -> click.ParamType:
    """Get Click parameter type by name.

    Raises:
        ValueError: If type_name is not recognized
    """
    if type_name not in TYPE_MAPPING:
        raise ValueError(f"Unknown type: {type_name}")
    return TYPE_MAPPING[type_name]
