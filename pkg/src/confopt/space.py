"""Discrete search spaces over service configuration parameters.

A space is an ordered list of integer-valued parameters, each with an
inclusive range and a step size. Optimizers work either on grid settings
directly or on normalized coordinates in the unit cube; this module owns
the mapping between the two.

Responsibilities
----------------
* Parameter and space validation (ranges, step divisibility, level counts).
* Exact space cardinality (Python integers, no overflow).
* Normalization to [0, 1] per dimension and snapping back to the grid.
* Deterministic enumeration in odometer order (last parameter fastest).
* Rendering settings to deployable strings ("750m") and to a canonical
  one-line text form used as a configuration key.

Non-responsibilities: sampling, scoring, persistence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "ParameterSpec",
    "Configuration",
    "SearchSpace",
]


@dataclass(frozen=True)
class ParameterSpec:
    """One tunable parameter: an inclusive integer range walked in fixed steps.

    Parameters
    ----------
    name:
        Identifier used in config files, CSV headers and rendered maps.
    minimum, maximum:
        Inclusive bounds in the parameter's native unit (millicores, Mi, a
        categorical code, ...).
    granularity:
        Step between adjacent grid levels. Must divide ``maximum - minimum``.
    suffix:
        Unit suffix appended when rendering ("m", "Mi"). Empty for plain
        integers and categorical codes.
    allow_single_level:
        Permit ``minimum == maximum``. Off by default so hand-written specs
        with a degenerate range fail loudly; bound reduction opts in when it
        pins a parameter.
    """

    name: str
    minimum: int
    maximum: int
    granularity: int
    suffix: str = ""
    allow_single_level: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        if self.granularity <= 0:
            raise ValueError(
                f"parameter {self.name!r}: granularity must be positive, "
                f"got {self.granularity}"
            )
        if self.minimum > self.maximum:
            raise ValueError(
                f"parameter {self.name!r}: minimum {self.minimum} exceeds "
                f"maximum {self.maximum}"
            )
        if (self.maximum - self.minimum) % self.granularity != 0:
            raise ValueError(
                f"parameter {self.name!r}: range {self.maximum - self.minimum} "
                f"is not a multiple of granularity {self.granularity}"
            )
        if self.level_count < 2 and not self.allow_single_level:
            raise ValueError(
                f"parameter {self.name!r}: needs at least 2 grid levels, "
                f"got {self.level_count}"
            )

    @property
    def level_count(self) -> int:
        """Number of grid levels, ``(maximum - minimum) / granularity + 1``."""
        return (self.maximum - self.minimum) // self.granularity + 1

    def levels(self) -> range:
        """All grid settings, ascending."""
        return range(self.minimum, self.maximum + self.granularity, self.granularity)

    def value_at(self, index: int) -> int:
        if not 0 <= index < self.level_count:
            raise IndexError(
                f"parameter {self.name!r}: level index {index} out of range "
                f"[0, {self.level_count})"
            )
        return self.minimum + index * self.granularity

    def index_of(self, value: int) -> int:
        """Level index of an on-grid setting; raises for off-grid values."""
        offset = value - self.minimum
        if offset < 0 or value > self.maximum or offset % self.granularity != 0:
            raise ValueError(
                f"parameter {self.name!r}: {value} is not on the grid "
                f"[{self.minimum}, {self.maximum}] step {self.granularity}"
            )
        return offset // self.granularity

    def normalized(self, value: int) -> float:
        """Map an on-grid setting to [0, 1]. A pinned parameter maps to 0.0."""
        self.index_of(value)
        span = self.maximum - self.minimum
        if span == 0:
            return 0.0
        return (value - self.minimum) / span

    def from_normalized(self, coordinate: float) -> int:
        """Snap a unit-interval coordinate to the nearest grid setting.

        Exact midpoints between adjacent levels round down to the lower
        level, so snapping is deterministic and biased toward cheaper
        settings.
        """
        if not 0.0 <= coordinate <= 1.0:
            raise ValueError(
                f"parameter {self.name!r}: coordinate {coordinate} outside [0, 1]"
            )
        steps = self.level_count - 1
        if steps == 0:
            return self.minimum
        index = math.ceil(coordinate * steps - 0.5)
        index = min(max(index, 0), steps)
        return self.minimum + index * self.granularity

    def render(self, value: int) -> str:
        return f"{value}{self.suffix}"


@dataclass(frozen=True)
class Configuration:
    """A point on the grid: one integer setting per parameter, in space order."""

    settings: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.settings:
            raise ValueError("configuration must have at least one setting")


@dataclass(frozen=True)
class SearchSpace:
    """An ordered collection of parameters defining a finite grid."""

    parameters: tuple[ParameterSpec, ...]

    def __post_init__(self) -> None:
        if not self.parameters:
            raise ValueError("search space must have at least one parameter")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            seen = [n for n in names if names.count(n) > 1]
            raise ValueError(f"duplicate parameter names: {sorted(set(seen))}")

    @property
    def dimension(self) -> int:
        return len(self.parameters)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def size(self) -> int:
        """Exact number of grid configurations (arbitrary precision)."""
        return math.prod(p.level_count for p in self.parameters)

    def parameter(self, name: str) -> ParameterSpec:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(f"no parameter named {name!r}")

    def validate(self, config: Configuration) -> None:
        if len(config.settings) != self.dimension:
            raise ValueError(
                f"configuration has {len(config.settings)} settings, "
                f"space has {self.dimension} parameters"
            )
        for p, value in zip(self.parameters, config.settings):
            p.index_of(value)

    def contains(self, config: Configuration) -> bool:
        try:
            self.validate(config)
        except ValueError:
            return False
        return True

    def config_from_indices(self, indices: Sequence[int]) -> Configuration:
        if len(indices) != self.dimension:
            raise ValueError("one level index per parameter required")
        return Configuration(
            tuple(p.value_at(i) for p, i in zip(self.parameters, indices))
        )

    def indices_of(self, config: Configuration) -> tuple[int, ...]:
        self.validate(config)
        return tuple(
            p.index_of(v) for p, v in zip(self.parameters, config.settings)
        )

    def to_normalized(self, config: Configuration) -> np.ndarray:
        """Normalized coordinates of a grid configuration, shape ``(dimension,)``."""
        self.validate(config)
        return np.array(
            [p.normalized(v) for p, v in zip(self.parameters, config.settings)],
            dtype=float,
        )

    def from_normalized(self, coordinates: Sequence[float]) -> Configuration:
        """Snap unit-cube coordinates to the nearest grid configuration.

        Round-trips exactly: ``from_normalized(to_normalized(c)) == c`` for
        every grid configuration ``c``.
        """
        coords = np.asarray(coordinates, dtype=float)
        if coords.shape != (self.dimension,):
            raise ValueError(
                f"expected {self.dimension} coordinates, got shape {coords.shape}"
            )
        return Configuration(
            tuple(p.from_normalized(c) for p, c in zip(self.parameters, coords))
        )

    def iter_configurations(self) -> Iterator[Configuration]:
        """Yield every configuration in odometer order, last parameter fastest."""
        for settings in itertools.product(*(p.levels() for p in self.parameters)):
            yield Configuration(settings)

    def render(self, config: Configuration) -> dict[str, str]:
        """Deployable string per parameter, e.g. ``{"webCpu": "750m"}``."""
        self.validate(config)
        return {
            p.name: p.render(v)
            for p, v in zip(self.parameters, config.settings)
        }

    def config_text(self, config: Configuration) -> str:
        """Canonical one-line form, ``name=value`` pairs without suffixes."""
        self.validate(config)
        return ",".join(
            f"{p.name}={v}" for p, v in zip(self.parameters, config.settings)
        )

    def normalized_grid(self) -> np.ndarray:
        """Normalized coordinates of every configuration, in enumeration order.

        Only sensible for small spaces; guarded by the caller.
        """
        axes = [
            np.array([p.normalized(v) for v in p.levels()], dtype=float)
            for p in self.parameters
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)
