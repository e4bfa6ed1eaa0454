"""Periodic computational box and real-valued grid fields.

The box [-L, L)^N with M points per axis stands in for R^N.  Frequencies
are k*(pi/L) for integer k in [-M/2, M/2), which is what ``fftfreq``
produces for period 2L.  Fields are plain float64 arrays tied to a grid.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

HEADER_STRUCT = struct.Struct("<IIdd")  # dimension, points_per_axis, half_length, s


@dataclass(frozen=True)
class GridSpec:
    """Periodic box [-L, L)^N sampled with M points per axis, spacing h = 2L/M."""

    dimension: int
    points_per_axis: int
    half_length: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.points_per_axis < 4 or self.points_per_axis % 2 != 0:
            raise ValueError("points_per_axis must be a positive even integer >= 4")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dimension

    @property
    def num_points(self) -> int:
        return self.points_per_axis ** self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def box_volume(self) -> float:
        return (2.0 * self.half_length) ** self.dimension

    def axis_coords(self) -> np.ndarray:
        """Sample points of one axis, -L + i h."""
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    def coords(self) -> list:
        """Meshgrid coordinate arrays, one per axis (ij indexing)."""
        ax = self.axis_coords()
        return list(np.meshgrid(*([ax] * self.dimension), indexing="ij"))

    def axis_freqs(self) -> np.ndarray:
        """Angular frequencies k*pi/L of one axis in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def freq_norm(self) -> np.ndarray:
        """|xi| on the full frequency grid."""
        k = self.axis_freqs()
        grids = np.meshgrid(*([k] * self.dimension), indexing="ij")
        return np.sqrt(sum(g * g for g in grids))

    def min_freq(self) -> float:
        """Smallest genuine box frequency pi/L (used to regularize the zero mode)."""
        return np.pi / self.half_length

    def periodic_distance(self, center) -> np.ndarray:
        """Minimal-image distance |x - center| on the torus."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.size != self.dimension:
            raise ValueError("center has wrong dimension")
        ax = self.axis_coords()
        period = 2.0 * self.half_length
        d2 = 0.0
        for axis in range(self.dimension):
            d = np.abs(ax - center[axis])
            d = np.minimum(d, period - d)
            shape = [1] * self.dimension
            shape[axis] = self.points_per_axis
            d2 = d2 + d.reshape(shape) ** 2
        return np.sqrt(d2)

    def scaled(self, factor: float) -> "GridSpec":
        """Same sample count, box half-length multiplied by factor."""
        return GridSpec(self.dimension, self.points_per_axis, self.half_length * factor)


@dataclass
class Field:
    """Real scalar field sampled on a GridSpec."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "Field":
        return cls(grid, np.array(values, dtype=float))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def same_grid(self, other: "Field") -> bool:
        return self.grid == other.grid

    def mean(self) -> float:
        return float(self.values.mean())

    def mean_free(self) -> "Field":
        return Field(self.grid, self.values - self.values.mean())

    # light arithmetic used pervasively by the solvers
    def __add__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, c):
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


class GridMismatchError(ValueError):
    pass


def _check_same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise GridMismatchError(f"grids differ: {u.grid} vs {v.grid}")


def save_field(path, u: Field, s: float, metadata: dict | None = None):
    """Write the binary snapshot (header + row-major float64 LE) and JSON sidecar.

    Header layout, little-endian: uint32 dimension, uint32 points_per_axis,
    float64 half_length, float64 s.  Data: M^N float64, row-major (C order).
    """
    path = str(path)
    header = HEADER_STRUCT.pack(
        u.grid.dimension, u.grid.points_per_axis, u.grid.half_length, float(s)
    )
    data = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)
    sidecar = {
        "dimension": u.grid.dimension,
        "points_per_axis": u.grid.points_per_axis,
        "half_length": u.grid.half_length,
        "s": float(s),
        "format": "fracrit-field-v1",
    }
    if metadata:
        sidecar.update(metadata)
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_field(path) -> tuple:
    """Read a snapshot written by save_field; returns (Field, s)."""
    with open(str(path), "rb") as fh:
        header = fh.read(HEADER_STRUCT.size)
        dim, m, half_length, s = HEADER_STRUCT.unpack(header)
        grid = GridSpec(dim, m, half_length)
        raw = fh.read(8 * grid.num_points)
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).astype(float)
    return Field(grid, values), s
