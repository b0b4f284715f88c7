"""Unit cell (-1/2, 1/2)^2 with circular inclusions, periodic with periods 1 and i."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

GEOM_CLEARANCE = 1e-9
NARROW_GAP = 0.01


class GeometryWarning(UserWarning):
    """Inclusions are close enough to slow down the series solver."""


@dataclass(frozen=True)
class Inclusion:
    center: complex
    radius: float
    contrast_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not 0.0 < self.radius < 0.5:
            raise ValueError(f"radius {self.radius} must lie in (0, 1/2)")


@dataclass(frozen=True)
class CellGeometry:
    inclusions: tuple[Inclusion, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))

    @classmethod
    def from_arrays(cls, centers: Sequence[complex], radii, contrast_ids=None) -> "CellGeometry":
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
        if contrast_ids is None:
            contrast_ids = [0] * len(centers)
        return cls(tuple(Inclusion(c, r, k) for c, r, k in zip(centers, radii, contrast_ids)))

    @property
    def n(self) -> int:
        return len(self.inclusions)

    @property
    def centers(self) -> np.ndarray:
        return np.array([inc.center for inc in self.inclusions], dtype=complex)

    @property
    def radii(self) -> np.ndarray:
        return np.array([inc.radius for inc in self.inclusions], dtype=float)

    def rotated(self, quarter_turns: int = 1) -> "CellGeometry":
        """Geometry rotated by multiples of 90 degrees about the cell center."""
        factor = 1j**quarter_turns
        return CellGeometry(
            tuple(Inclusion(inc.center * factor, inc.radius, inc.contrast_id) for inc in self.inclusions)
        )

    def locate(self, z) -> np.ndarray:
        """Region index per point: -1 for matrix, k for inclusion k.

        Points are first wrapped into the cell.  Points exactly on a circle
        count as matrix.
        """
        z = wrap_into_cell(z)
        region = np.full(z.shape, -1, dtype=int)
        for k, inc in enumerate(self.inclusions):
            region[np.abs(z - inc.center) < inc.radius] = k
        return region

    def interface_distance(self, z) -> np.ndarray:
        """Distance from (wrapped) points to the nearest inclusion boundary."""
        z = wrap_into_cell(z)
        d = np.full(z.shape, np.inf)
        for inc in self.inclusions:
            for m1, m2 in itertools.product((-1, 0, 1), repeat=2):
                d = np.minimum(d, np.abs(np.abs(z - inc.center - m1 - 1j * m2) - inc.radius))
        return d


def wrap_into_cell(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z - np.round(z.real) - 1j * np.round(z.imag)


def minimum_image_distance(a: complex, b: complex) -> float:
    d = a - b
    return min(abs(d - m1 - 1j * m2) for m1, m2 in itertools.product((-1, 0, 1), repeat=2))


def validate(geometry: CellGeometry, clearance: float = GEOM_CLEARANCE) -> list[str]:
    """Return the list of violated invariants; an empty list means the geometry is valid.

    A `GeometryWarning` is issued when some gap is narrower than 0.01.
    """
    problems = []
    narrow = []
    for k, inc in enumerate(geometry.inclusions):
        if not inc.radius > 0:
            problems.append(f"inclusion {k}: radius {inc.radius} must be positive")
        if not inc.radius < 0.5:
            problems.append(f"inclusion {k}: radius {inc.radius} must be below 1/2")
        c = inc.center
        if abs(c.real) + inc.radius >= 0.5 - clearance or abs(c.imag) + inc.radius >= 0.5 - clearance:
            problems.append(f"inclusion {k}: disk is not strictly inside the cell")
    for (j, a), (k, b) in itertools.combinations(enumerate(geometry.inclusions), 2):
        gap = minimum_image_distance(a.center, b.center) - a.radius - b.radius
        if gap <= clearance:
            problems.append(f"inclusions {j} and {k}: disks overlap")
        elif gap < NARROW_GAP:
            narrow.append((j, k, gap))
    for k, inc in enumerate(geometry.inclusions):
        # a disk against its own periodic images
        if 2 * inc.radius >= 1 - clearance:
            problems.append(f"inclusion {k}: disk overlaps its periodic image")
    if narrow and not problems:
        pairs = ", ".join(f"({j},{k}) gap {g:.3g}" for j, k, g in narrow)
        warnings.warn(f"narrow gaps between inclusions: {pairs}", GeometryWarning, stacklevel=2)
    return problems


def volume_fraction(geometry: CellGeometry) -> float:
    return float(np.pi * np.sum(geometry.radii**2))


REFERENCE_CENTERS = (-0.18 + 0.2j, 0.33 - 0.34j, 0.33 + 0.35j, -0.18 - 0.2j)
REFERENCE_RADIUS = 0.145


def reference_geometry() -> CellGeometry:
    """Four equal disks of radius 0.145 used as the reference configuration."""
    return CellGeometry.from_arrays(REFERENCE_CENTERS, REFERENCE_RADIUS)
