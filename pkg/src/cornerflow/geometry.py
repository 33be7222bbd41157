"""Geometry of the rotated unit square.

The domain is

    D = {(x1, x2) : 0 < x1 + x2 < sqrt(2), 0 < x2 - x1 < sqrt(2)},

a unit square standing on its corner at the origin.  ``D+`` is the half with
``x1 > 0`` and the cone ``D_a`` is the part of ``D+`` below the line
``x2 = a x1``.  All scalar helpers here take and return plain floats; the
vectorised variants (suffix ``_xy``) work on arrays whose last axis has
length two.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from cornerflow.errors import DomainError

SQRT2 = math.sqrt(2.0)
HALF_SQRT2 = SQRT2 / 2.0


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise DomainError(f"non-finite point ({self.x1}, {self.x2})")

    @classmethod
    def of(cls, p) -> "Point":
        if isinstance(p, Point):
            return p
        x1, x2 = p
        return cls(float(x1), float(x2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def __iter__(self):
        yield self.x1
        yield self.x2

    def __abs__(self) -> float:
        return math.hypot(self.x1, self.x2)


@dataclass(frozen=True)
class LatticeIndex:
    n1: int
    n2: int

    @classmethod
    def of(cls, n) -> "LatticeIndex":
        if isinstance(n, LatticeIndex):
            return n
        n1, n2 = n
        return cls(int(n1), int(n2))

    @property
    def shell(self) -> int:
        return max(abs(self.n1), abs(self.n2))


class Region(enum.Enum):
    FULL = "D"
    HALF = "D+"
    CONE = "D_a"


@dataclass(frozen=True)
class RegionSpec:
    kind: Region
    a: float | None = None

    def __post_init__(self):
        if self.kind is Region.CONE:
            if self.a is None or not self.a > 1.0:
                raise DomainError(f"cone parameter must satisfy a > 1, got {self.a}")

    @classmethod
    def full(cls) -> "RegionSpec":
        return cls(Region.FULL)

    @classmethod
    def half(cls) -> "RegionSpec":
        return cls(Region.HALF)

    @classmethod
    def cone(cls, a: float) -> "RegionSpec":
        return cls(Region.CONE, float(a))


class Edge(enum.Enum):
    """Edges of the square.  The first two meet at the origin."""

    LOWER_RIGHT = "lower-right"
    LOWER_LEFT = "lower-left"
    UPPER_RIGHT = "upper-right"
    UPPER_LEFT = "upper-left"


# (corner, unit direction) per edge; s measures distance from the corner.
_EDGE_FRAME = {
    Edge.LOWER_RIGHT: ((0.0, 0.0), (HALF_SQRT2, HALF_SQRT2)),
    Edge.LOWER_LEFT: ((0.0, 0.0), (-HALF_SQRT2, HALF_SQRT2)),
    Edge.UPPER_RIGHT: ((HALF_SQRT2, HALF_SQRT2), (-HALF_SQRT2, HALF_SQRT2)),
    Edge.UPPER_LEFT: ((-HALF_SQRT2, HALF_SQRT2), (HALF_SQRT2, HALF_SQRT2)),
}


def edge_frame(edge: Edge) -> tuple[np.ndarray, np.ndarray]:
    corner, direction = _EDGE_FRAME[Edge(edge)]
    return np.array(corner), np.array(direction)


@dataclass(frozen=True)
class BoundaryMarker:
    edge: Edge
    s: float
    omega0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"marker arc coordinate must lie in (0, 1), got {self.s}")

    @property
    def position(self) -> Point:
        return marker_position(self)


def reflect(p, kind: str) -> Point:
    """Apply one of the three reflections used throughout the image construction.

    ``tilde`` flips x1, ``bar`` flips x2, ``star`` swaps the coordinates.
    """
    x1, x2 = Point.of(p)
    if kind == "tilde":
        return Point(-x1, x2)
    if kind == "bar":
        return Point(x1, -x2)
    if kind == "star":
        return Point(x2, x1)
    raise ValueError(f"unknown reflection {kind!r}")


def lattice_shift(n) -> Point:
    """Translation vector m(n) of the image lattice; images sit at 2m."""
    n = LatticeIndex.of(n)
    return Point((n.n1 - n.n2) / SQRT2, (n.n1 + n.n2) / SQRT2)


def contains(p, region: RegionSpec) -> bool:
    x1, x2 = Point.of(p)
    inside = 0.0 < x1 + x2 < SQRT2 and 0.0 < x2 - x1 < SQRT2
    if region.kind is Region.FULL or not inside:
        return inside
    if not x1 > 0.0:
        return False
    if region.kind is Region.HALF:
        return True
    return region.a * x1 >= x2


def in_closure_xy(xy, tol: float = 0.0) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    s = xy[..., 0] + xy[..., 1]
    d = xy[..., 1] - xy[..., 0]
    return (s >= -tol) & (s <= SQRT2 + tol) & (d >= -tol) & (d <= SQRT2 + tol)


def half_closure_violation_xy(xy) -> np.ndarray:
    """Distance by which points stick out of closure(D+) (zero inside)."""
    xy = np.asarray(xy, dtype=float)
    x1, x2 = xy[..., 0], xy[..., 1]
    out = np.maximum(-x1, 0.0)
    out = np.maximum(out, (x1 - x2) / SQRT2)
    out = np.maximum(out, (x1 + x2 - SQRT2) / SQRT2)
    return out


def to_unit_square(p) -> tuple[float, float]:
    """Rotate into the axis-aligned unit square: (xi, eta) in (0, 1)^2 iff p in D."""
    x1, x2 = Point.of(p)
    return (x1 + x2) / SQRT2, (x2 - x1) / SQRT2


def from_unit_square(xi: float, eta: float) -> Point:
    return Point((xi - eta) / SQRT2, (xi + eta) / SQRT2)


def to_unit_square_xy(xy) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    out = np.empty(xy.shape)
    out[..., 0] = (xy[..., 0] + xy[..., 1]) / SQRT2
    out[..., 1] = (xy[..., 1] - xy[..., 0]) / SQRT2
    return out


def from_unit_square_xy(pq) -> np.ndarray:
    pq = np.asarray(pq, dtype=float)
    out = np.empty(pq.shape)
    out[..., 0] = (pq[..., 0] - pq[..., 1]) / SQRT2
    out[..., 1] = (pq[..., 0] + pq[..., 1]) / SQRT2
    return out


def odd_representative(p, tol: float = 1e-12) -> tuple[Point, int]:
    """Fold p onto the closed right half; an odd field satisfies f(p) = sign * f(rep)."""
    p = Point.of(p)
    if not bool(in_closure_xy(p.as_array(), tol)):
        raise DomainError(f"{p} lies outside the closed square")
    if p.x1 >= 0.0:
        return p, 1
    return reflect(p, "tilde"), -1


def odd_representative_xy(xy) -> tuple[np.ndarray, np.ndarray]:
    xy = np.array(xy, dtype=float)
    sign = np.where(xy[..., 0] < 0.0, -1.0, 1.0)
    xy[..., 0] = np.abs(xy[..., 0])
    return xy, sign


def marker_position(marker: BoundaryMarker) -> Point:
    corner, direction = edge_frame(marker.edge)
    if not 0.0 < marker.s < 1.0:
        raise DomainError(f"marker arc coordinate must lie in (0, 1), got {marker.s}")
    return Point.of(corner + marker.s * direction)


def project_to_edge(xy, edge: Edge) -> np.ndarray:
    """Arc coordinate of the orthogonal projection of points onto an edge line."""
    corner, direction = edge_frame(edge)
    return (np.asarray(xy, dtype=float) - corner) @ direction


# Triangle D+ in the physical frame, counter-clockwise.
HALF_DOMAIN_VERTICES = np.array([[0.0, 0.0], [HALF_SQRT2, HALF_SQRT2], [0.0, SQRT2]])
