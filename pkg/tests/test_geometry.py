import math

import numpy as np
import pytest

from cornerflow.errors import DomainError
from cornerflow.geometry import (
    SQRT2,
    BoundaryMarker,
    Edge,
    Point,
    RegionSpec,
    contains,
    from_unit_square,
    half_closure_violation_xy,
    lattice_shift,
    marker_position,
    odd_representative,
    reflect,
    to_unit_square,
)


def close(p, q, tol=1e-12):
    return math.dist(tuple(p), tuple(q)) <= tol


def test_reflections():
    assert reflect((1, 2), "tilde") == Point(-1, 2)
    assert reflect((0.3, 0.3), "star") == Point(0.3, 0.3)
    p = Point(0.17, -0.4)
    for kind in ("tilde", "bar", "star"):
        assert reflect(reflect(p, kind), kind) == p
    with pytest.raises(ValueError):
        reflect(p, "spin")


@pytest.mark.parametrize(
    "n, expected",
    [((0, 0), (0.0, 0.0)), ((1, 0), (1 / SQRT2, 1 / SQRT2)), ((1, 1), (0.0, SQRT2))],
)
def test_lattice_shift(n, expected):
    assert close(lattice_shift(n), expected)


def test_contains():
    assert not contains((0, 0), RegionSpec.full())
    assert contains((0.1, 0.15), RegionSpec.cone(2))
    assert not contains((-0.1, 0.2), RegionSpec.half())
    assert contains((-0.1, 0.2), RegionSpec.full())
    # Above the cone line x2 = 2 x1.
    assert not contains((0.1, 0.25), RegionSpec.cone(2))
    with pytest.raises(DomainError):
        RegionSpec.cone(1.0)


@pytest.mark.parametrize(
    "p, expected",
    [((0, 0), (0, 0)), ((SQRT2 / 2, SQRT2 / 2), (1, 0)), ((0, SQRT2), (1, 1))],
)
def test_unit_square_corners(p, expected):
    assert close(to_unit_square(p), expected)
    assert close(from_unit_square(*expected), p)


def test_odd_representative():
    assert odd_representative((0.2, 0.5)) == (Point(0.2, 0.5), 1)
    assert odd_representative((-0.2, 0.5)) == (Point(0.2, 0.5), -1)
    assert odd_representative((0.0, 0.5)) == (Point(0.0, 0.5), 1)
    with pytest.raises(DomainError):
        odd_representative((0.5, 0.0))


def test_marker_positions():
    p = marker_position(BoundaryMarker(Edge.LOWER_RIGHT, 0.5))
    assert close(p, (0.5 / SQRT2, 0.5 / SQRT2))
    q = marker_position(BoundaryMarker(Edge.LOWER_LEFT, 0.5))
    assert close(q, (-0.5 / SQRT2, 0.5 / SQRT2))
    for s in (1e-3, 1e-6):
        assert abs(abs(BoundaryMarker(Edge.LOWER_RIGHT, s).position) - s) < 1e-15
    with pytest.raises(DomainError):
        BoundaryMarker(Edge.LOWER_RIGHT, 0.0)


def test_half_closure_violation():
    xy = np.array([[0.1, 0.2], [-1e-3, 0.5], [0.3, 0.3], [0.31, 0.3]])
    v = half_closure_violation_xy(xy)
    assert v[0] == 0.0 and v[2] == 0.0
    assert v[1] == pytest.approx(1e-3)
    assert v[3] == pytest.approx(0.01 / SQRT2)


def test_non_finite_point_rejected():
    with pytest.raises(DomainError):
        Point(float("nan"), 0.0)
