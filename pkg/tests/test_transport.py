import math

import numpy as np
import pytest

from cornerflow.errors import DomainError, TransportError
from cornerflow.geometry import BoundaryMarker, Edge, Point
from cornerflow.kernel import KernelConfig
from cornerflow.presets import preset_omega0
from cornerflow.transport import (
    FlowHistory,
    TrajectoryRecord,
    _confine,
    advect_frozen,
    backward_trajectory,
    cell_areas,
    gronwall_check,
    init_particles,
    simulate,
    stability_bound,
    step,
    vorticity_at,
)

H = 1.0 / 16
CFG = KernelConfig(blob_radius=0.8 * H)


@pytest.fixture(scope="module")
def run():
    state = init_particles("sinpatch", H)
    markers = [BoundaryMarker(Edge.LOWER_RIGHT, s) for s in (0.5, 0.25, 0.0625)]
    return simulate(state, markers, 0.02, 0.4, CFG)


def test_init_bookkeeping():
    z = init_particles("zero", 1.0 / 8)
    assert z.sup_norm == 0.0 and not np.any(z.omega)
    s = init_particles("sinpatch", 1.0 / 64)
    assert len(s) == 64 * 64
    assert abs(s.total_area - 0.5) <= 1e-9
    assert s.sup_norm == np.abs(s.omega).max()
    assert s.lip_norm == pytest.approx(preset_omega0("sinpatch").lip_norm, rel=0.05)
    assert np.all(s.xy[:, 0] > 0)
    with pytest.raises(DomainError):
        init_particles("sinpatch", 0.3)
    with pytest.raises(KeyError):
        init_particles("nope", H)


def test_particle_values_read_only():
    s = init_particles("sinpatch", H)
    with pytest.raises(ValueError):
        s.omega[0] = 1.0
    p = s.particles[0]
    assert p.area == pytest.approx(0.5 * H * H)


def test_zero_field_does_not_move():
    z = init_particles("zero", H)
    m = [BoundaryMarker(Edge.LOWER_RIGHT, 0.3)]
    z2, m2 = step(z, m, 0.05, CFG)
    assert np.array_equal(z2.xy, z.xy)
    assert m2[0].s == 0.3


def test_step_keeps_values_and_markers_on_edge():
    s = init_particles("sinpatch", H)
    s2, m2 = step(s, [BoundaryMarker(Edge.LOWER_RIGHT, 0.3)], 0.02, CFG)
    assert s2.omega is s.omega
    p = m2[0].position
    assert p.x1 == p.x2
    assert m2[0].s < 0.3


def test_step_guards():
    s = init_particles("sinpatch", H)
    with pytest.raises(ValueError):
        step(s, [], -0.01, CFG)
    bound = stability_bound(s, CFG)
    assert 0.02 < bound < math.inf
    with pytest.raises(TransportError):
        step(s, [], 2 * bound, CFG)


def test_confine():
    xy = np.array([[0.1, 0.2], [-1e-8, 0.5], [0.3 + 1e-8, 0.3]])
    out = _confine(xy)
    assert out[1, 0] == 0.0
    assert out[2, 0] <= out[2, 1] + 1e-15
    with pytest.raises(TransportError):
        _confine(np.array([[-1e-3, 0.5]]))


def test_frozen_reversibility():
    s = init_particles("sinpatch", 1.0 / 64)
    cfg = KernelConfig(blob_radius=0.8 / 64)
    x0 = np.array([[0.1, 0.2], [0.3, 0.5], [0.05, 1.0], [0.4, 0.45]])
    x1 = advect_frozen(x0, s, 0.01, cfg)
    back = advect_frozen(x1, s, -0.01, cfg)
    assert np.abs(back - x0).max() < 1e-6
    assert np.abs(x1 - x0).max() > 1e-5


def test_history_times_and_markers(run):
    h = run.history
    assert h.times[0] == 0.0 and h.final_time == pytest.approx(0.4)
    assert len(h.times) == 21
    for rec in run.markers:
        pos = rec.positions()
        assert np.all(pos[:, 0] == pos[:, 1])
        # The flow carries edge points toward the corner.
        assert np.all(np.diff(np.hypot(pos[:, 0], pos[:, 1])) < 0)
    with pytest.raises(ValueError):
        FlowHistory([0.0, 0.1, 0.1], h.snapshots[:3])


def test_backward_trajectory(run):
    h = run.history
    x = Point(0.2, 0.5)
    assert backward_trajectory(x, 0.0, h) == x
    rec = run.markers[0]
    back = backward_trajectory(rec.samples[-1][1], h.final_time, h)
    assert math.dist(back, rec.start) < 1e-5
    mirrored = backward_trajectory(Point(-0.2, 0.5), 0.3, h)
    direct = backward_trajectory(x, 0.3, h)
    assert mirrored == Point(-direct.x1, direct.x2)


def test_zero_history_backward_is_identity():
    z = init_particles("zero", H)
    sim = simulate(z, [], 0.1, 0.3, CFG)
    assert backward_trajectory((0.2, 0.6), 0.3, sim.history) == Point(0.2, 0.6)


def test_vorticity_pullback(run):
    p = preset_omega0("sinpatch")
    h = run.history
    x = Point(0.15, 0.6)
    assert vorticity_at(x, 0.0, h, p) == float(p(x.as_array()[None])[0])
    assert vorticity_at((0.0, 0.7), 0.3, h, p) == 0.0
    assert vorticity_at((-0.15, 0.6), 0.3, h, p) == pytest.approx(-vorticity_at(x, 0.3, h, p), abs=1e-15)
    for t in (0.1, 0.4):
        for q in ((0.1, 0.3), (0.3, 0.9), (0.5, 0.6)):
            assert abs(vorticity_at(q, t, h, p)) <= p.sup_norm + 1e-9


def test_gronwall(run):
    rec = run.markers[1]
    assert gronwall_check(rec, 0.2, 1.05)
    assert not gronwall_check(rec, 0.0, 1.05, slack=0.0)
    still = TrajectoryRecord(Point(0.1, 0.1), [(0.0, Point(0.1, 0.1)), (1.0, Point(0.1, 0.1))])
    assert gronwall_check(still, 0.0, 0.0, slack=0.0)


def test_cell_areas_sum(run):
    a = cell_areas(run.final.xy)
    assert a.sum() == pytest.approx(0.5, abs=1e-12)
    assert np.all(a > 0)
