import math

import numpy as np
import pytest

from cornerflow.errors import SingularConfigurationError
from cornerflow.geometry import Point, RegionSpec, contains
from cornerflow.greens import ShellPolicy
from cornerflow.kernel import (
    KernelConfig,
    combined_kernel,
    combined_kernel_many,
    fan_points,
    kernel_term,
    log_derivative_many,
    log_summand_many,
    ratio_sweep,
    shell_increments,
    stream_function,
    velocity_dense,
    velocity_from_stream,
    velocity_particles,
    velocity_particles_direct,
)
from cornerflow.presets import preset_omega0
from cornerflow.transport import init_particles

SIN = preset_omega0("sinpatch")
ZERO = preset_omega0("zero")


def test_printed_terms_by_hand():
    x, y = (0.2, 0.4), (0.1, 0.3)
    assert kernel_term(x, y, (0, 0), "A") == pytest.approx(5.0, rel=1e-14)
    assert kernel_term(x, y, (0, 0), "B") == pytest.approx(0.09 / 0.034, rel=1e-14)
    with pytest.raises(ValueError):
        kernel_term(x, y, (0, 0), "E")
    with pytest.raises(SingularConfigurationError):
        kernel_term(x, x, (0, 0), "A")


@pytest.mark.parametrize("n", [(0, 0), (1, -1), (2, 3)])
def test_axis_log_summand_and_its_x2_derivative_vanish(n):
    x = Point(0.0, 0.5)
    ys = np.array([[0.2, 0.6], [0.05, 1.1], [0.4, 0.5]])
    assert np.abs(log_summand_many(x, ys, r=2)).max() <= 1e-12
    assert np.abs(log_derivative_many(x, ys, r=2, axis=1)).max() <= 1e-12


def test_axis_combination_does_not_vanish_termwise():
    # The x2-derivative of the summand is 4 x1 (A - B - C + D): it is the
    # product that vanishes on the axis, not the bracket.
    x, y = (0.0, 0.5), (0.2, 0.6)
    k = sum(s * kernel_term(x, y, (0, 0), w) for s, w in zip((1, -1, -1, 1), "ABCD"))
    assert abs(k) > 1.0


def test_x2_derivative_identity():
    x = Point(0.23, 0.41)
    ys = np.array([[0.1, 0.3], [0.3, 0.9], [0.05, 0.2]])
    d2 = log_derivative_many(x, ys, axis=1)
    k = combined_kernel_many(x, ys)
    np.testing.assert_allclose(d2, 4 * x.x1 * k, rtol=1e-11, atol=1e-11)


def test_x1_derivative_against_finite_difference():
    x = Point(0.23, 0.41)
    ys = np.array([[0.1, 0.3], [0.3, 0.9]])
    e = 1e-6
    fd = (log_summand_many((x.x1 + e, x.x2), ys) - log_summand_many((x.x1 - e, x.x2), ys)) / (2 * e)
    np.testing.assert_allclose(log_derivative_many(x, ys, axis=0), fd, rtol=1e-7, atol=1e-7)


def test_combined_kernel_converged_and_stable():
    x, y = Point(0.2, 0.3), Point(0.5, 0.7)
    value = combined_kernel(x, y)
    assert value == pytest.approx(-0.4219419162570435, abs=1e-12)
    raw = math.fsum(shell_increments(x, y, 300))
    assert value == pytest.approx(raw, abs=1e-6)
    tighter = combined_kernel(x, y, ShellPolicy(r_min=24, tol=1e-13, r_max=64))
    assert abs(tighter - value) < 1e-10


def test_shell_increments_decay():
    inc = np.abs(shell_increments((0.2, 0.3), (0.5, 0.7), 64))[1:]
    r = np.arange(1, 65)
    sel = r >= 4
    slope = np.polyfit(np.log(r[sel]), np.log(inc[sel]), 1)[0]
    assert slope <= -2.7
    assert np.all(inc > 0)


def test_velocity_trivial_cases():
    assert velocity_dense((0.2, 0.3), ZERO).as_array().tolist() == [0.0, 0.0]
    assert velocity_dense((0.0, 0.0), SIN).as_array().tolist() == [0.0, 0.0]
    assert velocity_dense((0.0, 0.5), SIN).u1 == 0.0


def test_velocity_pins_and_symmetry():
    v = velocity_dense((0.1, 0.15), SIN)
    assert v.u1 == pytest.approx(-0.009183102306427961, rel=1e-10)
    assert v.u2 == pytest.approx(-0.002185307403669772, rel=1e-10)
    m = velocity_dense((-0.1, 0.15), SIN)
    assert m.u1 == pytest.approx(-v.u1, rel=1e-12)
    assert m.u2 == pytest.approx(v.u2, rel=1e-12)
    # Flow toward the corner along the edge.
    e = velocity_dense((0.3, 0.3), SIN)
    assert e.u1 == pytest.approx(-0.05259096943913095, rel=1e-10)
    assert e.u1 == pytest.approx(e.u2, rel=1e-12)


def test_velocity_against_stream_function():
    x = (0.1, 0.1)
    v = velocity_dense(x, SIN).as_array()
    fd = velocity_from_stream(x, SIN)
    np.testing.assert_allclose(v, fd, rtol=1e-4)


def test_stream_function_odd():
    a = stream_function((0.1, 0.15), SIN)
    assert a == pytest.approx(-0.000316869208881772, rel=1e-10)
    assert stream_function((-0.1, 0.15), SIN) == pytest.approx(-a, abs=1e-8)


def test_refined_settings_agree():
    cfg = KernelConfig()
    a = velocity_dense((0.1, 0.15), SIN, cfg).as_array()
    b = velocity_dense((0.1, 0.15), SIN, cfg.refined()).as_array()
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_fan_points_in_cone():
    for s in (0.25, 2.0**-12):
        pts = fan_points(2.0, s)
        assert len(pts) == 9
        for p in pts:
            assert abs(p) == pytest.approx(s, rel=1e-14)
        for p in pts[1:-1]:
            assert contains(p, RegionSpec.cone(2.0))


def test_ratio_sweep_zero_field():
    rep = ratio_sweep(ZERO, 2.0, [0.25, 0.01], sup_norm=0.0)
    assert rep.c1_empirical == 0.0
    assert all(e.ratio1 == 0.0 and e.ratio2 == 0.0 for e in rep.entries)
    assert rep.max_scale_variation == 1.0
    with pytest.raises(ValueError):
        ratio_sweep(ZERO, 2.0, [0.6])


@pytest.fixture(scope="module")
def particles():
    return init_particles("sinpatch", 1.0 / 32)


def test_particle_velocity_trivial(particles):
    zero = init_particles("zero", 1.0 / 16)
    assert velocity_particles((0.2, 0.3), zero).as_array().tolist() == [0.0, 0.0]
    assert velocity_particles((0.0, 0.7), particles).u1 == 0.0


def test_particle_velocity_fast_matches_direct(particles):
    cfg = KernelConfig(blob_radius=0.8 / 32)
    for x in [(0.1, 0.15), (0.3, 0.3), (0.02, 0.9), (0.5, 0.6)]:
        fast = velocity_particles(x, particles, cfg).as_array()
        ref = velocity_particles_direct(x, particles, cfg).as_array()
        np.testing.assert_allclose(fast, ref, rtol=1e-9, atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(quad_order=1)
    with pytest.raises(ValueError):
        KernelConfig(blob_radius=-1.0)
    r = KernelConfig().refined()
    assert r.quad_order == 16 and r.quad_shells == 4
