import math

import numpy as np
import pytest

from cornerflow.experiments import fit_exponential
from cornerflow.geometry import from_unit_square_xy
from cornerflow.presets import PRESET_NAMES, RAMP_WIDTH, preset_omega0


def test_names():
    assert set(PRESET_NAMES) == {"zero", "sinpatch", "ramppatch"}
    with pytest.raises(KeyError):
        preset_omega0("vortex")


def test_zero_norms():
    p = preset_omega0("zero")
    assert (p.sup_norm, p.lip_norm) == (0.0, 0.0)
    assert np.all(p(np.random.default_rng(0).uniform(size=(5, 2))) == 0.0)


def test_sinpatch_odd_and_vanishing_on_axis():
    p = preset_omega0("sinpatch")
    t = np.linspace(0, 1, 11)
    axis = from_unit_square_xy(np.stack([t, t], 1))
    assert np.all(p(axis) == 0.0)
    rng = np.random.default_rng(1)
    xy = from_unit_square_xy(rng.uniform(size=(50, 2)))
    mirrored = xy * np.array([-1.0, 1.0])
    np.testing.assert_allclose(p(mirrored), -p(xy), atol=1e-15)
    edge = from_unit_square_xy(np.stack([t, np.zeros_like(t)], 1))
    assert np.abs(p(edge)).max() < 1e-15


def test_sinpatch_norms_pinned():
    p = preset_omega0("sinpatch")
    assert p.sup_norm == pytest.approx(1.0490202270389193, rel=1e-12)
    assert p.lip_norm == pytest.approx(7.2567, rel=1e-3)


def test_ramppatch_norms():
    p = preset_omega0("ramppatch")
    assert p.sup_norm == pytest.approx(1.0, rel=0.02)
    assert p.lip_norm == pytest.approx(1.0 / RAMP_WIDTH, rel=0.02)
    assert p((0.0, 0.5)) == 0.0
    assert p((0.05, 0.5)) == pytest.approx(0.5)
    assert p((-0.3, 0.8)) == -1.0


def test_fit_constant_series():
    rate, intercept, r2 = fit_exponential([(t, 3.0) for t in range(5)])
    assert rate == 0.0
    assert intercept == pytest.approx(math.log(3.0))
    assert r2 == 1.0


def test_fit_exact_exponential():
    rate, intercept, r2 = fit_exponential([(t, math.exp(2 * t)) for t in (0.0, 0.5, 1.0, 1.5)])
    assert abs(rate - 2.0) <= 1e-12
    assert abs(intercept) <= 1e-12
    assert r2 == pytest.approx(1.0)


def test_fit_noisy_exponential():
    rng = np.random.default_rng(7)
    c = 0.8
    t = np.linspace(0, 3, 31)
    v = np.exp(c * t) * (1 + rng.uniform(-0.01, 0.01, t.size))
    rate, _, _ = fit_exponential(list(zip(t, v)))
    assert abs(rate - c) <= 0.05 * c


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponential([(0, 1), (1, 2), (2, 3)])
    with pytest.raises(ValueError):
        fit_exponential([(0, 1), (1, 0), (2, 3), (3, 4)])
