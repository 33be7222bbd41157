"""Initial vorticity fields, all odd in x1 and Lipschitz."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from cornerflow.geometry import from_unit_square_xy, to_unit_square_xy

RAMP_WIDTH = 0.1
NORM_GRID = 512


def _zero(xy: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(xy)[:-1])


def _sinpatch(xy: np.ndarray) -> np.ndarray:
    pq = to_unit_square_xy(xy)
    xi, eta = pq[..., 0], pq[..., 1]
    return 4.0 * np.sin(np.pi * xi) * np.sin(np.pi * eta) * (xi - eta)


def _ramppatch(xy: np.ndarray) -> np.ndarray:
    x1 = np.asarray(xy, dtype=float)[..., 0]
    return np.sign(x1) * np.minimum(1.0, np.abs(x1) / RAMP_WIDTH)


_FIELDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": _zero,
    "sinpatch": _sinpatch,
    "ramppatch": _ramppatch,
}

PRESET_NAMES = tuple(_FIELDS)


@dataclass(frozen=True)
class Preset:
    name: str
    field: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    lip_norm: float

    def __call__(self, xy) -> np.ndarray:
        return self.field(np.asarray(xy, dtype=float))


def grid_norms(field, n: int = NORM_GRID) -> tuple[float, float]:
    """Sup norm and Lipschitz estimate (max gradient magnitude) on an n x n grid of the square."""
    t = np.linspace(0.0, 1.0, n)
    xi, eta = np.meshgrid(t, t, indexing="ij")
    xy = from_unit_square_xy(np.stack([xi, eta], axis=-1))
    w = field(xy)
    g1, g2 = np.gradient(w, t, t)
    return _polish_sup(field, xi, eta, w), float(np.hypot(g1, g2).max())


def _polish_sup(field, xi, eta, w) -> float:
    """Grid maximum of |w|, refined by a bounded local search from the best grid point."""
    k = np.unravel_index(np.argmax(np.abs(w)), w.shape)
    best = float(np.abs(w[k]))
    if best == 0.0:
        return 0.0

    def neg(p):
        return -abs(float(field(from_unit_square_xy(np.asarray(p)[None, :]))[0]))

    res = minimize(neg, [xi[k], eta[k]], method="L-BFGS-B", bounds=[(0.0, 1.0), (0.0, 1.0)], options={"ftol": 1e-15, "gtol": 1e-12})
    return max(best, -float(res.fun))


_CACHE: dict[str, Preset] = {}


def preset_omega0(name: str) -> Preset:
    """Look up a preset by name; norms are computed once and cached."""
    if name not in _FIELDS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    if name not in _CACHE:
        sup, lip = grid_norms(_FIELDS[name])
        _CACHE[name] = Preset(name, _FIELDS[name], sup, lip)
    return _CACHE[name]
