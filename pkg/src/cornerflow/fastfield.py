"""Fast velocity of a regularized vortex-particle field in the odd square.

The particles live in ``D+``; together with their odd mirror images they
form a source distribution on the unit square (rotated frame) with
Dirichlet boundary conditions.  The Green function is split as

    G = G_s + (G - G_s),

where ``G_s`` is ``G`` convolved with a Gaussian of width ``sigma``.  ``G_s``
has a rapidly converging sine series, evaluated with dense matrix products,
and ``G - G_s`` is short ranged: per image it is ``E1(r^2 / 2 sigma^2) / 4pi``,
negligible beyond ``8 sigma``.  The short-range part is summed over
neighbouring sources and their edge and corner reflections with a cell list.

Regularization: the velocity kernel of a single image is
``r / (r^2 + delta^2 tau)`` with ``tau = exp(-r^2 / 2 sigma^2)``.  This is an
algebraic blob of radius ``delta`` near the particle that reduces to the
point kernel once ``r`` is a few ``sigma``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from cornerflow.geometry import SQRT2, to_unit_square_xy

# Split width relative to the blob radius, and the width used for point vortices.
SPLIT_FACTOR = 2.0
POINT_SPLIT = 0.025
# Short-range cutoff in units of sigma: exp(-32) ~ 1e-14.
CUTOFF = 8.0
# sigma pi J = sqrt(2 * 32.2) puts the last retained mode below 1e-14.
_MODE_REACH = 8.03
# Single reflections cover the short-range part only while the cutoff stays below 1/2.
MAX_SPLIT = 0.49 / CUTOFF


def split_width(blob_radius: float) -> float:
    """Gaussian split width: 2 delta, capped so the cutoff stays below 1/2; never below delta."""
    if blob_radius <= 0.0:
        return POINT_SPLIT
    if blob_radius > MAX_SPLIT:
        raise ValueError(f"blob radius {blob_radius} exceeds {MAX_SPLIT:.4g}, the split evaluator's limit")
    return min(SPLIT_FACTOR * blob_radius, MAX_SPLIT)


def blob_factor(r2: np.ndarray, blob_radius: float) -> np.ndarray:
    """1 / (r^2 + delta^2 tau): multiplies the displacement in the regularized kernel."""
    sigma = split_width(blob_radius)
    tau = np.exp(-r2 / (2.0 * sigma * sigma))
    return 1.0 / (r2 + blob_radius * blob_radius * tau)


def _reflected_sources(pq: np.ndarray, gamma: np.ndarray, reach: float) -> tuple[np.ndarray, np.ndarray]:
    """Sources plus their odd reflections across edges and corners within ``reach`` of the square."""
    pts, wts = [], []
    for s1, c1 in ((1.0, 0.0), (-1.0, 0.0), (-1.0, 2.0)):
        for s2, c2 in ((1.0, 0.0), (-1.0, 0.0), (-1.0, 2.0)):
            q = np.stack([c1 + s1 * pq[:, 0], c2 + s2 * pq[:, 1]], axis=1)
            keep = (q[:, 0] > -reach) & (q[:, 0] < 1.0 + reach) & (q[:, 1] > -reach) & (q[:, 1] < 1.0 + reach)
            pts.append(q[keep])
            wts.append((s1 * s2) * gamma[keep])
    return np.concatenate(pts), np.concatenate(wts)


@numba.njit(cache=True)
def _short_range(targets, src, wts, starts, origin, csize, ncell, sigma, delta, rc, out):
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    d2 = delta * delta
    rc2 = rc * rc
    for t in range(targets.shape[0]):
        px = targets[t, 0]
        py = targets[t, 1]
        ci = int((px - origin) / csize)
        cj = int((py - origin) / csize)
        gx = 0.0
        gy = 0.0
        # Cells are half the cutoff wide.
        for i in range(max(ci - 2, 0), min(ci + 3, ncell)):
            for j in range(max(cj - 2, 0), min(cj + 3, ncell)):
                c = i * ncell + j
                for k in range(starts[c], starts[c + 1]):
                    dx = px - src[k, 0]
                    dy = py - src[k, 1]
                    r2 = dx * dx + dy * dy
                    if r2 >= rc2 or r2 == 0.0:
                        continue
                    e = r2 * inv2s2
                    tau = math.exp(-e)
                    em1 = tau - 1.0 if e > 0.05 else math.expm1(-e)
                    f = 1.0 / (r2 + d2 * tau) + em1 / r2
                    gx += wts[k] * f * dx
                    gy += wts[k] * f * dy
        out[t, 0] = -gx / (2.0 * math.pi)
        out[t, 1] = -gy / (2.0 * math.pi)


class ParticleField:
    """Velocity of particles at ``xy`` (physical frame, in D+) with circulations ``gamma``."""

    def __init__(self, xy, gamma, blob_radius: float):
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        gamma = np.asarray(gamma, dtype=float).ravel()
        self.blob_radius = float(blob_radius)
        self.sigma = split_width(self.blob_radius)
        self.cutoff = CUTOFF * self.sigma
        live = gamma != 0.0
        pq = to_unit_square_xy(xy[live])
        g = gamma[live]
        # Odd partner of every particle across the symmetry axis (xi <-> eta).
        self._src = np.concatenate([pq, pq[:, ::-1]])
        self._gam = np.concatenate([g, -g])
        self.empty = self._gam.size == 0
        if not self.empty:
            self._build_smooth()
            self._build_cells()

    def _build_smooth(self):
        n = int(math.ceil(_MODE_REACH / (math.pi * self.sigma)))
        j = np.arange(1, n + 1, dtype=float)
        self._jpi = j * math.pi
        lam = j[:, None] ** 2 + j[None, :] ** 2
        weight = 4.0 / (math.pi**2 * lam) * np.exp(-0.5 * (self.sigma * math.pi) ** 2 * lam)
        s1 = np.sin(np.outer(self._jpi, self._src[:, 0]))
        s2 = np.sin(np.outer(self._jpi, self._src[:, 1]))
        self._coef = weight * ((s1 * self._gam) @ s2.T)

    def _build_cells(self):
        src, wts = _reflected_sources(self._src, self._gam, self.cutoff)
        origin = -self.cutoff
        csize = 0.5 * self.cutoff
        ncell = int(math.ceil((1.0 + 2.0 * self.cutoff) / csize))
        ij = np.clip(((src - origin) / csize).astype(np.int64), 0, ncell - 1)
        cell = ij[:, 0] * ncell + ij[:, 1]
        order = np.argsort(cell, kind="stable")
        self._cell_src = np.ascontiguousarray(src[order])
        self._cell_wts = np.ascontiguousarray(wts[order])
        self._starts = np.searchsorted(cell[order], np.arange(ncell * ncell + 1)).astype(np.int64)
        self._origin, self._csize, self._ncell = origin, csize, ncell

    def stream_gradient(self, pq: np.ndarray) -> np.ndarray:
        """Gradient of psi_+ = sum gamma G(., q) in the rotated frame at points pq."""
        pq = np.ascontiguousarray(np.asarray(pq, dtype=float).reshape(-1, 2))
        out = np.zeros_like(pq)
        if self.empty or len(pq) == 0:
            return out
        c1 = np.cos(np.outer(pq[:, 0], self._jpi)) * self._jpi
        s1 = np.sin(np.outer(pq[:, 0], self._jpi))
        c2 = np.cos(np.outer(pq[:, 1], self._jpi)) * self._jpi
        s2 = np.sin(np.outer(pq[:, 1], self._jpi))
        out[:, 0] = np.einsum("tk,tk->t", c1 @ self._coef, s2)
        out[:, 1] = np.einsum("tk,tk->t", s1 @ self._coef, c2)
        near = np.zeros_like(pq)
        _short_range(
            pq,
            self._cell_src,
            self._cell_wts,
            self._starts,
            self._origin,
            self._csize,
            self._ncell,
            self.sigma,
            self.blob_radius,
            self.cutoff,
            near,
        )
        return out + near

    def velocity(self, xy) -> np.ndarray:
        """Velocity (u1, u2) = (-d2 psi_+, d1 psi_+) at physical points, shape (N, 2)."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        g = self.stream_gradient(to_unit_square_xy(xy))
        u = np.empty_like(g)
        u[:, 0] = -(g[:, 0] + g[:, 1]) / SQRT2
        u[:, 1] = (g[:, 0] - g[:, 1]) / SQRT2
        # Exact zero on the symmetry axis.
        u[xy[:, 0] == 0.0, 0] = 0.0
        return u
