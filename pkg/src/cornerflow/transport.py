"""Lagrangian vortex-particle transport on the half domain.

Vorticity is carried by particles at the barycenters of a uniform
triangulation of ``D+``; the odd extension supplies the left half.  Particle
values never change, so the sup norm is conserved exactly.  Boundary
markers ride on the edges through the scalar arc-coordinate ODE
``ds/dt = u . e_edge``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from cornerflow.errors import DomainError, TransportError
from cornerflow.geometry import (
    HALF_DOMAIN_VERTICES,
    BoundaryMarker,
    Edge,
    Point,
    edge_frame,
    from_unit_square_xy,
    half_closure_violation_xy,
    marker_position,
    odd_representative,
    reflect,
    to_unit_square_xy,
)
from cornerflow.kernel import KernelConfig, velocity_particles_many
from cornerflow.presets import preset_omega0

ESCAPE_TOL = 1e-6
# dt_max = CFL_FACTOR / max |grad u|.
CFL_FACTOR = 0.2
FD_STEP = 1e-3


@dataclass(frozen=True)
class VorticityParticle:
    pos: Point
    omega: float
    area: float

    def __post_init__(self):
        if not self.area > 0.0:
            raise ValueError("particle area must be positive")


@dataclass
class ParticleSet:
    """Particle positions and their carried values, stored as arrays.

    ``omega`` and ``area`` are shared, read-only arrays: moving a set creates
    a new one with new positions and the very same value arrays.
    """

    xy: np.ndarray
    omega: np.ndarray
    area: np.ndarray
    h: float
    omega0_spec: str
    sup_norm: float
    lip_norm: float
    _field_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for a in (self.xy, self.omega, self.area):
            a.setflags(write=False)
        if self.xy.shape != (len(self.omega), 2) or self.area.shape != self.omega.shape:
            raise ValueError("inconsistent particle array shapes")

    def __len__(self) -> int:
        return len(self.omega)

    @property
    def particles(self) -> list[VorticityParticle]:
        return [VorticityParticle(Point(*p), float(w), float(a)) for p, w, a in zip(self.xy, self.omega, self.area)]

    @property
    def total_area(self) -> float:
        return math.fsum(self.area)

    def moved(self, xy: np.ndarray) -> "ParticleSet":
        return ParticleSet(np.array(xy, dtype=float), self.omega, self.area, self.h, self.omega0_spec, self.sup_norm, self.lip_norm)


def _mesh_size(h: float) -> int:
    n = round(1.0 / h)
    if n < 1 or abs(n * h - 1.0) > 1e-12 or n & (n - 1):
        raise DomainError(f"h must be 1 / 2^k, got {h}")
    return n


def half_domain_mesh(h: float) -> tuple[np.ndarray, np.ndarray]:
    """Triangles of the uniform mesh of D+ in the rotated frame, as (T, 3, 2) vertices, and their areas.

    Squares of side h below the diagonal are cut along their own diagonal;
    squares on the diagonal contribute only their lower triangle.
    """
    n = _mesh_size(h)
    i, j = np.nonzero(np.tri(n, n, dtype=bool))  # j <= i
    x0, y0 = i * h, j * h
    lower = np.stack([np.stack([x0, y0], 1), np.stack([x0 + h, y0], 1), np.stack([x0 + h, y0 + h], 1)], 1)
    off = j < i
    upper = np.stack(
        [np.stack([x0[off], y0[off]], 1), np.stack([x0[off] + h, y0[off] + h], 1), np.stack([x0[off], y0[off] + h], 1)], 1
    )
    tris = np.concatenate([lower, upper])
    return tris, np.full(len(tris), 0.5 * h * h)


def init_particles(preset: str, h: float) -> ParticleSet:
    """Particles at triangle barycenters of the uniform mesh of D+."""
    p = preset_omega0(preset)
    tris, areas = half_domain_mesh(h)
    xy = from_unit_square_xy(tris.mean(axis=1))
    omega = np.asarray(p(xy), dtype=float)
    # Lipschitz estimate from the piecewise-linear interpolant of the vertex values.
    vals = p(from_unit_square_xy(tris))
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    f1 = vals[:, 1] - vals[:, 0]
    f2 = vals[:, 2] - vals[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    gx = (f1 * e2[:, 1] - f2 * e1[:, 1]) / det
    gy = (f2 * e1[:, 0] - f1 * e2[:, 0]) / det
    lip = float(np.hypot(gx, gy).max())
    sup = float(np.abs(omega).max())
    return ParticleSet(xy, omega, areas, float(h), preset, sup, lip)


# ---------------------------------------------------------------------------
# Markers


@dataclass(frozen=True)
class TrajectoryRecord:
    start: Point
    samples: list[tuple[float, Point]]
    edge: Edge | None = None

    def positions(self) -> np.ndarray:
        return np.array([[p.x1, p.x2] for _, p in self.samples])

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])


def _marker_xy(markers: Sequence[BoundaryMarker], s: np.ndarray | None = None) -> np.ndarray:
    out = np.empty((len(markers), 2))
    for k, m in enumerate(markers):
        corner, direction = edge_frame(m.edge)
        out[k] = corner + (m.s if s is None else s[k]) * direction
    return out


def _marker_speed(markers: Sequence[BoundaryMarker], u: np.ndarray) -> np.ndarray:
    return np.array([u[k] @ edge_frame(m.edge)[1] for k, m in enumerate(markers)])


# ---------------------------------------------------------------------------
# Time stepping


def stability_bound(state: ParticleSet, cfg: KernelConfig) -> float:
    """dt_max = CFL_FACTOR / max |grad u| from central differences at 9 interior points."""
    if not np.any(state.omega):
        return math.inf
    t = np.array([0.2, 0.5, 0.8])
    xi, eta = np.meshgrid(t, t, indexing="ij")
    pq = np.stack([xi.ravel(), eta.ravel()], 1)
    # Keep the stencil inside D+ (xi > eta) by folding.
    pq = np.where(pq[:, :1] >= pq[:, 1:], pq, pq[:, ::-1])
    pq[:, 0] += 0.05
    pq[:, 1] = np.minimum(pq[:, 1], pq[:, 0] - 0.05)
    pts = from_unit_square_xy(pq)
    e = FD_STEP
    shifts = np.array([[e, 0.0], [-e, 0.0], [0.0, e], [0.0, -e]])
    xs = (pts[:, None, :] + shifts[None]).reshape(-1, 2)
    u = velocity_particles_many(xs, state, cfg).reshape(len(pts), 4, 2)
    grad = np.stack([(u[:, 0] - u[:, 1]) / (2 * e), (u[:, 2] - u[:, 3]) / (2 * e)], axis=-1)
    g = float(np.linalg.norm(grad, ord=2, axis=(1, 2)).max())
    return CFL_FACTOR / g if g > 0 else math.inf


def _confine(xy: np.ndarray) -> np.ndarray:
    """Check escape from closure(D+) and push points within tolerance back onto it."""
    viol = half_closure_violation_xy(xy)
    if viol.size and viol.max() > ESCAPE_TOL:
        k = int(viol.argmax())
        raise TransportError(f"particle escaped the half domain by {viol[k]:.3g} at {xy[k]}")
    if not viol.any():
        return xy
    pq = np.clip(to_unit_square_xy(xy), 0.0, 1.0)
    swap = pq[:, 1] > pq[:, 0]
    mid = 0.5 * (pq[swap, 0] + pq[swap, 1])
    pq[swap, 0] = mid
    pq[swap, 1] = mid
    out = from_unit_square_xy(pq)
    out[swap, 0] = 0.0
    return out


def _velocities(state: ParticleSet, pos: np.ndarray, mxy: np.ndarray, markers, cfg: KernelConfig):
    u = velocity_particles_many(np.concatenate([pos, mxy]), state, cfg)
    return u[: len(pos)], _marker_speed(markers, u[len(pos) :]) if len(markers) else np.zeros(0)


def step(
    state: ParticleSet,
    markers: Sequence[BoundaryMarker],
    dt: float,
    cfg: KernelConfig | None = None,
    dt_max: float | None = None,
) -> tuple[ParticleSet, list[BoundaryMarker]]:
    """One classical RK4 step of particles and markers.

    Each stage evaluates the velocity of the particle configuration at that
    stage, so the scheme is fourth order in time for the coupled system.
    """
    cfg = cfg or KernelConfig()
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if dt_max is None:
        dt_max = stability_bound(state, cfg)
    if dt > dt_max:
        raise TransportError(f"dt={dt} exceeds stability bound {dt_max:.3g}")
    markers = list(markers)
    x0 = state.xy
    s0 = np.array([m.s for m in markers])

    def stage(xy, s):
        st = state if xy is x0 else state.moved(xy)
        return _velocities(st, xy, _marker_xy(markers, s), markers, cfg)

    k1, m1 = stage(x0, s0)
    k2, m2 = stage(x0 + 0.5 * dt * k1, s0 + 0.5 * dt * m1)
    k3, m3 = stage(x0 + 0.5 * dt * k2, s0 + 0.5 * dt * m2)
    k4, m4 = stage(x0 + dt * k3, s0 + dt * m3)
    x1 = x0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    s1 = s0 + dt / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4)
    new_markers = [BoundaryMarker(m.edge, float(s), m.omega0) for m, s in zip(markers, s1)]
    return state.moved(_confine(x1)), new_markers


def advect_frozen(points, state: ParticleSet, dt: float, cfg: KernelConfig | None = None) -> np.ndarray:
    """RK4 step of passive points in the velocity field of a fixed particle snapshot."""
    cfg = cfg or KernelConfig()
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    u = lambda p: velocity_particles_many(p, state, cfg)
    k1 = u(x)
    k2 = u(x + 0.5 * dt * k1)
    k3 = u(x + 0.5 * dt * k2)
    k4 = u(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


# ---------------------------------------------------------------------------
# History and characteristics


@dataclass
class FlowHistory:
    times: list[float]
    snapshots: list[ParticleSet]
    dt_max: float = math.inf
    cfg: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        if len(self.times) != len(self.snapshots) or not self.times:
            raise ValueError("history needs one snapshot per time")
        if self.times[0] != 0.0 or any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("history times must start at 0 and increase strictly")

    @property
    def final_time(self) -> float:
        return self.times[-1]

    def velocity(self, k: int, xy: np.ndarray) -> np.ndarray:
        return velocity_particles_many(xy, self.snapshots[k], self.cfg)


@dataclass
class SimulationResult:
    history: FlowHistory
    markers: list[TrajectoryRecord]
    final: ParticleSet


def simulate(
    state: ParticleSet,
    markers: Sequence[BoundaryMarker],
    dt: float,
    T: float,
    cfg: KernelConfig | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> SimulationResult:
    """Advance to time T, storing every step in the history."""
    cfg = cfg or KernelConfig()
    if not (T > 0 and 0 < dt <= T):
        raise ValueError("need 0 < dt <= T")
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    markers = list(markers)
    records = [[(0.0, marker_position(m))] for m in markers]
    times, snaps = [0.0], [state]
    dt_max = math.inf
    for n in range(1, nsteps + 1):
        bound = stability_bound(state, cfg)
        dt_max = min(dt_max, bound)
        state, markers = step(state, markers, dt, cfg, dt_max=bound)
        t = n * dt
        times.append(t)
        snaps.append(state)
        for rec, m in zip(records, markers):
            rec.append((t, marker_position(m)))
        if progress is not None:
            progress(n, t)
    history = FlowHistory(times, snaps, dt_max, cfg)
    recs = [TrajectoryRecord(r[0][1], r, m.edge) for r, m in zip(records, markers)]
    return SimulationResult(history, recs, state)


def _bracket(history: FlowHistory, t: float) -> int:
    times = history.times
    if not 0.0 <= t <= times[-1] + 1e-12:
        raise ValueError(f"t={t} outside the history [0, {times[-1]}]")
    return int(np.searchsorted(times, min(t, times[-1]), side="left"))


def backward_trajectories(xs, t: float, history: FlowHistory) -> np.ndarray:
    """gamma^{-1}(t) for an (N, 2) array of points in closure(D+).

    RK4 backward in time over the history intervals; the velocity inside an
    interval is linear in time between the two bracketing snapshots.
    """
    x = np.array(xs, dtype=float).reshape(-1, 2)
    if t == 0.0:
        return x
    gaps = np.diff(history.times)
    if gaps.size and gaps.max() > history.dt_max:
        raise TransportError(f"history gap {gaps.max():.3g} exceeds dt_max {history.dt_max:.3g}")
    times = history.times
    k = _bracket(history, t)
    # Walk intervals [times[j-1], times[j]] from the one containing t down to 0.
    tcur = t
    for j in range(k, 0, -1):
        lo, hi = times[j - 1], times[j]
        h = tcur - lo
        if h <= 0.0:
            continue
        th = (tcur - lo) / (hi - lo)

        def u(p, theta):
            ua = history.velocity(j - 1, p) if theta < 1.0 else 0.0
            ub = history.velocity(j, p) if theta > 0.0 else 0.0
            return (1.0 - theta) * ua + theta * ub

        thm = 0.5 * th
        k1 = -u(x, th)
        k2 = -u(x + 0.5 * h * k1, thm)
        k3 = -u(x + 0.5 * h * k2, thm)
        k4 = -u(x + h * k3, 0.0)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        tcur = lo
    return x


def backward_trajectory(x, t: float, history: FlowHistory, cfg: KernelConfig | None = None) -> Point:
    """Starting point at time 0 of the trajectory through x at time t."""
    rep, sign = odd_representative(x)
    if cfg is not None and cfg != history.cfg:
        history = FlowHistory(history.times, history.snapshots, history.dt_max, cfg)
    out = Point(*backward_trajectories(rep.as_array()[None, :], t, history)[0])
    return out if sign > 0 else reflect(out, "tilde")


def vorticity_at(x, t: float, history: FlowHistory, omega0) -> float:
    """omega(x, t) = omega0(gamma_x^{-1}(t)) with the odd extension."""
    origin = backward_trajectory(x, t, history)
    rep, sign = odd_representative(origin, tol=1e-6)
    return sign * float(np.asarray(omega0(rep.as_array()[None, :])).ravel()[0])


def gronwall_check(record: TrajectoryRecord, c: float, sup_norm: float, slack: float = 0.05) -> bool:
    """True iff gamma_1(t) >= X_1 exp(-c |omega0| t) (1 - slack) at every sample."""
    x1 = record.start.x1
    return all(p.x1 >= x1 * math.exp(-c * sup_norm * t) * (1.0 - slack) for t, p in record.samples)


# ---------------------------------------------------------------------------
# Incompressibility proxy


def cell_areas(xy) -> np.ndarray:
    """Areas of the Voronoi cells of the points, clipped to D+.

    Ghost points mirrored across the three edges of D+ close off the cells
    along the boundary.
    """
    from scipy.spatial import Voronoi
    from shapely.geometry import Polygon

    pts = np.asarray(xy, dtype=float)
    pq = to_unit_square_xy(pts)
    ghosts = [
        np.stack([pq[:, 0], -pq[:, 1]], 1),  # eta = 0
        np.stack([2.0 - pq[:, 0], pq[:, 1]], 1),  # xi = 1
        pq[:, ::-1],  # xi = eta
    ]
    allpq = np.concatenate([pq] + ghosts)
    vor = Voronoi(allpq)
    domain = Polygon(to_unit_square_xy(HALF_DOMAIN_VERTICES))
    out = np.zeros(len(pq))
    for i in range(len(pq)):
        region = vor.regions[vor.point_region[i]]
        if not region or -1 in region:
            raise TransportError("unbounded Voronoi cell for an interior particle")
        cell = Polygon(vor.vertices[region])
        out[i] = cell.intersection(domain).area
    return out
