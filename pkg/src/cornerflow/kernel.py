"""Symmetry-reduced Biot-Savart kernel on the half domain.

For vorticity odd in x1 the stream function reduces to an integral over the
right half ``D+`` of the 8-image log summand

    L(x, y) = sum_n log( |x-w-y| |-x-w-y| |xbs-w-y| |xts-w-y|
                        / (|xs-w-y| |-xs-w-y| |xt-w-y| |xb-w-y|) ),

with ``w = 2m(n)``, ``xt = (-x1, x2)``, ``xb = (x1, -x2)``, ``xs = (x2, x1)``,
``xbs = (x2, -x1)``, ``xts = (-x2, x1)``.  Then

    psi(x) = (1/2pi) int_{D+} L(x, y) omega(y) dy,    u = (d2 psi, -d1 psi),

and ``d2 L = 4 x1 (A - B - C + D)`` term by term, which gives the factored form
``u1 = (2 x1/pi) int (A - B - C + D) omega``.  ``u2`` is obtained from the
x1-derivative of the 8 logs directly.

Every lattice sum is split into complete shells ``|n|_inf <= r`` summed
explicitly and a Taylor remainder for the shells beyond, built from the
lattice constants in :mod:`cornerflow.lattice`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from cornerflow.errors import NonConvergenceError, SingularConfigurationError
from cornerflow.geometry import (
    HALF_DOMAIN_VERTICES,
    LatticeIndex,
    Point,
    RegionSpec,
    contains,
    lattice_shift,
)
from cornerflow.greens import SINGULAR_DISTANCE, ShellPolicy, green_many
from cornerflow.lattice import (
    block_offsets,
    shell_offsets,
    tail_coefficients,
    tail_radius_ok,
    truncate_tail,
)
from cornerflow.quadrature import leaf_rule, panelize

Field = Callable[[np.ndarray], np.ndarray]

# Image maps of x used by L: (sign in L, d z/d x1, d z/d x2) with z = image as complex.
_IMAGE_SIGNS = np.array([1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0])
_DZ1 = np.array([1, -1, -1j, 1j, 1j, -1j, -1, 1], dtype=complex)
_DZ2 = np.array([1j, -1j, 1, -1, 1, -1, 1j, -1j], dtype=complex)


def image_points(x) -> np.ndarray:
    """The 8 images x, -x, xbs, xts, xs, -xs, xt, xb as complex numbers."""
    x1, x2 = Point.of(x)
    return np.array(
        [
            complex(x1, x2),
            complex(-x1, -x2),
            complex(x2, -x1),
            complex(-x2, x1),
            complex(x2, x1),
            complex(-x2, -x1),
            complex(-x1, x2),
            complex(x1, -x2),
        ]
    )


@dataclass(frozen=True)
class KernelConfig:
    """Truncation, regularization and quadrature settings.

    ``quad_shells`` is the number of complete shells summed explicitly at
    each quadrature node; the remainder expansion supplies the rest.
    """

    shell_policy: ShellPolicy = field(default_factory=lambda: ShellPolicy(r_min=3))
    blob_radius: float = 0.8 / 64
    quad_order: int = 8
    refine_ratio: float = 3.0
    max_depth: int = 60
    quad_shells: int = 2

    def __post_init__(self):
        if not self.blob_radius >= 0.0:
            raise ValueError("blob_radius must be >= 0")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")
        if not self.refine_ratio > 0.0:
            raise ValueError("refine_ratio must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.quad_shells < 1:
            raise ValueError("quad_shells must be >= 1")

    def refined(self) -> "KernelConfig":
        """Doubled Gauss order and explicit shells, tighter shell tolerance; for convergence self-tests."""
        p = self.shell_policy
        return KernelConfig(
            shell_policy=ShellPolicy(r_min=2 * p.r_min, tol=p.tol / 100.0, r_max=p.r_max, tail_correction=p.tail_correction),
            blob_radius=self.blob_radius,
            quad_order=2 * self.quad_order,
            refine_ratio=self.refine_ratio,
            max_depth=self.max_depth,
            quad_shells=2 * self.quad_shells,
        )


@dataclass(frozen=True)
class VelocitySample:
    at: Point
    u1: float
    u2: float

    def __post_init__(self):
        if not (math.isfinite(self.u1) and math.isfinite(self.u2)):
            raise ArithmeticError(f"non-finite velocity at {self.at}")

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2])


@dataclass(frozen=True)
class RatioEntry:
    scale: float
    point: Point
    u1: float
    u2: float
    ratio1: float
    ratio2: float


@dataclass(frozen=True)
class RatioReport:
    a: float
    entries: list[RatioEntry]
    c1_empirical: float
    sup_norm: float

    def max_by_scale(self) -> dict[float, float]:
        out: dict[float, float] = {}
        for e in self.entries:
            out[e.scale] = max(out.get(e.scale, 0.0), e.ratio1, e.ratio2)
        return out

    @property
    def max_scale_variation(self) -> float:
        """Largest per-scale maximum over the maximum at the largest scale.

        Values near 1 mean the ratio does not grow toward the corner; the
        ratio is allowed to decay there, which fields vanishing at the
        corner do.
        """
        per = self.max_by_scale()
        if not per:
            return 1.0
        top, ref = max(per.values()), per[max(per)]
        if ref == 0.0:
            return 1.0 if top == 0.0 else math.inf
        return top / ref

    @property
    def small_to_large(self) -> float:
        """Max ratio at the smallest scale over that at the largest scale."""
        per = self.max_by_scale()
        if not per:
            return 1.0
        lo, hi = per[min(per)], per[max(per)]
        if hi == 0.0:
            return 1.0 if lo == 0.0 else math.inf
        return lo / hi


# ---------------------------------------------------------------------------
# Printed kernel terms


def kernel_term(x, y, n, which: str) -> float:
    """One of the terms A_n, B_n, C_n, D_n of the factored u1 kernel."""
    x1, x2 = Point.of(x)
    y1, y2 = Point.of(y)
    m = lattice_shift(LatticeIndex.of(n))
    p1, p2 = 2.0 * m.x1 + y1, 2.0 * m.x2 + y2

    def sq(a1, a2):
        return (a1 - p1) ** 2 + (a2 - p2) ** 2

    if which == "A":
        num, d1, d2 = (x2 - p2) * p1, sq(x1, x2), sq(-x1, x2)
    elif which == "B":
        num, d1, d2 = (x2 - p1) * p2, sq(x2, x1), sq(x2, -x1)
    elif which == "C":
        num, d1, d2 = (x2 + p2) * p1, sq(x1, -x2), sq(-x1, -x2)
    elif which == "D":
        num, d1, d2 = (x2 + p1) * p2, sq(-x2, x1), sq(-x2, -x1)
    else:
        raise ValueError(f"unknown kernel term {which!r}")
    if min(d1, d2) < SINGULAR_DISTANCE**2:
        raise SingularConfigurationError(f"kernel term {which} singular at n={n}")
    return num / (d1 * d2)


def _abcd(x1: float, x2: float, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """A - B - C + D for arrays of shifted sources p = 2m + y."""
    a = (x2 - p2) * p1 / (((x1 - p1) ** 2 + (x2 - p2) ** 2) * ((-x1 - p1) ** 2 + (x2 - p2) ** 2))
    b = (x2 - p1) * p2 / (((x2 - p1) ** 2 + (x1 - p2) ** 2) * ((x2 - p1) ** 2 + (-x1 - p2) ** 2))
    c = (x2 + p2) * p1 / (((x1 - p1) ** 2 + (-x2 - p2) ** 2) * ((-x1 - p1) ** 2 + (-x2 - p2) ** 2))
    d = (x2 + p1) * p2 / (((-x2 - p1) ** 2 + (x1 - p2) ** 2) * ((-x2 - p1) ** 2 + (-x1 - p2) ** 2))
    return (a - b) - (c - d)


def _check_singular(x, ys: np.ndarray, offsets: np.ndarray) -> None:
    zs = ys[..., 0] + 1j * ys[..., 1]
    d = np.abs(image_points(x)[:, None, None] - offsets[None, :, None] - zs.reshape(1, 1, -1))
    if d.size and d.min() < SINGULAR_DISTANCE:
        raise SingularConfigurationError("source coincides with an image of the target")


# ---------------------------------------------------------------------------
# Remainder expansions for the shells beyond r


def _divided_power_sum(u: np.ndarray, v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_j t_j (u^m - v^m)/(u - v) with m = 4j + 3, without dividing by u - v.

    Uses (u^(m+4) - v^(m+4))/(u - v) = u^4 dd_m + v^m (u^4 - v^4)/(u - v).
    """
    u2, v2 = u * u, v * v
    dd = u2 + u * v + v2
    dd4 = (u + v) * (u2 + v2)
    u4 = u2 * u2
    vm = v2 * v
    acc = t[0] * dd
    for tk in t[1:]:
        dd = u4 * dd + vm * dd4
        vm = vm * v2 * v2
        acc = acc + tk * dd
    return acc


def _tail_setup(x, ys: np.ndarray, r: int):
    zy = ys[..., 0] + 1j * ys[..., 1]
    a = image_points(x)[None, :] - zy.reshape(-1, 1)
    radius = float(np.abs(a).max()) if a.size else 0.0
    if not tail_radius_ok(radius, r):
        raise NonConvergenceError(f"remainder expansion invalid at shell {r} for |a|={radius:.3g}")
    ks, t = tail_coefficients(r)
    return a, truncate_tail(ks, t, radius)


def _kernel_tail(x, ys: np.ndarray, r: int) -> np.ndarray:
    """Remainder of sum_n (A - B - C + D) over shells beyond r."""
    a, (ks, t) = _tail_setup(x, ys, r)
    out = np.zeros(a.shape[0])
    if ks.size == 0:
        return out
    # Columns follow image_points: 0 x, 1 -x, 2 xbs, 3 xts, 4 xs, 5 -xs, 6 xt, 7 xb.
    pairs = (
        (a[:, 0], a[:, 6], 1.0),
        (a[:, 4], a[:, 2], -1.0),
        (a[:, 1], a[:, 7], 1.0),
        (a[:, 3], a[:, 5], -1.0),
    )
    acc = np.zeros(a.shape[0], dtype=complex)
    for u, v, sign in pairs:
        acc = acc + sign * _divided_power_sum(u, v, t)
    # For the (xs, xbs) and (xts, -xs) pairs u - v = 2 i x1 instead of 2 x1,
    # which together with the derivative factor gives the same prefactor.
    return -(0.5j * acc).real


def _log_derivative_tail(x, ys: np.ndarray, r: int, dz: np.ndarray) -> np.ndarray:
    """Remainder of sum_n sum_i s_i Re(dz_i / (a_i - w))."""
    a, (ks, t) = _tail_setup(x, ys, r)
    out = np.zeros(a.shape[0])
    if ks.size == 0:
        return out
    coef = _IMAGE_SIGNS * dz
    a4 = a**4
    p = a**3
    acc = np.zeros(a.shape[0], dtype=complex)
    for tk in t:
        acc = acc + tk * (p @ coef)
        p = p * a4
    return -acc.real


def _log_tail(x, ys: np.ndarray, r: int) -> np.ndarray:
    a, (ks, t) = _tail_setup(x, ys, r)
    out = np.zeros(a.shape[0])
    if ks.size == 0:
        return out
    a4 = a**4
    p = np.ones_like(a)
    acc = np.zeros(a.shape[0], dtype=complex)
    for k, tk in zip(ks, t):
        p = p * a4
        acc = acc + (tk / k) * (p @ _IMAGE_SIGNS)
    return -acc.real


# ---------------------------------------------------------------------------
# Vectorised kernels at many sources (used by quadrature)


@numba.njit(cache=True)
def _direct_sums(x1, x2, ys, wre, wim, want_k, want_d1, out_k, out_d1):
    """Explicit-shell parts of sum_n (A - B - C + D) and of d/dx1 L, one loop per node."""
    ix = (x1, -x1, x2, -x2, x2, -x2, -x1, x1)
    iy = (x2, -x2, -x1, x1, x1, -x1, x2, -x2)
    for j in range(ys.shape[0]):
        acc_k = 0.0
        acc_d = 0.0
        for i in range(wre.shape[0]):
            p1 = wre[i] + ys[j, 0]
            p2 = wim[i] + ys[j, 1]
            if want_k:
                a = (x2 - p2) * p1 / (((x1 - p1) ** 2 + (x2 - p2) ** 2) * ((-x1 - p1) ** 2 + (x2 - p2) ** 2))
                b = (x2 - p1) * p2 / (((x2 - p1) ** 2 + (x1 - p2) ** 2) * ((x2 - p1) ** 2 + (-x1 - p2) ** 2))
                c = (x2 + p2) * p1 / (((x1 - p1) ** 2 + (-x2 - p2) ** 2) * ((-x1 - p1) ** 2 + (-x2 - p2) ** 2))
                d = (x2 + p1) * p2 / (((-x2 - p1) ** 2 + (x1 - p2) ** 2) * ((-x2 - p1) ** 2 + (-x1 - p2) ** 2))
                acc_k += (a - b) - (c - d)
            if want_d1:
                s = 0.0
                for q in range(8):
                    dr = ix[q] - p1
                    di = iy[q] - p2
                    inv = 1.0 / (dr * dr + di * di)
                    # Re(dz1 conj(d)) for dz1 = 1, -1, -i, i, i, -i, -1, 1 and signs + + + + - - - -.
                    if q == 0:
                        s += dr * inv
                    elif q == 1:
                        s -= dr * inv
                    elif q == 2:
                        s -= di * inv
                    elif q == 3:
                        s += di * inv
                    elif q == 4:
                        s -= di * inv
                    elif q == 5:
                        s += di * inv
                    elif q == 6:
                        s += dr * inv
                    else:
                        s -= dr * inv
                acc_d += s
        out_k[j] = acc_k
        out_d1[j] = acc_d


def dense_kernels(x, ys, r: int = 2, want_k: bool = True, want_d1: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(sum_n (A - B - C + D), d/dx1 L) at an (N, 2) array of sources, with remainders."""
    ys = np.ascontiguousarray(np.atleast_2d(np.asarray(ys, dtype=float)))
    x1, x2 = Point.of(x)
    w = np.asarray(block_offsets(r))
    k = np.zeros(len(ys))
    d1 = np.zeros(len(ys))
    _direct_sums(x1, x2, ys, np.ascontiguousarray(w.real), np.ascontiguousarray(w.imag), want_k, want_d1, k, d1)
    if want_k:
        k += _kernel_tail(x, ys, r)
    if want_d1:
        d1 += _log_derivative_tail(x, ys, r, _DZ1)
    return k, d1


def combined_kernel_many(x, ys, r: int = 2) -> np.ndarray:
    """sum_n (A - B - C + D)(x, y) for an (N, 2) array of sources."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    x1, x2 = Point.of(x)
    w = np.asarray(block_offsets(r))
    p1 = w.real[:, None] + ys[None, :, 0]
    p2 = w.imag[:, None] + ys[None, :, 1]
    direct = _abcd(x1, x2, p1, p2).sum(axis=0)
    return direct + _kernel_tail(x, ys, r)


def log_derivative_many(x, ys, r: int = 2, axis: int = 0) -> np.ndarray:
    """Derivative of the 8-image log summand in x1 (axis 0) or x2 (axis 1), summed over the lattice."""
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    dz = _DZ1 if axis == 0 else _DZ2
    zy = ys[:, 0] + 1j * ys[:, 1]
    w = np.asarray(block_offsets(r))
    img = image_points(x)
    acc = np.zeros(len(ys))
    for i in range(8):
        d = img[i] - w[:, None] - zy[None, :]
        acc += _IMAGE_SIGNS[i] * (dz[i] * np.conj(d) / (d.real**2 + d.imag**2)).real.sum(axis=0)
    return acc + _log_derivative_tail(x, ys, r, dz)


def log_summand_many(x, ys, r: int = 2) -> np.ndarray:
    """The 8-image log summand L(x, y), summed over the lattice."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    zy = ys[:, 0] + 1j * ys[:, 1]
    w = np.asarray(block_offsets(r))
    img = image_points(x)
    acc = np.zeros(len(ys))
    for num, den in ((0, 4), (1, 5), (2, 6), (3, 7)):
        acc += np.log(np.abs(img[num] - w[:, None] - zy) / np.abs(img[den] - w[:, None] - zy)).sum(axis=0)
    return acc + _log_tail(x, ys, r)


# ---------------------------------------------------------------------------
# Shell-summed kernel at a single pair


def shell_increments(x, y, r_max: int) -> np.ndarray:
    """Complete-shell sums of A - B - C + D for shells 0..r_max."""
    x1, x2 = Point.of(x)
    y1, y2 = Point.of(y)
    out = np.empty(r_max + 1)
    for r in range(r_max + 1):
        w = np.asarray(shell_offsets(r))
        out[r] = math.fsum(_abcd(x1, x2, w.real + y1, w.imag + y2))
    return out


def combined_kernel(x, y, policy: ShellPolicy | None = None) -> float:
    """sum over shells of (A - B - C + D)(x, y), stopped by ``policy``."""
    policy = policy or ShellPolicy()
    x, y = Point.of(x), Point.of(y)
    ys = y.as_array()[None, :]
    _check_singular(x, ys, np.asarray(block_offsets(1)))
    totals: list[float] = []
    previous = None
    for r in range(policy.r_max + 1):
        w = np.asarray(shell_offsets(r))
        totals.append(math.fsum(_abcd(x.x1, x.x2, w.real + y.x1, w.imag + y.x2)))
        if r < policy.r_min:
            continue
        estimate = math.fsum(totals)
        if policy.tail_correction:
            estimate += float(_kernel_tail(x, ys, r)[0])
        if previous is not None and abs(estimate - previous) < policy.tol:
            return estimate
        previous = estimate
    raise NonConvergenceError(f"kernel sum for x={x}, y={y} not converged within {policy.r_max} shells")


# ---------------------------------------------------------------------------
# Dense quadrature over D+


def singular_points(x, radius: int = 1) -> np.ndarray:
    """Images of x near the half domain, which the quadrature must resolve."""
    img = image_points(x)
    w = np.asarray(block_offsets(radius))
    z = (img[:, None] - w[None, :]).ravel()
    pts = np.stack([z.real, z.imag], axis=1)
    # Only points within reach of the half domain influence the refinement.
    near = (pts[:, 0] > -1.0) & (pts[:, 0] < 1.8) & (pts[:, 1] > -1.0) & (pts[:, 1] < 2.5)
    return pts[near]


def _half_domain_rule(x, cfg: KernelConfig) -> tuple[np.ndarray, np.ndarray]:
    leaves = panelize(HALF_DOMAIN_VERTICES, singular_points(x), cfg.refine_ratio, cfg.max_depth)
    return leaf_rule(leaves, cfg.quad_order)


def _in_chunks(fn, nodes: np.ndarray, chunk: int = 4096) -> np.ndarray:
    return np.concatenate([fn(nodes[i : i + chunk]) for i in range(0, len(nodes), chunk)]) if len(nodes) else np.zeros(0)


def velocity_dense(x, omega: Field, cfg: KernelConfig | None = None) -> VelocitySample:
    """Velocity at x from the half-domain integral of a vorticity field."""
    cfg = cfg or KernelConfig()
    x = Point.of(x)
    if x.x1 == 0.0 and x.x2 == 0.0:
        return VelocitySample(x, 0.0, 0.0)
    nodes, weights = _half_domain_rule(x, cfg)
    om = np.asarray(omega(nodes), dtype=float)
    wo = weights * om
    k, d1 = dense_kernels(x, nodes, cfg.quad_shells, want_k=x.x1 != 0.0)
    u1 = 2.0 * x.x1 / math.pi * math.fsum(k * wo) if x.x1 != 0.0 else 0.0
    u2 = -math.fsum(d1 * wo) / (2.0 * math.pi)
    return VelocitySample(x, u1, u2)


def stream_function(x, omega: Field, cfg: KernelConfig | None = None) -> float:
    """psi(x) = -int_{D+} [G(x, y) - G(x, y~)] omega(y) dy, with G the positive Green function.

    Equal to ``(1/2pi) int L omega``; in this convention ``u = (d2 psi, -d1 psi)``.
    """
    cfg = cfg or KernelConfig()
    x = Point.of(x)
    nodes, weights = _half_domain_rule(x, cfg)
    om = np.asarray(omega(nodes), dtype=float)
    r = cfg.quad_shells

    def kernel(y):
        yt = y.copy()
        yt[:, 0] = -yt[:, 0]
        return green_many(x, y, r) - green_many(x, yt, r)

    g = _in_chunks(kernel, nodes)
    return -math.fsum(g * weights * om)


def velocity_from_stream(x, omega: Field, cfg: KernelConfig | None = None, step: float = 1e-4) -> np.ndarray:
    """Central-difference velocity (d2 psi, -d1 psi); a check on :func:`velocity_dense`."""
    x1, x2 = Point.of(x)
    psi = lambda a, b: stream_function((a, b), omega, cfg)
    d1 = (psi(x1 + step, x2) - psi(x1 - step, x2)) / (2 * step)
    d2 = (psi(x1, x2 + step) - psi(x1, x2 - step)) / (2 * step)
    return np.array([d2, -d1])


# ---------------------------------------------------------------------------
# Ratio sweep


def fan_points(a: float, scale: float, n_rays: int = 9) -> list[Point]:
    """Points at distance ``scale`` on rays from 45 degrees to the cone edge arctan(a)."""
    angles = np.linspace(math.pi / 4.0, math.atan(a), n_rays)
    return [Point(scale * math.cos(t), scale * math.sin(t)) for t in angles]


def ratio_sweep(
    omega: Field,
    a: float,
    scales: Sequence[float],
    cfg: KernelConfig | None = None,
    sup_norm: float = 1.0,
    n_rays: int = 9,
) -> RatioReport:
    """Sample |u1/x1| and |u2/x2| over the cone near the corner."""
    cfg = cfg or KernelConfig()
    region = RegionSpec.cone(a)
    entries: list[RatioEntry] = []
    for s in scales:
        if not 0.0 < s < 0.5:
            raise ValueError(f"scales must lie in (0, 1/2), got {s}")
        for p in fan_points(a, s, n_rays):
            if not contains(p, region):
                # The cone edge ray can land a rounding error outside.
                p = Point(p.x1 * (1 + 1e-14), p.x2)
            v = velocity_dense(p, omega, cfg)
            entries.append(RatioEntry(s, p, v.u1, v.u2, abs(v.u1 / p.x1), abs(v.u2 / p.x2)))
    top = max((max(e.ratio1, e.ratio2) for e in entries), default=0.0)
    c1 = top / sup_norm if sup_norm > 0 else 0.0
    return RatioReport(float(a), entries, c1, float(sup_norm))


# ---------------------------------------------------------------------------
# Particle velocity


def _particle_field(particles, cfg: KernelConfig):
    """Cached split evaluator for a particle snapshot (anything with xy, omega, area)."""
    from cornerflow.fastfield import ParticleField

    cache = getattr(particles, "_field_cache", None)
    if cache is not None and cfg.blob_radius in cache:
        return cache[cfg.blob_radius]
    pf = ParticleField(particles.xy, particles.omega * particles.area, cfg.blob_radius)
    if cache is not None:
        cache[cfg.blob_radius] = pf
    return pf


def velocity_particles_many(xy, particles, cfg: KernelConfig | None = None) -> np.ndarray:
    """Regularized particle velocity at an (N, 2) array of points."""
    cfg = cfg or KernelConfig()
    return _particle_field(particles, cfg).velocity(xy)


def velocity_particles(x, particles, cfg: KernelConfig | None = None) -> VelocitySample:
    """Regularized particle-sum velocity at a single point."""
    x = Point.of(x)
    if x.x1 == 0.0 and x.x2 == 0.0:
        return VelocitySample(x, 0.0, 0.0)
    u = velocity_particles_many(x.as_array()[None, :], particles, cfg)[0]
    return VelocitySample(x, float(u[0]), float(u[1]))


def velocity_particles_direct(x, particles, cfg: KernelConfig | None = None, r: int = 2) -> VelocitySample:
    """Reference for :func:`velocity_particles`: explicit 8-image lattice sum over all particles.

    Every image distance carries the same regularization as the fast path;
    shells beyond ``r`` use the point-kernel remainder expansion, where the
    regularization has decayed to nothing.
    """
    from cornerflow.fastfield import blob_factor

    cfg = cfg or KernelConfig()
    x = Point.of(x)
    if x.x1 == 0.0 and x.x2 == 0.0:
        return VelocitySample(x, 0.0, 0.0)
    ys = np.asarray(particles.xy, dtype=float)
    gam = np.asarray(particles.omega * particles.area, dtype=float)
    zy = ys[:, 0] + 1j * ys[:, 1]
    w = np.asarray(block_offsets(r))
    img = image_points(x)
    d1 = np.zeros(len(ys))
    d2 = np.zeros(len(ys))
    for i in range(8):
        d = img[i] - w[:, None] - zy[None, :]
        f = blob_factor(d.real**2 + d.imag**2, cfg.blob_radius)
        d1 += _IMAGE_SIGNS[i] * ((_DZ1[i] * np.conj(d)).real * f).sum(axis=0)
        d2 += _IMAGE_SIGNS[i] * ((_DZ2[i] * np.conj(d)).real * f).sum(axis=0)
    d1 += _log_derivative_tail(x, ys, r, _DZ1)
    d2 += _log_derivative_tail(x, ys, r, _DZ2)
    u1 = 0.0 if x.x1 == 0.0 else math.fsum(d2 * gam) / (2.0 * math.pi)
    u2 = -math.fsum(d1 * gam) / (2.0 * math.pi)
    return VelocitySample(x, u1, u2)
