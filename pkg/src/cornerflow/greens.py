"""Dirichlet Green function of the rotated unit square.

Two independent evaluations are provided:

* :func:`green_image` sums the image lattice in complete max-norm shells.
  Each lattice index contributes four logarithms, the images ``x``, ``-x``
  (sign +1 after the flip below) and ``x*``, ``-x*`` (sign -1).
* :func:`green_oracle` rotates to the axis-aligned square and sums the sine
  eigenfunction expansion with one index done in closed form.

Sign convention: ``G`` inverts ``-Laplacian`` and is positive inside the
domain.  The image formula as usually printed,
``(1/2pi) log(|x-2m-y||-x-2m-y| / (|x*-2m-y||-x*-2m-y|))``, is ``-G``; the
kernel module works with that stream-function convention (``Laplacian psi =
omega``) and carries the sign explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cornerflow.errors import DomainError, NonConvergenceError, SeparationError, SingularConfigurationError
from cornerflow.geometry import LatticeIndex, Point, in_closure_xy, lattice_shift, to_unit_square
from cornerflow.lattice import (
    block_offsets,
    shell_offsets,
    tail_coefficients,
    tail_radius_ok,
    truncate_tail,
)

TWO_PI = 2.0 * math.pi

# Distances below this are treated as an image coinciding with the target.
SINGULAR_DISTANCE = 1e-12


@dataclass(frozen=True)
class ShellPolicy:
    """How a lattice sum is truncated.

    Shells are added until the change in the running estimate drops below
    ``tol``, never before ``r_min`` and never past ``r_max``.  With
    ``tail_correction`` the estimate after shell r includes the Taylor
    expansion of all shells beyond r, so it converges in a handful of shells;
    without it the raw partial sum is used and the shell contribution itself
    is compared against ``tol``.
    """

    r_min: int = 8
    tol: float = 1e-10
    r_max: int = 256
    tail_correction: bool = True

    def __post_init__(self):
        if not 1 <= self.r_min <= self.r_max:
            raise ValueError(f"need 1 <= r_min <= r_max, got r_min={self.r_min}, r_max={self.r_max}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.r_max >= 500:
            raise ValueError("r_max must stay below 500")


@dataclass(frozen=True)
class OracleConfig:
    k_max: int = 400
    separation: float = 0.05

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


def image_charges(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Complex offsets a_i = image_i(x) - y and their signs for G (positive convention).

    ``y`` may be an array of points; the result then has shape ``y.shape[:-1] + (4,)``.
    """
    x1, x2 = Point.of(x)
    y = np.asarray(y, dtype=float)
    zy = y[..., 0] + 1j * y[..., 1]
    zx = complex(x1, x2)
    zs = complex(x2, x1)
    a = np.stack([zs - zy, -zs - zy, zx - zy, -zx - zy], axis=-1)
    return a, _SIGNS


_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])


def green_term(x, y, n) -> float:
    """Single lattice summand of G(x, y) for index n."""
    n = LatticeIndex.of(n)
    m = lattice_shift(n)
    w = complex(2.0 * m.x1, 2.0 * m.x2)
    a, s = image_charges(x, Point.of(y).as_array())
    d = np.abs(a - w)
    if d.min() < SINGULAR_DISTANCE:
        raise SingularConfigurationError(f"image of x coincides with y at n={n}")
    # Pair the logs so that x on the diagonal edge (x* = x) cancels exactly.
    return (math.log(d[0] / d[2]) + math.log(d[1] / d[3])) / TWO_PI


def _log_tail(a: np.ndarray, s: np.ndarray, r: int) -> np.ndarray:
    """Remainder of sum_i s_i log|a_i - w| over shells beyond r."""
    ks, t = tail_coefficients(r)
    radius = float(np.abs(a).max()) if a.size else 0.0
    if not tail_radius_ok(radius, r):
        raise NonConvergenceError(f"remainder expansion invalid at shell {r} for |a|={radius:.3g}")
    ks, t = truncate_tail(ks, t, radius)
    if ks.size == 0:
        return np.zeros(a.shape[:-1])
    # sum_i s_i a_i^k for every k, built incrementally in a^4.
    a4 = a**4
    p = np.ones_like(a)
    acc = np.zeros(a.shape[:-1], dtype=complex)
    for k, tk in zip(ks, t):
        p = p * a4
        acc = acc + (tk / k) * (p @ s)
    return -acc.real


def green_image(x, y, policy: ShellPolicy | None = None) -> tuple[float, int]:
    """Shell-summed image series for G(x, y).  Returns (value, shells_used)."""
    policy = policy or ShellPolicy()
    x, y = Point.of(x), Point.of(y)
    a, s = image_charges(x, y.as_array())
    shell_totals: list[float] = []
    previous = None
    for r in range(policy.r_max + 1):
        d = np.abs(a[None, :] - np.asarray(shell_offsets(r))[:, None])
        if d.min() < SINGULAR_DISTANCE:
            raise SingularConfigurationError(f"image coincidence in shell {r} for x={x}, y={y}")
        # (x* vs x) and (-x* vs -x) paired term by term.
        shell_totals.append(float(np.sum(np.log(d[:, 0] / d[:, 2]) + np.log(d[:, 1] / d[:, 3]))))
        if r < policy.r_min:
            continue
        partial = math.fsum(shell_totals)
        if policy.tail_correction:
            estimate = partial + float(_log_tail(a, s, r))
        else:
            estimate = partial
        if previous is not None and abs(estimate - previous) < policy.tol * TWO_PI:
            return estimate / TWO_PI, r
        previous = estimate
    raise NonConvergenceError(
        f"image sum for x={x}, y={y} not converged to {policy.tol:g} within {policy.r_max} shells"
    )


def green_many(x, ys, r: int = 2) -> np.ndarray:
    """G(x, y) for an array of sources, using shells <= r plus the remainder expansion.

    Intended for quadrature: the shell count is fixed so the result is a
    smooth function of the sources.
    """
    ys = np.asarray(ys, dtype=float)
    a, s = image_charges(x, ys)
    w = np.asarray(block_offsets(r))
    d = np.abs(a[..., None, :] - w[:, None])
    if d.size and d.min() < SINGULAR_DISTANCE:
        raise SingularConfigurationError("image coincidence in green_many")
    direct = np.sum(np.log(d[..., 0] / d[..., 2]) + np.log(d[..., 1] / d[..., 3]), axis=-1)
    return (direct + _log_tail(a, s, r)) / TWO_PI


def green_oracle(x, y, cfg: OracleConfig | None = None) -> float:
    """Eigenfunction expansion of G on the unit square, one index summed in closed form.

    For each mode j along the axis with the smaller coordinate gap, the
    transverse problem ``-g'' + (j pi)^2 g = delta`` is solved exactly, giving

        G = sum_j 2/(j pi) sin(j pi p) sin(j pi q) sinh(j pi lo) sinh(j pi (1 - hi)) / sinh(j pi),

    which decays like ``exp(-j pi |gap|)`` along the other axis.
    """
    cfg = cfg or OracleConfig()
    x, y = Point.of(x), Point.of(y)
    for p in (x, y):
        if not bool(in_closure_xy(p.as_array(), 1e-12)):
            raise DomainError(f"{p} lies outside the closed square")
    if math.dist(x, y) < cfg.separation:
        raise SeparationError(f"|x - y| = {math.dist(x, y):.3g} below oracle separation {cfg.separation}")
    p = np.clip(to_unit_square(x), 0.0, 1.0)
    q = np.clip(to_unit_square(y), 0.0, 1.0)
    if abs(p[1] - q[1]) < abs(p[0] - q[0]):
        p, q = p[::-1], q[::-1]
    lo, hi = min(p[1], q[1]), max(p[1], q[1])
    j = np.arange(1, cfg.k_max + 1, dtype=float)
    jp = j * math.pi
    # sinh(a) sinh(b) / sinh(a + b + gap) written with decaying exponentials only.
    transverse = (
        np.exp(-jp * (hi - lo))
        * -np.expm1(-2.0 * jp * lo)
        * -np.expm1(-2.0 * jp * (1.0 - hi))
        / (-np.expm1(-2.0 * jp))
        / 2.0
    )
    terms = 2.0 / jp * np.sin(jp * p[0]) * np.sin(jp * q[0]) * transverse
    return math.fsum(terms)
