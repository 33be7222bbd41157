"""Square-shell enumeration of the image lattice and its remainder constants.

Image offsets are ``w = 2 m(n)``.  Written as complex numbers they are
``w = sqrt(2) (1 + i) nu`` with ``nu = n1 + i n2`` a Gaussian integer, so the
set of offsets in a max-norm shell is invariant under multiplication by ``i``.
Consequently the shell-ordered sums

    T_k(R) = sum_{|n|_inf > R} w^(-k)

vanish unless k is a multiple of four.  These are the coefficients of the
Taylor expansion of the truncated lattice remainder around the origin and
let every shell-summed quantity in the package be corrected for the shells
it did not visit.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from cornerflow.geometry import SQRT2

# Shells summed explicitly when tabulating the remainder constants.
_TABLE_SHELLS = 512
# Powers k = 4, 8, ..., 4 * _N_POWERS.
_N_POWERS = 60

# Lattice constant sum_{nu != 0} nu^-4 over the Gaussian integers.
EISENSTEIN_G4 = math.gamma(0.25) ** 8 / (960.0 * math.pi**2)


@lru_cache(maxsize=None)
def shell_indices(r: int) -> np.ndarray:
    """All (n1, n2) with max(|n1|, |n2|) == r, in a fixed order."""
    if r < 0:
        raise ValueError("shell radius must be non-negative")
    if r == 0:
        out = np.zeros((1, 2), dtype=np.int64)
    else:
        a = np.arange(-r, r + 1)
        inner = a[1:-1]
        out = np.concatenate(
            [
                np.stack([a, np.full_like(a, -r)], axis=1),
                np.stack([np.full_like(inner, r), inner], axis=1),
                np.stack([a[::-1], np.full_like(a, r)], axis=1),
                np.stack([np.full_like(inner, -r), inner[::-1]], axis=1),
            ]
        )
    out.setflags(write=False)
    return out


def offsets_from_indices(n: np.ndarray) -> np.ndarray:
    """Complex image offsets 2 m(n) for an (M, 2) index array."""
    n = np.asarray(n)
    return SQRT2 * (1.0 + 1.0j) * (n[..., 0] + 1.0j * n[..., 1])


@lru_cache(maxsize=None)
def shell_offsets(r: int) -> np.ndarray:
    out = offsets_from_indices(shell_indices(r))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def block_offsets(r_max: int) -> np.ndarray:
    """Offsets of every lattice point with max-norm <= r_max, shell by shell."""
    out = np.concatenate([shell_offsets(r) for r in range(r_max + 1)])
    out.setflags(write=False)
    return out


def eisenstein_constants(n_powers: int = _N_POWERS) -> np.ndarray:
    """sum_{nu != 0} nu^(-4j), j = 1..n_powers, for the Gaussian integers.

    Uses the Weierstrass recurrence for c_k = (2k - 1) G_{2k}; on the square
    lattice G_6 = 0 so only every other coefficient survives.
    """
    kmax = 2 * n_powers
    c = np.zeros(kmax + 1)
    c[2] = 3.0 * EISENSTEIN_G4
    for k in range(4, kmax + 1):
        acc = math.fsum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3.0 * acc / ((2 * k + 1) * (k - 3))
    g = np.array([c[2 * j] / (4 * j - 1) for j in range(1, n_powers + 1)])
    return g


@lru_cache(maxsize=1)
def _shell_power_table() -> np.ndarray:
    """table[r, j] = sum over shell r of nu^-(4(j+1)), real by symmetry."""
    table = np.zeros((_TABLE_SHELLS + 1, _N_POWERS))
    for r in range(1, _TABLE_SHELLS + 1):
        # One side of the shell; the other three follow by nu -> i nu.
        nu = r + 1.0j * np.arange(-r + 1, r + 1)
        u = nu**-4
        acc = np.ones_like(u)
        for j in range(_N_POWERS):
            acc = acc * u
            table[r, j] = 4.0 * acc.real.sum()
    return table


@lru_cache(maxsize=None)
def _remainder_sums(r: int) -> np.ndarray:
    """sum_{|nu|_inf > r} nu^-(4j) for j = 1.._N_POWERS."""
    table = _shell_power_table()
    if r >= _TABLE_SHELLS:
        raise ValueError(f"remainder constants tabulated only below shell {_TABLE_SHELLS}")
    # Reverse cumulative sum keeps the small far shells from being swamped.
    beyond = np.cumsum(table[::-1], axis=0)[::-1]
    out = beyond[r + 1].copy()
    full = eisenstein_constants()
    explicit = table[1:].sum(axis=0)
    # Only the two slowest powers have a visible remainder beyond the table.
    out[:2] += full[:2] - explicit[:2]
    return out


@lru_cache(maxsize=None)
def tail_coefficients(r: int) -> tuple[np.ndarray, np.ndarray]:
    """(k, T_k(r)) for k = 4, 8, ...: shell-ordered sum of w^-k over shells > r.

    Zero-valued tails are trimmed once they underflow.
    """
    ks = 4 * np.arange(1, _N_POWERS + 1)
    # w^-4 = (sqrt2 (1+i))^-4 nu^-4 = -nu^-4 / 16
    scale = (-1.0 / 16.0) ** np.arange(1, _N_POWERS + 1)
    t = scale * _remainder_sums(r)
    keep = np.nonzero(t)[0]
    n = keep[-1] + 1 if keep.size else 0
    ks, t = ks[:n].copy(), t[:n].astype(complex)
    ks.setflags(write=False)
    t.setflags(write=False)
    return ks, t


def truncate_tail(ks: np.ndarray, t: np.ndarray, radius: float, eps: float = 1e-18):
    """Drop powers whose contribution at |a| <= radius is below eps."""
    if radius <= 0.0 or ks.size == 0:
        return ks[:0], t[:0]
    with np.errstate(divide="ignore", over="ignore"):
        mag = np.abs(t) * radius ** ks.astype(float)
    big = np.nonzero(mag > eps)[0]
    n = big[-1] + 1 if big.size else 0
    return ks[:n], t[:n]


def tail_radius_ok(radius: float, r: int) -> bool:
    """Remainder series converges when every |a| stays inside the first omitted shell."""
    return radius < 2.0 * (r + 1) * 0.9
