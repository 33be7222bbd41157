"""Experiment drivers behind the command-line subcommands.

Each driver returns plain rows plus a summary and leaves file writing to the
caller, so the same code serves the tests, the demos and the CLI.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from cornerflow.geometry import BoundaryMarker, Edge, Point, from_unit_square
from cornerflow.greens import OracleConfig, ShellPolicy, green_image, green_oracle
from cornerflow.kernel import KernelConfig, RatioReport, ratio_sweep, shell_increments
from cornerflow.presets import preset_omega0
from cornerflow.transport import SimulationResult, gronwall_check, init_particles, simulate

log = logging.getLogger(__name__)

DEFAULT_SCALES = tuple(2.0**-k for k in range(2, 13))
MARKER_SCALES = tuple(2.0**-k for k in range(3, 9))
# Discretization headroom on the growth constant.
HEADROOM = 2.0
GRONWALL_SLACK = 0.05


def fit_exponential(series: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares fit of log(value) = intercept + rate * t.  Returns (rate, intercept, r_squared)."""
    if len(series) < 4:
        raise ValueError("need at least 4 points to fit")
    t = np.array([p[0] for p in series], dtype=float)
    v = np.array([p[1] for p in series], dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("values must be positive")
    y = np.log(v)
    if np.ptp(y) == 0.0:
        return 0.0, float(y[0]), 1.0
    res = stats.linregress(t, y)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


# ---------------------------------------------------------------------------
# Green function validation


@dataclass(frozen=True)
class GreenRow:
    x: Point
    y: Point
    g_image: float
    g_oracle: float
    shells_used: int

    @property
    def abs_err(self) -> float:
        return abs(self.g_image - self.g_oracle)


@dataclass
class GreenValidation:
    rows: list[GreenRow]
    n_pairs: int
    max_abs_err: float
    max_symmetry_gap: float
    diagonal_value: float
    all_positive: bool

    def failures(self, tol: float = 1e-5, sym_tol: float = 1e-6) -> list[str]:
        out = []
        if self.max_abs_err > tol:
            out.append(f"oracle mismatch {self.max_abs_err:.3g} > {tol:g}")
        if self.max_symmetry_gap > sym_tol:
            out.append(f"symmetry gap {self.max_symmetry_gap:.3g} > {sym_tol:g}")
        if self.diagonal_value != 0.0:
            out.append(f"diagonal-edge value {self.diagonal_value!r} is not exactly 0")
        if not self.all_positive:
            out.append("non-positive Green function value at an interior pair")
        return out


def sample_pairs(n: int, seed: int, separation: float) -> list[tuple[Point, Point]]:
    """Seeded interior pairs at least ``separation`` apart; close draws are redrawn."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        p, q = rng.uniform(0.02, 0.98, size=(2, 2))
        x, y = from_unit_square(*p), from_unit_square(*q)
        if math.dist(x, y) < separation:
            log.info("redrawing pair %s, %s: closer than %g", x, y, separation)
            continue
        pairs.append((x, y))
    return pairs


def green_validate(
    n_pairs: int = 20,
    seed: int = 0,
    policy: ShellPolicy | None = None,
    oracle: OracleConfig | None = None,
) -> GreenValidation:
    """Image sum against the eigenfunction oracle on random pairs, their swaps and a diagonal-edge point."""
    policy = policy or ShellPolicy()
    oracle = oracle or OracleConfig()
    pairs = sample_pairs(n_pairs, seed, oracle.separation)
    pairs += [(y, x) for x, y in pairs]
    diag = (Point(0.3, 0.3), Point(0.1, 0.5))
    pairs.append(diag)
    rows = []
    for x, y in pairs:
        g, shells = green_image(x, y, policy)
        rows.append(GreenRow(x, y, g, green_oracle(x, y, oracle), shells))
    sym = max(abs(a.g_image - b.g_image) for a, b in zip(rows[:n_pairs], rows[n_pairs : 2 * n_pairs]))
    return GreenValidation(
        rows=rows,
        n_pairs=n_pairs,
        max_abs_err=max(r.abs_err for r in rows),
        max_symmetry_gap=sym,
        diagonal_value=rows[-1].g_image,
        all_positive=all(r.g_image > 0.0 for r in rows[: 2 * n_pairs]),
    )


# ---------------------------------------------------------------------------
# Kernel decay

DECAY_PAIRS = (
    (Point(0.2, 0.3), Point(0.5, 0.7)),
    (Point(0.1, 0.6), Point(0.3, 0.4)),
    (Point(0.35, 0.5), Point(0.05, 1.1)),
    (Point(0.05, 0.1), Point(0.4, 0.9)),
)
AXIS_PAIRS = (
    (Point(0.0, 0.5), Point(0.3, 0.6)),
    (Point(0.0, 1.2), Point(0.1, 0.3)),
)


@dataclass
class KernelDecay:
    shells: np.ndarray
    max_abs_increment: np.ndarray
    slope: float
    axis_max: float
    fit_range: tuple[int, int]


def u1_shell_increments(x: Point, y: Point, r_max: int) -> np.ndarray:
    """Complete-shell contributions to the u1 integrand (2 x1/pi)(A - B - C + D), shells 0..r_max."""
    return 2.0 * x.x1 / math.pi * shell_increments(x, y, r_max)


def kernel_decay(r_max: int = 64, fit_range: tuple[int, int] = (4, 64)) -> KernelDecay:
    shells = np.arange(1, r_max + 1)
    inc = np.max([np.abs(u1_shell_increments(x, y, r_max)[1:]) for x, y in DECAY_PAIRS], axis=0)
    axis = max(float(np.abs(u1_shell_increments(x, y, r_max)).max()) for x, y in AXIS_PAIRS)
    lo, hi = fit_range
    sel = (shells >= lo) & (shells <= hi) & (inc > 0)
    slope = float(np.polyfit(np.log(shells[sel]), np.log(inc[sel]), 1)[0])
    return KernelDecay(shells, inc, slope, axis, fit_range)


# ---------------------------------------------------------------------------
# Ratio sweep


@dataclass
class RatioSweep:
    report: RatioReport
    refined: RatioReport | None

    @property
    def c1_relative_change(self) -> float | None:
        if self.refined is None:
            return None
        base = self.report.c1_empirical
        if base == 0.0:
            return 0.0 if self.refined.c1_empirical == 0.0 else math.inf
        return abs(self.refined.c1_empirical - base) / base


def run_ratio_sweep(preset: str, a: float, scales: Sequence[float], cfg: KernelConfig, check_convergence: bool = True) -> RatioSweep:
    p = preset_omega0(preset)
    rep = ratio_sweep(p, a, scales, cfg, sup_norm=p.sup_norm)
    ref = ratio_sweep(p, a, scales, cfg.refined(), sup_norm=p.sup_norm) if check_convergence else None
    return RatioSweep(rep, ref)


# ---------------------------------------------------------------------------
# Growth experiment


@dataclass(frozen=True)
class GrowthRow:
    t: float
    s0: float
    r: float
    omega: float
    q: float


@dataclass
class GrowthReport:
    rows: list[GrowthRow]
    fitted_rate: float | None
    lip0: float
    c1_ref: float
    bound_satisfied: bool
    sup_norm: float = 0.0
    c: float = 0.0
    envelope_satisfied: bool = True
    rate_satisfied: bool = True
    gronwall_satisfied: bool = True
    markers_in_half_ball: bool = True
    marker_scales: tuple[float, ...] = ()
    fit_r_squared: float | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "rows": [[r.t, r.s0, r.r, r.omega, r.q] for r in self.rows],
            "fitted_rate": self.fitted_rate,
            "lip0": self.lip0,
            "c1_ref": self.c1_ref,
            "bound_satisfied": self.bound_satisfied,
            "sup_norm": self.sup_norm,
            "c": self.c,
            "envelope_satisfied": self.envelope_satisfied,
            "rate_satisfied": self.rate_satisfied,
            "gronwall_satisfied": self.gronwall_satisfied,
            "markers_in_half_ball": self.markers_in_half_ball,
            "marker_scales": list(self.marker_scales),
            "fit_r_squared": self.fit_r_squared,
            **self.extras,
        }


def growth_rows(sim: SimulationResult, every: int) -> list[GrowthRow]:
    rows = []
    for rec in sim.markers:
        s0 = abs(rec.start)
        omega = _marker_omega(sim, rec.start)
        for k, (t, p) in enumerate(rec.samples):
            if k % every and k != len(rec.samples) - 1:
                continue
            r = abs(p)
            rows.append(GrowthRow(t, s0, r, omega, abs(omega) / r))
    rows.sort(key=lambda row: (row.t, row.s0))
    return rows


def _marker_omega(sim: SimulationResult, start: Point) -> float:
    # Markers are material points: they carry their initial value.
    p = preset_omega0(sim.final.omega0_spec)
    return float(p(start.as_array()[None, :])[0])


def assess_growth(
    sim: SimulationResult,
    c1_ref: float,
    every: int = 10,
    headroom: float = HEADROOM,
) -> GrowthReport:
    """Check |omega| <= Lip |x| exp(c |omega0| t) along the markers, c = headroom * c1_ref."""
    p = preset_omega0(sim.final.omega0_spec)
    sup, lip = p.sup_norm, p.lip_norm
    c = headroom * c1_ref
    rows = growth_rows(sim, every)
    envelope = all(abs(r.omega) <= lip * r.r * math.exp(c * sup * r.t) * (1 + 1e-12) for r in rows)
    times = sorted({r.t for r in rows})
    qmax = {t: max(r.q for r in rows if r.t == t) for t in times}
    T = times[-1]
    window = [(t, qmax[t]) for t in times if t >= 0.5 * T]
    rate = r2 = None
    if len(window) >= 4 and all(v > 0 for _, v in window):
        rate, _, r2 = fit_exponential(window)
    rate_ok = rate is None or rate <= c * sup
    gron = all(gronwall_check(rec, c1_ref, sup, GRONWALL_SLACK) for rec in sim.markers if rec.edge is Edge.LOWER_RIGHT)
    in_ball = all(abs(p_) < 0.5 for rec in sim.markers for _, p_ in rec.samples)
    return GrowthReport(
        rows=rows,
        fitted_rate=rate,
        lip0=lip,
        c1_ref=c1_ref,
        bound_satisfied=envelope and rate_ok,
        sup_norm=sup,
        c=c,
        envelope_satisfied=envelope,
        rate_satisfied=rate_ok,
        gronwall_satisfied=gron,
        markers_in_half_ball=in_ball,
        marker_scales=tuple(abs(rec.start) for rec in sim.markers),
        fit_r_squared=r2,
    )


def run_growth(
    preset: str,
    h: float,
    dt: float,
    T: float,
    cfg: KernelConfig,
    c1_ref: float,
    scales: Sequence[float] = MARKER_SCALES,
    every: int = 10,
) -> tuple[GrowthReport, SimulationResult]:
    """Simulate with lower-right edge markers; halve the marker scales while any leaves B(0, 1/2)."""
    scales = list(scales)
    while True:
        markers = [BoundaryMarker(Edge.LOWER_RIGHT, s, 0.0) for s in scales]
        state = init_particles(preset, h)
        sim = simulate(state, markers, dt, T, cfg)
        report = assess_growth(sim, c1_ref, every)
        if report.markers_in_half_ball or min(scales) < 1e-6:
            return report, sim
        log.warning("a marker left B(0, 1/2) before T=%g; halving the marker scales", T)
        scales = [s / 2.0 for s in scales]
