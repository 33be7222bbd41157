"""Command-line front end: ``python -m cornerflow <subcommand>``.

Subcommands write CSV (and JSON summaries) into ``--out-dir``.  Exit codes:
0 when every embedded check passes, 2 when a check fails, 1 on a
configuration or numerical error.  Each failure names the violated check on
standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from cornerflow.errors import CornerflowError
from cornerflow.experiments import (
    DEFAULT_SCALES,
    green_validate,
    kernel_decay,
    run_growth,
    run_ratio_sweep,
)
from cornerflow.greens import OracleConfig, ShellPolicy
from cornerflow.kernel import KernelConfig
from cornerflow.presets import PRESET_NAMES

log = logging.getLogger("cornerflow")

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "sinpatch"
    h: float = 1.0 / 64
    dt: float = 0.01
    T: float = 3.0
    a: float = 2.0
    scales: tuple[float, ...] = DEFAULT_SCALES
    output_dir: Path = Path(".")
    seed: int = 0
    # Kernel settings; blob_radius defaults to 0.8 h.
    blob_radius: float | None = None
    quad_order: int = 8
    refine_ratio: float = 3.0
    max_depth: int = 60
    quad_shells: int = 2
    r_min: int = 8
    tol: float = 1e-10
    r_max: int = 256
    tail_correction: bool = True
    k_max: int = 400
    n_pairs: int = 20
    decay_shells: int = 64
    check_convergence: bool = True

    def __post_init__(self):
        if self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 < self.dt < self.T:
            raise ConfigError("need 0 < dt < T")
        if not self.a > 1:
            raise ConfigError("a must exceed 1")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if any(not 0 < s < 0.5 for s in self.scales):
            raise ConfigError("scales must lie in (0, 1/2)")

    @property
    def shell_policy(self) -> ShellPolicy:
        return ShellPolicy(self.r_min, self.tol, self.r_max, self.tail_correction)

    @property
    def kernel(self) -> KernelConfig:
        blob = 0.8 * self.h if self.blob_radius is None else self.blob_radius
        return KernelConfig(ShellPolicy(min(self.r_min, 3), self.tol, self.r_max, self.tail_correction), blob, self.quad_order, self.refine_ratio, self.max_depth, self.quad_shells)

    @property
    def oracle(self) -> OracleConfig:
        return OracleConfig(self.k_max)


# ---------------------------------------------------------------------------
# Config files


def _number(text: str) -> float:
    # Fractions such as 1/64 are accepted.
    return float(Fraction(text.strip()))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _scales(text: str) -> tuple[float, ...]:
    return tuple(_number(s) for s in text.split(",") if s.strip())


_PARSERS = {
    "preset": str.strip,
    "h": _number,
    "dt": _number,
    "T": _number,
    "a": _number,
    "scales": _scales,
    "output_dir": lambda s: Path(s.strip()),
    "seed": int,
    "blob_radius": _number,
    "quad_order": int,
    "refine_ratio": _number,
    "max_depth": int,
    "quad_shells": int,
    "r_min": int,
    "tol": _number,
    "r_max": int,
    "tail_correction": _bool,
    "k_max": int,
    "n_pairs": int,
    "decay_shells": int,
    "check_convergence": _bool,
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "out_dir":
            key = "output_dir"
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _PARSERS[key](value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    overrides = {
        "output_dir": args.out_dir,
        "seed": args.seed,
        "preset": args.preset,
        "h": args.h,
        "dt": args.dt,
        "T": args.T,
        "a": args.a,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = _PARSERS[key](str(value)) if key != "output_dir" else Path(value)
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Output


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=False, default=float) + "\n", encoding="utf-8")


def _fail(checks: list[str]) -> int:
    for c in checks:
        print(f"check failed: {c}", file=sys.stderr)
    return EXIT_CHECK if checks else EXIT_OK


# ---------------------------------------------------------------------------
# Subcommands


def cmd_green_validate(cfg: RunConfig) -> int:
    res = green_validate(cfg.n_pairs, cfg.seed, cfg.shell_policy, cfg.oracle)
    write_csv(
        cfg.output_dir / "green_validate.csv",
        ["x1", "x2", "y1", "y2", "G_image", "G_oracle", "abs_err", "shells_used"],
        ([r.x.x1, r.x.x2, r.y.x1, r.y.x2, r.g_image, r.g_oracle, r.abs_err, r.shells_used] for r in res.rows),
    )
    print(f"max abs_err {res.max_abs_err:.3e}, symmetry gap {res.max_symmetry_gap:.3e}, diagonal value {res.diagonal_value!r}")
    return _fail([f"green-validate: {m}" for m in res.failures()])


def cmd_kernel_decay(cfg: RunConfig) -> int:
    res = kernel_decay(cfg.decay_shells, (4, cfg.decay_shells))
    write_csv(cfg.output_dir / "kernel_decay.csv", ["shell", "max_abs_increment"], zip(res.shells.tolist(), res.max_abs_increment.tolist()))
    print(f"log-log slope {res.slope:.3f} over shells {res.fit_range[0]}-{res.fit_range[1]}, axis max increment {res.axis_max!r}")
    checks = []
    if res.slope > -2.7:
        checks.append(f"kernel-decay: slope {res.slope:.3f} > -2.7")
    if res.axis_max != 0.0:
        checks.append(f"kernel-decay: axis increments not zero ({res.axis_max:.3g})")
    return _fail(checks)


def cmd_ratio_sweep(cfg: RunConfig) -> int:
    res = run_ratio_sweep(cfg.preset, cfg.a, cfg.scales, cfg.kernel, cfg.check_convergence)
    rep = res.report
    write_csv(
        cfg.output_dir / "ratio_sweep.csv",
        ["a", "scale", "x1", "x2", "u1", "u2", "ratio1", "ratio2"],
        ([rep.a, e.scale, e.point.x1, e.point.x2, e.u1, e.u2, e.ratio1, e.ratio2] for e in rep.entries),
    )
    summary = {
        "a": rep.a,
        "c1_empirical": rep.c1_empirical,
        "max_scale_variation": rep.max_scale_variation,
        "smallest_to_largest": rep.small_to_large,
        "sup_norm": rep.sup_norm,
        "c1_refined": res.refined.c1_empirical if res.refined else None,
        "c1_relative_change": res.c1_relative_change,
    }
    write_json(cfg.output_dir / "ratio_summary.json", summary)
    print(json.dumps(summary))
    checks = []
    if rep.small_to_large > 3.0:
        checks.append(f"ratio-sweep: smallest-scale max ratio is {rep.small_to_large:.3g} x the largest-scale max")
    if rep.max_scale_variation >= 3.0:
        checks.append(f"ratio-sweep: scale variation {rep.max_scale_variation:.3g} >= 3")
    if res.c1_relative_change is not None and res.c1_relative_change >= 0.01:
        checks.append(f"ratio-sweep: c1 changes by {res.c1_relative_change:.3g} under refinement")
    return _fail(checks)


def cmd_simulate_growth(cfg: RunConfig) -> int:
    if cfg.preset == "zero":
        log.warning("the zero preset gives a trivially flat growth curve")
    kc = cfg.kernel
    sweep = run_ratio_sweep(cfg.preset, cfg.a, cfg.scales, kc, check_convergence=False)
    c1 = sweep.report.c1_empirical
    steps = int(round(cfg.T / cfg.dt))
    every = 10 if steps >= 40 else 1
    report, _ = run_growth(cfg.preset, cfg.h, cfg.dt, cfg.T, kc, c1, every=every)
    write_csv(cfg.output_dir / "growth.csv", ["t", "s0", "r", "omega", "q"], ([r.t, r.s0, r.r, r.omega, r.q] for r in report.rows))
    payload = report.to_json()
    payload.update({"preset": cfg.preset, "h": cfg.h, "dt": cfg.dt, "T": cfg.T, "a": cfg.a})
    write_json(cfg.output_dir / "growth_report.json", payload)
    print(
        f"fitted_rate {report.fitted_rate}, c1_ref {c1:.4g}, admissible rate {report.c * report.sup_norm:.4g}, "
        f"bound_satisfied {report.bound_satisfied}"
    )
    checks = []
    if not report.envelope_satisfied:
        checks.append("simulate-growth: |omega| exceeds Lip |x| exp(c |omega0| t)")
    if not report.rate_satisfied:
        checks.append(f"simulate-growth: fitted rate {report.fitted_rate:.4g} exceeds {report.c * report.sup_norm:.4g}")
    if not report.gronwall_satisfied:
        checks.append("simulate-growth: Gronwall lower bound violated by a marker")
    return _fail(checks)


COMMANDS = {
    "green-validate": cmd_green_validate,
    "kernel-decay": cmd_kernel_decay,
    "ratio-sweep": cmd_ratio_sweep,
    "simulate-growth": cmd_simulate_growth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cornerflow", description="Euler flow in the odd rotated square: checks and experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out-dir", help="directory for output files")
        p.add_argument("--seed", type=int)
        p.add_argument("--preset", choices=PRESET_NAMES)
        p.add_argument("--h", help="particle mesh spacing, e.g. 1/64")
        p.add_argument("--dt")
        p.add_argument("--T")
        p.add_argument("--a")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (CornerflowError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
