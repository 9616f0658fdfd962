"""``acasimir`` command-line front end.

Every subcommand writes ``<out>/sweep.csv`` and ``<out>/manifest.json``.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .acoustics import (
    acp_pressure_detail,
    electrostatic_pressure,
    ideal_pressure,
    nearest_extremum,
    pressure_extrema,
    pressure_profile,
    repulsive_peak_locations,
    sign_changes,
    sweep_gaps,
)
from .config import ConfigError, RunConfig, load_config
from .mems import (
    PULL_IN_FRACTION,
    bifurcation_curve,
    lambda2,
    pull_in_classic,
    pull_in_from_shape,
    shape_slope,
)
from .numerics import NumericsError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

MAX_SIGN_REPORT = 12


def fmt(x: float) -> str:
    """17 significant digits, scientific, locale-independent."""
    return format(float(x), ".16e")


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Sequence[float]]) -> None:
    n = len(columns[0])
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(fmt(col[i]) for col in columns))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


class Run:
    """Collects manifest data for one subcommand invocation."""

    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.timings: dict[str, float] = {}
        self.evaluations = 0
        self.max_error = 0.0
        self.warnings: list[str] = []
        self.sign_report: list[dict] = []
        self.results: dict = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - t0

    def count(self, evaluations: int, error: float) -> None:
        self.evaluations += evaluations
        self.max_error = max(self.max_error, error)

    def manifest(self) -> dict:
        return {
            "tool": "acasimir",
            "version": __version__,
            "command": self.command,
            "config": self.cfg.to_dict(),
            "timings_s": self.timings,
            "quadrature": {"evaluations": self.evaluations, "max_error_Pa": self.max_error},
            "sign_convention": self.sign_report,
            "warnings": self.warnings,
            "results": self.results,
        }


def _sign_label(p: float) -> str:
    if p > 0:
        return "repulsive"
    if p < 0:
        return "attractive"
    return "zero"


def record_sign_convention(run: Run, L_lo: float, L_hi: float) -> None:
    """Pressure sign at each predicted repulsive gap inside [L_lo, L_hi]."""
    cfg = run.cfg
    band, env, tol = cfg.band(), cfg.environment(), cfg.tolerance()
    n_max = max(1, math.floor(L_hi * band.omega1 / (math.pi * cfg.c)))
    peaks = [(n, L) for n, L in enumerate(repulsive_peak_locations(band, cfg.c, n_max), 1)
             if L_lo <= L <= L_hi][:MAX_SIGN_REPORT]
    mismatches = 0
    for n, L in peaks:
        ev = acp_pressure_detail(L, band, env, tol, cfg.domain_mode)
        run.count(ev.evaluations, ev.error)
        label = _sign_label(ev.pressure)
        agrees = label == "repulsive"
        mismatches += not agrees and label != "zero"
        run.sign_report.append({
            "n": n, "L_m": L, "P_Pa": ev.pressure, "sign": label,
            "matches_repulsive_label": agrees,
        })
    if mismatches:
        run.warnings.append(
            f"pressure is attractive at {mismatches} of {len(peaks)} predicted repulsive "
            f"gaps n*pi*c/omega1 (domain_mode={cfg.domain_mode})"
        )
    if not peaks:
        run.warnings.append("no predicted repulsive gap inside the swept range")


# --- subcommands -------------------------------------------------------------

def cmd_pressure_sweep(cfg: RunConfig, out: Path) -> Run:
    run = Run("pressure-sweep", cfg)
    band, env, tol = cfg.band(), cfg.environment(), cfg.tolerance()
    gaps = cfg.gaps()
    with run.stage("profile"):
        profile = pressure_profile(gaps, band, env, tol, cfg.domain_mode)
        run.count(profile.evaluations, profile.max_error)
    with run.stage("write_csv"):
        ideal = [ideal_pressure(L, env.intensity) for L in profile.gaps]
        write_csv(out / "sweep.csv", ["L_m", "P_Pa", "P_ideal_Pa"],
                  [profile.gaps, profile.pressures, ideal])
    with run.stage("analysis"):
        crossings = sign_changes(profile, tol)
        extrema = pressure_extrema(profile, tol)
        n_max = max(1, math.floor(cfg.L_max * band.omega1 / (math.pi * cfg.c)))
        predicted = [L for L in repulsive_peak_locations(band, cfg.c, n_max)
                     if cfg.L_min <= L <= cfg.L_max]
        matches = []
        for n, L in enumerate(predicted, 1):
            e = nearest_extremum(extrema, L)
            if e is not None:
                matches.append({"predicted_L_m": L, "extremum_L_m": e.L,
                                "extremum_P_Pa": e.pressure, "rel_offset": e.L / L - 1.0})
        run.results = {
            "band_rad_s": [band.omega1, band.omega2],
            "sign_changes_m": crossings,
            "predicted_peaks_m": predicted,
            "extrema": [{"L_m": e.L, "P_Pa": e.pressure} for e in extrema],
            "peak_matches": matches,
        }
    with run.stage("sign_convention"):
        record_sign_convention(run, cfg.L_min, cfg.L_max)
    return run


def cmd_compare_electrostatic(cfg: RunConfig, out: Path) -> Run:
    run = Run("compare-electrostatic", cfg)
    if not cfg.voltages:
        raise ConfigError("voltages", "at least one voltage required")
    gaps = cfg.gaps()
    with run.stage("write_csv"):
        p0 = [ideal_pressure(L, cfg.intensity) for L in gaps]
        cols = [gaps, p0]
        header = ["L_m", "P0_Pa"]
        for i, V in enumerate(cfg.voltages, 1):
            header.append(f"P_es_V{i}_Pa")
            cols.append([electrostatic_pressure(L, V) for L in gaps])
        write_csv(out / "sweep.csv", header, cols)
    run.results = {"voltage_columns": {f"P_es_V{i}_Pa": V for i, V in enumerate(cfg.voltages, 1)}}
    with run.stage("sign_convention"):
        record_sign_convention(run, cfg.L_min, cfg.L_max)
    return run


def _counting_shape(run: Run, cfg: RunConfig):
    dev, env, band, tol = cfg.device(), cfg.environment(), cfg.band(), cfg.tolerance()
    unit = env.with_intensity(1.0)
    cache: dict[float, float] = {}

    def f(L_tilde: float) -> float:
        if L_tilde not in cache:
            ev = acp_pressure_detail(L_tilde * dev.D, band, unit, tol, cfg.domain_mode)
            run.count(ev.evaluations, ev.error)
            cache[L_tilde] = L_tilde * L_tilde * dev.D * ev.pressure
        return cache[L_tilde]

    return f


def _l_tilde_grid(cfg: RunConfig) -> list[float]:
    return [float(x) for x in np.linspace(cfg.L_tilde_min, cfg.L_tilde_max, cfg.n_points)]


def cmd_bifurcation(cfg: RunConfig, out: Path, lambda2_list: Sequence[float] | None = None) -> Run:
    run = Run("bifurcation", cfg)
    values = list(cfg.lambda2_values if lambda2_list is None else lambda2_list)
    if any(v < 0 for v in values):
        raise ConfigError("lambda2_values", "must be >= 0")
    dev = cfg.device()
    f = _counting_shape(run, cfg)
    grid = _l_tilde_grid(cfg)
    with run.stage("curves"):
        curves = [bifurcation_curve(grid, v, f) for v in values]
        write_csv(out / "sweep.csv",
                  ["L_tilde"] + [f"lambda1_lambda2={v:g}" for v in values],
                  [grid] + curves)
    with run.stage("maxima"):
        summary = []
        for v in values:
            res = pull_in_from_shape(dev, v, f, cfg.tolerance())
            summary.append({
                "lambda2": v, "L_tilde_star": res.L_tilde_star,
                "lambda1_star": res.lambda1_star,
                "argmax_at_two_thirds": not res.argmax_shifted,
                "V_star": res.V_star, "V_star_closed": res.V_star_closed,
            })
        slope = shape_slope(f)
        # curves ordered top-to-bottom by lambda2 near the pull-in fraction
        probe = [PULL_IN_FRACTION + d for d in (-0.01, 0.0, 0.01)]
        order = sorted(values, reverse=True)
        ordered = all(
            all(a >= b for a, b in zip(
                bifurcation_curve(probe, hi, f), bifurcation_curve(probe, lo, f)))
            for hi, lo in zip(order[:-1], order[1:])
        )
        run.results = {
            "curves": summary,
            "f_at_two_thirds": f(PULL_IN_FRACTION),
            "df_dL_tilde_at_two_thirds": slope,
            "ordered_top_to_bottom_by_lambda2": ordered,
        }
        if not ordered:
            run.warnings.append("curves are not ordered by lambda2 near L_tilde = 2/3")
        if any(s["argmax_at_two_thirds"] is False for s in summary):
            run.warnings.append("bifurcation maximum moved away from L_tilde = 2/3")
    with run.stage("sign_convention"):
        record_sign_convention(run, cfg.L_tilde_min * cfg.D, cfg.L_tilde_max * cfg.D)
    return run


def cmd_pull_in(cfg: RunConfig, out: Path) -> Run:
    run = Run("pull-in", cfg)
    dev, env = cfg.device(), cfg.environment()
    lam2 = lambda2(dev, env)
    f = _counting_shape(run, cfg)
    grid = _l_tilde_grid(cfg)
    with run.stage("curve"):
        fs = [f(x) for x in grid]
        write_csv(out / "sweep.csv", ["L_tilde", "f", "lambda1"],
                  [grid, fs, bifurcation_curve(grid, lam2, f)])
    with run.stage("pull_in"):
        classic = pull_in_classic(dev)
        res = pull_in_from_shape(dev, lam2, f, cfg.tolerance())
        run.results = {
            "V_in": classic.V_in,
            "L_in_m": classic.L_in,
            "lambda2": lam2,
            "f_at_L_in": f(PULL_IN_FRACTION),
            "V_star": res.V_star,
            "V_star_closed": res.V_star_closed,
            "L_tilde_star": res.L_tilde_star,
            "lambda1_star": res.lambda1_star,
            "argmax_shifted": res.argmax_shifted,
        }
        if res.argmax_shifted:
            run.warnings.append("pull-in gap moved away from 2D/3; V_star_closed is approximate")
    with run.stage("sign_convention"):
        record_sign_convention(run, cfg.L_tilde_min * cfg.D, cfg.L_tilde_max * cfg.D)
    r = run.results
    print(f"V_in        = {r['V_in']:.6g} V")
    print(f"L_in        = {r['L_in_m']:.6g} m")
    print(f"lambda2     = {r['lambda2']:.6g}")
    print(f"f(L_in)     = {r['f_at_L_in']:.6g}")
    print(f"V*          = {r['V_star']:.6g} V  (maximizer)")
    print(f"V*_closed   = {r['V_star_closed']:.6g} V")
    print(f"argmax_shifted = {r['argmax_shifted']}")
    return run


def cmd_design_bandwidth(cfg: RunConfig, out: Path) -> Run:
    run = Run("design-bandwidth", cfg)
    if cfg.L_target is None:
        raise ConfigError("L_target", "required for design-bandwidth")
    band, env, tol = cfg.band(), cfg.environment(), cfg.tolerance()
    gaps = sweep_gaps(0.5 * cfg.L_target, 1.5 * cfg.L_target, cfg.n_points, "linear")
    with run.stage("profile"):
        profile = pressure_profile(gaps, band, env, tol, cfg.domain_mode)
        run.count(profile.evaluations, profile.max_error)
        write_csv(out / "sweep.csv", ["L_m", "P_Pa"], [profile.gaps, profile.pressures])
    with run.stage("verify"):
        e = nearest_extremum(pressure_extrema(profile, tol), cfg.L_target)
        run.results = {
            "omega1": band.omega1,
            "omega2": band.omega2,
            "extremum_L_m": None if e is None else e.L,
            "extremum_P_Pa": None if e is None else e.pressure,
            "placement_rel_error": None if e is None else abs(e.L / cfg.L_target - 1.0),
        }
        if e is None:
            run.warnings.append("no pressure extremum found near L_target")
    with run.stage("sign_convention"):
        record_sign_convention(run, gaps[0], gaps[-1])
    r = run.results
    print(f"omega1 = {r['omega1']:.6e} rad/s")
    print(f"omega2 = {r['omega2']:.6e} rad/s")
    if e is not None:
        print(f"nearest extremum at L = {e.L:.6e} m, placement error {r['placement_rel_error']:.3%}")
    return run


COMMANDS = {
    "pressure-sweep": cmd_pressure_sweep,
    "compare-electrostatic": cmd_compare_electrostatic,
    "bifurcation": cmd_bifurcation,
    "pull-in": cmd_pull_in,
    "design-bandwidth": cmd_design_bandwidth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acasimir",
        description="Acoustic Casimir pressure sweeps and micro-switch pull-in analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat 'key = value' config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config value (repeatable)")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    lengths = parser.add_mutually_exclusive_group()
    lengths.add_argument("--um", dest="length_unit", action="store_const", const="um",
                         help="lengths (D, L_min, L_max, L_target) are in micrometres")
    lengths.add_argument("--nm", dest="length_unit", action="store_const", const="nm",
                         help="lengths are in nanometres")
    freqs = parser.add_mutually_exclusive_group()
    freqs.add_argument("--mega", dest="frequency_unit", action="store_const", const="mega",
                       help="omega1/omega2 are in units of 1e6 rad/s")
    freqs.add_argument("--giga", dest="frequency_unit", action="store_const", const="giga",
                       help="omega1/omega2 are in units of 1e9 rad/s")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.length_unit, args.frequency_unit)
    except ConfigError as exc:
        print(f"acasimir: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"acasimir: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        run = COMMANDS[args.command](cfg, out)
        (out / "manifest.json").write_text(
            json.dumps(run.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except ConfigError as exc:
        print(f"acasimir: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"acasimir: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"acasimir: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for w in run.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
