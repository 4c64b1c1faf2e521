"""Command line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
Every run that writes to ``--out`` also writes ``manifest.json``; running
``optocool --from-manifest manifest.json --out other_dir`` repeats it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidParams, OptoCoolError, UnknownPreset
from .moments import KappaSchedule
from .oracle import FockConfig, compare
from .params import PRESETS, SystemParams, load_config, preset
from .spectrum import island_catalog
from .sweep import MODES, limit_curve_vs_g, limit_curve_vs_kappa, sweep_time_g, trajectory

log = logging.getLogger("optocool")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_range(spec: str) -> np.ndarray:
    """``start:stop:count`` -> ``linspace(start, stop, count)``; a bare number is a single point."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad range {spec!r}; expected start:stop:count") from None
    if count < 1:
        raise UsageError(f"range {spec!r} is empty")
    if count > 1 and stop <= start:
        raise UsageError(f"range {spec!r} must have stop > start")
    return np.linspace(start, stop, count)


def _add_params(p: argparse.ArgumentParser, g_scalar: bool = True) -> None:
    src = p.add_argument_group("parameters (omega_m units)")
    src.add_argument("--config", help="JSON config file")
    src.add_argument("--preset", default=None, choices=sorted(PRESETS), help="start from a preset (default paper_fig1)")
    if g_scalar:
        src.add_argument("--g", type=float, help="coupling |G|")
    src.add_argument("--kappa", type=float)
    src.add_argument("--gamma", type=float)
    src.add_argument("--n-th", type=float, dest="n_th")
    src.add_argument("--delta-prime", type=float, dest="delta_prime")


def _add_out(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--out", required=required, help="output directory")
    p.add_argument("--gnuplot-stub", action="store_true", help="also write a gnuplot script")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optocool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--from-manifest", help="replay the run recorded in a manifest")
    parser.add_argument("--replay-out", help="output directory for --from-manifest (default: the manifest's)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("evolve", help="phonon-number time series")
    _add_params(p)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--kappa-schedule", help="JSON list of {t_start, t_end, kappa} segments")
    p.add_argument("--si", action="store_true", help="time column in seconds (needs a preset with a known omega_m)")
    _add_out(p)

    p = sub.add_parser("sweep", help="phonon number on the (G, t) plane")
    _add_params(p, g_scalar=False)
    p.add_argument("--g", dest="g_axis", required=True, help="start:stop:count")
    p.add_argument("--t", dest="t_axis", required=True, help="start:stop:count")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--jobs", type=int, default=1)
    _add_out(p)

    p = sub.add_parser("limits", help="instantaneous cooling limits versus G or kappa")
    _add_params(p)
    p.add_argument("--vs", choices=("g", "kappa"), default="g")
    p.add_argument("--range", dest="range_spec", help="start:stop:count of the abscissa")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--kappa-schedule", help="apply a kappa(t) schedule (vs g only)")
    p.add_argument("--jobs", type=int, default=1)
    _add_out(p)

    p = sub.add_parser("match", help="frequency-matching island catalog")
    p.add_argument("--p-max", type=int, default=9)
    p.add_argument("--out", help="output directory (default: print to stdout)")

    p = sub.add_parser("oracle", help="compare against a truncated Fock-space master equation")
    _add_params(p)
    p.add_argument("--dim-a", type=int, default=12)
    p.add_argument("--dim-b", type=int, default=12)
    p.add_argument("--t-max", type=float, default=50.0)
    p.add_argument("--samples", type=int, default=251)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--leak-tolerance", type=float, default=1e-6)
    p.add_argument("--out", help="output directory (report is always printed)")

    p = sub.add_parser("preset", help="print a parameter preset")
    p.add_argument("name", choices=sorted(PRESETS))
    return parser


def resolve_params(args) -> SystemParams:
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.config:
        params = load_config(args.config)
    else:
        params = preset(args.preset or "paper_fig1")[0]
    changes = {}
    if getattr(args, "g", None) is not None:
        phase = params.G / abs(params.G) if params.G != 0 else 1.0
        changes["G"] = args.g * phase
    for name in ("kappa", "gamma", "n_th", "delta_prime"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    return params.replace(**changes) if changes else params


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load_schedule(path: str | None) -> KappaSchedule | None:
    if not path:
        return None
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParams(f"--kappa-schedule: cannot read {path}: {exc}") from None
    try:
        return KappaSchedule.from_segments(data)
    except (KeyError, TypeError) as exc:
        raise InvalidParams(f"--kappa-schedule: malformed segment ({exc})") from None


def _gnuplot(path: Path, csv_name: str, x: str, y: str, logscale: bool = True) -> None:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
    ]
    if logscale:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_name}' using 1:2 with lines")
    path.write_text("\n".join(lines) + "\n")


def cmd_evolve(args, out: Path) -> dict:
    params = resolve_params(args)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if args.samples > 1 and not args.t_max > 0:
        raise UsageError("--t-max must be > 0")
    t = np.linspace(0.0, args.t_max, args.samples)
    schedule = _load_schedule(args.kappa_schedule)
    traj = trajectory(params, t, args.mode, schedule)
    text = traj.to_csv()
    if args.si:
        freq = PRESETS.get(args.preset or "", (None, None, None))[2]
        if freq is None:
            raise UsageError("--si needs a preset with a known mechanical frequency (microtoroid, membrane)")
        scale = 1.0 / (2 * math.pi * freq)
        rows = text.splitlines()
        rows[0] = rows[0].replace("t,", "t_s,", 1)
        rows[1:] = [_fmt(float(r.split(",", 1)[0]) * scale) + "," + r.split(",", 1)[1] for r in rows[1:]]
        text = "\n".join(rows) + "\n"
    (out / "trajectory.csv").write_text(text)
    if args.gnuplot_stub:
        _gnuplot(out / "plot.gp", "trajectory.csv", "t", "n_b")
    nb = traj.n_b
    log.info("min n_b = %.6g at t = %.6g", nb.min(), t[int(np.argmin(nb))])
    return {"params": params.to_dict(), "outputs": ["trajectory.csv"],
            "settings": {"mode": args.mode, "t_max": args.t_max, "samples": args.samples,
                         "schedule": schedule.to_segments() if schedule else None}}


def cmd_sweep(args, out: Path) -> dict:
    params = resolve_params(args)
    g = parse_range(args.g_axis)
    t = parse_range(args.t_axis)
    grid = sweep_time_g(params, g, t, args.mode, jobs=args.jobs)
    (out / "grid.csv").write_text(grid.to_csv())
    (out / "grid.json").write_text(json.dumps(grid.sidecar(), indent=2) + "\n")
    if args.gnuplot_stub:
        (out / "plot.gp").write_text(
            "set datafile separator ','\nset logscale cb\nset xlabel 't'\nset ylabel 'G'\n"
            "plot 'grid.csv' matrix nonuniform with image\n"
        )
    return {"params": params.to_dict(), "outputs": ["grid.csv", "grid.json"],
            "settings": {"mode": args.mode, "g": args.g_axis, "t": args.t_axis, "jobs": args.jobs}}


def cmd_limits(args, out: Path) -> dict:
    params = resolve_params(args)
    if args.vs == "g":
        xs = parse_range(args.range_spec or "0.03:0.45:43")
        schedule = _load_schedule(args.kappa_schedule)
        curve = limit_curve_vs_g(params, xs, args.mode, schedule is not None, schedule=schedule, jobs=args.jobs)
    else:
        if args.kappa_schedule:
            raise UsageError("--kappa-schedule applies to --vs g only")
        xs = parse_range(args.range_spec or "0.001:0.05:50")
        curve = limit_curve_vs_kappa(params, xs, args.mode, jobs=args.jobs)
    (out / "limits.csv").write_text(curve.to_csv())
    if args.gnuplot_stub:
        _gnuplot(out / "plot.gp", "limits.csv", curve.abscissa_name, "n_ins")
    return {"params": params.to_dict(), "outputs": ["limits.csv"],
            "settings": {"vs": args.vs, "range": args.range_spec, "mode": args.mode, "jobs": args.jobs}}


def cmd_match(args, out: Path | None) -> dict:
    if args.p_max < 3:
        raise UsageError("--p-max must be >= 3")
    catalog = [s.to_dict() for s in island_catalog(args.p_max)]
    text = json.dumps(catalog, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return {}
    (out / "catalog.json").write_text(text)
    return {"outputs": ["catalog.json"], "settings": {"p_max": args.p_max}}


def cmd_oracle(args, out: Path | None) -> dict:
    params = resolve_params(args)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    cfg = FockConfig(args.dim_a, args.dim_b, leak_tolerance=args.leak_tolerance)
    report = compare(params, cfg, np.linspace(0.0, args.t_max, args.samples), args.tol)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    sys.stdout.write(text)
    if out is not None:
        (out / "report.json").write_text(text)
    result = {"params": params.to_dict(), "outputs": ["report.json"] if out else [],
              "settings": {"dims": [args.dim_a, args.dim_b], "t_max": args.t_max, "samples": args.samples,
                           "tol": args.tol, "leak_tolerance": args.leak_tolerance}}
    if not report.passed:
        result["failed"] = f"max deviation {report.max_abs_dev:.3e} >= tol {args.tol:.1e}"
    return result


def cmd_preset(args, out) -> dict:
    params, description = preset(args.name)
    freq = PRESETS[args.name][2]
    sys.stdout.write(json.dumps({"name": args.name, "params": params.to_dict(), "description": description,
                                 "omega_m_over_2pi_hz": freq}, indent=2) + "\n")
    return {}


COMMANDS = {
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "limits": cmd_limits,
    "match": cmd_match,
    "oracle": cmd_oracle,
    "preset": cmd_preset,
}


def _strip_out(argv: list[str]) -> list[str]:
    cleaned, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        cleaned.append(tok)
    return cleaned


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")

    if args.from_manifest:
        try:
            manifest = json.loads(Path(args.from_manifest).read_text())
            replay = list(manifest["argv"])
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read manifest {args.from_manifest}: {exc}") from None
        out_dir = args.replay_out or manifest.get("out")
        if out_dir:
            replay += ["--out", out_dir]
        return run(replay)
    if args.command is None:
        raise UsageError("a subcommand is required")

    out = Path(args.out) if getattr(args, "out", None) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    info = COMMANDS[args.command](args, out)
    if out is not None and info.get("outputs") is not None:
        manifest = {
            "tool": "optocool",
            "version": __version__,
            "subcommand": args.command,
            "argv": _strip_out(argv),
            "out": str(out),
            "params": info.get("params"),
            "settings": info.get("settings"),
            "outputs": {name: _sha256(out / name) for name in info["outputs"]},
            "wall_clock_s": time.perf_counter() - start,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if "failed" in info:
        log.error("%s", info["failed"])
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except UsageError as exc:
        print(f"optocool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParams, UnknownPreset) as exc:
        print(f"optocool: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptoCoolError as exc:
        print(f"optocool: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
