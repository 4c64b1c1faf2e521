"""Parameter sweeps over (t, G) and (kappa, G), and instantaneous-minimum extraction."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParams, OptoCoolError, SweepError, WindowEmpty
from .moments import (
    KappaSchedule,
    Trajectory,
    build_matrices,
    initial_vector,
    propagate,
    propagate_modulated,
)
from .params import SystemParams
from .rwa import n_ins_rwa
from .spectrum import DIVERGENCE_GUARD, eigenfrequencies, n_ins_bounds, n_ins_zero_temp

__all__ = [
    "MODES",
    "SweepGrid",
    "LimitCurve",
    "InstantaneousMinimum",
    "trajectory",
    "run_parallel",
    "sweep_time_g",
    "default_window",
    "extract_n_ins",
    "limit_curve_vs_g",
    "limit_curve_vs_kappa",
]

MODES = ("full", "rwa", "zero_temp")
COARSE_DT = 0.01
RESOLUTION = 1e-4

T = TypeVar("T")
R = TypeVar("R")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise InvalidParams(f"mode must be one of {MODES}, got {mode!r}")


def _mode_params(params: SystemParams, mode: str) -> SystemParams:
    return params.replace(n_th=0.0) if mode == "zero_temp" else params


def trajectory(
    params: SystemParams,
    t_grid: Sequence[float],
    mode: str = "full",
    schedule: KappaSchedule | None = None,
) -> Trajectory:
    """Moment trajectory from the thermal initial state for one propagation mode.

    ``full`` keeps every coupling term, ``rwa`` drops the counter-rotating
    ones and ``zero_temp`` is ``full`` with ``n_th = 0``.
    """
    _check_mode(mode)
    p = _mode_params(params, mode)
    v0 = initial_vector(p.n_th)
    counter_rotating = mode != "rwa"
    if schedule is not None:
        return propagate_modulated(p, schedule, v0, t_grid, counter_rotating=counter_rotating)
    return propagate(build_matrices(p, counter_rotating=counter_rotating), v0, t_grid)


def run_parallel(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Map ``fn`` over ``items``; results come back in input order whatever ``jobs`` is."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepGrid:
    """``values[i, j]`` is the phonon number at ``axis1_values[i]``, ``axis2_values[j]``."""

    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    values: np.ndarray
    mode: str = "full"
    params_base: SystemParams | None = None

    def __post_init__(self) -> None:
        shape = (len(self.axis1_values), len(self.axis2_values))
        if self.values.shape != shape:
            raise InvalidParams(f"values shape {self.values.shape} != axes {shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParams("sweep values must all be finite")

    def row_minima(self) -> list[tuple[int, int, float]]:
        return [(i, int(np.argmin(row)), float(np.min(row))) for i, row in enumerate(self.values)]

    def argmin_near(self, a1: float, a2: float, half_width1: float, half_width2: float) -> tuple[int, int, float]:
        """Grid minimum restricted to a rectangle around ``(a1, a2)``."""
        rows = np.flatnonzero(np.abs(self.axis1_values - a1) <= half_width1)
        cols = np.flatnonzero(np.abs(self.axis2_values - a2) <= half_width2)
        if rows.size == 0 or cols.size == 0:
            raise WindowEmpty("no grid cells inside the requested rectangle")
        sub = self.values[np.ix_(rows, cols)]
        i, j = np.unravel_index(np.argmin(sub), sub.shape)
        return int(rows[i]), int(cols[j]), float(sub[i, j])

    def to_csv(self) -> str:
        sink = io.StringIO()
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow([f"{self.axis1_name}\\{self.axis2_name}"] + [format(x, ".17g") for x in self.axis2_values])
        for a, row in zip(self.axis1_values, self.values):
            writer.writerow([format(a, ".17g")] + [format(x, ".17g") for x in row])
        return sink.getvalue()

    def sidecar(self) -> dict:
        units = {"G": "omega_m", "kappa": "omega_m", "t": "1/omega_m"}
        return {
            "axes": [
                {"name": self.axis1_name, "units": units.get(self.axis1_name, ""), "count": len(self.axis1_values)},
                {"name": self.axis2_name, "units": units.get(self.axis2_name, ""), "count": len(self.axis2_values)},
            ],
            "mode": self.mode,
            "params_base": None if self.params_base is None else self.params_base.to_dict(),
            "min_cells": [list(c) for c in self.row_minima()],
        }


def _with_g(params: SystemParams, g: float) -> SystemParams:
    # keep the phase of the base coupling
    phase = params.G / abs(params.G) if params.G != 0 else 1.0
    return params.replace(G=g * phase)


def sweep_time_g(
    params_base: SystemParams,
    g_values: Sequence[float],
    t_values: Sequence[float],
    mode: str = "full",
    *,
    jobs: int = 1,
) -> SweepGrid:
    """Phonon number on the (G, t) plane; one propagation per G sampled at every t."""
    _check_mode(mode)
    g_values = np.asarray(g_values, dtype=float).reshape(-1)
    t_values = np.asarray(t_values, dtype=float).reshape(-1)
    if g_values.size == 0 or t_values.size == 0:
        raise InvalidParams("sweep axes must be nonempty")

    def column(g: float) -> np.ndarray:
        p = _with_g(params_base, g)
        try:
            nb = trajectory(p, t_values, mode).n_b
        except OptoCoolError as exc:
            raise SweepError(f"sweep cell failed at G = {float(g)!r}, mode = {mode}: {exc}") from exc
        if not np.all(np.isfinite(nb)):
            raise SweepError(f"non-finite phonon number at G = {float(g)!r}, mode = {mode}")
        return nb

    values = np.vstack(run_parallel(column, g_values, jobs))
    return SweepGrid("G", g_values, "t", t_values, values, mode, params_base)


@dataclass(frozen=True)
class InstantaneousMinimum:
    n_min: float
    t_min: float
    window: tuple[float, float]
    coarse_min: float

    def __iter__(self):
        return iter((self.n_min, self.t_min))


def default_window(params: SystemParams, mode: str) -> tuple[float, float]:
    """``[0.5, 1.5]`` times the first-dip time: ``pi/(2|G|)`` under RWA, ``pi/(w+ - w-)`` otherwise."""
    g = params.g_abs
    if g == 0:
        raise WindowEmpty("no oscillation dip for G = 0")
    if mode == "rwa":
        t_dip = math.pi / (2 * g)
    else:
        t_dip = math.pi / eigenfrequencies(g, params.omega_m).diff
    return 0.5 * t_dip, 1.5 * t_dip


def extract_n_ins(
    params: SystemParams,
    mode: str = "full",
    window: tuple[float, float] | None = None,
    *,
    dt: float = COARSE_DT,
    resolution: float = RESOLUTION,
    schedule: KappaSchedule | None = None,
) -> InstantaneousMinimum:
    """Smallest phonon number inside ``window``.

    A uniform coarse grid (spacing ``dt``) locates the deepest sample, then a
    golden-section search on its two neighbours refines the time to
    ``resolution``.  The refined value never exceeds the coarse minimum.
    """
    _check_mode(mode)
    lo, hi = default_window(params, mode) if window is None else (float(window[0]), float(window[1]))
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi <= lo:
        raise WindowEmpty(f"invalid search window [{lo}, {hi}]")

    n = max(3, int(math.ceil((hi - lo) / dt)) + 1)
    grid = np.linspace(lo, hi, n)
    nb = trajectory(params, grid, mode, schedule).n_b
    i = int(np.argmin(nb))
    best_t, best_n = float(grid[i]), float(nb[i])
    coarse = best_n

    if 0 < i < n - 1:
        def f(t: float) -> float:
            if not grid[i - 1] <= t <= grid[i + 1]:
                return math.inf
            return float(trajectory(params, [t], mode, schedule).n_b[0])

        try:
            res = minimize_scalar(
                f,
                bracket=(grid[i - 1], grid[i], grid[i + 1]),
                method="golden",
                options={"xtol": resolution / (2 * max(abs(grid[i]), resolution))},
            )
        except ValueError:
            # flat bottom: neighbours tie with the coarse minimum, nothing to refine
            res = None
        if res is not None and res.fun < best_n:
            best_t, best_n = float(res.x), float(res.fun)
    return InstantaneousMinimum(best_n, best_t, (lo, hi), coarse)


@dataclass(frozen=True)
class LimitCurve:
    abscissa_name: str
    abscissa: np.ndarray
    numeric_min: np.ndarray
    t_min: np.ndarray
    thermal_limit: np.ndarray
    backaction_limit: np.ndarray
    unmatched_bound: np.ndarray
    matched_bound: np.ndarray
    mode: str = "full"
    modulated: bool = False
    extra: dict = field(default_factory=dict)

    COLUMNS = ("numeric_min", "t_min", "thermal_limit", "backaction_limit", "unmatched_bound", "matched_bound")

    def to_csv(self) -> str:
        sink = io.StringIO()
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow([self.abscissa_name, *self.COLUMNS])
        cols = [getattr(self, c) for c in self.COLUMNS]
        for k, x in enumerate(self.abscissa):
            writer.writerow([format(x, ".17g")] + [format(float(c[k]), ".17g") for c in cols])
        return sink.getvalue()

    def local_minima(self) -> np.ndarray:
        """Interior abscissa values whose numeric minimum is below both neighbours."""
        y = self.numeric_min
        idx = [k for k in range(1, len(y) - 1) if y[k] < y[k - 1] and y[k] < y[k + 1]]
        return self.abscissa[idx]


def _analytic_refs(p: SystemParams) -> tuple[float, float, float, float]:
    thermal_limit = n_ins_rwa(p)[0]
    backaction_limit = n_ins_zero_temp(p)[0]
    unmatched_bound, matched_bound = n_ins_bounds(p)
    return thermal_limit, backaction_limit, unmatched_bound, matched_bound


def _limit_curve(name, xs, points, mode, schedule, jobs, modulated) -> LimitCurve:
    def unit(p: SystemParams):
        try:
            res = extract_n_ins(p, mode, schedule=schedule)
        except OptoCoolError as exc:
            raise SweepError(f"limit point failed for {p.to_dict()}, mode = {mode}: {exc}") from exc
        return (res.n_min, res.t_min) + _analytic_refs(_mode_params(p, mode))

    rows = np.array(run_parallel(unit, points, jobs), dtype=float).reshape(len(points), 6)
    return LimitCurve(name, np.asarray(xs, dtype=float), *rows.T, mode=mode, modulated=modulated)


def limit_curve_vs_g(
    params_base: SystemParams,
    g_values: Sequence[float],
    mode: str = "full",
    modulated: bool = False,
    *,
    schedule: KappaSchedule | None = None,
    jobs: int = 1,
) -> LimitCurve:
    """Numerical instantaneous limits versus ``|G|`` with the analytic references attached."""
    _check_mode(mode)
    g_values = np.asarray(g_values, dtype=float).reshape(-1)
    if g_values.size == 0:
        raise InvalidParams("g_values is empty")
    w = params_base.omega_m
    if np.any(g_values <= 0) or np.any(g_values >= DIVERGENCE_GUARD * w):
        raise InvalidParams(f"g_values must lie in (0, {DIVERGENCE_GUARD} omega_m)")
    if modulated and schedule is None:
        raise InvalidParams("modulated limit curve needs a kappa(t) schedule")
    points = [_with_g(params_base, g) for g in g_values]
    return _limit_curve("G", g_values, points, mode, schedule if modulated else None, jobs, modulated)


def limit_curve_vs_kappa(
    params_base: SystemParams,
    kappa_values: Sequence[float],
    mode: str = "full",
    *,
    jobs: int = 1,
) -> LimitCurve:
    kappa_values = np.asarray(kappa_values, dtype=float).reshape(-1)
    _check_mode(mode)
    if kappa_values.size == 0:
        raise InvalidParams("kappa_values is empty")
    if np.any(kappa_values <= 0) or not np.all(np.isfinite(kappa_values)):
        raise InvalidParams("kappa_values must be finite and > 0")
    points = [params_base.replace(kappa=k) for k in kappa_values]
    return _limit_curve("kappa", kappa_values, points, mode, None, jobs, False)
