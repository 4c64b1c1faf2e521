"""Second-order moment dynamics ``dV/dt = M V + N`` of the linearized model.

The drift matrix and drive vector are generated, not transcribed: every moment
``<x y>`` (x, y ladder operators) is differentiated under the adjoint master
equation using three rules

* the Hamiltonian part ``i[H, x y] = i[H, x] y + x i[H, y]`` where ``i[H, x]``
  is linear in the ladder operators for a quadratic ``H``;
* the damping part of each Lindblad operator acts on single operators as
  ``L^dag [x, L] / 2 + [L^dag, x] L / 2``;
* the diffusion constant ``[L^dag, x][y, L]`` per Lindblad operator,

after which products are normal ordered with ``[a, a^dag] = [b, b^dag] = 1``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParams, ScheduleGap, SingularPropagation, UnstableSystem
from .params import SystemParams

__all__ = [
    "MOMENT_LABELS",
    "MomentVector",
    "MomentMatrices",
    "Trajectory",
    "KappaSchedule",
    "build_matrices",
    "initial_vector",
    "propagate",
    "propagate_modulated",
    "steady_state_moments",
]

# ladder operators
A, AD, B, BD = 0, 1, 2, 3
_DAG = {A: AD, AD: A, B: BD, BD: B}

# ordering of the moment vector
_MOMENTS = [(AD, A), (BD, B), (AD, B), (A, BD), (A, B), (AD, BD), (A, A), (AD, AD), (B, B), (BD, BD)]
MOMENT_LABELS = ("na", "nb", "adagb", "abdag", "ab", "adagbdag", "aa", "adagadag", "bb", "bdagbdag")
# pairs (i, j) with v[j] == conj(v[i])
HERMITIAN_PAIRS = ((2, 3), (4, 5), (6, 7), (8, 9))


def _comm(x: int, y: int) -> int:
    """Scalar commutator [x, y] of two ladder operators."""
    if (x, y) in ((A, AD), (B, BD)):
        return 1
    if (x, y) in ((AD, A), (BD, B)):
        return -1
    return 0


def _canonical(x: int, y: int) -> tuple[int, int]:
    """Index of the moment equal to ``x y`` and the c-number left over by reordering."""
    for i, pair in enumerate(_MOMENTS):
        if pair == (x, y):
            return i, 0
    for i, pair in enumerate(_MOMENTS):
        if pair == (y, x):
            return i, _comm(x, y)
    raise AssertionError(f"no moment for {(x, y)}")


def _hamiltonian(params: SystemParams, counter_rotating: bool) -> dict[tuple[int, int], complex]:
    G = params.G
    H = {
        (AD, A): -params.delta_prime,
        (BD, B): params.omega_m,
        (AD, B): G,
        (A, BD): np.conj(G),
    }
    if counter_rotating:
        H[(AD, BD)] = G
        H[(A, B)] = np.conj(G)
    return H


def _jump_operators(params: SystemParams) -> list[tuple[float, int]]:
    return [
        (params.kappa, A),
        (params.gamma * (params.n_th + 1), B),
        (params.gamma * params.n_th, BD),
    ]


def _linear_generator(H, jumps) -> Callable[[int], dict[int, complex]]:
    def apply(x: int) -> dict[int, complex]:
        out: dict[int, complex] = {}

        def add(op, coef):
            out[op] = out.get(op, 0) + coef

        for (y1, y2), h in H.items():
            # [y1 y2, x] = y1 [y2, x] + [y1, x] y2
            c = _comm(y2, x)
            if c:
                add(y1, 1j * h * c)
            c = _comm(y1, x)
            if c:
                add(y2, 1j * h * c)
        for rate, L in jumps:
            c = _comm(x, L)
            if c:
                add(_DAG[L], 0.5 * rate * c)
            c = _comm(_DAG[L], x)
            if c:
                add(L, 0.5 * rate * c)
        return out

    return apply


@dataclass(frozen=True)
class MomentVector:
    """The ten second-order moments in the order of ``MOMENT_LABELS``."""

    v: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.v, dtype=complex).reshape(-1)
        if arr.shape != (10,):
            raise InvalidParams(f"moment vector needs 10 components, got {arr.shape}")
        object.__setattr__(self, "v", arr)

    @property
    def n_a(self) -> float:
        return float(self.v[0].real)

    @property
    def n_b(self) -> float:
        return float(self.v[1].real)

    def violations(self, tol: float = 1e-9) -> list[str]:
        """Names of the structural invariants this vector breaks (empty if none)."""
        return _structure_violations(self.v[None, :], tol)

    def check(self, tol: float = 1e-9) -> None:
        bad = self.violations(tol)
        if bad:
            raise InvalidParams("moment vector violates: " + "; ".join(bad))


def _structure_violations(states: np.ndarray, tol: float) -> list[str]:
    scale = 1.0 + np.max(np.abs(states), axis=1)
    bad = []
    for k, label in ((0, "na"), (1, "nb")):
        if np.any(np.abs(states[:, k].imag) > tol * scale):
            bad.append(f"Im({label}) too large")
        if np.any(states[:, k].real < -tol * scale):
            bad.append(f"{label} negative")
    for i, j in HERMITIAN_PAIRS:
        if np.any(np.abs(states[:, j] - np.conj(states[:, i])) > tol * scale):
            bad.append(f"{MOMENT_LABELS[j]} != conj({MOMENT_LABELS[i]})")
    return bad


@dataclass(frozen=True)
class MomentMatrices:
    m: np.ndarray
    n: np.ndarray
    params: SystemParams | None = field(default=None, compare=False)

    def augmented(self) -> np.ndarray:
        """11x11 generator with the constant drive appended as an extra state."""
        aug = np.zeros((11, 11), dtype=complex)
        aug[:10, :10] = self.m
        aug[:10, 10] = self.n
        return aug


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    moments: np.ndarray  # shape (len(times), 10)

    @property
    def n_b(self) -> np.ndarray:
        return self.moments[:, 1].real

    @property
    def n_a(self) -> np.ndarray:
        return self.moments[:, 0].real

    @property
    def states(self) -> list[MomentVector]:
        return [MomentVector(row) for row in self.moments]

    def __len__(self) -> int:
        return len(self.times)

    def violations(self, tol: float = 1e-9) -> list[str]:
        bad = _structure_violations(self.moments, tol)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            bad.append("times not strictly increasing")
        return bad

    def to_csv(self, fh=None) -> str | None:
        """Write ``t,n_b,n_a,re_adagb,im_adagb,...``; returns the text if ``fh`` is None."""
        sink = io.StringIO() if fh is None else fh
        writer = csv.writer(sink, lineterminator="\n")
        header = ["t", "n_b", "n_a"]
        for label in MOMENT_LABELS[2:]:
            header += [f"re_{label}", f"im_{label}"]
        writer.writerow(header)
        for t, row in zip(self.times, self.moments):
            cells = [t, row[1].real, row[0].real]
            for z in row[2:]:
                cells += [z.real, z.imag]
            writer.writerow([format(float(c), ".17g") for c in cells])
        return sink.getvalue() if fh is None else None


def build_matrices(params: SystemParams, *, counter_rotating: bool = True) -> MomentMatrices:
    """Drift matrix ``M`` and drive ``N`` for ``params``.

    With ``counter_rotating=False`` the two-mode-squeezing part of the coupling
    is dropped (rotating-wave approximation).
    """
    if not isinstance(params, SystemParams):
        raise InvalidParams(f"expected SystemParams, got {type(params).__name__}")
    H = _hamiltonian(params, counter_rotating)
    jumps = _jump_operators(params)
    lin = _linear_generator(H, jumps)

    m = np.zeros((10, 10), dtype=complex)
    n = np.zeros(10, dtype=complex)
    for i, (x, y) in enumerate(_MOMENTS):
        for z, c in lin(x).items():
            j, shift = _canonical(z, y)
            m[i, j] += c
            n[i] += c * shift
        for z, c in lin(y).items():
            j, shift = _canonical(x, z)
            m[i, j] += c
            n[i] += c * shift
        for rate, L in jumps:
            n[i] += rate * _comm(_DAG[L], x) * _comm(y, L)
    return MomentMatrices(m, n, params)


def initial_vector(n_th: float) -> MomentVector:
    """Cavity in vacuum, mechanics thermal at ``n_th``, no correlations."""
    if not np.isfinite(n_th) or n_th < 0:
        raise InvalidParams(f"n_th must be finite and >= 0, got {n_th}")
    v = np.zeros(10, dtype=complex)
    v[1] = n_th
    return MomentVector(v)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if t.size == 0:
        raise InvalidParams("time grid is empty")
    if not np.all(np.isfinite(t)):
        raise InvalidParams("time grid contains non-finite values")
    if t[0] < 0:
        raise InvalidParams("time grid must start at t >= 0")
    if np.any(np.diff(t) <= 0):
        raise InvalidParams("time grid must be strictly increasing")
    return t


def _expm(a: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        out = expm(a)
    if not np.all(np.isfinite(out)):
        raise SingularPropagation("matrix exponential did not produce a finite result")
    return out


def _evolve(aug: np.ndarray, x0: np.ndarray, t0: float, times: np.ndarray) -> np.ndarray:
    """Sample ``exp(aug (t - t0)) x0`` at ``times`` (all >= t0), stepping between samples."""
    out = np.empty((len(times), aug.shape[0]), dtype=complex)
    steps = np.diff(np.concatenate(([t0], times)))
    uniform = len(steps) > 2 and np.ptp(steps[1:]) <= 64 * np.finfo(float).eps * max(1.0, abs(times[-1]))
    step_cache: dict[float, np.ndarray] = {}
    if uniform:
        step_cache[float(steps[1])] = _expm(aug * steps[1])
    x = x0
    for k, dt in enumerate(steps):
        if uniform and k > 0:
            dt = steps[1]
        if dt == 0:
            out[k] = x
            continue
        key = float(dt)
        prop = step_cache.get(key)
        if prop is None:
            prop = _expm(aug * dt)
        with np.errstate(over="ignore", invalid="ignore"):
            x = prop @ x
        out[k] = x
    if not np.all(np.isfinite(out)):
        raise SingularPropagation("propagation overflowed; the drift is unstable on this horizon")
    return out


def propagate(matrices: MomentMatrices, v0: MomentVector, t_grid: Sequence[float]) -> Trajectory:
    """Exact solution ``V(t) = e^{Mt} V(0) + (int_0^t e^{Ms} ds) N`` on ``t_grid``.

    The drive is folded into an augmented 11x11 linear system; samples are
    reached by exact exponential steps between consecutive grid points.
    """
    t = _check_grid(t_grid)
    if not isinstance(v0, MomentVector):
        v0 = MomentVector(v0)
    x0 = np.append(v0.v, 1.0)
    states = _evolve(matrices.augmented(), x0, 0.0, t)
    return Trajectory(t, states[:, :10])


@dataclass(frozen=True)
class KappaSchedule:
    """Piecewise-constant cavity decay: ``kappas[i]`` on ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: tuple[float, ...]
    kappas: tuple[float, ...]

    def __post_init__(self) -> None:
        bp = tuple(float(b) for b in self.breakpoints)
        ks = tuple(float(k) for k in self.kappas)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "kappas", ks)
        if len(bp) != len(ks) + 1 or not ks:
            raise ScheduleGap("need len(breakpoints) == len(kappas) + 1 >= 2")
        if bp[0] != 0.0:
            raise ScheduleGap(f"schedule must start at t = 0, starts at {bp[0]}")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ScheduleGap("schedule breakpoints must be strictly increasing")
        bad = [k for k in ks if not np.isfinite(k) or k <= 0]
        if bad:
            raise ScheduleGap(f"every kappa segment must be > 0, got {bad}")

    @classmethod
    def constant(cls, kappa: float, t_end: float) -> "KappaSchedule":
        return cls((0.0, t_end), (kappa,))

    @classmethod
    def from_segments(cls, segments: Iterable[dict]) -> "KappaSchedule":
        """From ``[{"t_start", "t_end", "kappa"}, ...]``; segments must tile without gaps."""
        segs = sorted(segments, key=lambda s: s["t_start"])
        if not segs:
            raise ScheduleGap("empty schedule")
        for prev, nxt in zip(segs, segs[1:]):
            if prev["t_end"] != nxt["t_start"]:
                raise ScheduleGap(f"gap or overlap between t = {prev['t_end']} and t = {nxt['t_start']}")
        return cls(tuple(s["t_start"] for s in segs) + (segs[-1]["t_end"],), tuple(s["kappa"] for s in segs))

    def to_segments(self) -> list[dict]:
        return [
            {"t_start": a, "t_end": b, "kappa": k}
            for a, b, k in zip(self.breakpoints, self.breakpoints[1:], self.kappas)
        ]


def propagate_modulated(
    params: SystemParams,
    schedule: KappaSchedule,
    v0: MomentVector,
    t_grid: Sequence[float],
    *,
    counter_rotating: bool = True,
) -> Trajectory:
    """Propagate with a piecewise-constant ``kappa(t)``; ``M`` is rebuilt per segment."""
    t = _check_grid(t_grid)
    if schedule.breakpoints[-1] < t[-1]:
        raise ScheduleGap(f"schedule ends at {schedule.breakpoints[-1]} before t = {t[-1]}")
    if not isinstance(v0, MomentVector):
        v0 = MomentVector(v0)

    out = np.empty((len(t), 10), dtype=complex)
    x = np.append(v0.v, 1.0)
    t_start = 0.0
    for k, kappa in enumerate(schedule.kappas):
        t_end = schedule.breakpoints[k + 1]
        last = k == len(schedule.kappas) - 1
        aug = build_matrices(params.replace(kappa=kappa), counter_rotating=counter_rotating).augmented()
        mask = (t >= t_start) & ((t < t_end) | (last & (t <= t_end)))
        idx = np.flatnonzero(mask)
        if idx.size:
            states = _evolve(aug, x, t_start, t[idx])
            out[idx] = states[:, :10]
            x_last, t_last = states[-1], t[idx[-1]]
        else:
            x_last, t_last = x, t_start
        if last or t_end >= t[-1]:
            break
        x = _evolve(aug, x_last, t_last, np.array([t_end]))[0]
        t_start = t_end
    return Trajectory(t, out)


def steady_state_moments(matrices: MomentMatrices) -> MomentVector:
    """Stationary point ``-M^{-1} N``; requires every eigenvalue of ``M`` in the left half plane."""
    eig = np.linalg.eigvals(matrices.m)
    worst = float(np.max(eig.real))
    if worst >= 0:
        raise UnstableSystem(f"drift has an eigenvalue with real part {worst:.3e} >= 0")
    return MomentVector(np.linalg.solve(matrices.m, -matrices.n))
