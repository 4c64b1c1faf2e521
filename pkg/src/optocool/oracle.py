"""Brute-force check of the moment engine on a truncated two-mode Fock space.

The master equation is integrated for the density matrix itself with a fixed
step fourth-order Runge-Kutta scheme, so nothing is shared with the moment
engine except the parameter object.  Second moments of a quadratic model obey
closed equations for any initial state, so the two must agree up to truncation
and step error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import CapExceeded, InvalidParams, TruncationLeak
from .moments import MomentVector, _check_grid, build_matrices, propagate
from .params import SystemParams

__all__ = ["FockConfig", "OracleResult", "evolve_master", "compare", "CompareReport"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockConfig:
    dim_a: int = 12
    dim_b: int = 12
    leak_tolerance: float = 1e-6
    cap: int = 400

    def __post_init__(self) -> None:
        if self.dim_a < 2 or self.dim_b < 2:
            raise InvalidParams("Fock truncations must be >= 2")
        if self.dim_a * self.dim_b > self.cap:
            raise CapExceeded(f"{self.dim_a} x {self.dim_b} states exceed the cap of {self.cap}")
        if not self.leak_tolerance > 0:
            raise InvalidParams("leak_tolerance must be > 0")


@dataclass
class OracleResult:
    times: np.ndarray
    n_b: np.ndarray
    n_a: np.ndarray
    leak: np.ndarray
    trace_drift: float
    hermiticity: float
    min_population: float
    step: float
    halving_dev: float
    initial_moments: np.ndarray = field(repr=False)
    renormalization: float = 0.0


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def thermal_populations(n_th: float, dim: int) -> tuple[np.ndarray, float]:
    """Truncated geometric distribution and the probability mass cut off."""
    if n_th == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p, 0.0
    ratio = n_th / (n_th + 1)
    p = ratio ** np.arange(dim) / (n_th + 1)
    lost = ratio**dim
    return p / p.sum(), float(lost)


class _Model:
    def __init__(self, params: SystemParams, cfg: FockConfig):
        da, db = cfg.dim_a, cfg.dim_b
        a = sparse.kron(sparse.csr_matrix(_destroy(da)), sparse.identity(db), format="csr")
        b = sparse.kron(sparse.identity(da), sparse.csr_matrix(_destroy(db)), format="csr")
        ad, bd = a.conj().T.tocsr(), b.conj().T.tocsr()
        G = params.G
        H = -params.delta_prime * (ad @ a) + params.omega_m * (bd @ b) + (G * ad + np.conj(G) * a) @ (b + bd)
        jumps = [
            math.sqrt(rate) * L
            for rate, L in (
                (params.kappa, a),
                (params.gamma * (params.n_th + 1), b),
                (params.gamma * params.n_th, bd),
            )
            if rate > 0
        ]
        h_eff = H.astype(complex)
        for L in jumps:
            h_eff = h_eff - 0.5j * (L.conj().T @ L)
        eye = sparse.identity(da * db, format="csr")
        # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
        sup = -1j * (sparse.kron(h_eff, eye) - sparse.kron(eye, h_eff.conj()))
        for L in jumps:
            sup = sup + sparse.kron(L, L.conj())
        self.liouvillian = sup.tocsr()
        self.moment_ops = [
            X.toarray()
            for X in (ad @ a, bd @ b, ad @ b, a @ bd, a @ b, ad @ bd, a @ a, ad @ ad, b @ b, bd @ bd)
        ]
        self.dims = (da, db)

    def rk4(self, rho: np.ndarray, h: float, n_steps: int) -> np.ndarray:
        L = self.liouvillian
        x = rho.reshape(-1)
        for _ in range(n_steps):
            k1 = L @ x
            k2 = L @ (x + 0.5 * h * k1)
            k3 = L @ (x + 0.5 * h * k2)
            k4 = L @ (x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        return x.reshape(rho.shape)

    def leak(self, rho: np.ndarray) -> float:
        da, db = self.dims
        pops = rho.diagonal().real.reshape(da, db)
        pa, pb = pops.sum(axis=1), pops.sum(axis=0)
        return float(max(pa[-2:].sum(), pb[-2:].sum()))

    def moments(self, rho: np.ndarray) -> np.ndarray:
        # Tr(rho X) = sum(rho^T * X)
        return np.array([np.sum(rho.T * X) for X in self.moment_ops])


def _max_step(params: SystemParams, cfg: FockConfig) -> float:
    return 0.01 / (params.omega_m + params.kappa + params.g_abs * max(cfg.dim_a, cfg.dim_b))


def evolve_master(
    params: SystemParams,
    cfg: FockConfig,
    t_grid: Sequence[float],
    *,
    raise_on_leak: bool = True,
) -> OracleResult:
    """Density-matrix evolution from cavity vacuum times a thermal mechanical state.

    Raises :class:`TruncationLeak` as soon as the population of the top two
    levels of either mode exceeds ``cfg.leak_tolerance`` (unless
    ``raise_on_leak`` is False, in which case the leak is only recorded).
    """
    t = _check_grid(t_grid)
    model = _Model(params, cfg)
    da, db = cfg.dim_a, cfg.dim_b

    pb, lost = thermal_populations(params.n_th, db)
    if lost > 0:
        log.info("thermal state truncated at %d levels; renormalized away %.3e", db, lost)
    rho_b = np.diag(pb).astype(complex)
    rho_a = np.zeros((da, da), dtype=complex)
    rho_a[0, 0] = 1.0
    rho = np.kron(rho_a, rho_b)
    initial_moments = model.moments(rho)

    h_max = _max_step(params, cfg)

    # step-halving probe on the first stretch of the evolution
    probe_end = min(t[-1], 1.0 / params.omega_m) if t[-1] > 0 else 0.0
    halving_dev = 0.0
    if probe_end > 0:
        n1 = max(1, math.ceil(probe_end / h_max))
        coarse = model.rk4(rho, probe_end / n1, n1)
        fine = model.rk4(rho, probe_end / (2 * n1), 2 * n1)
        halving_dev = float(np.max(np.abs(coarse - fine)))

    n = len(t)
    n_b, n_a, leak = np.empty(n), np.empty(n), np.empty(n)
    trace_drift = herm = 0.0
    min_pop = math.inf
    t_prev = 0.0
    for k, tk in enumerate(t):
        span = tk - t_prev
        if span > 0:
            steps = max(1, math.ceil(span / h_max))
            rho = model.rk4(rho, span / steps, steps)
        t_prev = tk
        m = model.moments(rho)
        n_a[k], n_b[k] = m[0].real, m[1].real
        leak[k] = model.leak(rho)
        trace_drift = max(trace_drift, abs(np.trace(rho) - 1.0))
        herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
        min_pop = min(min_pop, float(np.min(rho.diagonal().real)))
        if raise_on_leak and leak[k] > cfg.leak_tolerance:
            raise TruncationLeak(
                f"top-level population {leak[k]:.3e} exceeds {cfg.leak_tolerance:.1e} at t = {tk} "
                f"with dims {da}x{db}; enlarge the truncation"
            )
    return OracleResult(
        t, n_b, n_a, leak, float(trace_drift), herm, min_pop, h_max, halving_dev, initial_moments, lost
    )


@dataclass
class CompareReport:
    max_abs_dev: float
    tol: float
    passed: bool
    leak_max: float
    trace_drift: float
    dims: tuple[int, int]
    params: dict
    halving_dev: float = 0.0

    def to_dict(self) -> dict:
        return {
            "max_abs_dev": self.max_abs_dev,
            "tol": self.tol,
            "pass": self.passed,
            "leak_max": self.leak_max,
            "trace_drift": self.trace_drift,
            "halving_dev": self.halving_dev,
            "dims": list(self.dims),
            "params": self.params,
        }


def compare(
    params: SystemParams,
    cfg: FockConfig,
    t_grid: Sequence[float],
    tol_abs: float = 1e-3,
    *,
    reference: str = "moments",
    raise_on_leak: bool = True,
) -> CompareReport:
    """Maximum phonon-number deviation between the oracle and a reference engine.

    The moment engine starts from the oracle's own (truncated) initial moments,
    so the comparison tests the dynamics, not the truncation of the thermal
    state.  ``reference="oracle"`` compares the oracle with a second oracle run.
    """
    res = evolve_master(params, cfg, t_grid, raise_on_leak=raise_on_leak)
    if reference == "moments":
        ref = propagate(build_matrices(params), MomentVector(res.initial_moments), res.times).n_b
    elif reference == "oracle":
        ref = evolve_master(params, cfg, t_grid, raise_on_leak=raise_on_leak).n_b
    else:
        raise InvalidParams(f"unknown reference engine {reference!r}")
    dev = float(np.max(np.abs(res.n_b - ref)))
    return CompareReport(
        max_abs_dev=dev,
        tol=tol_abs,
        passed=dev < tol_abs,
        leak_max=float(np.max(res.leak)),
        trace_drift=res.trace_drift,
        dims=(cfg.dim_a, cfg.dim_b),
        params=params.to_dict(),
        halving_dev=res.halving_dev,
    )
