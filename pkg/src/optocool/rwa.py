"""Beam-splitter (rotating-wave) dynamics and its closed forms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParams, WeakCoupling
from .moments import MomentVector, _check_grid, _evolve, build_matrices, propagate
from .params import SystemParams

__all__ = [
    "RwaState",
    "rwa_matrix",
    "propagate_rwa",
    "nb_rwa_analytic",
    "envelopes",
    "n_ins_rwa",
    "corrected_splitting",
]


@dataclass(frozen=True)
class RwaState:
    """Photon number, phonon number and the coherence ``F = (G<a^dag b> - G*<a b^dag>)/|G|``."""

    n_a: float
    n_b: float
    f: complex = 0j

    @classmethod
    def thermal(cls, n_th: float) -> "RwaState":
        return cls(0.0, n_th, 0j)

    @classmethod
    def from_moments(cls, v: np.ndarray, G: complex) -> "RwaState":
        f = (G * v[2] - np.conj(G) * v[3]) / abs(G) if G != 0 else 0j
        return cls(float(v[0].real), float(v[1].real), complex(f))


def rwa_matrix(params: SystemParams) -> np.ndarray:
    """4x4 augmented generator of the three-moment system ``(N_a, N_b, F, 1)``.

    Closed only on the red sideband, where it is exact within the rotating-wave
    approximation.
    """
    g = params.g_abs
    k, gm = params.kappa, params.gamma
    detune = params.delta_prime + params.omega_m
    return np.array(
        [
            [-k, 0, -1j * g, 0],
            [0, -gm, 1j * g, gm * params.n_th],
            [-2j * g, 2j * g, -(1j * detune + (k + gm) / 2), 0],
            [0, 0, 0, 0],
        ],
        dtype=complex,
    )


def propagate_rwa(params: SystemParams, state0: RwaState, t_grid: Sequence[float]) -> list[RwaState]:
    """Evolve ``(N_a, N_b, F)`` without the counter-rotating terms.

    On the red sideband this integrates the three-moment system directly.  Off
    resonance ``F`` alone does not close, so the beam-splitter block of the
    full moment equations is used instead (same result on resonance).
    """
    t = _check_grid(t_grid)
    if params.on_red_sideband or params.G == 0:
        x0 = np.array([state0.n_a, state0.n_b, state0.f, 1.0], dtype=complex)
        states = _evolve(rwa_matrix(params), x0, 0.0, t)
        return [RwaState(float(s[0].real), float(s[1].real), complex(s[2])) for s in states]

    if state0.f != 0:
        raise InvalidParams("off-resonant RWA propagation needs the full coherence; start from F = 0")
    v0 = np.zeros(10, dtype=complex)
    v0[0], v0[1] = state0.n_a, state0.n_b
    traj = propagate(build_matrices(params, counter_rotating=False), MomentVector(v0), t)
    return [RwaState.from_moments(row, params.G) for row in traj.moments]


def _require_resonant(params: SystemParams) -> None:
    if not params.on_red_sideband:
        raise InvalidParams("closed-form RWA results assume delta_prime = -omega_m")


def nb_rwa_analytic(params: SystemParams, t):
    """Damped Rabi-like phonon number, valid for ``|G| >> kappa`` on the red sideband."""
    _require_resonant(params)
    k, gm, n = params.kappa, params.gamma, params.n_th
    gt = params.g_abs * np.asarray(t, dtype=float)
    decay = np.exp(-(k + gm) * np.asarray(t, dtype=float) / 2)
    out = n * (gm + decay * (k * np.cos(gt) ** 2 - gm * np.sin(gt) ** 2)) / (k + gm)
    return float(out) if np.ndim(out) == 0 else out


def envelopes(params: SystemParams, t):
    """(upper, lower) envelopes of the phonon oscillation."""
    k, gm, n = params.kappa, params.gamma, params.n_th
    decay = np.exp(-(k + gm) * np.asarray(t, dtype=float) / 2)
    upper = n * decay
    lower = n * (1 - decay) * gm / (k + gm)
    if np.ndim(upper) == 0:
        return float(upper), float(lower)
    return upper, lower


def n_ins_rwa(params: SystemParams) -> tuple[float, float]:
    """Instantaneous-state limit ``pi gamma n_th / (4|G|)`` reached at ``t = pi / (2|G|)``.

    Independent of ``kappa``.
    """
    g = params.g_abs
    if g == 0:
        raise InvalidParams("n_ins_rwa needs G != 0")
    return math.pi * params.gamma * params.n_th / (4 * g), math.pi / (2 * g)


def corrected_splitting(params: SystemParams) -> float:
    """Normal-mode splitting ``2 sqrt(|G|^2 - kappa^2/16)`` including cavity loss."""
    g, k = params.g_abs, params.kappa
    if g < k / 4:
        raise WeakCoupling(f"|G| = {g} < kappa/4 = {k / 4}: no normal-mode splitting")
    return 2 * math.sqrt(max(g * g - k * k / 16, 0.0))
