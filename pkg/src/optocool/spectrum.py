"""Normal-mode frequencies, frequency matching and analytic cooling limits.

Frequency matching: the counter-rotating (carrier, ``w+ + w-``) and rotating
(envelope, ``w+ - w-``) oscillations both complete a half period at the same
time, ``(w+ + w-) t = p pi`` and ``(w+ - w-) t = q pi`` with p and q both odd
integers or both even integers, and p > q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BackactionDivergence, InvalidParams
from .params import SystemParams
from .rwa import n_ins_rwa

__all__ = [
    "DIVERGENCE_GUARD",
    "EigenFrequencies",
    "IslandSpec",
    "eigenfrequencies",
    "nb_zero_temp_analytic",
    "steady_state_backaction",
    "island_catalog",
    "n_ins_zero_temp",
    "n_ins_bounds",
]

# analytic formulas are refused for |G| >= DIVERGENCE_GUARD * omega_m
DIVERGENCE_GUARD = 0.499


def _guard(g: float, omega_m: float) -> None:
    if g >= DIVERGENCE_GUARD * omega_m:
        raise BackactionDivergence(
            f"|G| = {g} is at or beyond {DIVERGENCE_GUARD} omega_m; backaction limits diverge at omega_m/2"
        )


@dataclass(frozen=True)
class EigenFrequencies:
    omega_plus: float
    omega_minus: float

    def __post_init__(self) -> None:
        if not self.omega_plus >= self.omega_minus > 0:
            raise BackactionDivergence(
                f"need omega_plus >= omega_minus > 0, got {self.omega_plus}, {self.omega_minus}"
            )

    @property
    def sum(self) -> float:
        return self.omega_plus + self.omega_minus

    @property
    def diff(self) -> float:
        return self.omega_plus - self.omega_minus


def eigenfrequencies(G: complex | float, omega_m: float = 1.0) -> EigenFrequencies:
    """``w+- = sqrt(omega_m^2 +- 2|G| omega_m)`` on the red sideband."""
    g = abs(G)
    if g >= omega_m / 2:
        raise BackactionDivergence(f"|G| = {g} >= omega_m/2: the lower normal mode is unstable")
    return EigenFrequencies(math.sqrt(omega_m**2 + 2 * g * omega_m), math.sqrt(omega_m**2 - 2 * g * omega_m))


def steady_state_backaction(params: SystemParams) -> float:
    """Zero-temperature steady-state phonon number ``|G|^2 / [2 (omega_m^2 - 4|G|^2)]``."""
    g, w = params.g_abs, params.omega_m
    _guard(g, w)
    return g * g / (2 * (w * w - 4 * g * g))


def nb_zero_temp_analytic(params: SystemParams, t):
    """Phonon number created from vacuum by the counter-rotating coupling (n_th = 0)."""
    if not params.on_red_sideband:
        raise InvalidParams("zero-temperature closed form assumes delta_prime = -omega_m")
    g = params.g_abs
    _guard(g, params.omega_m)
    ef = eigenfrequencies(g, params.omega_m)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-(params.kappa + params.gamma) * t / 2)
    out = steady_state_backaction(params) * (1 - decay * np.cos(ef.sum * t) * np.cos(ef.diff * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IslandSpec:
    p: int
    q: int
    g_ratio: Fraction
    omega_m: float = 1.0

    @property
    def g_opt(self) -> float:
        return float(self.g_ratio) * self.omega_m

    @property
    def t_opt(self) -> float:
        return math.sqrt(self.p**2 + self.q**2) * math.pi / (2 * self.omega_m)

    @property
    def reducible(self) -> bool:
        return math.gcd(self.p, self.q) > 1

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "g_opt": self.g_opt, "t_opt": self.t_opt, "reducible": self.reducible}


def island_catalog(p_max: int, omega_m: float = 1.0) -> list[IslandSpec]:
    """Every island (p, q) with p <= p_max, sorted by its time (shortest first).

    Reducible pairs such as (6, 2) repeat the coupling of (3, 1) but at a later
    time, so they are kept and flagged.
    """
    if int(p_max) != p_max or p_max < 3:
        raise InvalidParams(f"p_max must be an integer >= 3, got {p_max}")
    islands = [
        IslandSpec(p, q, Fraction(p * q, p * p + q * q), omega_m)
        for p in range(2, int(p_max) + 1)
        for q in range(1, p)
        if (p - q) % 2 == 0
    ]
    return sorted(islands, key=lambda s: (s.p**2 + s.q**2, s.q))


def n_ins_zero_temp(params: SystemParams) -> tuple[float, float]:
    """Zero-temperature instantaneous limit ``pi kappa |G| / [8 (omega_m^2 - 4|G|^2)]`` and its time.

    Mechanical damping is neglected (kappa >> gamma).
    """
    g, w = params.g_abs, params.omega_m
    _guard(g, w)
    ef = eigenfrequencies(g, w)
    limit = math.pi * params.kappa * g / (8 * (w * w - 4 * g * g))
    t_min = math.pi / ef.diff if ef.diff > 0 else math.inf
    return limit, t_min


def n_ins_bounds(params: SystemParams) -> tuple[float, float]:
    """(upper, lower) instantaneous limits under dynamic dissipative cooling.

    ``upper`` is the frequency-unmatched value, ``lower`` the matched one; the
    lower bound is by construction the sum of the thermal (RWA) and the
    backaction (zero-temperature) limits.
    """
    g, w = params.g_abs, params.omega_m
    _guard(g, w)
    thermal, _ = n_ins_rwa(params)
    upper = thermal + math.pi**2 * g**4 / ((w * w - g * g) * (w * w - 4 * g * g))
    lower = thermal + n_ins_zero_temp(params)[0]
    return upper, lower
