"""Physical parameters, experimental presets and the classical steady state.

All rates, detunings and couplings are stored dimensionless, in units of the
mechanical frequency ``omega_m`` (which defaults to 1).  Times are therefore in
units of ``1 / omega_m``.
"""
from __future__ import annotations

import cmath
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidParams, NonConvergence, UnknownPreset

__all__ = [
    "SystemParams",
    "DriveParams",
    "SteadyState",
    "solve_steady_state",
    "linearize",
    "preset",
    "PRESETS",
    "bose_occupation",
    "load_config",
    "params_from_config",
]


def _finite(name: str, value: complex | float) -> None:
    if not cmath.isfinite(complex(value)):
        raise InvalidParams(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Linearized optomechanical model.

    Parameters
    ----------
    kappa : float
        Total cavity decay rate.
    gamma : float
        Mechanical decay rate.
    delta_prime : float
        Modified detuning (red sideband at ``-omega_m``).
    G : complex
        Light-enhanced coupling ``alpha * g``.
    n_th : float
        Mean thermal phonon number of the mechanical bath.
    omega_m : float
        Mechanical angular frequency, the unit of every other rate.
    """

    kappa: float = 0.01
    gamma: float = 1e-5
    delta_prime: float = -1.0
    G: complex = 0.1
    n_th: float = 1000.0
    omega_m: float = 1.0

    def __post_init__(self) -> None:
        for name in ("kappa", "gamma", "delta_prime", "n_th", "omega_m"):
            value = getattr(self, name)
            if isinstance(value, complex):
                raise InvalidParams(f"{name} must be real, got {value!r}")
            _finite(name, value)
            object.__setattr__(self, name, float(value))
        _finite("G", self.G)
        object.__setattr__(self, "G", complex(self.G))
        if self.omega_m <= 0:
            raise InvalidParams(f"omega_m must be > 0, got {self.omega_m}")
        # zero rates are allowed for closed-system checks; physical runs use > 0
        if self.kappa < 0:
            raise InvalidParams(f"kappa must be >= 0, got {self.kappa}")
        if self.gamma < 0:
            raise InvalidParams(f"gamma must be >= 0, got {self.gamma}")
        if self.n_th < 0:
            raise InvalidParams(f"n_th must be >= 0, got {self.n_th}")

    @property
    def g_abs(self) -> float:
        return abs(self.G)

    @property
    def strong_coupling(self) -> bool:
        """True in the hierarchy gamma << kappa < |G| (gamma <= kappa/10, |G| >= kappa)."""
        return self.gamma <= self.kappa / 10 and self.g_abs >= self.kappa

    @property
    def on_red_sideband(self) -> bool:
        return math.isclose(self.delta_prime, -self.omega_m, rel_tol=0, abs_tol=1e-12 * self.omega_m)

    def replace(self, **changes: Any) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "omega_m": self.omega_m,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "delta_prime": self.delta_prime,
            "G": {"re": self.G.real, "im": self.G.imag},
            "n_th": self.n_th,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemParams":
        G = data.get("G", 0.0)
        if isinstance(G, Mapping):
            G = complex(G.get("re", 0.0), G.get("im", 0.0))
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known and k != "G"}
        for k, v in kwargs.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidParams(f"{k} must be numeric, got {v!r}")
        return cls(G=G, **kwargs)


@dataclass(frozen=True)
class DriveParams:
    """Bare drive of the nonlinear model, used to find the linearization point."""

    delta: float
    g: float
    Omega: complex
    kappa_0: float
    kappa_ex: float

    def __post_init__(self) -> None:
        for name in ("delta", "g", "Omega", "kappa_0", "kappa_ex"):
            _finite(name, getattr(self, name))
        object.__setattr__(self, "Omega", complex(self.Omega))
        if self.kappa_0 < 0 or self.kappa_ex < 0:
            raise InvalidParams("kappa_0 and kappa_ex must be >= 0")
        if self.kappa_0 + self.kappa_ex <= 0:
            raise InvalidParams("kappa_0 + kappa_ex must be > 0")

    @property
    def kappa(self) -> float:
        return self.kappa_0 + self.kappa_ex


@dataclass(frozen=True)
class SteadyState:
    alpha: complex
    beta: complex
    delta_prime: float
    G: complex
    iterations: int = 0

    def residuals(self, drive: DriveParams, omega_m: float, gamma: float) -> tuple[float, float, float]:
        """Magnitudes of the cavity, mechanical and detuning fixed-point residuals."""
        kappa = drive.kappa
        r_alpha = self.alpha * (kappa / 2 - 1j * self.delta_prime) + 1j * drive.Omega
        r_beta = self.beta * (1j * omega_m + gamma / 2) + 1j * drive.g * abs(self.alpha) ** 2
        r_delta = self.delta_prime - (drive.delta - drive.g * 2 * self.beta.real)
        return abs(r_alpha), abs(r_beta), abs(r_delta)


def _amplitudes(drive: DriveParams, delta_prime: float, omega_m: float, gamma: float):
    alpha = -1j * drive.Omega / (drive.kappa / 2 - 1j * delta_prime)
    beta = -1j * drive.g * abs(alpha) ** 2 / (1j * omega_m + gamma / 2)
    return alpha, beta


def solve_steady_state(
    drive: DriveParams,
    omega_m: float = 1.0,
    gamma: float = 1e-5,
    *,
    max_iter: int = 1000,
    tol: float = 1e-12,
    damping: float = 0.5,
) -> SteadyState:
    """Classical fixed point (alpha, beta) of the driven nonlinear model.

    Iterates on the modified detuning with a damped update, starting from the
    undriven value ``delta``, so the branch connected to ``Omega = 0`` is
    selected.  Raises :class:`NonConvergence` when the iteration stalls, which
    in practice signals a bistable or marginal drive.
    """
    for name, value in (("omega_m", omega_m), ("gamma", gamma)):
        _finite(name, value)
    if omega_m <= 0 or gamma < 0:
        raise InvalidParams("omega_m must be > 0 and gamma >= 0")
    if max_iter < 1:
        raise InvalidParams("max_iter must be >= 1")

    delta_prime = float(drive.delta)
    for it in range(1, max_iter + 1):
        alpha, beta = _amplitudes(drive, delta_prime, omega_m, gamma)
        target = drive.delta - drive.g * 2 * beta.real
        step = target - delta_prime
        delta_prime += damping * step
        if abs(step) <= tol * max(1.0, abs(delta_prime)):
            delta_prime = target
            alpha, beta = _amplitudes(drive, delta_prime, omega_m, gamma)
            state = SteadyState(alpha, beta, delta_prime, alpha * drive.g, it)
            if max(state.residuals(drive, omega_m, gamma)) < 1e-10 * max(1.0, abs(alpha), abs(beta)):
                return state
    raise NonConvergence(
        f"steady state not converged after {max_iter} iterations "
        f"(last detuning update {step:.3e}); the drive may be bistable"
    )


def linearize(drive: DriveParams, omega_m: float, gamma: float, n_th: float, **kwargs) -> SystemParams:
    ss = solve_steady_state(drive, omega_m, gamma, **kwargs)
    return SystemParams(
        kappa=drive.kappa, gamma=gamma, delta_prime=ss.delta_prime, G=ss.G, n_th=n_th, omega_m=omega_m
    )


def bose_occupation(omega_m_hz: float, temperature_k: float) -> float:
    """Mean thermal occupation ``1 / (exp(h f / k_B T) - 1)`` for ``f = omega_m / 2 pi`` in Hz."""
    if temperature_k <= 0:
        return 0.0
    h = 6.62607015e-34
    k_b = 1.380649e-23
    return 1.0 / math.expm1(h * omega_m_hz / (k_b * temperature_k))


# (params, description, omega_m / 2 pi in Hz or None)
PRESETS: dict[str, tuple[SystemParams, str, float | None]] = {
    "paper_fig1": (
        SystemParams(kappa=0.01, gamma=1e-5, delta_prime=-1.0, G=0.1, n_th=1e3),
        "Red-sideband benchmark: kappa = 0.01, gamma = 1e-5, n_th = 1e3 (omega_m units); "
        "G defaults to 0.1 and is normally overridden.",
        None,
    ),
    "microtoroid": (
        SystemParams(kappa=7.1 / 78, gamma=0.01 / 78, delta_prime=-1.0, G=11.4 / 78, n_th=1e3),
        "Microtoroid: omega_m/2pi = 78 MHz, kappa/2pi = 7.1 MHz, gamma/2pi = 10 kHz, "
        "G/2pi = 11.4 MHz. n_th is not given for this device; 1e3 is a placeholder.",
        78e6,
    ),
    "membrane": (
        SystemParams(kappa=0.32 / 10.5, gamma=35.0 / 10.5e6, delta_prime=-1.0, G=0.3, n_th=1e3),
        "Aluminium membrane: omega_m/2pi = 10.5 MHz, kappa/2pi = 320 kHz, gamma/2pi = 35 Hz. "
        "Only G > kappa is known; G = 0.3 omega_m (the (3,1) island) and n_th = 1e3 are placeholders.",
        10.5e6,
    ),
}


def preset(name: str) -> tuple[SystemParams, str]:
    try:
        params, description, _ = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return params, description


def params_from_config(data: Mapping[str, Any]) -> SystemParams:
    """Build :class:`SystemParams` from the JSON config schema.

    A ``drive`` block triggers the steady-state linearization; ``delta_prime``
    and ``G`` are then computed rather than read.
    """
    if not isinstance(data, Mapping):
        raise InvalidParams("config must be a JSON object")
    drive_block = data.get("drive")
    if drive_block is None:
        missing = [k for k in ("kappa", "gamma", "delta_prime", "G", "n_th") if k not in data]
        if missing:
            raise InvalidParams(f"config missing field(s): {', '.join(missing)}")
        return SystemParams.from_dict(data)

    try:
        drive = DriveParams(
            delta=drive_block["delta"],
            g=drive_block["g"],
            Omega=complex(drive_block.get("omega_re", 0.0), drive_block.get("omega_im", 0.0)),
            kappa_0=drive_block["kappa_0"],
            kappa_ex=drive_block["kappa_ex"],
        )
    except KeyError as exc:
        raise InvalidParams(f"drive block missing field {exc.args[0]!r}") from None
    omega_m = float(data.get("omega_m", 1.0))
    if "kappa" in data and not math.isclose(data["kappa"], drive.kappa, rel_tol=1e-12):
        raise InvalidParams(
            f"kappa = {data['kappa']} disagrees with kappa_0 + kappa_ex = {drive.kappa}"
        )
    for k in ("gamma", "n_th"):
        if k not in data:
            raise InvalidParams(f"config missing field {k!r}")
    return linearize(drive, omega_m, float(data["gamma"]), float(data["n_th"]))


def load_config(path: str | Path) -> SystemParams:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"{path}: invalid JSON ({exc})") from None
    return params_from_config(data)
