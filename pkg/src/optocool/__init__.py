"""Backaction cooling dynamics of a driven optomechanical system in the strong-coupling regime."""
from .errors import *  # noqa: F401,F403
from .moments import (
    KappaSchedule,
    MomentMatrices,
    MomentVector,
    Trajectory,
    build_matrices,
    initial_vector,
    propagate,
    propagate_modulated,
    steady_state_moments,
)
from .params import DriveParams, SteadyState, SystemParams, preset, solve_steady_state
from .rwa import RwaState, corrected_splitting, envelopes, n_ins_rwa, nb_rwa_analytic, propagate_rwa
from .spectrum import (
    EigenFrequencies,
    IslandSpec,
    eigenfrequencies,
    island_catalog,
    n_ins_bounds,
    n_ins_zero_temp,
    nb_zero_temp_analytic,
)
from .sweep import extract_n_ins, limit_curve_vs_g, limit_curve_vs_kappa, sweep_time_g

__version__ = "0.1.0"
