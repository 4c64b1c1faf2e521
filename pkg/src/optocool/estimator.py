"""scikit-learn style front end.

``PhononEvolution`` treats sample times as the input: ``fit`` builds the moment
equations from its hyperparameters, ``transform`` returns the ten moments at
each time and ``predict`` the mean phonon number.  Being a ``BaseEstimator``
it supports ``get_params``/``set_params``/``clone`` and composes with
``ParameterGrid`` for sweeps.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import UnstableSystem
from .moments import build_matrices, initial_vector, propagate, steady_state_moments
from .params import SystemParams
from .sweep import MODES, extract_n_ins


def check_times(X) -> np.ndarray:
    """Validate sample times given as ``(n,)`` or ``(n, 1)``; returns a 1-D float array."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single time column, got shape {X.shape}")
        X = X[:, 0]
    if np.any(X < 0):
        raise ValueError("times must be >= 0")
    return X


class PhononEvolution(TransformerMixin, BaseEstimator):
    """Moment dynamics of the linearized model as an estimator.

    Parameters
    ----------
    kappa, gamma, delta_prime, G, n_th, omega_m
        Physical parameters in units of ``omega_m``.
    mode : {"full", "rwa", "zero_temp"}
        ``rwa`` drops the counter-rotating coupling, ``zero_temp`` sets ``n_th = 0``.

    Attributes
    ----------
    params_ : SystemParams
    matrices_ : MomentMatrices
    steady_state_ : MomentVector or None
        ``None`` when the drift is not strictly stable.
    """

    def __init__(self, kappa=0.01, gamma=1e-5, delta_prime=-1.0, G=0.1, n_th=1000.0, omega_m=1.0, mode="full"):
        self.kappa = kappa
        self.gamma = gamma
        self.delta_prime = delta_prime
        self.G = G
        self.n_th = n_th
        self.omega_m = omega_m
        self.mode = mode

    def fit(self, X=None, y=None):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        n_th = 0.0 if self.mode == "zero_temp" else self.n_th
        self.params_ = SystemParams(self.kappa, self.gamma, self.delta_prime, self.G, n_th, self.omega_m)
        self.matrices_ = build_matrices(self.params_, counter_rotating=self.mode != "rwa")
        self.v0_ = initial_vector(n_th)
        try:
            self.steady_state_ = steady_state_moments(self.matrices_)
        except UnstableSystem:
            self.steady_state_ = None
        return self

    def transform(self, X):
        """Moments at the times in ``X``, shape ``(n_samples, 10)``, complex."""
        check_is_fitted(self, "matrices_")
        t = check_times(X)
        order, inverse = np.unique(t, return_inverse=True)
        traj = propagate(self.matrices_, self.v0_, order)
        return traj.moments[inverse.reshape(-1)]

    def predict(self, X):
        return self.transform(X)[:, 1].real

    def instantaneous_limit(self, window=None):
        """``(n_min, t_min)`` of the first oscillation dip."""
        check_is_fitted(self, "params_")
        res = extract_n_ins(self.params_, self.mode, window)
        return res.n_min, res.t_min
