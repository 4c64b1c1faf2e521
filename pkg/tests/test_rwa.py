import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from optocool import (
    RwaState,
    SystemParams,
    build_matrices,
    corrected_splitting,
    envelopes,
    initial_vector,
    n_ins_rwa,
    nb_rwa_analytic,
    propagate,
    propagate_rwa,
)
from optocool.errors import InvalidParams, WeakCoupling
from optocool.rwa import rwa_matrix
from optocool.sweep import extract_n_ins


def _nb(states):
    return np.array([s.n_b for s in states])


def test_uncoupled_thermal_state_constant():
    p = SystemParams(G=0, n_th=1e3)
    nb = _nb(propagate_rwa(p, RwaState.thermal(1e3), np.linspace(0, 500, 11)))
    np.testing.assert_allclose(nb, 1000, rtol=1e-12)


def test_closed_beam_splitter_conserves_quanta():
    p = SystemParams(kappa=0, gamma=0, G=0.1, n_th=3.0)
    states = propagate_rwa(p, RwaState(1.0, 3.0), np.linspace(0, 200, 401))
    total = np.array([s.n_a + s.n_b for s in states])
    assert np.max(np.abs(total - 4.0)) < 1e-9


def test_matches_ten_moment_rwa_propagation(base):
    t = np.linspace(0, 200, 2001)
    three = _nb(propagate_rwa(base, RwaState.thermal(1e3), t))
    ten = propagate(build_matrices(base, counter_rotating=False), initial_vector(1e3), t).n_b
    np.testing.assert_allclose(three, ten, rtol=1e-9, atol=1e-9)


def test_off_resonance_uses_full_rwa_block(base):
    p = base.replace(delta_prime=-0.95)
    t = np.linspace(0, 50, 51)
    nb = _nb(propagate_rwa(p, RwaState.thermal(1e3), t))
    ten = propagate(build_matrices(p, counter_rotating=False), initial_vector(1e3), t).n_b
    np.testing.assert_array_equal(nb, ten)
    with pytest.raises(InvalidParams):
        propagate_rwa(p, RwaState(0.0, 1.0, 0.5j), t)


def test_rwa_and_full_agree_on_scale_of_n_th(base):
    # counter-rotating corrections at G = 0.1 stay within a few percent of n_th
    t = np.linspace(0, 200, 4001)
    rwa = _nb(propagate_rwa(base, RwaState.thermal(1e3), t))
    full = propagate(build_matrices(base), initial_vector(1e3), t).n_b
    assert np.max(np.abs(full - rwa)) < 0.05 * base.n_th


def test_rwa_matrix_shape(base):
    a = rwa_matrix(base)
    assert a.shape == (4, 4) and np.all(a[3] == 0)
    assert a[1, 3] == pytest.approx(base.gamma * base.n_th)


def test_rabi_formula_special_values(base):
    assert nb_rwa_analytic(base, 0.0) == pytest.approx(1000.0, rel=1e-15)
    assert nb_rwa_analytic(base, 1e6) == pytest.approx(1000 * 1e-5 / 0.01001, rel=1e-12)
    t = 5 * math.pi
    direct = 1000 * 1e-5 * (1 - math.exp(-0.01001 * t / 2)) / 0.01001
    assert nb_rwa_analytic(base, t) == pytest.approx(direct, rel=1e-9)
    assert nb_rwa_analytic(base, t) == pytest.approx(0.07553, abs=1e-5)
    with pytest.raises(InvalidParams):
        nb_rwa_analytic(base.replace(delta_prime=-0.9), 1.0)


def test_rabi_formula_period_and_envelope_ratio(base):
    g, rate = base.g_abs, base.kappa + base.gamma
    tk = np.arange(1, 8) * math.pi / g
    ratio = nb_rwa_analytic(base, tk + math.pi / g) / nb_rwa_analytic(base, tk)
    np.testing.assert_allclose(ratio, math.exp(-rate * math.pi / (2 * g)), rtol=2e-3)


def test_envelopes(base):
    assert envelopes(base, 0.0) == (1000.0, 0.0)
    up, lo = envelopes(base, 1e7)
    assert up == 0.0 and lo == pytest.approx(1000 * 1e-5 / 0.01001)


def test_rabi_formula_between_envelopes(base):
    t = np.linspace(0, 10 / (base.kappa + base.gamma), 20001)
    up, lo = envelopes(base, t)
    nb = nb_rwa_analytic(base, t)
    assert np.all(lo <= nb + 1e-12)
    # the oscillation maxima sit at upper + lower, not at upper
    assert np.all(nb <= up + lo + 1e-9 * base.n_th)


def test_thermal_limit_values(base):
    limit, t_min = n_ins_rwa(base)
    assert limit == pytest.approx(math.pi * 1e-5 * 1000 / 0.4, rel=1e-15)
    assert limit == pytest.approx(7.854e-2, rel=1e-4)
    assert t_min == pytest.approx(5 * math.pi)
    assert n_ins_rwa(base.replace(G=0.2))[0] == pytest.approx(limit / 2, rel=1e-15)
    assert n_ins_rwa(base.replace(kappa=0.05))[0] == limit
    with pytest.raises(InvalidParams):
        n_ins_rwa(base.replace(G=0))


@pytest.mark.parametrize("g", [0.05, 0.08, 0.1, 0.15, 0.2])
def test_numeric_first_dip_matches_thermal_limit(base, g):
    p = base.replace(G=g)
    res = extract_n_ins(p, "rwa")
    assert res.n_min == pytest.approx(n_ins_rwa(p)[0], rel=0.10)
    # the slowly rising thermal floor pushes the dip a few percent past pi/(2|G|)
    assert res.t_min == pytest.approx(math.pi / (2 * g), rel=0.05)


def test_corrected_splitting(base):
    assert corrected_splitting(base.replace(kappa=0)) == 0.2
    assert corrected_splitting(base) == pytest.approx(2 * math.sqrt(0.01 - 6.25e-6), rel=1e-15)
    assert corrected_splitting(base) == pytest.approx(0.199937, abs=1e-6)
    assert corrected_splitting(base.replace(G=0.0025)) == 0.0
    with pytest.raises(WeakCoupling):
        corrected_splitting(base.replace(G=0.002))


def test_numeric_period_follows_corrected_splitting(base):
    t = np.linspace(0, 200, 20001)
    nb = _nb(propagate_rwa(base, RwaState.thermal(1e3), t))
    dips, _ = find_peaks(-nb)
    period = np.mean(np.diff(t[dips]))
    assert period == pytest.approx(2 * math.pi / corrected_splitting(base), rel=1e-3)
    assert 0 < period / (math.pi / base.g_abs) - 1 < 0.01


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.01, 0.3), kappa=st.floats(0.0, 0.1), n_th=st.floats(0.0, 1e3))
def test_phonon_number_nonnegative_and_bounded(g, kappa, n_th):
    p = SystemParams(kappa=kappa, gamma=1e-5, G=g, n_th=n_th)
    states = propagate_rwa(p, RwaState.thermal(n_th), np.linspace(0, 100, 101))
    nb = _nb(states)
    assert np.all(nb >= -1e-9 * (1 + n_th))
    assert np.all(nb <= n_th * (1 + 1e-9) + 1e-9)
