import numpy as np
import pytest

from optocool import SystemParams, preset


@pytest.fixture
def base():
    return preset("paper_fig1")[0]


def printed_matrices(kappa, gamma, dp, w, G, n_th):
    """Reference drift matrix and drive, transcribed by hand.

    Kept deliberately separate from the generator in ``optocool.moments`` so
    that the two can be compared entry by entry.
    """
    Gc = np.conj(G)
    I = 1j
    s = -(kappa + gamma) / 2
    M = np.array(
        [
            [-kappa, 0, -I * G, I * Gc, I * Gc, -I * G, 0, 0, 0, 0],
            [0, -gamma, I * G, -I * Gc, I * Gc, -I * G, 0, 0, 0, 0],
            [-I * Gc, I * Gc, -I * (dp + w) + s, 0, 0, 0, 0, -I * G, I * Gc, 0],
            [I * G, -I * G, 0, I * (dp + w) + s, 0, 0, I * Gc, 0, 0, -I * G],
            [-I * G, -I * G, 0, 0, I * (dp - w) + s, 0, -I * Gc, 0, -I * G, 0],
            [I * Gc, I * Gc, 0, 0, 0, -I * (dp - w) + s, 0, I * G, 0, I * Gc],
            [0, 0, 0, -2 * I * G, -2 * I * G, 0, 2 * I * dp - kappa, 0, 0, 0],
            [0, 0, 2 * I * Gc, 0, 0, 2 * I * Gc, 0, -2 * I * dp - kappa, 0, 0],
            [0, 0, -2 * I * G, 0, -2 * I * Gc, 0, 0, 0, -2 * I * w - gamma, 0],
            [0, 0, 0, 2 * I * Gc, 0, 2 * I * G, 0, 0, 0, 2 * I * w - gamma],
        ],
        dtype=complex,
    )
    N = np.array([0, gamma * n_th, 0, 0, -I * G, I * Gc, 0, 0, 0, 0], dtype=complex)
    return M, N


def random_params(rng, omega_m=1.0):
    return SystemParams(
        kappa=float(rng.uniform(1e-3, 0.5)),
        gamma=float(10 ** rng.uniform(-6, -2)),
        delta_prime=float(rng.uniform(-1.5, -0.5)) * omega_m,
        G=complex(*rng.normal(size=2)) * 0.1 * omega_m,
        n_th=float(rng.uniform(0, 1e3)),
        omega_m=omega_m,
    )


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
