"""Backend selection and agreement between the compiled and numpy loops."""

import numpy as np
import pytest

from wavegalerkin import kernels
from wavegalerkin.nonlinearity import affine_forcing, cubic_nonlinearity, power_law_nonlinearity, zero_forcing
from wavegalerkin.solver import STORMER_VERLET, SolverConfig, State, integrate
from wavegalerkin.spectral import DIRICHLET, DomainSpec, build_operator


def _small_problem(modes=6, seed=0):
    op = build_operator(DomainSpec(length=1.0, bc=DIRICHLET), modes)
    rng = np.random.default_rng(seed)
    a0 = 0.2 * rng.uniform(-1.0, 1.0, size=modes)
    v0 = 0.2 * rng.uniform(-1.0, 1.0, size=modes)
    return op, State(a=a0, adot=v0)


def test_backend_env_flag(monkeypatch):
    assert kernels.NUMBA_AVAILABLE
    assert kernels.backend_name() == "numba"
    for val in ("1", "true", "YES", " on "):
        monkeypatch.setenv(kernels.ENV_NO_NUMBA, val)
        assert kernels.backend_name() == "numpy"
    monkeypatch.setenv(kernels.ENV_NO_NUMBA, "0")
    assert kernels.backend_name() == "numba"


@pytest.mark.parametrize(
    "nl,fs,tol",
    [
        (cubic_nonlinearity(), affine_forcing(g1=0.1, g2=0.05, constant=0.2, g0=0.3), 1e-12),
        (power_law_nonlinearity(3.5), zero_forcing(), 1e-10),
    ],
)
def test_compiled_and_numpy_paths_agree(monkeypatch, nl, fs, tol):
    op, init = _small_problem()
    cfg = SolverConfig(T=0.2, dt=1e-3)
    fast = integrate(init, cfg, op, nl, fs)
    assert fast.backend == "numba"
    monkeypatch.setenv(kernels.ENV_NO_NUMBA, "1")
    slow = integrate(init, cfg, op, nl, fs)
    assert slow.backend == "numpy"
    assert np.max(np.abs(fast.a - slow.a)) <= tol
    assert np.max(np.abs(fast.adot - slow.adot)) <= tol


def test_paths_agree_under_verlet(monkeypatch):
    op, init = _small_problem(seed=1)
    cfg = SolverConfig(T=0.2, dt=1e-3, integrator=STORMER_VERLET)
    fast = integrate(init, cfg, op, cubic_nonlinearity(), zero_forcing())
    monkeypatch.setenv(kernels.ENV_NO_NUMBA, "1")
    slow = integrate(init, cfg, op, cubic_nonlinearity(), zero_forcing())
    assert np.max(np.abs(fast.a - slow.a)) <= 1e-12


def test_run_numpy_stride_and_divergence():
    # a'' = a grows like e^t and must trip the ceiling near t = ln(5)
    def accel(a, adot):
        return a.copy()

    a0 = np.array([1.0])
    v0 = np.array([1.0])
    a_hist, adot_hist, rec, div = kernels.run_numpy(a0, v0, 1e-3, 2000, 10, 5.0, False, accel)
    assert div > 0
    assert rec[0] == 0 and rec[-1] == div
    assert np.all(np.diff(rec) > 0)
    assert abs(a_hist[-1, 0]) > 5.0
    assert abs(div * 1e-3 - np.log(5.0)) < 0.05

    a_hist, _, rec, div = kernels.run_numpy(a0, v0, 1e-3, 100, 10, 1e12, False, accel)
    assert div == -1
    assert list(rec) == [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
    assert a_hist.shape == (11, 1)
