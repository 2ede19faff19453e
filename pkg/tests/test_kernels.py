import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from qsdp import _kernels
from qsdp.solver import SolverConfig, solve
from qsdp.instances import tomography_instance

pytestmark = pytest.mark.skipif(_kernels.NUMBA is None, reason="numba not installed")


def stack(rng, m, d):
    a = rng.normal(size=(m, d, d)) + 1j * rng.normal(size=(m, d, d))
    a = (a + a.conj().transpose(0, 2, 1)) / 2
    return np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag)


@given(st.integers(1, 12), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_weighted_sum_parity(m, d, seed):
    rng = np.random.default_rng(seed)
    q_re, q_im = stack(rng, m, d)
    alpha = rng.normal(size=m)
    a = _kernels.NUMPY.weighted_sum(alpha, q_re, q_im)
    b = _kernels.NUMBA.weighted_sum(alpha, q_re, q_im)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-13)


@given(st.integers(1, 12), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_contract_parity(m, d, seed):
    rng = np.random.default_rng(seed)
    q_re, q_im = stack(rng, m, d)
    g_re, g_im = (x[0] for x in stack(rng, 1, d))
    a = _kernels.NUMPY.contract(q_re, q_im, np.ascontiguousarray(g_re), np.ascontiguousarray(g_im))
    b = _kernels.NUMBA.contract(q_re, q_im, np.ascontiguousarray(g_re), np.ascontiguousarray(g_im))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    # oracle: Re Tr[Q_i G]
    Q = q_re + 1j * q_im
    G = g_re + 1j * g_im
    np.testing.assert_allclose(a, [np.trace(x @ G).real for x in Q], atol=1e-12)


@given(st.integers(0, 6), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_two_loop_parity(k, n, seed):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(k, n))
    y = s + 0.1 * rng.normal(size=(k, n))
    y[np.einsum("ij,ij->i", s, y) <= 0] *= -1
    g = rng.normal(size=n)
    np.testing.assert_allclose(_kernels.NUMPY.two_loop(s, y, g), _kernels.NUMBA.two_loop(s, y, g),
                               rtol=1e-10, atol=1e-12)


def test_two_loop_inverse_hessian():
    # with n independent exact pairs from a quadratic, the recursion applies A^{-1}
    rng = np.random.default_rng(0)
    n = 4
    A = np.diag([1.0, 2.0, 5.0, 9.0])
    s = rng.normal(size=(n, n))
    y = s @ A
    g = rng.normal(size=n)
    for impl in (_kernels.NUMPY, _kernels.NUMBA):
        d = impl.two_loop(s, y, g)
        assert np.all(np.isfinite(d))
        assert g @ d < 0


def test_hermite_parity():
    x = np.linspace(-12, 12, 301)
    a = _kernels.NUMPY.hermite_functions(x, 40)
    b = _kernels.NUMBA.hermite_functions(x, 40)
    np.testing.assert_allclose(a, b, atol=1e-14)
    # orthonormality by trapezoid quadrature
    assert a.shape == (x.size, 40)
    gram = trapezoid(a[:, :, None] * a[:, None, :], x, axis=0)
    np.testing.assert_allclose(gram, np.eye(40), atol=1e-10)


def test_solve_same_on_both_backends(monkeypatch):
    inst = tomography_instance(1, 2, seed=2, epsilon=0.1)
    reports = []
    for impl in (_kernels.NUMPY, _kernels.NUMBA):
        for name in ("weighted_sum", "contract", "two_loop"):
            monkeypatch.setattr(_kernels, name, getattr(impl, name))
        reports.append(solve(inst, "vn", SolverConfig(tol=1e-9)))
    a, b = reports
    assert a.converged and b.converged
    np.testing.assert_allclose(a.pi_star, b.pi_star, atol=1e-8)


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("1", "numba")])
def test_env_selection(flag, expected):
    env = dict(os.environ, QSDP_NUMBA=flag, QSDP_THREADS="1")
    out = subprocess.run([sys.executable, "-c", "from qsdp import _kernels; print(_kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
