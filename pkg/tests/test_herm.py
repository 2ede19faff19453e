import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from qsdp import herm
from qsdp.exceptions import DomainError, InvalidInputError, TruncationError

from conftest import random_density, random_hermitian

X, Y, Z, I2 = (herm.PAULI[k] for k in "XYZI")


class TestSpectral:
    def test_identity(self):
        sp = herm.spectral_decompose(np.eye(3))
        np.testing.assert_allclose(sp.eigenvalues, [1, 1, 1])

    def test_pauli_z(self):
        np.testing.assert_allclose(herm.spectral_decompose(Z).eigenvalues, [-1, 1])

    def test_random_reconstruction(self, rng):
        a = random_hermitian(rng, 5)
        sp = herm.spectral_decompose(a)
        assert np.all(np.diff(sp.eigenvalues) >= 0)
        assert np.linalg.norm(sp.reconstruct() - a) <= 1e-10 * (1 + np.linalg.norm(a))
        v = sp.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(5), atol=1e-10)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            herm.spectral_decompose(np.zeros((0, 0)))

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_reconstruction_property(self, d, seed):
        a = random_hermitian(np.random.default_rng(seed), d, scale=10.0)
        sp = herm.spectral_decompose(a)
        assert np.all(np.diff(sp.eigenvalues) >= 0)
        assert np.linalg.norm(sp.reconstruct() - a) <= 1e-10 * (1 + np.linalg.norm(a))


class TestHermitianValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError, match="not Hermitian"):
            herm.as_hermitian([[0, 1], [0, 0]])

    def test_relative_tolerance(self):
        a = np.array([[1e6, 1.0], [1.0 + 1e-7, 0.0]])
        herm.as_hermitian(a)

    def test_rejects_nonsquare(self):
        with pytest.raises(InvalidInputError):
            herm.as_hermitian(np.zeros((2, 3)))


class TestLift:
    def test_exp_zero(self):
        np.testing.assert_allclose(herm.lift(np.exp, np.zeros((2, 2))), np.eye(2))

    def test_identity_function(self, rng):
        a = random_hermitian(rng, 4)
        np.testing.assert_allclose(herm.lift(lambda t: t, a), a, atol=1e-12)

    def test_exp_diag(self):
        np.testing.assert_allclose(herm.lift(np.exp, np.diag([0, math.log(2)])), np.diag([1, 2]),
                                   atol=1e-14)

    def test_domain_error_names_eigenvalue(self):
        with pytest.raises(DomainError, match="-1") as exc:
            herm.lift(np.log, np.diag([-1.0, 2.0]))
        assert exc.value.value == pytest.approx(-1.0)

    def test_matches_expm(self, rng):
        a = random_hermitian(rng, 6)
        np.testing.assert_allclose(herm.lift(np.exp, a), sla.expm(a), atol=1e-10)

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_polynomial(self, d, seed):
        a = random_hermitian(np.random.default_rng(seed), d)
        g = lambda t: 2 * t**3 - t + 0.5
        direct = 2 * a @ a @ a - a + 0.5 * np.eye(d)
        assert np.linalg.norm(herm.lift(g, a) - direct) <= 1e-9 * max(np.linalg.norm(direct), 1.0)


class TestTraceInner:
    def test_identity(self):
        assert herm.trace_inner(I2, I2) == 2.0

    def test_orthogonal_paulis(self):
        assert herm.trace_inner(Z, X) == 0.0

    def test_double_sum(self, rng):
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        ref = sum(a[i, j] * b[j, i] for i in range(4) for j in range(4))
        assert herm.trace_inner(a, b) == pytest.approx(ref.real, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(InvalidInputError):
            herm.trace_inner(I2, np.eye(3))

    def test_non_hermitian_detected(self):
        with pytest.raises(InvalidInputError, match="imaginary"):
            herm.trace_inner(np.array([[0, 1j], [0, 0]]), np.array([[0, 0], [1, 0]]), check=True)


class TestTensor:
    def test_kron_identity(self):
        np.testing.assert_array_equal(herm.kron(I2, I2), np.eye(4))

    def test_kron_sum(self):
        np.testing.assert_array_equal(herm.kron_sum(Z, np.zeros((2, 2))), np.kron(Z, I2))

    def test_kron_zz(self):
        np.testing.assert_array_equal(herm.kron(Z, Z), np.diag([1, -1, -1, 1]))

    def test_partial_trace_product(self, rng):
        a, b = random_hermitian(rng, 3), random_hermitian(rng, 3)
        np.testing.assert_allclose(herm.partial_trace(np.kron(a, b), "second"), np.trace(b) * a,
                                   atol=1e-12)
        np.testing.assert_allclose(herm.partial_trace(np.kron(a, b), "first"), np.trace(a) * b,
                                   atol=1e-12)

    def test_partial_trace_basis(self):
        p00 = np.diag([1.0, 0, 0, 0])
        np.testing.assert_array_equal(herm.partial_trace(p00, "second").real, np.diag([1.0, 0]))

    def test_bell(self):
        bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
        rho = np.outer(bell, bell)
        for which in ("first", "second"):
            np.testing.assert_allclose(herm.partial_trace(rho, which), np.eye(2) / 2, atol=1e-15)

    def test_unequal_factors(self, rng):
        a, b = random_hermitian(rng, 2), random_hermitian(rng, 3)
        np.testing.assert_allclose(herm.partial_trace(np.kron(a, b), "second", (2, 3)),
                                   np.trace(b) * a, atol=1e-12)

    def test_non_square_total(self):
        with pytest.raises(InvalidInputError):
            herm.partial_trace(np.eye(6), "first")

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_adjointness(self, d):
        rng = np.random.default_rng(d)
        for _ in range(100):
            pi = random_hermitian(rng, d * d)
            u = random_hermitian(rng, d)
            lhs1 = np.trace(np.kron(np.eye(d), u) @ pi)
            rhs1 = np.trace(u @ herm.partial_trace(pi, "first", d))
            lhs2 = np.trace(np.kron(u, np.eye(d)) @ pi)
            rhs2 = np.trace(u @ herm.partial_trace(pi, "second", d))
            assert abs(lhs1 - rhs1) <= 1e-10
            assert abs(lhs2 - rhs2) <= 1e-10


class TestPauli:
    def test_single(self):
        np.testing.assert_array_equal(herm.pauli_string("Z"), Z)

    def test_zz(self):
        np.testing.assert_array_equal(herm.pauli_string("ZZ"), np.diag([1, -1, -1, 1]))

    def test_ordering(self):
        np.testing.assert_array_equal(herm.pauli_string("IZ"), np.diag([1, -1, 1, -1]))

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            herm.pauli_string("XQ")
        with pytest.raises(InvalidInputError):
            herm.pauli_string("")

    @given(st.text(alphabet="IXYZ", min_size=1, max_size=4))
    def test_involution(self, label):
        s = herm.pauli_string(label)
        np.testing.assert_allclose(s @ s, np.eye(s.shape[0]), atol=1e-15)
        np.testing.assert_array_equal(s, s.conj().T)

    def test_embed(self):
        np.testing.assert_array_equal(herm.embed(X, 1, 3), herm.pauli_string("IXI"))


class TestFock:
    def test_n2(self):
        x, _ = herm.fock_quadratures(2)
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(x, [[0, r], [r, 0]])

    def test_hermitian(self):
        x, p = herm.fock_quadratures(50)
        np.testing.assert_array_equal(x, x.conj().T)
        np.testing.assert_array_equal(p, p.conj().T)

    def test_commutator_block(self):
        n = 12
        x, p = herm.fock_quadratures(n)
        c = x @ p - p @ x
        np.testing.assert_allclose(c[: n - 1, : n - 1], 1j * np.eye(n - 1), atol=1e-13)
        # truncation shows up only in the last level
        assert abs(c[n - 1, n - 1] - 1j * (1 - n)) < 1e-12

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            herm.fock_quadratures(1)


class TestStates:
    def test_zeta_theta_zero(self):
        np.testing.assert_allclose(herm.zeta_state(0.0, 1.3, 5), np.eye(5)[0])

    def test_zeta_quarter(self):
        v = herm.zeta_state(math.pi / 4, 0.0, 4)
        np.testing.assert_allclose(v, np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-15)

    def test_cat_zero(self):
        np.testing.assert_allclose(herm.cat_state(0.0, 6), np.eye(6)[0])

    @given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5), st.integers(2, 16))
    def test_unit_norm(self, re, im, dim):
        beta = complex(re, im)
        try:
            v = herm.cat_state(beta, dim)
        except TruncationError:
            return
        assert abs(np.linalg.norm(v) - 1) <= 1e-12
        assert abs(np.linalg.norm(herm.zeta_state(re, im, dim)) - 1) <= 1e-12

    def test_cat_odd_levels_cancel(self):
        v = herm.cat_state(1.5, 12)
        np.testing.assert_allclose(v[1::2], 0, atol=1e-15)

    def test_cat_truncation_error(self):
        # a large displacement leaves almost no weight on levels 0 and 1
        with pytest.raises(TruncationError):
            herm.cat_state(12.0, 2)
        with pytest.raises(InvalidInputError):
            herm.cat_state(0.5, 1)

    def test_coherent_oracle(self):
        beta = 0.8
        ref = np.array([math.exp(-beta**2 / 2) * beta**k / math.sqrt(math.factorial(k))
                        for k in range(8)])
        np.testing.assert_allclose(herm.coherent_amplitudes(beta, 8), ref, atol=1e-15)


class TestGaussian:
    def test_vacuum(self):
        fd = herm.gaussian_fock_density((0, 0), np.eye(2) / 2, 6)
        np.testing.assert_allclose(fd.rho, np.diag([1.0, 0, 0, 0, 0, 0]), atol=1e-10)
        assert not fd.truncated

    def test_coherent(self):
        beta = 0.9
        n = 20
        fd = herm.gaussian_fock_density((math.sqrt(2) * beta, 0), np.eye(2) / 2, n)
        amp = np.array([math.exp(-beta**2 / 2) * beta**k / math.sqrt(math.factorial(k))
                        for k in range(n)])
        ref = np.outer(amp, amp) / np.dot(amp, amp)
        np.testing.assert_allclose(fd.rho, ref, atol=1e-10)

    def test_moment(self):
        # first moment of a displaced, correlated thermal state
        m = (1.0, 1.0)
        v = np.array([[10.0, 2.0], [2.0, 10.0]])
        fd = herm.gaussian_fock_density(m, v, 260)
        x, p = herm.fock_quadratures(260)
        assert abs(np.trace(x @ fd.rho).real - m[0]) <= 1e-6
        assert abs(np.trace(p @ fd.rho).real - m[1]) <= 1e-6

    def test_second_moment(self):
        m = (0.3, -0.2)
        v = np.array([[1.0, 0.3], [0.3, 0.8]])
        fd = herm.gaussian_fock_density(m, v, 60)
        x, p = herm.fock_quadratures(61)
        x, p = x[:60, :60], p[:60, :60]
        var_x = np.trace(x @ x @ fd.rho).real - m[0] ** 2
        assert var_x == pytest.approx(v[0, 0], abs=1e-8)

    def test_uncertainty_violation(self):
        with pytest.raises(InvalidInputError):
            herm.gaussian_fock_density((0, 0), np.eye(2) / 4, 5)

    def test_truncation_warning(self):
        with pytest.warns(RuntimeWarning, match="mass"):
            fd = herm.gaussian_fock_density((1, 1), [[10, 2], [2, 10]], 10)
        assert fd.truncated and fd.mass < 0.99

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.5, 2.0), st.floats(0.5, 2.0),
           st.floats(-0.3, 0.3))
    def test_unit_trace_psd(self, mx, mp, a, c, b):
        v = np.array([[a, b], [b, c]])
        try:
            herm.check_covariance(v)
        except InvalidInputError:
            return
        fd = herm.gaussian_fock_density((mx, mp), v, 30)
        assert abs(np.trace(fd.rho).real - 1) <= 1e-12
        assert np.linalg.eigvalsh(fd.rho)[0] >= -1e-10


class TestJson:
    def test_round_trip(self, rng):
        a = random_hermitian(rng, 3)
        obj = herm.matrix_to_json(a)
        assert obj["dim"] == 3
        np.testing.assert_array_equal(herm.matrix_from_json(obj), a)

    def test_bad_dim(self):
        with pytest.raises(InvalidInputError):
            herm.matrix_from_json({"dim": 3, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]})

    def test_density_helper(self, rng):
        rho = random_density(rng, 4)
        assert np.trace(rho).real == pytest.approx(1.0)
