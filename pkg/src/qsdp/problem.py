"""Regularized SDP data model, primal/dual functionals and diagnostics.

The problem is

    min  Tr[H pi] + eps Tr[phi(pi)]   s.t.  pi >= 0,  Tr[Q_i pi] = q_i,

with dual functional

    D(alpha) = sum_i alpha_i q_i - eps Tr[psi((sum_i alpha_i Q_i - H) / eps)].
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import _kernels, herm
from .exceptions import InvalidInputError, ScaleOverflowError
from .regularizers import Regularizer, clamp_psd, trace_phi, trace_psi

GRAM_RTOL = 1e-10
CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Hamiltonian ``H``, observables ``Q[0..M]``, outcomes ``q`` and ``epsilon``.

    ``Q`` is stored as a ``(M+1, d, d)`` complex stack; ``Q[0]`` must be
    positive definite and ``q[0]`` positive (see :meth:`validate`).
    """

    H: np.ndarray
    Q: np.ndarray
    q: np.ndarray
    epsilon: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        H = herm.as_hermitian(self.H)
        Q = np.asarray(self.Q, dtype=complex)
        if Q.ndim == 2:
            Q = Q[None]
        if Q.ndim != 3 or Q.shape[1:] != H.shape:
            raise InvalidInputError(
                f"observables of shape {Q.shape} do not match H of dim {H.shape[0]}")
        Q = np.stack([herm.as_hermitian(x) for x in Q])
        q = np.asarray(self.q, dtype=float).ravel()
        if q.shape[0] != Q.shape[0]:
            raise InvalidInputError(f"{Q.shape[0]} observables but {q.shape[0]} outcomes")
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps <= 0:
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon!r}")
        for arr in (H, Q, q):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "epsilon", eps)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_constraints(self) -> int:
        """``M + 1``."""
        return self.Q.shape[0]

    @cached_property
    def _q_re(self):
        return np.ascontiguousarray(self.Q.real)

    @cached_property
    def _q_im(self):
        return np.ascontiguousarray(self.Q.imag)

    def with_epsilon(self, epsilon: float) -> "ProblemInstance":
        return dataclasses.replace(self, epsilon=epsilon)

    def validate(self) -> list[str]:
        """Return every violated invariant as a message; empty when valid."""
        errors = []
        lam0 = np.linalg.eigvalsh(self.Q[0])[0]
        if not lam0 > 0:
            errors.append(f"Q[0] must be positive definite (smallest eigenvalue {lam0:.3g})")
        if not self.q[0] > 0:
            errors.append(f"q[0] must be positive (got {self.q[0]:.3g})")
        if not np.all(np.isfinite(self.q)):
            errors.append("outcomes contain non-finite values")
        return errors

    def check(self) -> "ProblemInstance":
        errors = self.validate()
        if errors:
            raise InvalidInputError("; ".join(errors))
        return self

    def effective_operator(self, alpha) -> np.ndarray:
        """``sum_i alpha_i Q_i - H``."""
        alpha = self._alpha(alpha)
        w_re, w_im = _kernels.weighted_sum(alpha, self._q_re, self._q_im)
        return herm.hermitize(w_re + 1j * w_im - self.H)

    def expectations(self, pi) -> np.ndarray:
        """``Re Tr[Q_i pi]`` for every observable."""
        pi = np.asarray(pi, dtype=complex)
        return _kernels.contract(self._q_re, self._q_im,
                                 np.ascontiguousarray(pi.real), np.ascontiguousarray(pi.imag))

    def _alpha(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float).ravel()
        if alpha.shape[0] != self.n_constraints:
            raise InvalidInputError(
                f"alpha has length {alpha.shape[0]}, expected {self.n_constraints}")
        return alpha


# ---------------------------------------------------------------------------
# feasibility


class Feasible(NamedTuple):
    witness: np.ndarray


class Inconsistent(NamedTuple):
    violated_index: int
    lhs: float
    rhs: float


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Linear-algebraic consistency of ``Tr[Q_i pi] = q_i`` over Hermitian ``pi``.

    This is only the necessary condition for an admissible state: the
    witness is Hermitian but not necessarily positive semidefinite.
    """

    basis_indices: tuple[int, ...]
    coefficients: dict
    verdict: Feasible | Inconsistent

    @property
    def feasible(self) -> bool:
        return isinstance(self.verdict, Feasible)


def _real_vectors(Q) -> np.ndarray:
    # Tr[Q_i Q_j] = <vec Q_i, vec Q_j> over the reals for Hermitian inputs
    Q = np.asarray(Q, dtype=complex)
    m = Q.shape[0]
    return np.concatenate([Q.real.reshape(m, -1), Q.imag.reshape(m, -1)], axis=1)


def feasibility_certificate(Q: Sequence, q: Sequence) -> FeasibilityCertificate:
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim == 2:
        Q = Q[None]
    q = np.asarray(q, dtype=float).ravel()
    if Q.shape[0] == 0 or Q.shape[0] != q.shape[0]:
        raise InvalidInputError("need matching, nonempty observables and outcomes")

    vecs = _real_vectors(Q)
    gram = vecs @ vecs.T
    sv = np.linalg.svd(gram, compute_uv=False)
    rank = int(np.sum(sv > GRAM_RTOL * sv[0])) if sv[0] > 0 else 0

    if rank == 0:
        basis = []
    else:
        _, _, piv = scipy.linalg.qr(vecs.T, mode="economic", pivoting=True)
        basis = sorted(int(i) for i in piv[:rank])
    dependent = [j for j in range(Q.shape[0]) if j not in basis]

    g_bb = gram[np.ix_(basis, basis)]
    coeffs = {}
    for j in dependent:
        if basis:
            t = np.linalg.lstsq(g_bb, gram[basis, j], rcond=None)[0]
        else:
            t = np.zeros(0)
        coeffs[j] = t
        rhs = float(t @ q[basis]) if basis else 0.0
        if abs(q[j] - rhs) > CONSISTENCY_TOL * (1.0 + abs(q[j])):
            return FeasibilityCertificate(tuple(basis), coeffs, Inconsistent(j, float(q[j]), rhs))

    if basis:
        c = np.linalg.solve(g_bb, q[basis])
        witness = herm.hermitize(np.tensordot(c, Q[basis], axes=1))
    else:
        witness = np.zeros(Q.shape[1:], dtype=complex)
    return FeasibilityCertificate(tuple(basis), coeffs, Feasible(witness))


def trace_bound(inst: ProblemInstance) -> float:
    """``q_0 / lambda_min(Q_0)``, an upper bound on the trace of admissible states."""
    return float(inst.q[0] / np.linalg.eigvalsh(inst.Q[0])[0])


class SlaterDiagnostic(NamedTuple):
    candidate: np.ndarray
    min_eigenvalue: float
    residual_norm: float

    def holds(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue > 0 and self.residual_norm <= tol


def slater_diagnostic(inst: ProblemInstance, pi0) -> SlaterDiagnostic:
    pi0 = herm.as_hermitian(pi0)
    if pi0.shape != inst.H.shape:
        raise InvalidInputError("candidate dimension does not match the instance")
    res = constraint_residuals(inst, pi0)
    return SlaterDiagnostic(pi0, float(np.linalg.eigvalsh(pi0)[0]), float(np.max(np.abs(res))))


# ---------------------------------------------------------------------------
# functionals


def primal_value(inst: ProblemInstance, reg: Regularizer, pi) -> float:
    pi = herm.as_hermitian(pi)
    return herm.trace_inner(inst.H, pi) + inst.epsilon * trace_phi(reg, pi)


class DualEval(NamedTuple):
    value: float
    gradient: np.ndarray
    primal: np.ndarray


def dual_evaluate(inst: ProblemInstance, reg: Regularizer, alpha) -> DualEval:
    """Dual value, gradient and recovered primal from one eigendecomposition.

    Raises :class:`ScaleOverflowError` when ``psi`` overflows at ``alpha``.
    """
    alpha = inst._alpha(alpha)
    eps = inst.epsilon
    sp = herm.spectral_decompose(inst.effective_operator(alpha) / eps)
    value = float(alpha @ inst.q) - eps * trace_psi(reg, None, sp)
    pi = herm.rebuild(sp.eigenvectors, reg.psi_prime(sp.eigenvalues))
    grad = inst.q - inst.expectations(pi)
    return DualEval(value, grad, pi)


def dual_value(inst: ProblemInstance, reg: Regularizer, alpha) -> float:
    alpha = inst._alpha(alpha)
    w = np.linalg.eigvalsh(inst.effective_operator(alpha) / inst.epsilon)
    return float(alpha @ inst.q) - inst.epsilon * float(np.sum(reg.psi(w)))


def dual_gradient(inst: ProblemInstance, reg: Regularizer, alpha) -> np.ndarray:
    """``q_j - Tr[Q_j psi'((sum alpha_i Q_i - H) / eps)]``."""
    return dual_evaluate(inst, reg, alpha).gradient


def recover_primal(inst: ProblemInstance, reg: Regularizer, alpha) -> np.ndarray:
    """``psi'((sum alpha_i Q_i - H) / eps)``."""
    alpha = inst._alpha(alpha)
    return herm.lift(reg.psi_prime, inst.effective_operator(alpha) / inst.epsilon)


def constraint_residuals(inst: ProblemInstance, pi) -> np.ndarray:
    """``Tr[Q_i pi] - q_i``."""
    return inst.expectations(pi) - inst.q


def duality_gap(inst: ProblemInstance, reg: Regularizer, pi, alpha) -> float:
    return primal_value(inst, reg, pi) - dual_value(inst, reg, alpha)


def psd_sqrt(pi) -> np.ndarray:
    sp = herm.spectral_decompose(pi)
    return herm.rebuild(sp.eigenvectors, np.sqrt(clamp_psd(sp.eigenvalues)))


def slackness_residual(pi, alpha, inst: ProblemInstance) -> float:
    """Frobenius norm of ``sqrt(pi) (H - sum alpha_i Q_i) sqrt(pi)``."""
    root = psd_sqrt(herm.as_hermitian(pi))
    return float(np.linalg.norm(root @ (-inst.effective_operator(alpha)) @ root))


class ZeroTempFeasibility(NamedTuple):
    feasible: bool
    margin: float


def zero_temp_dual_feasible(inst: ProblemInstance, alpha, tol: float = 0.0) -> ZeroTempFeasibility:
    """Check ``H - sum alpha_i Q_i >= 0`` through its smallest eigenvalue."""
    margin = float(np.linalg.eigvalsh(-inst.effective_operator(alpha))[0])
    return ZeroTempFeasibility(margin >= -tol, margin)


def gamma_probe(reg: Regularizer, w, eps_list) -> list[tuple[float, float]]:
    """Sample ``eps * Tr[psi(W / eps)]`` along ``eps_list``.

    Overflowing samples are reported as ``inf``.
    """
    lam = np.linalg.eigvalsh(herm.as_hermitian(w))
    out = []
    for eps in eps_list:
        eps = float(eps)
        try:
            with np.errstate(over="raise"):
                val = eps * float(np.sum(reg.psi(lam / eps)))
        except (ScaleOverflowError, FloatingPointError):
            val = float("inf")
        out.append((eps, val))
    return out
