"""Problem generators: tomography, quantum optimal transport and test cases.

Every generator is a pure function of its parameters; randomness comes from
an explicit ``numpy.random.Generator`` seeded by the caller.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import herm
from .exceptions import InvalidInputError
from .problem import ProblemInstance

PAULI_SYMBOLS = "IXYZ"

QT_DEFAULTS = dict(p=0.7, theta=math.pi / 6, omega=math.pi / 4, beta=2.0, t=0.5)
QWD_DEFAULTS = dict(m_rho=(0.0, 0.0), V_rho=((3.0, 1.0), (1.0, 3.0)),
                    m_sigma=(1.0, 1.0), V_sigma=((10.0, 2.0), (2.0, 10.0)))


def _check_density(rho, name="rho", tol=1e-10):
    rho = herm.as_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidInputError(f"{name} has trace {tr:.12g}, expected 1")
    lam = np.linalg.eigvalsh(rho)[0]
    if lam < -tol:
        raise InvalidInputError(f"{name} is not positive semidefinite (eigenvalue {lam:.3g})")
    return rho


# ---------------------------------------------------------------------------
# tomography


def _unit(x, name):
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {x}")
    return x


def qt_state(which: int, n_qubits: int, p=QT_DEFAULTS["p"], theta=QT_DEFAULTS["theta"],
             omega=QT_DEFAULTS["omega"], beta=QT_DEFAULTS["beta"], t=QT_DEFAULTS["t"]) -> np.ndarray:
    """Generating density matrix of test family QT1, QT2 or QT3 on ``n_qubits``.

    QT1 mixes ``|zeta(theta, omega)>`` with the maximally mixed state,
    QT2 is the cat state ``|cat_beta>`` truncated to ``2**n_qubits`` Fock
    levels and QT3 is the ``t``-mixture of the two.
    """
    if n_qubits < 1:
        raise InvalidInputError("need at least one qubit")
    dim = 2 ** n_qubits
    p, t = _unit(p, "p"), _unit(t, "t")

    def rho1():
        return p * herm.projector(herm.zeta_state(theta, omega, dim)) + (1 - p) / dim * np.eye(dim)

    def rho2():
        return herm.projector(herm.cat_state(complex(beta), dim))

    if which == 1:
        rho = rho1()
    elif which == 2:
        rho = rho2()
    elif which == 3:
        rho = t * rho1() + (1 - t) * rho2()
    else:
        raise InvalidInputError(f"unknown tomography state {which!r}")
    return herm.hermitize(rho)


def pauli_label(index: int, n_qubits: int) -> str:
    """Base-4 digits of ``index`` read as I, X, Y, Z (most significant first)."""
    digits = []
    for _ in range(n_qubits):
        index, r = divmod(index, 4)
        digits.append(PAULI_SYMBOLS[r])
    return "".join(reversed(digits))


def sample_pauli_labels(n_qubits: int, count: int, rng: np.random.Generator) -> list[str]:
    total = 4 ** n_qubits - 1
    if not 0 <= count <= total:
        raise InvalidInputError(f"cannot draw {count} distinct non-identity Pauli strings "
                                f"on {n_qubits} qubits (only {total} exist)")
    picks = rng.choice(total, size=count, replace=False) + 1
    return [pauli_label(int(i), n_qubits) for i in picks]


def sample_pauli_observables(n_qubits: int, count: int, seed) -> list[np.ndarray]:
    """Identity followed by ``count`` distinct random non-identity Pauli strings."""
    rng = np.random.default_rng(seed)
    labels = sample_pauli_labels(n_qubits, count, rng)
    return [np.eye(2 ** n_qubits, dtype=complex)] + [herm.pauli_string(s) for s in labels]


def build_tomography(rho, observables: Sequence, epsilon: float = 1.0, meta=None) -> ProblemInstance:
    """Tomography instance with ``H = 0`` and outcomes ``q_i = Tr[rho Q_i]``.

    The identity is prepended as ``Q_0`` unless ``observables[0]`` already is
    the identity.
    """
    rho = _check_density(rho)
    d = rho.shape[0]
    obs = [herm.as_hermitian(o) for o in observables]
    if not obs or not np.allclose(obs[0], np.eye(d), atol=1e-14):
        obs = [np.eye(d, dtype=complex)] + obs
    Q = np.stack(obs)
    q = np.array([herm.trace_inner(o, rho) for o in obs])
    q[0] = 1.0
    return ProblemInstance(np.zeros((d, d), dtype=complex), Q, q, epsilon, dict(meta or {}))


def tomography_instance(which: int, n_qubits: int, seed, epsilon: float = 1.0,
                        count: int | None = None, **state_params) -> ProblemInstance:
    """QT1/QT2/QT3 instance with ``M = 2 D`` random Pauli observables by default."""
    dim = 2 ** n_qubits
    count = 2 * dim if count is None else int(count)
    rng = np.random.default_rng(seed)
    labels = sample_pauli_labels(n_qubits, count, rng)
    rho = qt_state(which, n_qubits, **state_params)
    meta = {"family": f"QT{which}", "pauli_labels": labels}
    return build_tomography(rho, [herm.pauli_string(s) for s in labels], epsilon, meta)


# ---------------------------------------------------------------------------
# quantum optimal transport


def hermitian_basis(n: int) -> list[tuple[str, int, int, np.ndarray]]:
    """``G_ij`` (i <= j) and ``H_ij`` (i < j) spanning the n x n Hermitian matrices.

    ``G_ij = (E_ij + E_ji)/2`` and ``H_ij = i (E_ij - E_ji)/2`` satisfy
    ``Tr[G_ij A] = Re A_ij`` and ``Tr[H_ij A] = Im A_ij`` for Hermitian ``A``.
    """
    out = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] += 0.5
            e[j, i] += 0.5
            out.append(("G", i, j, e))
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 0.5j
            e[j, i] = -0.5j
            out.append(("H", i, j, e))
    return out


def build_qot(H, rho, sigma, epsilon: float = 1.0, meta=None) -> ProblemInstance:
    """Quantum optimal transport between ``rho`` and ``sigma`` with cost ``H``.

    Constraints: ``Q_0 = I (x) I`` with ``q_0 = 1``, then ``B (x) I`` for each
    basis element ``B`` of :func:`hermitian_basis` matched to ``rho``,
    then ``I (x) B`` matched to ``sigma``; ``2 n^2 + 1`` in total.
    """
    rho = _check_density(rho, "rho")
    sigma = _check_density(sigma, "sigma")
    n = rho.shape[0]
    if sigma.shape[0] != n:
        raise InvalidInputError("marginals must have the same dimension")
    H = herm.as_hermitian(H)
    if H.shape[0] != n * n:
        raise InvalidInputError(f"cost has dim {H.shape[0]}, expected {n * n}")
    eye = np.eye(n, dtype=complex)
    Q = [np.eye(n * n, dtype=complex)]
    q = [1.0]
    for marginal, first in ((rho, True), (sigma, False)):
        for kind, i, j, b in hermitian_basis(n):
            Q.append(np.kron(b, eye) if first else np.kron(eye, b))
            q.append(marginal[i, j].real if kind == "G" else marginal[i, j].imag)
    meta = {"family": "QOT", "n": n, **(meta or {})}
    return ProblemInstance(H, np.stack(Q), np.array(q), epsilon, meta)


def qwd_hamiltonian(n: int, exact: bool = True) -> np.ndarray:
    """``(X (x) I - I (x) X)^2 + (P (x) I - I (x) P)^2`` on ``n`` Fock levels per mode.

    With ``exact`` the entries are the true matrix elements on the truncated
    basis (built with one extra level, then restricted); otherwise the
    squares of the truncated quadratures are used.
    """
    m = n + 1 if exact else n
    X, P = herm.fock_quadratures(m)
    eye = np.eye(m)
    dx = np.kron(X, eye) - np.kron(eye, X)
    dp = np.kron(P, eye) - np.kron(eye, P)
    full = dx @ dx + dp @ dp
    if exact:
        keep = [i * m + j for i in range(n) for j in range(n)]
        full = full[np.ix_(keep, keep)]
    return herm.hermitize(full)


def qwd_instance(n: int, m_rho=QWD_DEFAULTS["m_rho"], V_rho=QWD_DEFAULTS["V_rho"],
                 m_sigma=QWD_DEFAULTS["m_sigma"], V_sigma=QWD_DEFAULTS["V_sigma"],
                 epsilon: float = 1.0, exact: bool = True) -> ProblemInstance:
    rho = herm.gaussian_fock_density(m_rho, V_rho, n)
    sigma = herm.gaussian_fock_density(m_sigma, V_sigma, n)
    meta = {"family": "QWD", "mass_rho": rho.mass, "mass_sigma": sigma.mass}
    return build_qot(qwd_hamiltonian(n, exact), rho.rho, sigma.rho, epsilon, meta)


def ising_hamiltonian(n_spins: int, h: float, J: float = 1.0) -> np.ndarray:
    """Open transverse-field Ising chain ``-J sum Z_i Z_{i+1} - h sum X_i``."""
    Z, X = herm.PAULI["Z"], herm.PAULI["X"]
    d = 2 ** n_spins
    H = np.zeros((d, d), dtype=complex)
    for i in range(n_spins - 1):
        H -= J * herm.embed(Z, i, n_spins) @ herm.embed(Z, i + 1, n_spins)
    for i in range(n_spins):
        H -= h * herm.embed(X, i, n_spins)
    return H


def ising_instance(N: int, h: float = 0.5, epsilon: float = 1.0, level: int = 0) -> ProblemInstance:
    """QOT instance on ``2N`` spins whose marginals come from one eigenvector.

    ``level`` picks the eigenvector in ascending eigenvalue order (0 is the
    ground state).
    """
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    H = ising_hamiltonian(2 * N, h)
    _, vecs = np.linalg.eigh(H)
    psi = vecs[:, level]
    state = herm.projector(psi)
    n = 2 ** N
    rho = herm.hermitize(herm.partial_trace(state, "second", n))
    sigma = herm.hermitize(herm.partial_trace(state, "first", n))
    meta = {"family": "IM", "N": N, "h": h, "level": level}
    return build_qot(H, rho, sigma, epsilon, meta)


def counterexample_instance(h0: float = 0.0, h1: float = 0.0, epsilon: float = 1.0) -> ProblemInstance:
    """Two-level instance whose only admissible state ``diag(0, 1)`` is singular."""
    Q = np.stack([np.eye(2, dtype=complex), np.diag([1.0, 0.0]).astype(complex)])
    return ProblemInstance(np.diag([h0, h1]).astype(complex), Q, np.array([1.0, 0.0]), epsilon,
                           {"family": "counterexample"})


def diagonal_qot_instance(cost, p, q, epsilon: float = 1.0) -> ProblemInstance:
    """QOT with diagonal marginals and cost ``diag(cost[i, j])`` in the product basis."""
    cost = np.asarray(cost, dtype=float)
    return build_qot(np.diag(cost.ravel()).astype(complex), np.diag(p), np.diag(q), epsilon,
                     {"diagonal": True})


# ---------------------------------------------------------------------------
# classical transport oracle


def _transport_constraints(n):
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n:(i + 1) * n] = 1.0
        A[n + i, i::n] = 1.0
    return A


def classical_ot_oracle(cost, p, q, method: str = "auto") -> float:
    """Exact optimum of the discrete transport LP with marginals ``p``, ``q``.

    ``method="vertices"`` enumerates every candidate basis of ``2n - 1``
    cells (n <= 4); ``"linprog"`` calls HiGHS.  ``"auto"`` enumerates when
    possible.  Sizes beyond n = 6 are rejected.
    """
    cost = np.asarray(cost, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = p.shape[0]
    if cost.shape != (n, n) or q.shape != (n,):
        raise InvalidInputError("cost must be n x n with n-vectors p and q")
    if n > 6:
        raise InvalidInputError("the transport oracle is limited to n <= 6")
    for v, name in ((p, "p"), (q, "q")):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"{name} must be a probability vector")
    if method == "auto":
        method = "vertices" if n <= 4 else "linprog"

    A = _transport_constraints(n)
    b = np.concatenate([p, q])
    c = cost.ravel()
    if method == "linprog":
        from scipy.optimize import linprog

        res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise InvalidInputError(f"transport LP failed: {res.message}")
        return float(res.fun)
    if method != "vertices":
        raise InvalidInputError(f"unknown method {method!r}")
    if n > 4:
        raise InvalidInputError("vertex enumeration is limited to n <= 4")

    # one row is redundant (both marginals sum to 1)
    A, b = A[:-1], b[:-1]
    best = math.inf
    for cols in itertools.combinations(range(n * n), 2 * n - 1):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-12):
            best = min(best, float(c[list(cols)] @ xb))
    return best


# ---------------------------------------------------------------------------
# declarative specs


FAMILIES = ("QT1", "QT2", "QT3", "QWD", "IM", "counterexample", "custom")
RANDOM_FAMILIES = ("QT1", "QT2", "QT3")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; choose from {FAMILIES}")

    def to_json(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "InstanceSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise InvalidInputError("instance spec needs a 'family' field")
        seed = obj.get("seed")
        return cls(obj["family"], dict(obj.get("params") or {}), None if seed is None else int(seed))


def _complex(v: Any) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def build_instance(spec: InstanceSpec) -> ProblemInstance:
    """Instantiate an :class:`InstanceSpec`; QT families require a seed."""
    try:
        return _build(spec)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for family {spec.family}: {exc}") from None


def _build(spec: InstanceSpec) -> ProblemInstance:
    p = dict(spec.params)
    eps = float(p.pop("epsilon", 1.0))
    fam = spec.family
    if fam in RANDOM_FAMILIES:
        if spec.seed is None:
            raise InvalidInputError(f"family {fam} draws random observables and needs a seed")
        if "beta" in p:
            p["beta"] = _complex(p["beta"])
        n_qubits = int(p.pop("n_qubits", 3))
        inst = tomography_instance(int(fam[2]), n_qubits, spec.seed, eps, **p)
    elif fam == "QWD":
        inst = qwd_instance(int(p.pop("n", 5)), epsilon=eps, **p)
    elif fam == "IM":
        inst = ising_instance(int(p.pop("N", 1)), float(p.pop("h", 0.5)), eps,
                              int(p.pop("level", 0)), **p)
    elif fam == "counterexample":
        inst = counterexample_instance(float(p.pop("h0", 0.0)), float(p.pop("h1", 0.0)), eps, **p)
    else:
        raise InvalidInputError("custom instances are loaded from problem files, not specs")
    inst.meta.setdefault("spec", spec.to_json())
    return inst
