"""Dense Hermitian linear algebra and quantum-state constructors.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)``.  Tensor
products put the leftmost factor on the most significant index block, so
``kron(A, B)[(i, k), (j, l)] = A[i, j] * B[k, l]`` with row index
``i * dim(B) + k``.

Quadratures use ``X = (a + a^dag)/sqrt(2)`` and ``P = i(a^dag - a)/sqrt(2)``
(hbar = 1); the vacuum has covariance ``I/2``.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .exceptions import DomainError, InvalidInputError, TruncationError

HERMITIAN_RTOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class Spectral(NamedTuple):
    """Eigen-decomposition ``A = V diag(w) V^dag`` with ``w`` ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return rebuild(self.eigenvectors, self.eigenvalues)


def as_hermitian(a, tol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate ``a`` as a Hermitian matrix and return it as complex128.

    The check is relative to the largest absolute entry.  The returned
    array is exactly Hermitian, ``(a + a^dag) / 2``.
    """
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InvalidInputError("dimension must be at least 1")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    scale = np.max(np.abs(arr))
    err = np.max(np.abs(arr - arr.conj().T))
    if err > tol * max(scale, 1e-300) and err > 0:
        raise InvalidInputError(f"matrix is not Hermitian (max asymmetry {err:.3g})")
    return hermitize(arr)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def rebuild(vecs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """``V diag(vals) V^dag``, symmetrized."""
    return hermitize((vecs * vals) @ vecs.conj().T)


def spectral_decompose(a) -> Spectral:
    """Eigenvalues in ascending order with orthonormal eigenvectors."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"cannot decompose array of shape {arr.shape}")
    w, v = np.linalg.eigh(arr)
    return Spectral(w, v)


def lift(g: Callable[[np.ndarray], np.ndarray], a, spectral: Spectral | None = None) -> np.ndarray:
    """Apply the scalar function ``g`` to ``a`` through its spectrum.

    ``g`` receives the eigenvalue array.  Non-finite outputs raise a
    :class:`DomainError` naming the first offending eigenvalue.
    """
    sp = spectral if spectral is not None else spectral_decompose(a)
    with np.errstate(all="ignore"):
        vals = np.asarray(g(sp.eigenvalues), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        lam = sp.eigenvalues[np.argmax(bad)]
        raise DomainError(f"function undefined at eigenvalue {lam!r}", value=lam)
    return rebuild(sp.eigenvectors, vals)


def trace_inner(a, b, check: bool = __debug__) -> float:
    """``Re Tr[AB]`` for Hermitian ``A`` and ``B``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch {a.shape} vs {b.shape}")
    t = np.sum(a * b.T)
    if check:
        scale = 1.0 + np.linalg.norm(a) * np.linalg.norm(b)
        if abs(t.imag) > 1e-10 * scale:
            raise InvalidInputError(f"Tr[AB] has imaginary part {t.imag:.3g}; inputs not Hermitian")
    return float(t.real)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_sum(u, v) -> np.ndarray:
    """``U (+) V = U (x) I + I (x) V``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return np.kron(u, np.eye(v.shape[0])) + np.kron(np.eye(u.shape[0]), v)


def partial_trace(pi, which: str, d: int | tuple[int, int] | None = None) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    ``which="first"`` returns ``Tr_1 pi`` (an operator on the second factor),
    ``which="second"`` returns ``Tr_2 pi``.  ``d`` is the common factor
    dimension, or a pair ``(d1, d2)``; by default the total dimension must be
    a perfect square.
    """
    pi = np.asarray(pi, dtype=complex)
    total = pi.shape[0]
    if d is None:
        r = math.isqrt(total)
        if r * r != total:
            raise InvalidInputError(f"dimension {total} is not a perfect square")
        d1 = d2 = r
    elif isinstance(d, (tuple, list)):
        d1, d2 = (int(x) for x in d)
    else:
        d1 = d2 = int(d)
    if d1 * d2 != total or pi.shape != (total, total):
        raise InvalidInputError(f"operator of shape {pi.shape} is not on C^{d1} (x) C^{d2}")
    t = pi.reshape(d1, d2, d1, d2)
    if which in ("first", 1, "1"):
        return np.einsum("abad->bd", t)
    if which in ("second", 2, "2"):
        return np.einsum("abcb->ac", t)
    raise InvalidInputError(f"which must be 'first' or 'second', got {which!r}")


def pauli_string(spec: str | Sequence[str]) -> np.ndarray:
    """Tensor product of Pauli matrices, leftmost symbol most significant."""
    symbols = list(spec)
    if not symbols:
        raise InvalidInputError("empty Pauli string")
    out = np.ones((1, 1), dtype=complex)
    for s in symbols:
        try:
            out = np.kron(out, PAULI[s.upper()])
        except (KeyError, AttributeError):
            raise InvalidInputError(f"invalid Pauli symbol {s!r}") from None
    return out


def embed(op, site: int, n_sites: int) -> np.ndarray:
    """Single-qubit ``op`` acting on ``site`` (0-based, leftmost = 0)."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_sites):
        out = np.kron(out, op if k == site else PAULI["I"])
    return out


def ladder(n: int) -> np.ndarray:
    """Truncated annihilation operator, ``a|l> = sqrt(l)|l-1>``."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def fock_quadratures(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum quadratures truncated to ``n`` Fock levels."""
    if n < 2:
        raise InvalidInputError("need at least 2 Fock levels")
    a = ladder(n)
    ad = a.conj().T
    x = (a + ad) / np.sqrt(2.0)
    p = 1j * (ad - a) / np.sqrt(2.0)
    return hermitize(x), hermitize(p)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise InvalidInputError("cannot normalize the zero vector")
    return v / nrm


def zeta_state(theta: float, omega: float, dim: int) -> np.ndarray:
    """``cos(theta)|1> + sin(theta) e^{i omega}|D>`` (first and last basis vectors)."""
    if dim < 2:
        raise InvalidInputError("dimension must be at least 2")
    v = np.zeros(dim, dtype=complex)
    v[0] = math.cos(theta)
    v[-1] = math.sin(theta) * np.exp(1j * omega)
    return normalize(v)


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Unnormalized Fock amplitudes ``e^{-|b|^2/2} b^l / sqrt(l!)``, l < dim."""
    beta = complex(beta)
    amps = np.empty(dim, dtype=complex)
    amps[0] = np.exp(-0.5 * abs(beta) ** 2)
    for l in range(1, dim):
        amps[l] = amps[l - 1] * beta / math.sqrt(l)
    return amps


def coherent_state(beta: complex, dim: int) -> np.ndarray:
    amps = coherent_amplitudes(beta, dim)
    if np.linalg.norm(amps) < 1e-8:
        raise TruncationError(f"coherent state |{beta}> lies outside {dim} Fock levels")
    return normalize(amps)


def cat_state(beta: complex, dim: int) -> np.ndarray:
    """Normalized even cat state ``|beta> + |-beta>`` in ``dim`` Fock levels."""
    if dim < 2:
        raise InvalidInputError("dimension must be at least 2")
    v = coherent_amplitudes(beta, dim) + coherent_amplitudes(-complex(beta), dim)
    if np.linalg.norm(v) < 1e-8:
        raise TruncationError(f"cat state with beta={beta} lies outside {dim} Fock levels")
    return normalize(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


class FockDensity(NamedTuple):
    """Discretized state together with the Fock mass kept before renormalizing."""

    rho: np.ndarray
    mass: float

    @property
    def truncated(self) -> bool:
        return self.mass < 0.99


def check_covariance(cov) -> np.ndarray:
    """Validate a 2x2 covariance against ``V + (i/2) Omega >= 0``."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T, atol=1e-12):
        raise InvalidInputError("covariance must be a symmetric 2x2 matrix")
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    lam = np.linalg.eigvalsh(cov + 0.5j * omega)
    if lam[0] < -1e-12 or np.linalg.eigvalsh(cov)[0] <= 0:
        raise InvalidInputError(f"covariance violates the uncertainty relation (min eig {lam[0]:.3g})")
    return cov


def gaussian_fock_density(mean, cov, n: int, points: int | None = None) -> FockDensity:
    """Gaussian state with first moments ``mean`` and covariance ``cov`` in ``n`` Fock levels.

    The position-space kernel is integrated against Hermite functions on a
    uniform grid (trapezoid rule, spectrally accurate for these integrands).
    The truncated block is renormalized to unit trace; ``mass`` reports its
    trace before renormalization.
    """
    if n < 2:
        raise InvalidInputError("need at least 2 Fock levels")
    mx, mp = (float(t) for t in mean)
    a, b, c = (float(t) for t in check_covariance(cov)[[0, 0, 1], [0, 1, 1]])
    cond = c - b * b / a

    # Hermite functions h_l, l < n, are negligible beyond sqrt(2n+1) + 8,
    # which bounds the integration window whatever the Gaussian width.
    half = math.sqrt(2 * n + 1) + 8.0
    kmax = (math.sqrt(2 * n + 1) + abs(mp) + abs(b / a) * (half + abs(mx))
            + 6.0 / math.sqrt(min(a, cond)) + 6.0 * math.sqrt(cond) + 4.0)
    if points is None:
        points = int(min(max(2 * half * kmax / math.pi * 1.5, 200), 4000))
    x, h = np.linspace(-half, half, points, retstep=True)

    xb = 0.5 * (x[:, None] + x[None, :])
    y = x[:, None] - x[None, :]
    mu = mp + (b / a) * (xb - mx)
    kernel = (np.exp(-0.5 * (xb - mx) ** 2 / a) / math.sqrt(2 * math.pi * a)
              * np.exp(1j * mu * y - 0.5 * cond * y * y))

    herm = _kernels.hermite_functions(x, n)
    p = h * h * (herm.T @ kernel @ herm)
    p = hermitize(p)
    mass = float(np.trace(p).real)
    if mass < 0.99:
        warnings.warn(f"Gaussian state keeps only {mass:.4f} of its mass in {n} Fock levels",
                      RuntimeWarning, stacklevel=2)
    return FockDensity(p / mass, mass)


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; ``im`` may be omitted for real matrices."""
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad matrix encoding: {exc}") from None
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise InvalidInputError(f"matrix arrays do not match dim={dim}")
    return re + 1j * im
