"""Convex regularizers ``phi`` on ``[0, inf)`` paired with their conjugates.

Each :class:`Regularizer` carries ``phi``, ``psi = phi^*`` (extended by
``+inf`` on the negative axis before conjugating) and ``psi'``, all
vectorized over numpy arrays.  Trace-level functionals go through the
spectral lift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from . import herm
from .exceptions import InvalidInputError, NotPSDError, ScaleOverflowError

PSD_TOL = 1e-10
EXP_GUARD = 700.0

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Regularizer:
    name: str
    phi: Scalar
    psi: Scalar
    psi_prime: Scalar
    inf_psi: float
    phi_at_zero: float
    strictly_convex_psi: bool
    description: str = ""


def _guarded_exp(t):
    t = np.asarray(t, dtype=float)
    if t.size and np.max(t) > EXP_GUARD:
        raise ScaleOverflowError(f"exp argument {np.max(t):.4g} exceeds {EXP_GUARD}")
    return np.exp(t)


def _vn_psi(t):
    return _guarded_exp(np.asarray(t, dtype=float) - 1.0)


def _quad_psi(t):
    return 0.5 * np.maximum(t, 0.0) ** 2


def _quad_psi_prime(t):
    return np.maximum(np.asarray(t, dtype=float), 0.0)


VON_NEUMANN = Regularizer(
    name="vn",
    phi=lambda z: xlogy(z, z),
    psi=_vn_psi,
    psi_prime=_vn_psi,
    inf_psi=0.0,
    phi_at_zero=0.0,
    strictly_convex_psi=True,
    description="phi(z) = z log z, psi(t) = exp(t - 1)",
)

VON_NEUMANN_SHIFTED = Regularizer(
    name="vn-shifted",
    phi=lambda z: xlogy(z, z) - np.asarray(z, dtype=float),
    psi=_guarded_exp,
    psi_prime=_guarded_exp,
    inf_psi=0.0,
    phi_at_zero=0.0,
    strictly_convex_psi=True,
    description="phi(z) = z (log z - 1), psi(t) = exp(t)",
)

QUADRATIC = Regularizer(
    name="quad",
    phi=lambda z: 0.5 * np.asarray(z, dtype=float) ** 2,
    psi=_quad_psi,
    psi_prime=_quad_psi_prime,
    inf_psi=0.0,
    phi_at_zero=0.0,
    strictly_convex_psi=False,
    description="phi(z) = z^2 / 2, psi(t) = max(t, 0)^2 / 2",
)

REGISTRY = {r.name: r for r in (VON_NEUMANN, VON_NEUMANN_SHIFTED, QUADRATIC)}


def get_regularizer(name: str | Regularizer) -> Regularizer:
    if isinstance(name, Regularizer):
        return name
    try:
        return REGISTRY[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown regularizer {name!r}; choose from {sorted(REGISTRY)}") from None


def clamp_psd(eigenvalues, tol: float = PSD_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol, 0)``; anything lower is an error."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size and lam.min() < -tol:
        raise NotPSDError(f"operator has eigenvalue {lam.min():.3g} < -{tol:g}", value=lam.min())
    return np.maximum(lam, 0.0)


def trace_phi(reg: Regularizer, pi, spectral: herm.Spectral | None = None) -> float:
    """``Tr[phi(pi)]`` for a positive semidefinite ``pi``."""
    lam = spectral.eigenvalues if spectral is not None else np.linalg.eigvalsh(pi)
    return float(np.sum(reg.phi(clamp_psd(lam))))


def trace_psi(reg: Regularizer, w, spectral: herm.Spectral | None = None) -> float:
    lam = spectral.eigenvalues if spectral is not None else np.linalg.eigvalsh(w)
    return float(np.sum(reg.psi(lam)))


def psi_prime_lift(reg: Regularizer, w, spectral: herm.Spectral | None = None) -> np.ndarray:
    """``psi'(W)``, positive semidefinite because ``psi`` is nondecreasing."""
    return herm.lift(reg.psi_prime, w, spectral)


def fenchel_young_gap(reg: Regularizer, pi, w) -> float:
    """``Tr[phi(pi)] + Tr[psi(W)] - Tr[W pi]``; nonnegative for PSD ``pi``."""
    return trace_phi(reg, pi) + trace_psi(reg, w) - herm.trace_inner(w, pi)


def conjugate_on_grid(reg: Regularizer, t, grid) -> np.ndarray:
    """Brute-force ``sup_{x in grid} (t x - phi(x))``, for checking ``psi``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    grid = np.asarray(grid, dtype=float)
    return np.max(t[:, None] * grid[None, :] - reg.phi(grid)[None, :], axis=1)
