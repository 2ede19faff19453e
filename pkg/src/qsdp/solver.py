"""L-BFGS maximization of the regularized dual and the solve/sweep drivers."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels, herm
from .exceptions import InvalidInputError, QSDPError, ScaleOverflowError
from .problem import (
    ProblemInstance,
    dual_evaluate,
    primal_value,
    slackness_residual,
    zero_temp_dual_feasible,
)
from .regularizers import Regularizer, get_regularizer

log = logging.getLogger(__name__)

# relative size of value changes treated as roundoff noise in the line search
ROUNDOFF = 1e-13


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    """L-BFGS settings.

    ``tol`` bounds the 2-norm of the dual gradient.  ``secant_refine`` is the
    slope ratio above which an accepted unit step is polished by one secant
    step (0 disables it).
    """

    tol: float = 1e-6
    max_iters: int = 10000
    memory: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    alpha0: Sequence[float] | None = None
    divergence_norm: float = 1e8
    max_linesearch: int = 50
    secant_refine: float = 1e-3

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise InvalidInputError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.secant_refine < 0:
            raise InvalidInputError("secant_refine must be nonnegative")
        if self.memory < 1 or self.max_iters < 0 or self.max_linesearch < 1:
            raise InvalidInputError("memory and max_linesearch must be >= 1, max_iters >= 0")

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["alpha0"] is not None:
            d["alpha0"] = [float(a) for a in d["alpha0"]]
        return d


class TraceRecord(NamedTuple):
    iter: int
    dual_value: float
    grad_norm: float
    seconds: float


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    status: Status
    trace: list[TraceRecord]
    message: str = ""

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))

    @property
    def n_iters(self) -> int:
        return self.trace[-1].iter if self.trace else 0


# objective returns (value, gradient) of the function being *maximized*
Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


def _safe_eval(fun: Objective, x):
    """Negated value and gradient; non-finite or overflowing points give ``inf``."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = fun(x)
    except (ScaleOverflowError, FloatingPointError, np.linalg.LinAlgError):
        return np.inf, None
    f = -float(f)
    g = -np.asarray(g, dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return np.inf, None
    return f, g


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic matching values and slopes at ``a`` and ``b``."""
    with np.errstate(all="ignore"):
        d1 = da + db - 3.0 * (fa - fb) / (a - b)
        disc = d1 * d1 - da * db
        if not disc >= 0:
            return None
        d2 = np.copysign(np.sqrt(disc), b - a)
        denom = db - da + 2.0 * d2
        if denom == 0:
            return None
        t = b - (b - a) * (db + d2 - d1) / denom
    return t if np.isfinite(t) else None


class _LineSearch(NamedTuple):
    step: float
    f: float
    g: np.ndarray | None
    evals: int
    ok: bool
    escaped: bool


def _strong_wolfe(fun, x, f0, g0, p, step, c1, c2, budget, div_norm, refine=1e-3):
    """Strong-Wolfe line search for minimization along ``p``.

    Bracketing doubles the step; zoom uses safeguarded cubic interpolation
    and falls back to bisection next to non-finite trial points.  When the
    budget runs out the best point with sufficient decrease is returned
    with ``ok=False``.

    Once value differences drop into roundoff, sufficient decrease is judged
    from the directional derivative instead (the approximate Wolfe test of
    Hager and Zhang), so the search still works close to the optimum.

    A first trial accepted with slope ratio ``|d_a / d_0| > refine`` gets one
    extra secant step on the slope.  On quadratics this is an exact line
    search, which restores the finite termination of full-memory BFGS.
    """
    d0 = float(g0 @ p)
    evals = 0
    best = None
    fuzz = ROUNDOFF * (1.0 + abs(f0))

    def armijo(a, fa, da=None):
        if fa <= f0 + c1 * a * d0:
            return True
        return fa <= f0 + fuzz and da is not None and da <= (2.0 * c1 - 1.0) * d0

    def record(a, fa, ga):
        nonlocal best
        if np.isfinite(fa) and fa <= f0 + c1 * a * d0 and (best is None or fa < best[1]):
            best = (a, fa, ga)

    def give_up():
        if best is not None and best[1] < f0:
            return _LineSearch(best[0], best[1], best[2], evals, False, False)
        return _LineSearch(0.0, f0, g0, evals, False, False)

    def zoom(lo, flo, dlo, hi, fhi, dhi):
        nonlocal evals
        while evals < budget:
            a = None
            if np.isfinite(fhi) and dhi is not None:
                a = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
            width = hi - lo
            if a is None or not (min(lo, hi) + 0.1 * abs(width) <= a <= max(lo, hi) - 0.1 * abs(width)):
                a = lo + 0.5 * width
            if a == lo or a == hi:
                break
            fa, ga = _safe_eval(fun, x + a * p)
            evals += 1
            record(a, fa, ga)
            da = float(ga @ p) if ga is not None else None
            if not armijo(a, fa, da) or fa > flo + fuzz:
                hi, fhi, dhi = a, fa, da
                continue
            if abs(da) <= -c2 * d0:
                return _LineSearch(a, fa, ga, evals, True, False)
            if da * (hi - lo) >= 0:
                hi, fhi, dhi = lo, flo, dlo
            lo, flo, dlo = a, fa, da
        return give_up()

    def polish(ls):
        # one secant step on the slope; exact along the line for quadratics
        if not (ls.ok and refine > 0 and abs(float(ls.g @ p)) > -refine * d0 and evals < budget):
            return ls
        da = float(ls.g @ p)
        a = ls.step * d0 / (d0 - da)
        if not (np.isfinite(a) and a > 0):
            return ls
        fa, ga = _safe_eval(fun, x + a * p)
        if ga is None or not fa <= ls.f or not armijo(a, fa, float(ga @ p)):
            return ls._replace(evals=ls.evals + 1)
        if abs(float(ga @ p)) > -c2 * d0:
            return ls._replace(evals=ls.evals + 1)
        return _LineSearch(a, fa, ga, ls.evals + 1, True, False)

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = step
    while evals < budget:
        fa, ga = _safe_eval(fun, x + a * p)
        evals += 1
        record(a, fa, ga)
        da = float(ga @ p) if ga is not None else None
        if not armijo(a, fa, da) or (a_prev > 0 and fa > f_prev + fuzz):
            return zoom(a_prev, f_prev, d_prev, a, fa, da)
        if abs(da) <= -c2 * d0:
            return polish(_LineSearch(a, fa, ga, evals, True, False))
        if da >= 0:
            return zoom(a, fa, da, a_prev, f_prev, d_prev)
        if np.max(np.abs(x + a * p)) > div_norm:
            return _LineSearch(a, fa, ga, evals, True, True)
        a_prev, f_prev, d_prev = a, fa, da
        a = 2.0 * a
    return give_up()


def lbfgs_maximize(fun: Objective, x0, cfg: SolverConfig = SolverConfig(),
                   callback: Callable[[int, np.ndarray, float, np.ndarray], None] | None = None
                   ) -> OptimizeResult:
    """Maximize ``fun`` with limited-memory BFGS.

    ``fun(x)`` returns the objective value and its gradient.  Stops when the
    gradient 2-norm drops to ``cfg.tol`` (``CONVERGED``), after
    ``cfg.max_iters`` iterations, when ``|x|_inf`` exceeds
    ``cfg.divergence_norm`` with a gradient still above tolerance
    (``DIVERGED``), or when the line search cannot make progress.
    """
    t_start = time.perf_counter()
    x = np.array(x0, dtype=float).ravel()
    f, g = _safe_eval(fun, x)
    trace: list[TraceRecord] = []
    if g is None:
        return OptimizeResult(x, -np.inf, np.full_like(x, np.nan), Status.NUMERICAL_FAILURE, trace,
                              "objective is not finite at the starting point")

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    it = 0

    def push(k):
        gn = float(np.linalg.norm(g))
        trace.append(TraceRecord(k, -f, gn, time.perf_counter() - t_start))
        if callback is not None:
            callback(k, x, -f, -g)
        return gn

    gnorm = push(0)
    while True:
        if gnorm <= cfg.tol:
            return OptimizeResult(x, -f, -g, Status.CONVERGED, trace, "gradient norm below tolerance")
        if np.max(np.abs(x)) > cfg.divergence_norm:
            return OptimizeResult(x, -f, -g, Status.DIVERGED, trace,
                                  f"|x|_inf exceeded {cfg.divergence_norm:g}")
        if it >= cfg.max_iters:
            return OptimizeResult(x, -f, -g, Status.MAX_ITERS, trace, "iteration limit reached")

        if s_hist:
            p = _kernels.two_loop(np.array(s_hist), np.array(y_hist), g)
            step = 1.0
        else:
            p = -g
            step = min(1.0, 1.0 / np.max(np.abs(g)))
        if not g @ p < 0:
            # lost descent through roundoff: restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            p = -g
            step = min(1.0, 1.0 / np.max(np.abs(g)))

        ls = _strong_wolfe(fun, x, f, g, p, step, cfg.wolfe_c1, cfg.wolfe_c2,
                           cfg.max_linesearch, cfg.divergence_norm, cfg.secant_refine)
        if ls.step == 0.0:
            if s_hist:
                # retry once from steepest descent before giving up
                s_hist.clear()
                y_hist.clear()
                continue
            return OptimizeResult(x, -f, -g, Status.NUMERICAL_FAILURE, trace,
                                  f"line search failed after {ls.evals} evaluations")

        x_new = x + ls.step * p
        s = x_new - x
        y = ls.g - g
        x, f, g = x_new, ls.f, ls.g
        it += 1
        if s @ y > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y) and s @ y > 0:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > cfg.memory:
                del s_hist[0], y_hist[0]
        gnorm = push(it)


@dataclass
class SolveReport:
    alpha_star: np.ndarray
    pi_star: np.ndarray | None
    status: Status
    trace: list[TraceRecord]
    final_grad_norm: float
    dual_value: float
    primal_value: float | None = None
    duality_gap: float | None = None
    residuals: np.ndarray | None = None
    message: str = ""
    regularizer: str = ""
    epsilon: float = float("nan")
    config: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def n_iters(self) -> int:
        return self.trace[-1].iter if self.trace else 0


def solve(inst: ProblemInstance, reg: Regularizer | str, cfg: SolverConfig = SolverConfig(),
          callback=None) -> SolveReport:
    """Maximize the dual of ``inst`` and recover the primal optimizer."""
    reg = get_regularizer(reg)
    inst.check()
    x0 = np.zeros(inst.n_constraints) if cfg.alpha0 is None else np.asarray(cfg.alpha0, float)
    if x0.shape != (inst.n_constraints,):
        raise InvalidInputError(f"alpha0 must have length {inst.n_constraints}")

    def objective(alpha):
        ev = dual_evaluate(inst, reg, alpha)
        return ev.value, ev.gradient

    res = lbfgs_maximize(objective, x0, cfg, callback)
    report = SolveReport(
        alpha_star=res.x, pi_star=None, status=res.status, trace=res.trace,
        final_grad_norm=res.grad_norm, dual_value=res.value, message=res.message,
        regularizer=reg.name, epsilon=inst.epsilon, config=cfg.as_dict(),
    )
    if res.status is Status.NUMERICAL_FAILURE and not res.trace:
        return report
    try:
        ev = dual_evaluate(inst, reg, res.x)
    except ScaleOverflowError:
        return report
    report.pi_star = ev.primal
    report.residuals = -ev.gradient
    try:
        report.primal_value = primal_value(inst, reg, ev.primal)
        report.duality_gap = report.primal_value - ev.value
    except QSDPError as exc:  # pragma: no cover - psi' >= 0 keeps pi PSD
        log.warning("primal evaluation failed: %s", exc)
    return report


class SweepRung(NamedTuple):
    epsilon: float
    report: SolveReport
    dual_value: float
    slackness: float
    margin: float


def eps_sweep(inst: ProblemInstance, reg: Regularizer | str, eps_ladder: Sequence[float],
              cfg: SolverConfig = SolverConfig()) -> list[SweepRung]:
    """Solve along a strictly descending ``eps_ladder`` with warm starts.

    Each rung starts from the last rung that produced a usable iterate
    (converged or ran out of iterations).
    """
    ladder = [float(e) for e in eps_ladder]
    if not ladder or any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise InvalidInputError("eps ladder must be positive and strictly descending")
    reg = get_regularizer(reg)
    alpha = None if cfg.alpha0 is None else np.asarray(cfg.alpha0, float)
    out = []
    for eps in ladder:
        rung_cfg = SolverConfig(**{**cfg.__dict__, "alpha0": alpha})
        rep = solve(inst.with_epsilon(eps), reg, rung_cfg)
        if rep.pi_star is not None:
            slack = slackness_residual(rep.pi_star, rep.alpha_star, inst)
        else:
            slack = float("nan")
        margin = zero_temp_dual_feasible(inst, rep.alpha_star).margin
        out.append(SweepRung(eps, rep, rep.dual_value, slack, margin))
        if rep.status in (Status.CONVERGED, Status.MAX_ITERS):
            alpha = rep.alpha_star
        else:
            log.warning("rung eps=%g ended with %s; next rung reuses the previous start",
                        eps, rep.status.value)
    return out


def trace_distance(a, b) -> float:
    """Half the nuclear norm of ``a - b``."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(herm.hermitize(np.asarray(a) - b)))))
