"""Convexly regularized semidefinite programs solved through their smooth dual."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DomainError,
    InvalidInputError,
    NotPSDError,
    QSDPError,
    ScaleOverflowError,
    TruncationError,
)
from .problem import (  # noqa: E402
    ProblemInstance,
    constraint_residuals,
    dual_gradient,
    dual_value,
    feasibility_certificate,
    primal_value,
    recover_primal,
    slackness_residual,
    trace_bound,
    zero_temp_dual_feasible,
)
from .regularizers import QUADRATIC, VON_NEUMANN, VON_NEUMANN_SHIFTED, get_regularizer  # noqa: E402
from .solver import SolveReport, SolverConfig, Status, eps_sweep, lbfgs_maximize, solve  # noqa: E402

__all__ = [
    "DomainError",
    "InvalidInputError",
    "NotPSDError",
    "ProblemInstance",
    "QSDPError",
    "QUADRATIC",
    "ScaleOverflowError",
    "SolveReport",
    "SolverConfig",
    "Status",
    "TruncationError",
    "VON_NEUMANN",
    "VON_NEUMANN_SHIFTED",
    "constraint_residuals",
    "dual_gradient",
    "dual_value",
    "eps_sweep",
    "feasibility_certificate",
    "get_regularizer",
    "lbfgs_maximize",
    "primal_value",
    "recover_primal",
    "slackness_residual",
    "solve",
    "trace_bound",
    "zero_temp_dual_feasible",
]
