"""Locally D-optimal designs for binary dose-response regression."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DesignError,
    DomainError,
    InfeasibleError,
    InversionError,
    MultipleRootsWarning,
    NoRootError,
    NumericalRangeError,
    PoleError,
    SeparationError,
    SingularDesignError,
    SingularWError,
    ValidationError,
)
from .fit import Dataset, FitResult, fit_mle, predict
from .links import Cloglog, Exponential, Laplace, Link, Logit, Probit, StudentT, parse_link
from .model import (
    Design,
    DesignSpace,
    Linear,
    LinearWithOffset,
    Power,
    ThreeParamModel,
    TwoParamModel,
    d_criterion,
    d_efficiency,
    det_3p_tilted,
    ds_criterion,
    info_matrix,
    info_matrix_3p,
    information,
)
from .pso import PsoConfig, PsoResult, collapse, optimize, optimize_3p, optimize_design, optimize_weights
from .verify import Verdict, check_global, sensitivity, sensitivity_3p, sensitivity_curve
from .wc import WcSolution, design_from_eta, h_function, solve, solve_asymmetric, solve_boundary, solve_symmetric

__all__ = [
    "__version__",
    "DataFormatError",
    "DesignError",
    "DomainError",
    "InfeasibleError",
    "InversionError",
    "MultipleRootsWarning",
    "NoRootError",
    "NumericalRangeError",
    "PoleError",
    "SeparationError",
    "SingularDesignError",
    "SingularWError",
    "ValidationError",
    "Dataset",
    "FitResult",
    "fit_mle",
    "predict",
    "Cloglog",
    "Exponential",
    "Laplace",
    "Link",
    "Logit",
    "Probit",
    "StudentT",
    "parse_link",
    "Design",
    "DesignSpace",
    "Linear",
    "LinearWithOffset",
    "Power",
    "ThreeParamModel",
    "TwoParamModel",
    "d_criterion",
    "d_efficiency",
    "det_3p_tilted",
    "ds_criterion",
    "info_matrix",
    "info_matrix_3p",
    "information",
    "PsoConfig",
    "PsoResult",
    "collapse",
    "optimize",
    "optimize_3p",
    "optimize_design",
    "optimize_weights",
    "Verdict",
    "check_global",
    "sensitivity",
    "sensitivity_3p",
    "sensitivity_curve",
    "WcSolution",
    "design_from_eta",
    "h_function",
    "solve",
    "solve_asymmetric",
    "solve_boundary",
    "solve_symmetric",
]
