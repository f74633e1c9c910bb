"""Robust structured regression under the L2E (integrated squared error) criterion.

Coefficients are updated by a sharp-majorization MM step (weighted least
squares plus an optional penalty), the log-precision by an approximate
Newton step with Armijo backtracking.  A proximal-gradient block descent
baseline and a replicate experiment harness are included.
"""

from .data import Dataset, FitState, NumericalOverflowError, UnsupportedConfigurationError, mad
from .loss import (
    ETA_CAP,
    WEIGHT_FLOOR,
    case_weights,
    grad_beta,
    grad_eta,
    hess_eta_approx,
    l2e_loss,
    residuals,
)
from .projections import (
    ConstraintSet,
    FusionMatrix,
    difference_matrix,
    identity_fusion,
    project_isotonic,
    project_nonneg,
    project_set,
    project_sparse,
    set_distance,
)
from .penalties import Penalty, penalty_value
from .majorize import (
    WeightedSystem,
    build_weighted_system,
    mm_beta_update,
    solve_wls,
    solve_wls_distance,
    solve_wls_indicator,
    solve_wls_lasso,
    solve_wls_mcp,
)
from .newton import NewtonOptions, eta_update
from .blockdescent import FitOptions, FitReport, fit_l2e, init_default
from .pg import PgOptions, fit_pg

__all__ = [
    "Dataset",
    "FitState",
    "NumericalOverflowError",
    "UnsupportedConfigurationError",
    "mad",
    "ETA_CAP",
    "WEIGHT_FLOOR",
    "residuals",
    "case_weights",
    "l2e_loss",
    "grad_beta",
    "grad_eta",
    "hess_eta_approx",
    "ConstraintSet",
    "FusionMatrix",
    "difference_matrix",
    "identity_fusion",
    "project_isotonic",
    "project_sparse",
    "project_nonneg",
    "project_set",
    "set_distance",
    "Penalty",
    "penalty_value",
    "WeightedSystem",
    "build_weighted_system",
    "solve_wls",
    "solve_wls_lasso",
    "solve_wls_mcp",
    "solve_wls_indicator",
    "solve_wls_distance",
    "mm_beta_update",
    "NewtonOptions",
    "eta_update",
    "FitOptions",
    "FitReport",
    "init_default",
    "fit_l2e",
    "PgOptions",
    "fit_pg",
]
