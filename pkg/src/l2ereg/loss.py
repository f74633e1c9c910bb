"""The L2E loss for Gaussian linear regression and its block derivatives.

With tau = e^eta and residuals r_i = y_i - x_i' beta, the loss is

    h(beta, eta) = tau/(2 sqrt(pi)) - (tau/n) sqrt(2/pi) sum_i exp(-tau^2 r_i^2 / 2).

All reductions use numpy's pairwise summation so losses compare stably
across solvers.
"""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset, NumericalOverflowError

# |eta| is clamped so e^{5 eta} in the second-derivative terms cannot
# overflow; e^50 already exceeds any meaningful precision.
ETA_CAP = 50.0

# Weights are clamped below so logs and divisions stay finite.
WEIGHT_FLOOR = 1e-300

_INV_2SQRTPI = 1.0 / (2.0 * math.sqrt(math.pi))
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def residuals(data: Dataset, beta) -> np.ndarray:
    """r_i = y_i - x_i' beta."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    if data.has_identity_design():
        return data.y - beta
    return data.y - data.X @ beta


def case_weights(r, eta: float) -> np.ndarray:
    """w_i = exp(-e^{2 eta} r_i^2 / 2), floored at WEIGHT_FLOOR."""
    if not np.isfinite(eta):
        raise ValueError("eta must be finite")
    r = np.asarray(r, dtype=float)
    w = np.exp(-0.5 * np.exp(2.0 * eta) * r * r)
    return np.maximum(w, WEIGHT_FLOOR)


def _raw_weights(r: np.ndarray, eta: float) -> np.ndarray:
    # unfloored; underflow to exactly 0 is harmless in the sums below
    return np.exp(-0.5 * np.exp(2.0 * eta) * r * r)


def loss_from_residuals(r: np.ndarray, eta: float) -> float:
    n = r.shape[0]
    tau = math.exp(eta)
    h = tau * _INV_2SQRTPI - (tau / n) * _SQRT_2_OVER_PI * float(np.sum(_raw_weights(r, eta)))
    if not math.isfinite(h):
        raise NumericalOverflowError(f"non-finite loss at eta={eta}")
    return h


def l2e_loss(data: Dataset, beta, eta: float) -> float:
    """Evaluate h(beta, eta)."""
    return loss_from_residuals(residuals(data, beta), eta)


def grad_beta(data: Dataset, beta, eta: float) -> np.ndarray:
    """Gradient of the loss in beta: -(tau^3/n) sqrt(2/pi) X' (w * r)."""
    r = residuals(data, beta)
    tau = math.exp(eta)
    w = _raw_weights(r, eta)
    wr = w * r
    g = -(tau**3 / data.n) * _SQRT_2_OVER_PI * (wr if data.has_identity_design() else data.X.T @ wr)
    if not np.all(np.isfinite(g)):
        raise NumericalOverflowError("non-finite gradient in beta")
    return g


def grad_eta_from_residuals(r: np.ndarray, eta: float) -> float:
    n = r.shape[0]
    e = math.exp(eta)
    w = _raw_weights(r, eta)
    g = (
        e * _INV_2SQRTPI
        - (e / n) * _SQRT_2_OVER_PI * float(np.sum(w))
        + (e**3 / n) * _SQRT_2_OVER_PI * float(np.sum(w * r * r))
    )
    if not math.isfinite(g):
        raise NumericalOverflowError(f"non-finite eta gradient at eta={eta}")
    return g


def grad_eta(data: Dataset, beta, eta: float) -> float:
    """First derivative of h(beta, e^eta) in eta."""
    return grad_eta_from_residuals(residuals(data, beta), eta)


def hess_eta_approx_from_residuals(r: np.ndarray, eta: float) -> float:
    n = r.shape[0]
    e = math.exp(eta)
    w = _raw_weights(r, eta)
    return e * _INV_2SQRTPI + (4.0 * e**3 / n) * _SQRT_2_OVER_PI * float(np.sum(w * r * r))


def hess_eta_approx(data: Dataset, beta, eta: float) -> float:
    """Positive curvature surrogate d >= d^2 h / d eta^2 (negative terms dropped)."""
    return hess_eta_approx_from_residuals(residuals(data, beta), eta)


def surrogate_scale(eta: float, n: int) -> float:
    """Factor c with  h(beta) <= const + c * 0.5 ||y_tilde - X_tilde beta||^2.

    Minimizing 0.5||y_tilde - X_tilde beta||^2 + phi(beta)/c is therefore an
    exact MM step for h + phi.
    """
    tau = math.exp(eta)
    return (tau**3 / n) * _SQRT_2_OVER_PI
