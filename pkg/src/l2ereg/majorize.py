"""Sharp-majorization MM update of beta: weighted least squares surrogates.

At fixed eta the loss is majorized, up to constants, by
c * 0.5 ||y_tilde - X_tilde beta||^2 with c = (tau^3/n) sqrt(2/pi) and
rows scaled by sqrt(w_i).  Each inner iteration rebuilds the weights and
solves the penalized weighted least squares problem; penalty parameters
are rescaled by 1/c inside mm_beta_update so descent holds for the
loss-plus-penalty objective itself.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.optimize import nnls
from scipy.sparse.linalg import LinearOperator, cg

from .data import Dataset, UnsupportedConfigurationError
from .loss import case_weights, loss_from_residuals, residuals, surrogate_scale
from .penalties import Penalty, penalty_value
from .projections import ConstraintSet, project_isotonic, project_set

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional; pure python works
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# above this column count the dense factorization gives way to conjugate
# gradient on the normal equations
_DENSE_P_LIMIT = 500

# the coordinate solvers warm start from the previous MM iterate, and any
# descent on the surrogate preserves the MM guarantee, so a modest sweep cap
# only trades inner precision for speed on ill-conditioned designs
_CD_MAX_SWEEPS = 500
_CD_TOL = 1e-8


@dataclass(frozen=True)
class WeightedSystem:
    """y_tilde = sqrt(W) y and X_tilde = sqrt(W) X for diagonal weights W."""

    y_tilde: np.ndarray
    x_tilde: np.ndarray


def build_weighted_system(data: Dataset, weights) -> WeightedSystem:
    w = np.asarray(weights, dtype=float)
    if w.shape != (data.n,):
        raise ValueError(f"weights have shape {w.shape}, expected ({data.n},)")
    if np.any(w <= 0) or np.any(w > 1):
        raise ValueError("weights must lie in (0, 1]")
    sw = np.sqrt(w)
    return WeightedSystem(y_tilde=sw * data.y, x_tilde=sw[:, None] * data.X)


def _lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] <= _DENSE_P_LIMIT:
        return np.linalg.lstsq(a, b, rcond=None)[0]
    op = LinearOperator(
        (a.shape[1], a.shape[1]), matvec=lambda v: a.T @ (a @ v), dtype=float
    )
    sol, _ = cg(op, a.T @ b, rtol=1e-10, atol=0.0)
    return sol


def solve_wls(system: WeightedSystem) -> np.ndarray:
    """Minimize 0.5 ||y_tilde - X_tilde beta||^2 (minimum-norm on rank deficiency)."""
    return _lstsq(system.x_tilde, system.y_tilde)


@njit(cache=True)
def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _cd_lasso(gram, lin, diag, beta, lam, tol, max_sweeps):
    p = beta.shape[0]
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                new = 0.0
            else:
                z = lin[j] - gram[j] @ beta + diag[j] * beta[j]
                new = _soft(z, lam) / diag[j]
            delta = max(delta, abs(new - beta[j]))
            beta[j] = new
        if delta < tol:
            break
    return beta


def solve_wls_lasso(system: WeightedSystem, lam: float, beta0=None) -> np.ndarray:
    """Cyclic coordinate descent on 0.5||y_tilde - X_tilde beta||^2 + lam ||beta||_1."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    xt = system.x_tilde
    gram = xt.T @ xt
    lin = xt.T @ system.y_tilde
    diag = np.diag(gram).copy()
    p = xt.shape[1]
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    return _cd_lasso(gram, lin, diag, beta, lam, _CD_TOL, _CD_MAX_SWEEPS)


@njit(cache=True)
def _mcp_coord(u: float, v: float, lam: float, gamma: float) -> float:
    """argmin over b of 0.5 v (b - u)^2 + MCP(|b|; lam, gamma), any gamma > 0."""
    if lam == 0.0:
        return u
    s = 1.0 if u >= 0 else -1.0
    u = abs(u)
    glam = gamma * lam

    best_b, best_q = 0.0, 0.5 * v * u * u  # b = 0, penalty 0
    denom = v - 1.0 / gamma
    if denom > 0.0:
        inner = min(max((v * u - lam) / denom, 0.0), glam)
    else:
        inner = glam  # concave inner region: check the endpoint
    flat = u if u > glam else inner  # flat-penalty region: unshrunk
    for b in (flat, inner):
        if b <= glam:
            pen = lam * b - b * b / (2.0 * gamma)
        else:
            pen = 0.5 * gamma * lam * lam
        q = 0.5 * v * (b - u) ** 2 + pen
        if q < best_q:
            best_b, best_q = b, q
    return s * best_b


@njit(cache=True)
def _cd_mcp(gram, lin, diag, beta, lam, gamma, tol, max_sweeps):
    p = beta.shape[0]
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                new = 0.0
            else:
                z = lin[j] - gram[j] @ beta + diag[j] * beta[j]
                new = _mcp_coord(z / diag[j], diag[j], lam, gamma)
            delta = max(delta, abs(new - beta[j]))
            beta[j] = new
        if delta < tol:
            break
    return beta


def solve_wls_mcp(system: WeightedSystem, lam: float, gamma: float, beta0=None) -> np.ndarray:
    """Coordinate descent for weighted least squares plus the MCP penalty.

    Accepts any gamma > 0 so internally rescaled penalties remain solvable;
    user-facing penalties require gamma > 1.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    xt = system.x_tilde
    gram = xt.T @ xt
    lin = xt.T @ system.y_tilde
    diag = np.diag(gram).copy()
    p = xt.shape[1]
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    return _cd_mcp(gram, lin, diag, beta, lam, gamma, _CD_TOL, _CD_MAX_SWEEPS)


def _diagonal_parts(system: WeightedSystem):
    """For an n = p system with diagonal X_tilde, recover (values, weights)."""
    xt = system.x_tilde
    n, p = xt.shape
    if n != p:
        return None
    d = np.diag(xt).copy()
    if np.any(d <= 0) or np.count_nonzero(xt - np.diag(d)):
        return None
    return system.y_tilde / d, d * d


def solve_wls_indicator(system: WeightedSystem, cset: ConstraintSet) -> np.ndarray:
    """Exact constrained minimizer of the weighted least squares surrogate."""
    if cset.kind == "whole_space":
        return solve_wls(system)
    if cset.kind == "nonnegative":
        parts = _diagonal_parts(system)
        if parts is not None:
            return np.maximum(parts[0], 0.0)
        return nnls(system.x_tilde, system.y_tilde)[0]
    parts = _diagonal_parts(system)
    if parts is None:
        raise UnsupportedConfigurationError(
            f"{cset.kind} indicator solve requires an identity (diagonal) design"
        )
    v, w = parts
    if cset.kind == "isotonic":
        return project_isotonic(v, w)
    # sparse: keep the k entries whose removal costs the most, w_j v_j^2
    k = cset.k
    out = np.zeros_like(v)
    if k >= v.shape[0]:
        return v.copy()
    keep = np.argsort(-(w * v * v), kind="stable")[:k]
    out[keep] = v[keep]
    return out


def solve_wls_distance(system: WeightedSystem, pen: Penalty, beta_prev) -> np.ndarray:
    """Stacked least squares for the distance-penalty surrogate.

    Solves min 0.5||y_tilde - X_tilde b||^2 + rho/2 ||D b - P_C(D beta_prev)||^2,
    i.e. (X'X + rho D'D) b = X' y_tilde + rho D' P_C(D beta_prev).
    """
    if pen.kind != "distance":
        raise ValueError("penalty must be a distance penalty")
    beta_prev = np.asarray(beta_prev, dtype=float)
    p = system.x_tilde.shape[1]
    fusion = pen.fusion_for(p)
    if fusion.cols != p:
        raise ValueError("fusion matrix columns must match the design")
    target = project_set(fusion.matrix @ beta_prev, pen.cset)
    sr = np.sqrt(pen.rho)
    if p <= _DENSE_P_LIMIT:
        xt = system.x_tilde
        dmat = fusion.matrix
        a = xt.T @ xt + pen.rho * (dmat.T @ dmat).toarray()
        rhs = xt.T @ system.y_tilde + pen.rho * (dmat.T @ target)
        try:
            return scipy.linalg.solve(a, rhs, assume_a="pos")
        except np.linalg.LinAlgError:
            pass  # rank-deficient normal equations: fall back to stacked lstsq
        a = np.vstack([xt, sr * fusion.dense()])
        b = np.concatenate([system.y_tilde, sr * target])
        return np.linalg.lstsq(a, b, rcond=None)[0]
    xt = system.x_tilde
    dmat = fusion.matrix
    op = LinearOperator(
        (p, p),
        matvec=lambda v: xt.T @ (xt @ v) + pen.rho * (dmat.T @ (dmat @ v)),
        dtype=float,
    )
    rhs = xt.T @ system.y_tilde + pen.rho * (dmat.T @ target)
    sol, _ = cg(op, rhs, rtol=1e-10, atol=0.0)
    return sol


def _solve_penalized(system: WeightedSystem, pen: Penalty, scale: float, beta_prev: np.ndarray):
    """One surrogate solve with penalty parameters moved to the surrogate scale."""
    if pen.kind == "none":
        return solve_wls(system)
    if pen.kind == "lasso":
        return solve_wls_lasso(system, pen.lam / scale, beta0=beta_prev)
    if pen.kind == "mcp":
        return solve_wls_mcp(system, pen.lam / scale, pen.gamma * scale, beta0=beta_prev)
    if pen.kind == "indicator":
        return solve_wls_indicator(system, pen.cset)
    return solve_wls_distance(system, replace(pen, rho=pen.rho / scale), beta_prev)


def mm_beta_update(
    data: Dataset,
    beta,
    eta: float,
    pen: Penalty,
    max_inner: int = 100,
    tol: float = 1e-8,
):
    """Inner MM loop for beta at fixed eta.

    Returns (beta, inner_iterations).  The loss-plus-penalty objective is
    non-increasing across iterations.
    """
    if max_inner < 1:
        raise ValueError("max_inner must be at least 1")
    beta = np.asarray(beta, dtype=float).copy()
    scale = surrogate_scale(eta, data.n)
    obj = loss_from_residuals(residuals(data, beta), eta) + penalty_value(pen, beta)
    iters = 0
    for _ in range(max_inner):
        w = case_weights(residuals(data, beta), eta)
        system = build_weighted_system(data, w)
        beta = _solve_penalized(system, pen, scale, beta)
        iters += 1
        new_obj = loss_from_residuals(residuals(data, beta), eta) + penalty_value(pen, beta)
        if np.isfinite(obj) and abs(obj - new_obj) <= tol * (1.0 + abs(obj)):
            obj = new_obj
            break
        obj = new_obj
    return beta, iters
