"""Proximal gradient block descent baseline with a box constraint on tau.

This is the comparison algorithm: beta moves by backtracked proximal
gradient steps, tau by backtracked projected gradient steps clamped to
[tau_min, tau_max].  Only the penalties used in the benchmark comparisons
are supported: none, lasso, and the isotonic indicator on identity designs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .blockdescent import FitReport, init_default
from .data import Dataset, UnsupportedConfigurationError
from .loss import case_weights, loss_from_residuals, residuals
from .penalties import Penalty, penalty_value
from .projections import project_isotonic

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_INV_2SQRTPI = 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class PgOptions:
    tau_min: float | None = None  # default 1e-3 * tau0
    tau_max: float | None = None  # default 1e3 * tau0
    max_outer: int = 100
    n_beta_inner: int = 100
    n_tau_inner: int = 100
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 60
    inner_tol: float = 1e-8
    outer_tol: float = 1e-8
    grad_tol: float = 1e-10
    init_beta: np.ndarray | None = None
    init_tau: float | None = None

    def __post_init__(self):
        if self.tau_min is not None and self.tau_max is not None:
            if not 0 < self.tau_min <= self.tau_max:
                raise ValueError("need 0 < tau_min <= tau_max")


def _loss_tau(r: np.ndarray, tau: float) -> float:
    n = r.shape[0]
    s = float(np.sum(np.exp(-0.5 * tau * tau * r * r)))
    return tau * _INV_2SQRTPI - (tau / n) * _SQRT_2_OVER_PI * s


def _grad_tau(r: np.ndarray, tau: float) -> float:
    n = r.shape[0]
    w = np.exp(-0.5 * tau * tau * r * r)
    return _INV_2SQRTPI - (1.0 / n) * _SQRT_2_OVER_PI * float(np.sum(w * (1.0 - tau * tau * r * r)))


def _grad_beta_tau(data: Dataset, r: np.ndarray, tau: float) -> np.ndarray:
    w = np.exp(-0.5 * tau * tau * r * r)
    wr = w * r
    return -(tau**3 / data.n) * _SQRT_2_OVER_PI * (wr if data.has_identity_design() else data.X.T @ wr)


def _make_prox(data: Dataset, pen: Penalty):
    if pen.kind == "none":
        return lambda v, s: v
    if pen.kind == "lasso":
        lam = pen.lam
        return lambda v, s: np.sign(v) * np.maximum(np.abs(v) - s * lam, 0.0)
    if pen.kind == "indicator" and pen.cset is not None and pen.cset.kind == "isotonic":
        if not data.has_identity_design():
            raise UnsupportedConfigurationError("isotonic indicator needs an identity design")
        return lambda v, s: project_isotonic(v)
    raise ValueError(f"penalty kind {pen.kind!r} is not supported by the PG baseline")


def fit_pg(data: Dataset, pen: Penalty, opts: PgOptions | None = None) -> FitReport:
    """Proximal gradient block descent; same report shape as fit_l2e."""
    if opts is None:
        opts = PgOptions()
    prox = _make_prox(data, pen)
    t0 = time.perf_counter()

    beta0, eta0, mad_fallback = init_default(data)
    beta = np.asarray(opts.init_beta, dtype=float).copy() if opts.init_beta is not None else beta0
    tau = float(opts.init_tau) if opts.init_tau is not None else math.exp(eta0)
    tau_min = opts.tau_min if opts.tau_min is not None else 1e-3 * tau
    tau_max = opts.tau_max if opts.tau_max is not None else 1e3 * tau
    tau = float(np.clip(tau, tau_min, tau_max))

    def objective(b, t):
        return _loss_tau(residuals(data, b), t) + penalty_value(pen, b)

    obj = objective(beta, tau)
    trace = [obj] if np.isfinite(obj) else []  # infeasible starts stay off the trace
    inner_beta: list[int] = []
    inner_tau: list[int] = []
    converged = False
    step_b = 1.0
    step_t = 1.0

    for _ in range(opts.max_outer):
        # ---- beta block: proximal gradient with backtracked step ----
        nb = 0
        step_b = 1.0  # fresh line search per block; non-increasing within it
        f = _loss_tau(residuals(data, beta), tau)
        fpen = f + penalty_value(pen, beta)
        for _ in range(opts.n_beta_inner):
            r = residuals(data, beta)
            g = _grad_beta_tau(data, r, tau)
            s = step_b
            accepted = False
            for _ in range(opts.max_backtracks + 1):
                cand = prox(beta - s * g, s)
                delta = cand - beta
                sq = float(delta @ delta)
                if sq == 0.0:
                    break
                f_cand = _loss_tau(residuals(data, cand), tau)
                if f_cand <= f + float(g @ delta) + sq / (2.0 * s):
                    accepted = True
                    break
                s *= opts.shrink
            if not accepted:
                break
            beta, f = cand, f_cand
            step_b = s  # step size never regrows, as with a Lipschitz-constant step
            nb += 1
            fpen_new = f + penalty_value(pen, beta)
            if np.isfinite(fpen) and abs(fpen - fpen_new) <= opts.inner_tol * (1.0 + abs(fpen)):
                fpen = fpen_new
                break
            fpen = fpen_new
        inner_beta.append(nb)

        # ---- tau block: projected gradient with Armijo backtracking ----
        r = residuals(data, beta)
        h = _loss_tau(r, tau)
        nt = 0
        for _ in range(opts.n_tau_inner):
            g = _grad_tau(r, tau)
            if abs(g) < opts.grad_tol:
                break
            s = step_t
            accepted = False
            for _ in range(opts.max_backtracks + 1):
                cand = float(np.clip(tau - s * g, tau_min, tau_max))
                delta = cand - tau
                if delta == 0.0:
                    break
                h_cand = _loss_tau(r, cand)
                # quadratic upper-bound condition, as a backtracked Lipschitz step
                if h_cand <= h + g * delta + delta * delta / (2.0 * s):
                    accepted = True
                    break
                s *= opts.shrink
            if not accepted:
                break
            step_t = s
            if abs(cand - tau) <= 1e-14 * (1.0 + tau):
                tau, h = cand, h_cand
                nt += 1
                break
            tau, h = cand, h_cand
            nt += 1
        inner_tau.append(nt)

        new_obj = objective(beta, tau)
        trace.append(new_obj)
        if np.isfinite(obj) and abs(obj - new_obj) <= opts.outer_tol * (1.0 + abs(obj)):
            converged = True
            obj = new_obj
            break
        obj = new_obj

    eta = math.log(tau)
    weights = case_weights(residuals(data, beta), eta)
    return FitReport(
        beta=beta,
        eta=eta,
        weights=weights,
        loss_trace=np.asarray(trace),
        outer_iters=len(inner_beta),
        inner_beta_iters=inner_beta,
        inner_eta_iters=inner_tau,
        converged=converged,
        precision_diverged=bool(tau >= tau_max),
        wall_time=time.perf_counter() - t0,
        final_loss=loss_from_residuals(residuals(data, beta), eta),
        mad_fallback=mad_fallback,
    )
