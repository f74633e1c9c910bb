"""Outer block descent: alternate the MM beta update and the Newton eta update."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, mad
from .loss import case_weights, l2e_loss, residuals
from .majorize import mm_beta_update
from .newton import NewtonOptions, eta_update
from .penalties import Penalty, penalty_value
from .projections import set_distance


@dataclass(frozen=True)
class FitOptions:
    max_outer: int = 100
    outer_tol: float = 1e-8
    n_beta_inner: int = 100
    beta_inner_tol: float = 1e-8
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    init_beta: np.ndarray | None = None
    init_eta: float | None = None

    def __post_init__(self):
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")


@dataclass
class FitReport:
    beta: np.ndarray
    eta: float
    weights: np.ndarray
    loss_trace: np.ndarray
    outer_iters: int
    inner_beta_iters: list[int]
    inner_eta_iters: list[int]
    converged: bool
    precision_diverged: bool
    wall_time: float
    final_loss: float = 0.0  # raw L2E loss at the final state
    constraint_gap: float = 0.0  # dist(D beta, C) for distance penalties
    mad_fallback: bool = False

    @property
    def tau(self) -> float:
        return float(np.exp(self.eta))


def init_default(data: Dataset):
    """Default initialization: beta0 = y for identity designs else 0;
    eta0 = -log(MAD(y)), falling back to 0 when MAD(y) = 0.

    Returns (beta0, eta0, mad_fallback).
    """
    if data.has_identity_design():
        beta0 = data.y.copy()
    else:
        beta0 = np.zeros(data.p)
    m = mad(data.y)
    if m == 0.0:
        return beta0, 0.0, True
    return beta0, -float(np.log(m)), False


def _fit_core(data: Dataset, pen: Penalty, beta, eta, opts: FitOptions):
    obj = l2e_loss(data, beta, eta) + penalty_value(pen, beta)
    # an infeasible start (e.g. beta0 = y under the isotonic indicator) has
    # infinite objective; keep it out of the recorded trace
    trace = [obj] if np.isfinite(obj) else []
    inner_beta: list[int] = []
    inner_eta: list[int] = []
    converged = False
    diverged = False
    for _ in range(opts.max_outer):
        beta, nb = mm_beta_update(
            data, beta, eta, pen, max_inner=opts.n_beta_inner, tol=opts.beta_inner_tol
        )
        inner_beta.append(nb)
        res = eta_update(data, beta, eta, opts.newton)
        eta = res.eta
        inner_eta.append(res.iterations)
        diverged = diverged or res.diverged
        new_obj = l2e_loss(data, beta, eta) + penalty_value(pen, beta)
        trace.append(new_obj)
        if np.isfinite(obj) and abs(obj - new_obj) <= opts.outer_tol * (1.0 + abs(obj)):
            converged = True
            obj = new_obj
            break
        obj = new_obj
    return beta, eta, trace, inner_beta, inner_eta, converged, diverged


def _rho_schedule(rho_final: float):
    """Geometric warm-up to the final penalty constant.

    Starting a huge rho from a cold beta stalls the proximal distance
    iteration (each step moves only O(1/rho)), so earlier stages use
    smaller rho and hand their solution to the next stage.
    """
    if rho_final <= 100.0:
        return [rho_final]
    rho = max(rho_final * 1e-6, 1.0)
    out = []
    while rho < rho_final:
        out.append(rho)
        rho *= 10.0
    out.append(rho_final)
    return out


def fit_l2e(data: Dataset, pen: Penalty, opts: FitOptions | None = None) -> FitReport:
    """Block descent for the penalized L2E objective; returns a FitReport."""
    if opts is None:
        opts = FitOptions()
    t0 = time.perf_counter()

    beta0, eta0, mad_fallback = init_default(data)
    beta = np.asarray(opts.init_beta, dtype=float).copy() if opts.init_beta is not None else beta0
    eta = float(opts.init_eta) if opts.init_eta is not None else eta0
    if beta.shape != (data.p,):
        raise ValueError(f"init_beta has shape {beta.shape}, expected ({data.p},)")

    if pen.kind == "distance":
        stages = _rho_schedule(pen.rho)
    else:
        stages = [None]

    inner_beta: list[int] = []
    inner_eta: list[int] = []
    outer_total = 0
    diverged = False
    for k, stage_rho in enumerate(stages):
        stage_pen = pen if stage_rho is None else replace(pen, rho=stage_rho)
        if k < len(stages) - 1:
            # warm-up stages only need to hand a rough solution to the next
            # rho; solving them to full precision wastes nearly all the time
            stage_opts = replace(
                opts,
                max_outer=min(opts.max_outer, 10),
                outer_tol=max(opts.outer_tol, 1e-4),
                n_beta_inner=min(opts.n_beta_inner, 20),
                beta_inner_tol=max(opts.beta_inner_tol, 1e-6),
            )
        else:
            stage_opts = opts
        beta, eta, trace, ib, ie, converged, dv = _fit_core(data, stage_pen, beta, eta, stage_opts)
        inner_beta.extend(ib)
        inner_eta.extend(ie)
        outer_total += len(ib)
        diverged = diverged or dv

    weights = case_weights(residuals(data, beta), eta)
    gap = 0.0
    if pen.kind == "distance":
        gap = set_distance(pen.fusion_for(data.p).matrix @ beta, pen.cset)
    return FitReport(
        beta=beta,
        eta=eta,
        weights=weights,
        loss_trace=np.asarray(trace),  # final stage trace; monotone by MM + Armijo
        outer_iters=outer_total,
        inner_beta_iters=inner_beta,
        inner_eta_iters=inner_eta,
        converged=converged,
        precision_diverged=diverged,
        wall_time=time.perf_counter() - t0,
        final_loss=l2e_loss(data, beta, eta),
        constraint_gap=gap,
        mad_fallback=mad_fallback,
    )
