"""Approximate Newton update of the log-precision eta with Armijo backtracking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .loss import (
    ETA_CAP,
    grad_eta_from_residuals,
    hess_eta_approx_from_residuals,
    loss_from_residuals,
    residuals,
)


@dataclass(frozen=True)
class NewtonOptions:
    max_inner: int = 100
    armijo_sigma: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 30
    grad_tol: float = 1e-10

    def __post_init__(self):
        if self.max_inner < 1:
            raise ValueError("max_inner must be at least 1")
        if not 0 < self.armijo_sigma < 1:
            raise ValueError("armijo_sigma must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass(frozen=True)
class EtaResult:
    eta: float
    iterations: int
    diverged: bool
    unit_steps: int


def eta_update(data: Dataset, beta, eta0: float, opts: NewtonOptions | None = None) -> EtaResult:
    """Run modified Newton iterations eta <- eta - t * g / d at fixed beta.

    d is the positive curvature surrogate, so the unit step rarely needs
    backtracking; each accepted step satisfies the Armijo decrease condition.
    Iterates are clamped to |eta| <= ETA_CAP; hitting the upper cap flags
    the known perfect-fit precision divergence.
    """
    if opts is None:
        opts = NewtonOptions()
    if not np.isfinite(eta0):
        raise ValueError("eta0 must be finite")
    r = residuals(data, beta)
    eta = float(np.clip(eta0, -ETA_CAP, ETA_CAP))
    h = loss_from_residuals(r, eta)
    iters = 0
    unit_steps = 0
    diverged = False

    for _ in range(opts.max_inner):
        g = grad_eta_from_residuals(r, eta)
        if abs(g) < opts.grad_tol:
            break
        d = hess_eta_approx_from_residuals(r, eta)
        step = -g / d
        t = 1.0
        accepted = False
        for bt in range(opts.max_backtracks + 1):
            cand = float(np.clip(eta + t * step, -ETA_CAP, ETA_CAP))
            delta = cand - eta
            if delta == 0.0:
                break
            h_cand = loss_from_residuals(r, cand)
            if h_cand <= h + opts.armijo_sigma * g * delta:
                accepted = True
                break
            t *= opts.shrink
        if not accepted:
            break
        if bt == 0:
            unit_steps += 1
        eta, h = cand, h_cand
        iters += 1
        if eta >= ETA_CAP:
            diverged = True
            break
    return EtaResult(eta=eta, iterations=iters, diverged=diverged, unit_steps=unit_steps)
