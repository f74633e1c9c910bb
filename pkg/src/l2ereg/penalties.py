"""Penalty descriptions: none, lasso, MCP, set indicator, distance-to-set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projections import ConstraintSet, FusionMatrix, identity_fusion, set_distance

_KINDS = ("none", "lasso", "mcp", "indicator", "distance")


@dataclass(frozen=True)
class Penalty:
    kind: str
    lam: float = 0.0
    gamma: float = 3.0
    rho: float = 0.0
    cset: ConstraintSet | None = None
    fusion: FusionMatrix | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind in ("lasso", "mcp") and self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.kind == "mcp" and self.gamma <= 1:
            raise ValueError("MCP gamma must exceed 1")
        if self.kind == "distance" and self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.kind in ("indicator", "distance") and self.cset is None:
            raise ValueError(f"{self.kind} penalty requires a constraint set")

    @classmethod
    def none(cls) -> "Penalty":
        return cls("none")

    @classmethod
    def lasso(cls, lam: float) -> "Penalty":
        return cls("lasso", lam=float(lam))

    @classmethod
    def mcp(cls, lam: float, gamma: float = 3.0) -> "Penalty":
        return cls("mcp", lam=float(lam), gamma=float(gamma))

    @classmethod
    def indicator(cls, cset: ConstraintSet) -> "Penalty":
        return cls("indicator", cset=cset)

    @classmethod
    def distance(cls, rho: float, cset: ConstraintSet, fusion: FusionMatrix | None = None) -> "Penalty":
        return cls("distance", rho=float(rho), cset=cset, fusion=fusion)

    def fusion_for(self, p: int) -> FusionMatrix:
        return self.fusion if self.fusion is not None else identity_fusion(p)


def mcp_value(beta, lam: float, gamma: float) -> float:
    """sum_j of the MCP function at |beta_j| (valid for any gamma > 0)."""
    t = np.abs(np.asarray(beta, dtype=float))
    inner = t <= gamma * lam
    vals = np.where(inner, lam * t - t * t / (2.0 * gamma), 0.5 * gamma * lam * lam)
    return float(np.sum(vals))


def _indicator_feasible(beta: np.ndarray, cset: ConstraintSet) -> bool:
    if cset.kind == "isotonic":
        return bool(np.all(np.diff(beta) >= 0))
    if cset.kind == "sparse":
        return int(np.count_nonzero(beta)) <= cset.k
    if cset.kind == "nonnegative":
        return bool(np.all(beta >= 0))
    return True


def penalty_value(pen: Penalty, beta) -> float:
    """phi(beta) on the same scale as the L2E loss."""
    beta = np.asarray(beta, dtype=float)
    if pen.kind == "none":
        return 0.0
    if pen.kind == "lasso":
        return pen.lam * float(np.sum(np.abs(beta)))
    if pen.kind == "mcp":
        return mcp_value(beta, pen.lam, pen.gamma)
    if pen.kind == "indicator":
        return 0.0 if _indicator_feasible(beta, pen.cset) else float("inf")
    # distance: rho/2 * dist(D beta, C)^2
    d = set_distance(pen.fusion_for(beta.shape[0]).matrix @ beta, pen.cset)
    return 0.5 * pen.rho * d * d
