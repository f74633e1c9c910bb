"""Euclidean projections onto constraint sets and banded fusion matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional speedup
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_KINDS = ("isotonic", "sparse", "nonnegative", "whole_space")


@dataclass(frozen=True)
class ConstraintSet:
    """A constraint set: isotonic cone, k-sparse set, nonnegative orthant, or R^p."""

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown constraint set kind {self.kind!r}")
        if self.kind == "sparse":
            if self.k is None or int(self.k) < 1:
                raise ValueError("sparse set requires a positive integer k")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValueError(f"{self.kind} set takes no k")

    @classmethod
    def isotonic(cls) -> "ConstraintSet":
        return cls("isotonic")

    @classmethod
    def sparse(cls, k: int) -> "ConstraintSet":
        return cls("sparse", k)

    @classmethod
    def nonnegative(cls) -> "ConstraintSet":
        return cls("nonnegative")

    @classmethod
    def whole_space(cls) -> "ConstraintSet":
        return cls("whole_space")


@dataclass(frozen=True)
class FusionMatrix:
    """Sparse banded linear map D used in fusion constraints D beta in C."""

    matrix: sp.csr_matrix

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def difference_matrix(n: int, order: int) -> FusionMatrix:
    """Discrete difference operator of order 1 or 2 on n points."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if n < order + 1:
        raise ValueError(f"need n >= {order + 1} for order {order}")
    if order == 1:
        m = sp.diags([-1.0, 1.0], [0, 1], shape=(n - 1, n))
    else:
        m = sp.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(n - 2, n))
    return FusionMatrix(sp.csr_matrix(m))


@lru_cache(maxsize=64)
def identity_fusion(p: int) -> FusionMatrix:
    return FusionMatrix(sp.identity(p, format="csr"))


def project_isotonic(v, w=None) -> np.ndarray:
    """Weighted nondecreasing projection via stack-based pool-adjacent-violators.

    Minimizes sum_i w_i (v_i - b_i)^2 over nondecreasing b in O(n).
    """
    v = np.asarray(v, dtype=float)
    if w is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(w, dtype=float)
    if v.shape != w.shape or v.ndim != 1:
        raise ValueError("v and w must be vectors of equal length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")

    return _pava(v, w)


@njit(cache=True)
def _pava(v, w):
    n = v.shape[0]
    # blocks kept as (weighted mean, total weight, count)
    means = np.empty(n)
    weights = np.empty(n)
    counts = np.empty(n, dtype=np.intp)
    top = -1
    for i in range(n):
        top += 1
        means[top] = v[i]
        weights[top] = w[i]
        counts[top] = 1
        while top > 0 and means[top - 1] > means[top]:
            wsum = weights[top - 1] + weights[top]
            means[top - 1] = (weights[top - 1] * means[top - 1] + weights[top] * means[top]) / wsum
            weights[top - 1] = wsum
            counts[top - 1] += counts[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        for _ in range(counts[b]):
            out[pos] = means[b]
            pos += 1
    return out


def project_sparse(v, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries, lowest index winning ties."""
    v = np.asarray(v, dtype=float)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k >= v.shape[0]:
        return v.copy()
    keep = np.argsort(-np.abs(v), kind="stable")[:k]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def project_nonneg(v) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def project_set(v, cset: ConstraintSet) -> np.ndarray:
    """Euclidean projection of v onto the set (unit weights for isotonic)."""
    if cset.kind == "isotonic":
        return project_isotonic(v)
    if cset.kind == "sparse":
        return project_sparse(v, cset.k)
    if cset.kind == "nonnegative":
        return project_nonneg(v)
    return np.asarray(v, dtype=float).copy()


def set_distance(v, cset: ConstraintSet) -> float:
    """Euclidean distance from v to the set."""
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(v - project_set(v, cset)))
