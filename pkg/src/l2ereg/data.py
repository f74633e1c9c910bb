"""Core containers: the (y, X) data pair and the (beta, eta, weights) fit state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NumericalOverflowError(ArithmeticError):
    """A loss or derivative evaluation produced a non-finite intermediate."""


class UnsupportedConfigurationError(ValueError):
    """A solver was asked for a structural configuration it does not handle."""


def mad(y) -> float:
    """Unscaled median absolute deviation, median(|y - median(y)|)."""
    y = np.asarray(y, dtype=float)
    return float(np.median(np.abs(y - np.median(y))))


@dataclass(frozen=True)
class Dataset:
    """Response vector y (length n) and design matrix X (n x p)."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1 or X.ndim != 2:
            raise ValueError("y must be a vector and X a matrix")
        if y.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need n >= 1 and p >= 1")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValueError("y and X must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def has_identity_design(self) -> bool:
        cached = getattr(self, "_identity", None)
        if cached is None:
            n, p = self.X.shape
            cached = n == p and np.array_equal(self.X, np.eye(n))
            object.__setattr__(self, "_identity", cached)
        return cached


@dataclass(frozen=True)
class FitState:
    """Coefficients beta, log-precision eta (tau = e^eta), and case weights."""

    beta: np.ndarray
    eta: float
    weights: np.ndarray = field(repr=False)

    @classmethod
    def from_params(cls, data: Dataset, beta, eta: float) -> "FitState":
        from .loss import case_weights, residuals

        beta = np.asarray(beta, dtype=float)
        w = case_weights(residuals(data, beta), eta)
        return cls(beta=beta, eta=float(eta), weights=w)
