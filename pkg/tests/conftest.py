"""Shared fixtures and small random-instance helpers."""

import numpy as np
import pytest

from l2ereg import Dataset


def random_instance(rng, n=None, p=None, eta_range=2.0):
    """A random (data, beta, eta) triple for derivative and descent checks."""
    n = n if n is not None else int(rng.integers(2, 51))
    p = p if p is not None else int(rng.integers(1, 11))
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n) * 2.0
    beta = rng.standard_normal(p)
    eta = float(rng.uniform(-eta_range, eta_range))
    return Dataset(y=y, X=X), beta, eta


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_clean_data():
    """n=200, p=5 regression data with no outliers and unit noise."""
    gen = np.random.default_rng(7)
    X = gen.standard_normal((200, 5))
    beta_true = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    y = X @ beta_true + gen.standard_normal(200)
    return Dataset(y=y, X=X), beta_true
