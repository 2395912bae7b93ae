import numpy as np
import pytest

from core.timeseries import TimeSeriesDataset


def orthonormal_design(rng: np.random.Generator, T: int, p: int) -> np.ndarray:
    """X con X'X/T = I exacto (hasta redondeo)."""
    q, _ = np.linalg.qr(rng.standard_normal((T, p)))
    return q * np.sqrt(T)


def sparse_dataset(rng: np.random.Generator, T: int = 200, p: int = 8, active=(0, 1), noise: float = 0.5):
    X = rng.standard_normal((T, p))
    beta = np.zeros(p)
    beta[list(active)] = 1.5
    y = X @ beta + noise * rng.standard_normal(T)
    names = tuple(f"x{j}" for j in range(p))
    return TimeSeriesDataset(y, X, names), beta


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
