import numpy as np
import pytest

from dayahead.core import DayMatrix, MultiSeries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_series(values) -> MultiSeries:
    """1-D list -> univariate series; 2-D -> multivariate."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return MultiSeries(arr)


def make_days(vectors, h=1) -> list[DayMatrix]:
    """Each entry becomes one day; scalars become (h=1, p=1) days."""
    days = []
    for i, v in enumerate(vectors):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(h, -1)
        days.append(DayMatrix(arr, day_index=i))
    return days
