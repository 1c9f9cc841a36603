"""Time-series data model, per-dimension normalization, and day segmentation.

A long multivariate KPI series is represented by :class:`MultiSeries`
(n timesteps x p dimensions). Forecasting operates on whole days: the
series is normalized per dimension, then cut into consecutive
:class:`DayMatrix` blocks of h timesteps each.

All types are immutable after construction and all operations are pure
functions, so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Guard against division by zero for constant dimensions.
EPS = 1e-12

#: Allowed relative jitter of the sampling interval.
MAX_INTERVAL_JITTER = 0.01


class DayAheadError(Exception):
    """Base error for this package."""


class ParameterError(DayAheadError):
    """Raised when a parameter is invalid regardless of the data."""


class GeometryError(DayAheadError):
    """Raised when array shapes or dimension counts do not match."""


class InsufficientDataError(DayAheadError):
    """Raised when the data is too small for the requested operation."""


def _as_matrix(values: np.ndarray | Sequence) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise GeometryError(f"expected a 2-D (n, p) array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class MultiSeries:
    """Immutable multivariate time series: (n, p) values plus optional timestamps.

    Invariants enforced at construction: n >= 1, p >= 1, every value
    finite; timestamps (if present) strictly increasing and evenly
    spaced within 1% jitter, one per row.
    """

    values: np.ndarray = field(repr=False)
    timestamps: np.ndarray | None = field(default=None, repr=False)
    dim_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = _as_matrix(self.values)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise GeometryError(f"series must be at least 1x1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ParameterError(
                f"non-finite value at timestep {bad[0]}, dimension {bad[1]}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

        names = self.dim_names
        if names is None:
            names = tuple(f"dim_{j + 1}" for j in range(arr.shape[1]))
        else:
            names = tuple(str(x) for x in names)
            if len(names) != arr.shape[1]:
                raise GeometryError(
                    f"{len(names)} dim_names for {arr.shape[1]} dimensions"
                )
        object.__setattr__(self, "dim_names", names)

        ts = self.timestamps
        if ts is not None:
            ts = np.asarray(ts, dtype="datetime64[ns]")
            if ts.shape != (arr.shape[0],):
                raise GeometryError(
                    f"{ts.shape[0] if ts.ndim == 1 else ts.shape} timestamps "
                    f"for {arr.shape[0]} rows"
                )
            if ts.shape[0] > 1:
                deltas = np.diff(ts).astype("timedelta64[ns]").astype(np.int64)
                if np.any(deltas <= 0):
                    raise ParameterError("timestamps must be strictly increasing")
                med = float(np.median(deltas))
                if np.any(np.abs(deltas - med) > MAX_INTERVAL_JITTER * med):
                    raise ParameterError(
                        "timestamps must be evenly spaced (interval jitter > 1%)"
                    )
            ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    def column(self, j: int) -> "MultiSeries":
        """Extract dimension j as a univariate series."""
        if not 0 <= j < self.p:
            raise ParameterError(f"column {j} out of range for p={self.p}")
        return MultiSeries(
            self.values[:, [j]],
            timestamps=self.timestamps,
            dim_names=(self.dim_names[j],),
        )

    def slice_rows(self, start: int, stop: int) -> "MultiSeries":
        """Contiguous row slice [start, stop) preserving timestamps."""
        if not (0 <= start < stop <= self.n):
            raise ParameterError(f"invalid row slice [{start}, {stop}) for n={self.n}")
        ts = None if self.timestamps is None else self.timestamps[start:stop]
        return MultiSeries(self.values[start:stop], timestamps=ts, dim_names=self.dim_names)


@dataclass(frozen=True)
class DayMatrix:
    """One day of measurements: (h, p) values and the day's ordinal position."""

    values: np.ndarray = field(repr=False)
    day_index: int = 0

    def __post_init__(self) -> None:
        arr = _as_matrix(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "day_index", int(self.day_index))

    @property
    def h(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    def flatten(self) -> np.ndarray:
        """Row-major (time-major) vector of length h*p."""
        return self.values.reshape(-1)


@dataclass(frozen=True)
class NormStats:
    """Per-dimension mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        if mean.ndim != 1 or std.ndim != 1 or mean.shape != std.shape:
            raise GeometryError(
                f"mean and std must be matching vectors, got {mean.shape} and {std.shape}"
            )
        if np.any(std < 0):
            raise ParameterError("std must be non-negative")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def p(self) -> int:
        return int(self.mean.shape[0])


def compute_norm_stats(series: MultiSeries) -> NormStats:
    """Per-dimension mean and population std (divisor n) of the series."""
    return NormStats(
        mean=series.values.mean(axis=0),
        std=series.values.std(axis=0),
    )


def normalize_values(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Map a (..., p) array to centered, unit-variance units.

    Constant dimensions (std == 0) map to zeros via the EPS guard.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != stats.p:
        raise GeometryError(
            f"array has {values.shape[-1]} dimensions, stats have {stats.p}"
        )
    return (values - stats.mean) / np.maximum(stats.std, EPS)


def denormalize_values(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Exact inverse of :func:`normalize_values` wherever std > 0."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != stats.p:
        raise GeometryError(
            f"array has {values.shape[-1]} dimensions, stats have {stats.p}"
        )
    return values * np.maximum(stats.std, EPS) + stats.mean


def apply_norm(series: MultiSeries, stats: NormStats) -> MultiSeries:
    """Normalize every dimension of the series with the given statistics."""
    return MultiSeries(
        normalize_values(series.values, stats),
        timestamps=series.timestamps,
        dim_names=series.dim_names,
    )


def denorm(series: MultiSeries, stats: NormStats) -> MultiSeries:
    """Map a normalized series back to original units."""
    return MultiSeries(
        denormalize_values(series.values, stats),
        timestamps=series.timestamps,
        dim_names=series.dim_names,
    )


def split_days(series: MultiSeries, h: int) -> list[DayMatrix]:
    """Cut the series into floor(n/h) consecutive non-overlapping days.

    A trailing remainder of n mod h timesteps is discarded. Raises
    InsufficientDataError when the series holds no complete day.
    """
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    d = series.n // h
    if d == 0:
        raise InsufficientDataError(
            f"no complete day: series has {series.n} timesteps, need {h}"
        )
    return [
        DayMatrix(series.values[i * h : (i + 1) * h], day_index=i) for i in range(d)
    ]
