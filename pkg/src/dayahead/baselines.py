"""Comparison forecasters: mean day, omniscient cluster oracle, AR, Holt-Winters.

AR and Holt-Winters are univariate; multivariate series are handled by
fitting one model per dimension (see evaluation.run_backtest). The
omniscient forecaster reuses a trained day-ahead model's clusters but
is told the true next day, bounding the error achievable by any
centroid-based forecast with those clusters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .clustering import assign
from .core import (
    DayMatrix,
    GeometryError,
    InsufficientDataError,
    ParameterError,
    denormalize_values,
    normalize_values,
)
from .forecaster import DayAheadModel, Forecast

#: Coarse default smoothing-parameter grid: 5 values per axis, 125 triples.
HW_DEFAULT_GRID_VALUES = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class MeanDayModel:
    """Slot-wise average day over the training days."""

    mean_day: np.ndarray = field(repr=False)
    h: int = 0
    p: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.mean_day, dtype=float)
        if arr.shape != (self.h, self.p):
            raise GeometryError(
                f"mean_day shape {arr.shape} does not match ({self.h}, {self.p})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "mean_day", arr)


@dataclass(frozen=True)
class ARModel:
    """Autoregressive model fit by ordinary least squares, lag-1 first."""

    order: int
    coeffs: np.ndarray
    intercept: float

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.order,):
            raise GeometryError(
                f"expected {self.order} coefficients, got shape {coeffs.shape}"
            )
        if not (np.isfinite(coeffs).all() and np.isfinite(self.intercept)):
            raise ParameterError("AR parameters must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "intercept", float(self.intercept))


@dataclass(frozen=True)
class HoltWintersModel:
    """Additive triple exponential smoothing state after one pass over the data.

    `seasonals[i]` is the latest estimate for season position i (time
    index mod season_length); `n_obs` records how many points were
    smoothed so forecasts continue at the right seasonal phase.
    """

    alpha: float
    beta: float
    gamma: float
    season_length: int
    level: float
    trend: float
    seasonals: np.ndarray = field(repr=False)
    n_obs: int = 0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        seasonals = np.asarray(self.seasonals, dtype=float)
        if seasonals.shape != (self.season_length,):
            raise GeometryError(
                f"expected {self.season_length} seasonal terms, got shape {seasonals.shape}"
            )
        seasonals.setflags(write=False)
        object.__setattr__(self, "seasonals", seasonals)


def fit_mean_day(days: list[DayMatrix]) -> MeanDayModel:
    """Slot-wise arithmetic mean over the given days."""
    if not days:
        raise InsufficientDataError("no days to average")
    h, p = days[0].h, days[0].p
    for d in days:
        if d.h != h or d.p != p:
            raise GeometryError(f"day geometry ({d.h}, {d.p}) does not match ({h}, {p})")
    return MeanDayModel(
        mean_day=np.stack([d.values for d in days]).mean(axis=0), h=h, p=p
    )


def forecast_mean_day(model: MeanDayModel) -> np.ndarray:
    """The average day, regardless of what the current day looks like."""
    return model.mean_day


def forecast_omniscient(model: DayAheadModel, true_next_day: DayMatrix) -> Forecast:
    """Centroid of the cluster the TRUE next day belongs to.

    Bypasses the transition model entirely; useful as an upper bound on
    what the day-ahead forecaster could achieve with the same clusters.
    """
    if true_next_day.h != model.h or true_next_day.p != model.p:
        raise GeometryError(
            f"day geometry ({true_next_day.h}, {true_next_day.p}) does not match "
            f"model ({model.h}, {model.p})"
        )
    norm_day = DayMatrix(
        normalize_values(true_next_day.values, model.norm),
        day_index=true_next_day.day_index,
    )
    cluster = assign(model.clusters, norm_day)
    values = denormalize_values(model.clusters.centroid_day(cluster), model.norm)
    return Forecast(
        values=values,
        predicted_cluster=cluster,
        source_day_index=true_next_day.day_index,
    )


def fit_ar(series: np.ndarray, order: int) -> ARModel:
    """Least-squares AR(order) fit with intercept on a 1-D series.

    A rank-deficient design (e.g. a constant series) falls back to an
    intercept-only model predicting the mean of the regression targets.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    if order < 1:
        raise ParameterError(f"order must be >= 1, got {order}")
    n = x.size
    if n <= order + 1:
        raise InsufficientDataError(
            f"need more than {order + 1} points to fit AR({order}), got {n}"
        )
    if not np.isfinite(x).all():
        raise ParameterError("series contains non-finite values")

    y = x[order:]
    lag_cols = [x[order - lag : n - lag] for lag in range(1, order + 1)]
    design = np.column_stack([np.ones(n - order)] + lag_cols)
    params, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < order + 1:
        return ARModel(order=order, coeffs=np.zeros(order), intercept=float(y.mean()))
    return ARModel(order=order, coeffs=params[1:], intercept=float(params[0]))


def forecast_ar(model: ARModel, history: np.ndarray, steps: int) -> np.ndarray:
    """Recursive multi-step forecast, feeding predictions back as inputs."""
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    hist = np.asarray(history, dtype=float).reshape(-1)
    if hist.size < model.order:
        raise InsufficientDataError(
            f"need at least {model.order} history points, got {hist.size}"
        )
    buf = list(hist[-model.order :])
    out = np.empty(steps)
    for t in range(steps):
        nxt = model.intercept + sum(
            model.coeffs[i] * buf[-1 - i] for i in range(model.order)
        )
        out[t] = nxt
        buf.append(nxt)
    return out


def _hw_smooth(
    x: np.ndarray, m: int, alpha: np.ndarray, beta: np.ndarray, gamma: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Run the additive smoothing recursions for a batch of parameter triples.

    Returns (sse, level, trend, seasonals) where each candidate occupies
    one slot of the leading axis (seasonals: shape (m, n_candidates)).
    """
    n = x.size
    first, second = x[:m], x[m : 2 * m]
    n_cand = alpha.size
    level = np.full(n_cand, first.mean())
    trend = np.full(n_cand, (second.mean() - first.mean()) / m)
    seasonals = np.repeat((first - first.mean())[:, None], n_cand, axis=1)
    sse = np.zeros(n_cand)
    for t in range(m, n):
        pos = t % m
        pred = level + trend + seasonals[pos]
        sse += (x[t] - pred) ** 2
        new_level = alpha * (x[t] - seasonals[pos]) + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        seasonals[pos] = gamma * (x[t] - new_level) + (1.0 - gamma) * seasonals[pos]
        level = new_level
    return sse, level, trend, seasonals


def fit_hw(
    series: np.ndarray,
    season_length: int,
    grid: list[tuple[float, float, float]] | None = None,
) -> HoltWintersModel:
    """Fit additive Holt-Winters on a 1-D series.

    Initial level is the first-season mean, initial trend the per-step
    difference between the first two season means, initial seasonals the
    first-season deviations. The (alpha, beta, gamma) triple is chosen
    from `grid` (default: the coarse 5x5x5 cube) by minimizing in-sample
    one-step-ahead squared error; ties keep the earliest triple.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    m = int(season_length)
    if m < 1:
        raise ParameterError(f"season_length must be >= 1, got {m}")
    if x.size < 2 * m:
        raise InsufficientDataError(
            f"need at least two seasons ({2 * m} points) to fit, got {x.size}"
        )
    if not np.isfinite(x).all():
        raise ParameterError("series contains non-finite values")

    if grid is None:
        triples = list(
            itertools.product(
                HW_DEFAULT_GRID_VALUES, HW_DEFAULT_GRID_VALUES, HW_DEFAULT_GRID_VALUES
            )
        )
    else:
        triples = [tuple(float(v) for v in t) for t in grid]
        if not triples:
            raise ParameterError("parameter grid is empty")

    alpha = np.array([t[0] for t in triples])
    beta = np.array([t[1] for t in triples])
    gamma = np.array([t[2] for t in triples])
    sse, level, trend, seasonals = _hw_smooth(x, m, alpha, beta, gamma)
    best = int(np.argmin(sse))
    return HoltWintersModel(
        alpha=float(alpha[best]),
        beta=float(beta[best]),
        gamma=float(gamma[best]),
        season_length=m,
        level=float(level[best]),
        trend=float(trend[best]),
        seasonals=seasonals[:, best].copy(),
        n_obs=int(x.size),
    )


def forecast_hw(model: HoltWintersModel, steps: int) -> np.ndarray:
    """Level plus extrapolated trend plus the matching seasonal term."""
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    j = np.arange(1, steps + 1)
    seasonal_idx = (model.n_obs + j - 1) % model.season_length
    return model.level + j * model.trend + model.seasonals[seasonal_idx]
