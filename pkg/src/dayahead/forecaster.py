"""End-to-end day-ahead forecaster.

Training normalizes the series per dimension, splits it into days,
clusters the days into typical profiles, and fits a first-order Markov
model over the resulting day-type sequence. Forecasting maps the
current day to its nearest profile, predicts the most probable next
profile, and returns that profile's centroid in original units.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterModel, assign, encode_sequence, fit_kmeans
from .core import (
    DayMatrix,
    GeometryError,
    InsufficientDataError,
    MultiSeries,
    NormStats,
    compute_norm_stats,
    denormalize_values,
    normalize_values,
    split_days,
)
from .markov import TransitionMatrix, fit_transitions, predict_next

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

#: Validation-MSE differences at or below this are ties (smaller k wins).
#: Strict equality would make noise-free data, where every k >= k_true
#: reaches MSE ~1e-30, pick an arbitrary k on float rounding noise.
K_SELECTION_TIE_TOL = 1e-12


@dataclass(frozen=True)
class DayAheadModel:
    """Trained day-ahead forecaster: normalization, profiles, transitions."""

    norm: NormStats
    clusters: ClusterModel
    transitions: TransitionMatrix
    h: int
    p: int
    selected_k: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.clusters.k != self.selected_k or self.transitions.k != self.selected_k:
            raise GeometryError(
                f"component k mismatch: clusters={self.clusters.k}, "
                f"transitions={self.transitions.k}, selected_k={self.selected_k}"
            )
        if (self.clusters.h, self.clusters.p) != (self.h, self.p) or self.norm.p != self.p:
            raise GeometryError("geometry mismatch between model components")


@dataclass(frozen=True)
class Forecast:
    """Predicted next day: (h, p) values in original units."""

    values: np.ndarray = field(repr=False)
    predicted_cluster: int = 0
    source_day_index: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _train_on_days(
    stats: NormStats,
    days_norm: list[DayMatrix],
    k: int,
    h: int,
    seed: int,
    max_iter: int,
    n_init: int,
) -> DayAheadModel:
    clusters = fit_kmeans(days_norm, k, seed, max_iter=max_iter, n_init=n_init)
    sequence = encode_sequence(clusters, days_norm)
    transitions = fit_transitions(sequence, k)
    return DayAheadModel(
        norm=stats,
        clusters=clusters,
        transitions=transitions,
        h=h,
        p=clusters.p,
        selected_k=k,
        seed=seed,
    )


def train(
    series: MultiSeries,
    k: int,
    h: int,
    seed: int,
    max_iter: int = 300,
    n_init: int = 10,
) -> DayAheadModel:
    """Fit the full model on a training series with a fixed cluster count."""
    stats = compute_norm_stats(series)
    days_norm = split_days(
        MultiSeries(
            normalize_values(series.values, stats), dim_names=series.dim_names
        ),
        h,
    )
    if len(days_norm) < max(k, 2):
        raise InsufficientDataError(
            f"need at least {max(k, 2)} complete days to train, got {len(days_norm)}"
        )
    return _train_on_days(stats, days_norm, k, h, seed, max_iter, n_init)


def forecast_next(model: DayAheadModel, current_day: DayMatrix) -> Forecast:
    """Forecast the day after `current_day` (given in original units)."""
    if current_day.h != model.h or current_day.p != model.p:
        raise GeometryError(
            f"day geometry ({current_day.h}, {current_day.p}) does not match "
            f"model ({model.h}, {model.p})"
        )
    norm_day = DayMatrix(
        normalize_values(current_day.values, model.norm),
        day_index=current_day.day_index,
    )
    current_cluster = assign(model.clusters, norm_day)
    next_cluster = predict_next(model.transitions, current_cluster)
    values = denormalize_values(model.clusters.centroid_day(next_cluster), model.norm)
    return Forecast(
        values=values,
        predicted_cluster=next_cluster,
        source_day_index=current_day.day_index,
    )


def select_k(
    train_series: MultiSeries,
    validation: MultiSeries,
    k_range: tuple[int, int],
    h: int,
    seed: int,
    max_iter: int = 300,
    n_init: int = 10,
) -> tuple[int, DayAheadModel]:
    """Pick the cluster count minimizing one-day-ahead MSE on validation data.

    For every feasible k the model is trained on `train_series` alone,
    then each validation day is forecast from its predecessor (the first
    one from the last training day) and scored by MSE in normalized
    units. Ties go to the smaller k. Candidates above the number of
    training days are skipped with a warning.
    """
    k_min, k_max = int(k_range[0]), int(k_range[1])
    if k_min < 1 or k_max < k_min:
        raise InsufficientDataError(f"invalid k range [{k_min}, {k_max}]")

    stats = compute_norm_stats(train_series)
    train_days = split_days(
        MultiSeries(
            normalize_values(train_series.values, stats),
            dim_names=train_series.dim_names,
        ),
        h,
    )
    if len(train_days) < 2:
        raise InsufficientDataError(
            f"need at least 2 complete training days, got {len(train_days)}"
        )
    valid_days = split_days(
        MultiSeries(
            normalize_values(validation.values, stats),
            dim_names=validation.dim_names,
        ),
        h,
    )

    if k_max > len(train_days):
        logger.warning(
            "clamping k range [%d, %d] to [%d, %d]: only %d training days",
            k_min, k_max, k_min, len(train_days), len(train_days),
        )
        k_max = len(train_days)
    if k_min > k_max:
        raise InsufficientDataError(
            f"no feasible k: k_min={k_min} exceeds {len(train_days)} training days"
        )

    # chronological chain: last training day precedes the first validation day
    predecessors = [train_days[-1]] + valid_days[:-1]

    best_k = None
    best_mse = np.inf
    best_model = None
    for k in range(k_min, k_max + 1):
        model = _train_on_days(stats, train_days, k, h, seed, max_iter, n_init)
        errors = []
        for prev, actual in zip(predecessors, valid_days):
            cur = assign(model.clusters, prev)
            nxt = predict_next(model.transitions, cur)
            pred = model.clusters.centroid_day(nxt)
            errors.append(float(np.mean((pred - actual.values) ** 2)))
        score = float(np.mean(errors))
        logger.debug("k=%d validation MSE %.6g", k, score)
        if score < best_mse - K_SELECTION_TIE_TOL:
            best_k, best_mse, best_model = k, score, model
    assert best_k is not None and best_model is not None
    return best_k, best_model


def model_to_dict(model: DayAheadModel) -> dict:
    """JSON-ready representation; floats keep full round-trip precision."""
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "h": model.h,
        "p": model.p,
        "selected_k": model.selected_k,
        "seed": model.seed,
        "norm": {
            "mean": model.norm.mean.tolist(),
            "std": model.norm.std.tolist(),
        },
        "clusters": {
            "k": model.clusters.k,
            "inertia": model.clusters.inertia,
            "centroids": model.clusters.centroids.tolist(),
        },
        "transitions": {
            "counts": model.transitions.counts.tolist(),
            "probs": model.transitions.probs.tolist(),
        },
    }


def model_from_dict(doc: dict) -> DayAheadModel:
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version: {version!r}")
    h, p, k = int(doc["h"]), int(doc["p"]), int(doc["selected_k"])
    return DayAheadModel(
        norm=NormStats(
            mean=np.asarray(doc["norm"]["mean"], dtype=float),
            std=np.asarray(doc["norm"]["std"], dtype=float),
        ),
        clusters=ClusterModel(
            centroids=np.asarray(doc["clusters"]["centroids"], dtype=float),
            k=int(doc["clusters"]["k"]),
            h=h,
            p=p,
            inertia=float(doc["clusters"]["inertia"]),
        ),
        transitions=TransitionMatrix(
            probs=np.asarray(doc["transitions"]["probs"], dtype=float),
            counts=np.asarray(doc["transitions"]["counts"], dtype=np.int64),
            k=k,
        ),
        h=h,
        p=p,
        selected_k=k,
        seed=int(doc["seed"]),
    )


def save_model(model: DayAheadModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> DayAheadModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
