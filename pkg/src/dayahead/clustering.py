"""Multidimensional k-means over flattened day-vectors (Euclidean distance).

Days are flattened time-major to vectors of length h*p and clustered
with Lloyd's algorithm. Initialization is k-means++ driven by an
explicit seeded generator, so a fit is fully reproducible from
(days, k, seed, max_iter, n_init).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .core import DayMatrix, GeometryError, InsufficientDataError, ParameterError


@dataclass(frozen=True)
class ClusterModel:
    """k typical-day centroids over flattened (h*p) day-vectors."""

    centroids: np.ndarray = field(repr=False)
    k: int = 0
    h: int = 0
    p: int = 0
    inertia: float = 0.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.centroids, dtype=float)
        if arr.ndim != 2:
            raise GeometryError(f"centroids must be 2-D, got shape {arr.shape}")
        if arr.shape != (self.k, self.h * self.p):
            raise GeometryError(
                f"centroids shape {arr.shape} does not match k={self.k}, h*p={self.h * self.p}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "centroids", arr)

    def centroid_day(self, j: int) -> np.ndarray:
        """Centroid j reshaped to an (h, p) day."""
        if not 0 <= j < self.k:
            raise ParameterError(f"cluster {j} out of range for k={self.k}")
        return self.centroids[j].reshape(self.h, self.p)


def _stack_days(days: list[DayMatrix]) -> tuple[np.ndarray, int, int]:
    if not days:
        raise InsufficientDataError("no days to cluster")
    h, p = days[0].h, days[0].p
    for d in days:
        if d.h != h or d.p != p:
            raise GeometryError(
                f"day geometry ({d.h}, {d.p}) does not match ({h}, {p})"
            )
    return np.stack([d.flatten() for d in days]), h, p


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = cdist(X, centroids[:1], "sqeuclidean")[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            # all points coincide with chosen centroids (duplicate data)
            idx = rng.integers(n)
        centroids[j] = X[idx]
        d2 = np.minimum(d2, cdist(X, centroids[j : j + 1], "sqeuclidean")[:, 0])
    return centroids


def _means_with_repair(
    X: np.ndarray, labels: np.ndarray, k: int, centroids: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster means; empty clusters steal the point farthest from its centroid.

    Points that are the sole member of their cluster are never stolen,
    so each pass fills one hole without opening another; with n >= k
    points some cluster always has a spare member.
    """
    labels = labels.copy()
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.nonzero(counts == 0)[0]
        if empty.size == 0:
            break
        dist = np.linalg.norm(X - centroids[labels], axis=1)
        dist[counts[labels] <= 1] = -1.0
        labels[int(np.argmax(dist))] = int(empty[0])
    means = np.empty_like(centroids)
    for j in range(k):
        means[j] = X[labels == j].mean(axis=0)
    return means, labels


def _lloyd(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float]:
    centroids = _kmeanspp_init(X, k, rng)
    labels = np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)
    for _ in range(max_iter):
        centroids, labels = _means_with_repair(X, labels, k, centroids)
        new_labels = np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    # keep the centroid == cluster-mean invariant for the returned labels
    centroids, labels = _means_with_repair(X, labels, k, centroids)
    inertia = float(((X - centroids[labels]) ** 2).sum())
    return centroids, labels, inertia


def fit_kmeans(
    days: list[DayMatrix],
    k: int,
    seed: int,
    max_iter: int = 300,
    n_init: int = 10,
) -> ClusterModel:
    """Fit k typical-day centroids with best-of-n_init seeded k-means++ runs.

    Converged means no assignment changed; ties on inertia keep the
    earliest restart, so the result is deterministic given the inputs.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    if n_init < 1:
        raise ParameterError(f"n_init must be >= 1, got {n_init}")
    X, h, p = _stack_days(days)
    if X.shape[0] < k:
        raise InsufficientDataError(f"infeasible k: {k} clusters for {X.shape[0]} days")

    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, float] | None = None
    for _ in range(n_init):
        centroids, _, inertia = _lloyd(X, k, rng, max_iter)
        if best is None or inertia < best[1]:
            best = (centroids, inertia)
    assert best is not None
    return ClusterModel(centroids=best[0], k=k, h=h, p=p, inertia=best[1])


def assign(model: ClusterModel, day: DayMatrix) -> int:
    """Index of the centroid closest to the day; ties go to the lowest index."""
    if day.h != model.h or day.p != model.p:
        raise GeometryError(
            f"day geometry ({day.h}, {day.p}) does not match model ({model.h}, {model.p})"
        )
    d2 = ((model.centroids - day.flatten()) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def encode_sequence(model: ClusterModel, days: list[DayMatrix]) -> list[int]:
    """Cluster index of every day, in chronological order."""
    if not days:
        raise InsufficientDataError("no days to encode")
    return [assign(model, d) for d in days]
