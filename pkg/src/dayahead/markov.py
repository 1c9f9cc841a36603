"""First-order Markov model over the cluster-index sequence of days."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import GeometryError, InsufficientDataError, ParameterError


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic day-type transition probabilities and raw pair counts."""

    probs: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    k: int = 0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if probs.shape != (self.k, self.k) or counts.shape != (self.k, self.k):
            raise GeometryError(
                f"expected ({self.k}, {self.k}) matrices, got {probs.shape} and {counts.shape}"
            )
        if np.any(counts < 0):
            raise ParameterError("counts must be non-negative")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ParameterError("probabilities must lie in [0, 1]")
        if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-9):
            raise ParameterError("every probability row must sum to 1")
        probs.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "counts", counts)


def fit_transitions(sequence: Sequence[int], k: int) -> TransitionMatrix:
    """Estimate transition probabilities from adjacent pairs of the sequence.

    Rows of states never observed as a predecessor fall back to the
    uniform distribution 1/k so that prediction is total; observed rows
    are plain empirical frequencies with no extra smoothing.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    seq = np.asarray(sequence)
    if seq.ndim != 1 or seq.size < 2:
        raise InsufficientDataError(
            f"need a sequence of at least 2 cluster indices, got {seq.size}"
        )
    if not np.issubdtype(seq.dtype, np.integer):
        if not np.all(seq == np.floor(seq)):
            raise ParameterError("cluster indices must be integers")
        seq = seq.astype(np.int64)
    if seq.min() < 0 or seq.max() >= k:
        raise ParameterError(
            f"cluster indices must lie in [0, {k}), got range [{seq.min()}, {seq.max()}]"
        )

    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (seq[:-1], seq[1:]), 1)
    rowsum = counts.sum(axis=1)
    probs = np.full((k, k), 1.0 / k)
    seen = rowsum > 0
    probs[seen] = counts[seen] / rowsum[seen, None]
    return TransitionMatrix(probs=probs, counts=counts, k=k)


def predict_next(matrix: TransitionMatrix, current: int) -> int:
    """Most probable next state from `current`; ties go to the lowest index."""
    if not 0 <= current < matrix.k:
        raise ParameterError(f"state {current} out of range for k={matrix.k}")
    return int(np.argmax(matrix.probs[current]))
