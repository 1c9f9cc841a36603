"""Deterministic synthetic KPI generators for demos and verification.

Two families:

* ``weekly``   - five high-activity weekday profiles followed by two
  low-activity weekend profiles, repeating; the day-type sequence is the
  classic 5+2 week.
* ``planted-k`` - k well-separated day shapes visited in a fixed
  (seeded) cyclic order, so the next day type is always a deterministic
  function of the current one.

Both add i.i.d. Gaussian noise on top of the noise-free shapes and are
byte-reproducible from their seed.
"""

from __future__ import annotations

import numpy as np

from .core import MultiSeries, ParameterError

DEFAULT_START = np.datetime64("2024-01-01T00:00:00", "ns")


def day_timestamps(n: int, h: int, start: np.datetime64 = DEFAULT_START) -> np.ndarray:
    """n evenly spaced instants with h samples per 24 hours."""
    step_ns = int(round(86_400_000_000_000 / h))
    return start + np.arange(n) * np.timedelta64(step_ns, "ns")


def _dim_profile(base: np.ndarray, j: int) -> np.ndarray:
    # each extra dimension is a scaled, shifted copy so dims stay distinct
    return base * (1.0 + 0.3 * j) + 0.5 * j


def weekly_profiles(h: int, p: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free (h, p) high-activity and low-activity day shapes."""
    t = np.arange(h) / h
    high = 1.0 + 0.5 * np.sin(2 * np.pi * t)
    low = 0.25 + 0.1 * np.sin(2 * np.pi * t)
    ha = np.column_stack([_dim_profile(high, j) for j in range(p)])
    la = np.column_stack([_dim_profile(low, j) for j in range(p)])
    return ha, la


def weekly_series(
    days: int,
    h: int = 96,
    noise: float = 0.0,
    seed: int = 0,
    p: int = 1,
) -> tuple[MultiSeries, np.ndarray]:
    """5 high-activity then 2 low-activity days per week, plus noise.

    Returns the series and the per-day labels (0 = high, 1 = low).
    """
    if days < 7:
        raise ParameterError(f"weekly profile needs at least 7 days, got {days}")
    _validate_common(h, noise, p)
    ha, la = weekly_profiles(h, p)
    labels = np.array([0 if i % 7 < 5 else 1 for i in range(days)])
    values = np.vstack([ha if lab == 0 else la for lab in labels])
    rng = np.random.default_rng(seed)
    if noise > 0:
        values = values + rng.normal(0.0, noise, size=values.shape)
    n = days * h
    return (
        MultiSeries(values, timestamps=day_timestamps(n, h),
                    dim_names=tuple(f"kpi_{j + 1}" for j in range(p))),
        labels,
    )


def planted_profiles(k: int, h: int, p: int = 1) -> np.ndarray:
    """(k, h, p) noise-free day shapes, pairwise far apart."""
    t = np.arange(h) / h
    shapes = []
    for c in range(k):
        base = 3.0 * c + 0.8 * np.sin(2 * np.pi * t + 2 * np.pi * c / max(k, 1))
        shapes.append(np.column_stack([_dim_profile(base, j) for j in range(p)]))
    return np.stack(shapes)


def planted_k_series(
    k: int,
    days: int,
    h: int = 96,
    noise: float = 0.0,
    seed: int = 0,
    p: int = 1,
) -> tuple[MultiSeries, np.ndarray]:
    """k distinct day shapes visited in a seeded cyclic order, plus noise.

    The cycle is a random permutation of the k shapes repeated for
    `days` days, so transitions between day types are deterministic.
    Returns the series and the per-day shape labels.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if days < k:
        raise ParameterError(f"need at least k={k} days to visit every shape, got {days}")
    _validate_common(h, noise, p)
    rng = np.random.default_rng(seed)
    cycle = rng.permutation(k)
    labels = np.array([int(cycle[i % k]) for i in range(days)])
    shapes = planted_profiles(k, h, p)
    values = np.vstack([shapes[lab] for lab in labels])
    if noise > 0:
        values = values + rng.normal(0.0, noise, size=values.shape)
    n = days * h
    return (
        MultiSeries(values, timestamps=day_timestamps(n, h),
                    dim_names=tuple(f"kpi_{j + 1}" for j in range(p))),
        labels,
    )


def _validate_common(h: int, noise: float, p: int) -> None:
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    if noise < 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
