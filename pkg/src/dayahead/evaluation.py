"""Backtesting protocol: chronological split, per-forecast MSE, method ranking.

The series is split day-aligned into train/validation/test blocks.
Every method is trained on the train block (the day-ahead forecaster
additionally uses validation to pick k), then forecasts each test day
from its predecessor; the first test day is forecast from the last
validation day. Errors are MSE in normalized units so that different
KPIs are comparable; original-unit MSE is kept alongside for reporting.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from . import baselines, clustering, forecaster, markov
from .core import (
    DayMatrix,
    GeometryError,
    InsufficientDataError,
    MultiSeries,
    ParameterError,
    compute_norm_stats,
    denormalize_values,
    normalize_values,
)

logger = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1

METHOD_NAMES = ("dayahead", "meanday", "omniscient", "ar", "hw")


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/validation/test proportions (must sum to 1)."""

    train_frac: float = 0.70
    valid_frac: float = 0.15
    test_frac: float = 0.15

    def __post_init__(self) -> None:
        for name in ("train_frac", "valid_frac", "test_frac"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        total = self.train_frac + self.valid_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"fractions must sum to 1, got {total}")


def chrono_split(
    series: MultiSeries, spec: SplitSpec, h: int
) -> tuple[MultiSeries, MultiSeries, MultiSeries]:
    """Day-aligned contiguous blocks in chronological order.

    Train gets floor(train_frac*d) days, validation floor(valid_frac*d),
    test the remainder; a trailing partial day is dropped. Raises when
    any block would be empty.
    """
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    d = series.n // h
    if d < 3:
        raise InsufficientDataError(f"need at least 3 complete days, got {d}")
    # +1e-9 so that e.g. 0.7*10 == 6.999... still floors to 7 days
    n_train = int(spec.train_frac * d + 1e-9)
    n_valid = int(spec.valid_frac * d + 1e-9)
    n_test = d - n_train - n_valid
    for name, count in (("train", n_train), ("validation", n_valid), ("test", n_test)):
        if count < 1:
            raise InsufficientDataError(
                f"{name} block is empty for d={d} days; supply more data"
            )
    a, b = n_train * h, (n_train + n_valid) * h
    return (
        series.slice_rows(0, a),
        series.slice_rows(a, b),
        series.slice_rows(b, d * h),
    )


def mse(forecast: np.ndarray, actual: np.ndarray) -> float:
    """Mean squared difference over all entries of two same-shape matrices."""
    f = np.asarray(forecast, dtype=float)
    a = np.asarray(actual, dtype=float)
    if f.shape != a.shape:
        raise GeometryError(f"shape mismatch: {f.shape} vs {a.shape}")
    return float(np.mean((f - a) ** 2))


def rank_methods(errors: np.ndarray) -> np.ndarray:
    """Ascending-error ranks starting at 1; ties share the average rank.

    +inf entries rank last (tied infinities share their average too).
    """
    return rankdata(np.asarray(errors, dtype=float), method="average")


@dataclass(frozen=True)
class EvalReport:
    """Per-forecast error matrix plus per-method summary statistics."""

    methods: tuple[str, ...]
    errors: np.ndarray = field(repr=False)
    errors_original: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)
    mean_error: np.ndarray = field(default=None, repr=False)
    std_error: np.ndarray = field(default=None, repr=False)
    mean_rank: np.ndarray = field(default=None, repr=False)
    std_rank: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_errors(
        cls,
        methods: tuple[str, ...],
        errors: np.ndarray,
        errors_original: np.ndarray,
        metadata: dict,
    ) -> "EvalReport":
        """Build the report, computing every summary from the error matrix."""
        errors = np.asarray(errors, dtype=float)
        errors_original = np.asarray(errors_original, dtype=float)
        if errors.ndim != 2 or errors.shape[1] != len(methods):
            raise GeometryError(
                f"errors must be (n_forecasts, {len(methods)}), got {errors.shape}"
            )
        if errors_original.shape != errors.shape:
            raise GeometryError("error matrices must have matching shapes")
        ranks = np.vstack([rank_methods(row) for row in errors])
        # +inf failure cells make a method's summary inf +- nan, by design
        with np.errstate(invalid="ignore"):
            mean_error = errors.mean(axis=0)
            std_error = errors.std(axis=0)
        return cls(
            methods=tuple(methods),
            errors=errors,
            errors_original=errors_original,
            metadata=dict(metadata),
            mean_error=mean_error,
            std_error=std_error,
            mean_rank=ranks.mean(axis=0),
            std_rank=ranks.std(axis=0),
        )

    @property
    def n_forecasts(self) -> int:
        return int(self.errors.shape[0])

    def method_index(self, name: str) -> int:
        try:
            return self.methods.index(name)
        except ValueError:
            raise ParameterError(f"method {name!r} not in report") from None

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "methods": list(self.methods),
            "metadata": self.metadata,
            "errors": self.errors.tolist(),
            "errors_original": self.errors_original.tolist(),
            "summary": {
                "mean_error": self.mean_error.tolist(),
                "std_error": self.std_error.tolist(),
                "mean_rank": self.mean_rank.tolist(),
                "std_rank": self.std_rank.tolist(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        """Rebuild from a stored document, recomputing and checking the summary."""
        version = doc.get("format_version")
        if version != REPORT_FORMAT_VERSION:
            raise ValueError(f"unsupported report format_version: {version!r}")
        report = cls.from_errors(
            methods=tuple(doc["methods"]),
            errors=np.asarray(doc["errors"], dtype=float),
            errors_original=np.asarray(doc["errors_original"], dtype=float),
            metadata=doc.get("metadata", {}),
        )
        stored = doc.get("summary")
        if stored is not None:
            for key, have in (
                ("mean_error", report.mean_error),
                ("std_error", report.std_error),
                ("mean_rank", report.mean_rank),
                ("std_rank", report.std_rank),
            ):
                if not np.array_equal(
                    np.asarray(stored[key], dtype=float), have, equal_nan=True
                ):
                    raise ValueError(
                        f"stored summary field {key!r} does not match the error matrix"
                    )
        return report

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def errors_to_csv(self, path: str | Path, original_units: bool = False) -> None:
        """One row per forecast, one column per method."""
        matrix = self.errors_original if original_units else self.errors
        lines = ["forecast," + ",".join(self.methods)]
        for i, row in enumerate(matrix):
            lines.append(f"{i}," + ",".join(f"{v:.12g}" for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_table(
    report: EvalReport, title: str | None = None, original_units: bool = False
) -> str:
    """Aligned plain-text comparison table, best mean error first."""
    with np.errstate(invalid="ignore"):
        mean_err = (
            report.errors_original.mean(axis=0) if original_units else report.mean_error
        )
        std_err = (
            report.errors_original.std(axis=0) if original_units else report.std_error
        )
    rows = [
        (
            _METHOD_LABELS.get(m, m),
            f"{mean_err[i]:.4g} ± {std_err[i]:.4g}",
            f"{report.mean_rank[i]:.3g} ± {report.std_rank[i]:.3g}",
        )
        for i, m in enumerate(report.methods)
    ]
    rows.sort(key=lambda r: _sort_key(r[1]))
    return _format_table(rows, title=title)


_METHOD_LABELS = {
    "dayahead": "Day-ahead forecasting",
    "meanday": "Mean day",
    "omniscient": "Omniscient algorithm",
    "ar": "AR model",
    "hw": "HW model",
}


def _sort_key(cell: str) -> float:
    v = float(cell.split(" ")[0])
    return v if np.isfinite(v) else np.inf


def _format_table(rows: list[tuple[str, str, str]], title: str | None = None) -> str:
    header = ("Algorithm", "Mean error ± std", "Mean rank ± std")
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))
    ]
    sep = "-+-".join("-" * w for w in widths)
    lines = []
    if title:
        lines.append(title)
    lines.append(" | ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append(sep)
    for r in rows:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def render_aggregate_table(report: EvalReport, title: str | None = None) -> str:
    """Comparison table for an aggregated report.

    Mean error columns use the across-series statistics (each series
    contributes its average MSE); ranks stay pooled over all forecasts.
    Falls back to the plain per-forecast table when the report was not
    produced by :func:`aggregate_reports`.
    """
    series_mean = report.metadata.get("series_mean_error")
    series_std = report.metadata.get("series_std_error")
    if series_mean is None or series_std is None:
        return render_table(report, title=title)
    rows = [
        (
            _METHOD_LABELS.get(m, m),
            f"{series_mean[i]:.4g} ± {series_std[i]:.4g}",
            f"{report.mean_rank[i]:.3g} ± {report.std_rank[i]:.3g}",
        )
        for i, m in enumerate(report.methods)
    ]
    rows.sort(key=lambda r: _sort_key(r[1]))
    return _format_table(rows, title=title)


def aggregate_reports(reports: list[EvalReport]) -> EvalReport:
    """Merge per-series reports into one summary-style report.

    Per-forecast rows of all reports are concatenated, so mean/std rank
    are pooled over every forecast while metadata records the per-series
    mean errors (the per-series averages used in summary tables).
    """
    if not reports:
        raise ParameterError("no reports to aggregate")
    methods = reports[0].methods
    for r in reports[1:]:
        if r.methods != methods:
            raise ParameterError("reports use different method sets")
    errors = np.vstack([r.errors for r in reports])
    errors_original = np.vstack([r.errors_original for r in reports])
    per_series_mean = np.vstack([r.mean_error for r in reports])
    metadata = {
        "aggregated_from": [r.metadata.get("dataset_id", "") for r in reports],
        "per_series_mean_error": per_series_mean.tolist(),
        "series_mean_error": per_series_mean.mean(axis=0).tolist(),
        "series_std_error": per_series_mean.std(axis=0).tolist(),
        "h": reports[0].metadata.get("h"),
        "seed": reports[0].metadata.get("seed"),
    }
    return EvalReport.from_errors(methods, errors, errors_original, metadata)


def run_backtest(
    series: MultiSeries,
    methods: list[str],
    split: SplitSpec | None = None,
    h: int = 96,
    k_range: tuple[int, int] = (2, 200),
    seed: int = 0,
    ar_order: int | None = None,
    hw_grid: list[tuple[float, float, float]] | None = None,
    max_iter: int = 300,
    n_init: int = 10,
    dataset_id: str = "",
) -> EvalReport:
    """Train every method on the train block and score one forecast per test day.

    A method failing on a single forecast records +inf for that cell and
    logs a warning; failures during training propagate.
    """
    if not methods:
        raise ParameterError("no methods requested")
    for m in methods:
        if m not in METHOD_NAMES:
            raise ParameterError(
                f"unknown method {m!r}; expected one of {', '.join(METHOD_NAMES)}"
            )
    split = split or SplitSpec()
    train_block, valid_block, test_block = chrono_split(series, split, h)

    stats = compute_norm_stats(train_block)
    train_norm = normalize_values(train_block.values, stats)
    valid_norm = normalize_values(valid_block.values, stats)
    test_norm = normalize_values(test_block.values, stats)

    n_train_days = train_norm.shape[0] // h
    n_valid_days = valid_norm.shape[0] // h
    n_test_days = test_norm.shape[0] // h
    p = series.p

    test_days_norm = [test_norm[i * h : (i + 1) * h] for i in range(n_test_days)]
    test_days_orig = [
        test_block.values[i * h : (i + 1) * h] for i in range(n_test_days)
    ]
    # predecessor chain: last validation day, then the test days themselves
    prev_days_norm = [valid_norm[-h:]] + test_days_norm[:-1]
    history_norm = np.vstack([train_norm, valid_norm, test_norm])

    model: forecaster.DayAheadModel | None = None
    selected_k: int | None = None
    if "dayahead" in methods or "omniscient" in methods:
        selected_k, model = forecaster.select_k(
            train_block, valid_block, k_range, h, seed, max_iter=max_iter, n_init=n_init
        )

    mean_day_norm: np.ndarray | None = None
    if "meanday" in methods:
        mean_day_norm = baselines.forecast_mean_day(
            baselines.fit_mean_day(
                [DayMatrix(train_norm[i * h : (i + 1) * h]) for i in range(n_train_days)]
            )
        )

    order = ar_order if ar_order is not None else h
    ar_models: list[baselines.ARModel] | None = None
    if "ar" in methods:
        ar_models = [baselines.fit_ar(train_norm[:, j], order) for j in range(p)]

    hw_params: list[tuple[float, float, float]] | None = None
    if "hw" in methods:
        hw_params = []
        for j in range(p):
            m_fit = baselines.fit_hw(train_norm[:, j], h, grid=hw_grid)
            hw_params.append((m_fit.alpha, m_fit.beta, m_fit.gamma))

    def predict_dayahead(i: int) -> np.ndarray:
        assert model is not None
        cur = clustering.assign(model.clusters, DayMatrix(prev_days_norm[i]))
        nxt = markov.predict_next(model.transitions, cur)
        return model.clusters.centroid_day(nxt)

    def predict_omniscient(i: int) -> np.ndarray:
        assert model is not None
        true_cluster = clustering.assign(model.clusters, DayMatrix(test_days_norm[i]))
        return model.clusters.centroid_day(true_cluster)

    def predict_meanday(i: int) -> np.ndarray:
        assert mean_day_norm is not None
        return mean_day_norm

    def predict_ar(i: int) -> np.ndarray:
        assert ar_models is not None
        origin = (n_train_days + n_valid_days + i) * h
        cols = [
            baselines.forecast_ar(ar_models[j], history_norm[:origin, j], h)
            for j in range(p)
        ]
        return np.column_stack(cols)

    def predict_hw(i: int) -> np.ndarray:
        assert hw_params is not None
        origin = (n_train_days + n_valid_days + i) * h
        cols = []
        for j in range(p):
            m_run = baselines.fit_hw(history_norm[:origin, j], h, grid=[hw_params[j]])
            cols.append(baselines.forecast_hw(m_run, h))
        return np.column_stack(cols)

    predictors = {
        "dayahead": predict_dayahead,
        "omniscient": predict_omniscient,
        "meanday": predict_meanday,
        "ar": predict_ar,
        "hw": predict_hw,
    }

    errors = np.empty((n_test_days, len(methods)))
    errors_original = np.empty((n_test_days, len(methods)))
    for i in range(n_test_days):
        for c, name in enumerate(methods):
            try:
                pred_norm = predictors[name](i)
                errors[i, c] = mse(pred_norm, test_days_norm[i])
                errors_original[i, c] = mse(
                    denormalize_values(pred_norm, stats), test_days_orig[i]
                )
            except Exception:
                logger.warning(
                    "method %r failed on test day %d; recording +inf",
                    name, i, exc_info=True,
                )
                errors[i, c] = np.inf
                errors_original[i, c] = np.inf

    metadata = {
        "dataset_id": dataset_id,
        "h": h,
        "seed": seed,
        "k_range": [int(k_range[0]), int(k_range[1])],
        "selected_k": selected_k,
        "split": [split.train_frac, split.valid_frac, split.test_frac],
        "n_days": [n_train_days, n_valid_days, n_test_days],
        "ar_order": order if "ar" in methods else None,
        "dim_names": list(series.dim_names),
    }
    return EvalReport.from_errors(tuple(methods), errors, errors_original, metadata)
