"""Day-ahead forecasting of multivariate server KPIs.

The method clusters historical days into typical profiles, models the
day-type sequence with a first-order Markov chain, and forecasts the
whole next day as the centroid of the most probable profile. Baseline
forecasters (mean day, omniscient cluster oracle, AR, Holt-Winters) and
a chronological backtesting protocol are included.
"""

from .baselines import (
    ARModel,
    HoltWintersModel,
    MeanDayModel,
    fit_ar,
    fit_hw,
    fit_mean_day,
    forecast_ar,
    forecast_hw,
    forecast_mean_day,
    forecast_omniscient,
)
from .clustering import ClusterModel, assign, encode_sequence, fit_kmeans
from .core import (
    DayAheadError,
    DayMatrix,
    GeometryError,
    InsufficientDataError,
    MultiSeries,
    NormStats,
    ParameterError,
    apply_norm,
    compute_norm_stats,
    denorm,
    split_days,
)
from .dataio import CsvFormatError, ingest_csv, write_csv
from .evaluation import (
    EvalReport,
    SplitSpec,
    aggregate_reports,
    chrono_split,
    mse,
    rank_methods,
    render_table,
    run_backtest,
)
from .forecaster import (
    DayAheadModel,
    Forecast,
    forecast_next,
    load_model,
    save_model,
    select_k,
    train,
)
from .markov import TransitionMatrix, fit_transitions, predict_next
from .synth import planted_k_series, weekly_series

__version__ = "0.1.0"

__all__ = [
    "ARModel",
    "ClusterModel",
    "CsvFormatError",
    "DayAheadError",
    "DayAheadModel",
    "DayMatrix",
    "EvalReport",
    "Forecast",
    "GeometryError",
    "HoltWintersModel",
    "InsufficientDataError",
    "MeanDayModel",
    "MultiSeries",
    "NormStats",
    "ParameterError",
    "SplitSpec",
    "TransitionMatrix",
    "aggregate_reports",
    "apply_norm",
    "assign",
    "chrono_split",
    "compute_norm_stats",
    "denorm",
    "encode_sequence",
    "fit_ar",
    "fit_hw",
    "fit_kmeans",
    "fit_mean_day",
    "fit_transitions",
    "forecast_ar",
    "forecast_hw",
    "forecast_mean_day",
    "forecast_next",
    "forecast_omniscient",
    "ingest_csv",
    "load_model",
    "mse",
    "planted_k_series",
    "predict_next",
    "rank_methods",
    "render_table",
    "run_backtest",
    "save_model",
    "select_k",
    "split_days",
    "train",
    "weekly_series",
    "write_csv",
]
