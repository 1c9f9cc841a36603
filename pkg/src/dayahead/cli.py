"""Command-line entry point.

Subcommands::

    dayahead synth     generate a synthetic KPI CSV (weekly or planted-k)
    dayahead train     select k, train a model, write it as JSON
    dayahead forecast  predict the next day from a one-day CSV
    dayahead evaluate  backtest the configured methods and write a report
    dayahead compare   re-render (and merge) stored evaluation reports

Every option can also be supplied through a flat key=value config file
(--config); explicit command-line flags win over the file, which wins
over the built-in defaults. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    DayAheadError,
    DayMatrix,
    InsufficientDataError,
    MultiSeries,
    ParameterError,
)
from .dataio import CsvFormatError, ingest_csv, shift_one_day, write_csv
from .evaluation import (
    EvalReport,
    SplitSpec,
    aggregate_reports,
    render_aggregate_table,
    render_table,
    run_backtest,
)
from .forecaster import forecast_next, load_model, save_model, select_k
from .synth import planted_k_series, weekly_series

logger = logging.getLogger(__name__)

DEFAULTS: dict = {
    "h": 96,
    "k_min": 2,
    "k_max": 200,
    "seed": 0,
    "split": "0.7,0.15,0.15",
    "methods": "dayahead,meanday,omniscient,ar,hw",
    "mode": "univariate",
    "jobs": 1,
    "ar_order": None,
    "hw_grid": None,
    "output_dir": ".",
    "original_units": False,
    "export_csv": False,
    # synth-only knobs
    "profile": "weekly",
    "days": 70,
    "noise": 0.0,
    "k": 3,
    "p": 1,
}


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    h: int = 96
    k_min: int = 2
    k_max: int = 200
    seed: int = 0
    split: SplitSpec = field(default_factory=SplitSpec)
    methods: list[str] = field(default_factory=lambda: list(DEFAULTS["methods"].split(",")))
    mode: str = "univariate"
    jobs: int = 1
    ar_order: int | None = None
    hw_grid: list[tuple[float, float, float]] | None = None
    input: str | None = None
    output_dir: str = "."
    original_units: bool = False
    export_csv: bool = False

    def __post_init__(self) -> None:
        if self.h < 1:
            raise ParameterError(f"h must be >= 1, got {self.h}")
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ParameterError(
                f"need 1 <= k_min <= k_max, got [{self.k_min}, {self.k_max}]"
            )
        if self.mode not in ("univariate", "multivariate"):
            raise ParameterError(f"mode must be univariate or multivariate, got {self.mode!r}")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be >= 1, got {self.jobs}")


def _read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; dashes equal underscores."""
    out: dict = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge_settings(args: argparse.Namespace, keys: list[str]) -> dict:
    """defaults < config file < explicit command-line flags.

    `input` may come from the config file; specific output files
    (--output, --model) are command-line only.
    """
    merged = {k: DEFAULTS[k] for k in keys}
    if getattr(args, "config", None):
        file_cfg = _read_config_file(args.config)
        unknown = set(file_cfg) - set(DEFAULTS) - {"input"}
        if unknown:
            raise ParameterError(
                f"unknown config keys: {', '.join(sorted(unknown))}"
            )
        for k in keys + ["input"]:
            if k in file_cfg:
                merged[k] = file_cfg[k]
    for k in keys + ["input"]:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _parse_split(text: str | SplitSpec) -> SplitSpec:
    if isinstance(text, SplitSpec):
        return text
    parts = [s for s in str(text).split(",") if s.strip()]
    if len(parts) != 3:
        raise ParameterError(f"--split needs 3 comma-separated fractions, got {text!r}")
    return SplitSpec(*(float(s) for s in parts))


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in str(text).split(",") if m.strip()]
    if not methods:
        raise ParameterError("--methods must name at least one method")
    return methods


def _parse_hw_grid(text) -> list[tuple[float, float, float]] | None:
    if text is None or isinstance(text, list):
        return text
    values = [float(s) for s in str(text).split(",") if s.strip()]
    if not values:
        raise ParameterError("--hw-grid must list at least one value")
    return list(itertools.product(values, values, values))


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    keys = [
        "h", "k_min", "k_max", "seed", "split", "methods", "mode", "jobs",
        "ar_order", "hw_grid", "output_dir", "original_units", "export_csv",
    ]
    m = _merge_settings(args, keys)
    return RunConfig(
        h=int(m["h"]),
        k_min=int(m["k_min"]),
        k_max=int(m["k_max"]),
        seed=int(m["seed"]),
        split=_parse_split(m["split"]),
        methods=_parse_methods(m["methods"]),
        mode=str(m["mode"]),
        jobs=int(m["jobs"]),
        ar_order=None if m["ar_order"] in (None, "", "none") else int(m["ar_order"]),
        hw_grid=_parse_hw_grid(m["hw_grid"]),
        input=m.get("input"),
        output_dir=str(m["output_dir"]),
        original_units=_as_bool(m["original_units"]),
        export_csv=_as_bool(m["export_csv"]),
    )


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def _require_input(cfg_input: str | None) -> Path:
    if not cfg_input:
        raise ParameterError("--input is required")
    path = Path(cfg_input)
    if not path.exists():
        raise ParameterError(f"input file not found: {path}")
    return path


def cmd_synth(args: argparse.Namespace) -> int:
    m = _merge_settings(args, ["profile", "days", "h", "noise", "seed", "k", "p"])
    profile = str(m["profile"])
    days, h, p = int(m["days"]), int(m["h"]), int(m["p"])
    noise, seed = float(m["noise"]), int(m["seed"])
    if not args.output:
        raise ParameterError("--output is required")
    if profile == "weekly":
        series, _ = weekly_series(days, h=h, noise=noise, seed=seed, p=p)
    elif profile in ("planted-k", "planted_k"):
        series, _ = planted_k_series(int(m["k"]), days, h=h, noise=noise, seed=seed, p=p)
    else:
        raise ParameterError(f"unknown profile {profile!r} (weekly or planted-k)")
    write_csv(series, args.output)
    print(f"wrote {days} days x {h} points x {p} dims to {args.output}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    series = ingest_csv(_require_input(cfg.input))
    d = series.n // cfg.h
    if d < cfg.k_min + 1:
        raise InsufficientDataError(
            f"need at least k_min+1 = {cfg.k_min + 1} complete days, got {d}"
        )
    # hold out the configured validation share (at least one day) for k selection
    n_valid = max(1, int(cfg.split.valid_frac * d + 1e-9))
    n_train = d - n_valid
    if n_train < cfg.k_min:
        n_valid, n_train = 1, d - 1
    boundary = n_train * cfg.h
    train_block = series.slice_rows(0, boundary)
    valid_block = series.slice_rows(boundary, d * cfg.h)

    best_k, model = select_k(
        train_block, valid_block, (cfg.k_min, cfg.k_max), cfg.h, cfg.seed
    )
    out = Path(args.output) if args.output else Path(cfg.output_dir) / "model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    print(f"selected k={best_k} on {n_train} train / {n_valid} validation days; wrote {out}")
    return 0


def cmd_forecast(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    if not args.model:
        raise ParameterError("--model is required")
    model = load_model(args.model)
    day_series = ingest_csv(_require_input(cfg.input))
    if day_series.n != model.h:
        raise DayAheadError(
            f"input day has {day_series.n} rows, model expects h={model.h}"
        )
    result = forecast_next(model, DayMatrix(day_series.values, day_index=0))
    out_series = MultiSeries(
        result.values,
        timestamps=shift_one_day(day_series.timestamps)
        if day_series.timestamps is not None
        else None,
        dim_names=day_series.dim_names,
    )
    out = Path(args.output) if args.output else Path(cfg.output_dir) / "forecast.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out_series, out, header_comments=[f"predicted_cluster={result.predicted_cluster}"])
    print(f"predicted cluster {result.predicted_cluster}; wrote {out}")
    return 0


def _backtest_column(series: MultiSeries, cfg: RunConfig, dataset_id: str) -> EvalReport:
    return run_backtest(
        series,
        methods=cfg.methods,
        split=cfg.split,
        h=cfg.h,
        k_range=(cfg.k_min, cfg.k_max),
        seed=cfg.seed,
        ar_order=cfg.ar_order,
        hw_grid=cfg.hw_grid,
        dataset_id=dataset_id,
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _build_run_config(args)
    path = _require_input(cfg.input)
    series = ingest_csv(path)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    if cfg.mode == "multivariate" or series.p == 1:
        report = _backtest_column(series, cfg, dataset_id=path.name)
        reports = [report]
        tables = [render_table(report, title=f"{path.name} ({cfg.mode})")]
    else:
        ids = [f"{path.name}:{name}" for name in series.dim_names]
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [
                pool.submit(_backtest_column, series.column(j), cfg, ids[j])
                for j in range(series.p)
            ]
            per_series = [f.result() for f in futures]
        for name, rep in zip(series.dim_names, per_series):
            rep.save(outdir / f"report_{name}.json")
        report = aggregate_reports(per_series)
        reports = per_series + [report]
        tables = [
            render_table(rep, title=ids[j]) for j, rep in enumerate(per_series)
        ] + [render_aggregate_table(report, title=f"{path.name} (aggregate over {series.p} series)")]

    report.save(outdir / "report.json")
    if cfg.export_csv:
        for rep in reports:
            tag = rep.metadata.get("dataset_id", "") or "aggregate"
            safe = tag.replace(":", "_").replace("/", "_") or "aggregate"
            rep.errors_to_csv(outdir / f"errors_{safe}.csv")
    if cfg.original_units:
        tables.append(
            render_table(report, title="Original-unit MSE", original_units=True)
        )
    text = "\n\n".join(tables) + "\n"
    (outdir / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    reports = [EvalReport.load(p) for p in args.reports]
    tables = [
        render_aggregate_table(r, title=r.metadata.get("dataset_id") or f"report {i + 1}")
        if "series_mean_error" in r.metadata
        else render_table(r, title=r.metadata.get("dataset_id") or f"report {i + 1}")
        for i, r in enumerate(reports)
    ]
    if len(reports) > 1:
        merged = aggregate_reports(reports)
        tables.append(render_aggregate_table(merged, title=f"aggregate over {len(reports)} reports"))
    print("\n\n".join(tables))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dayahead",
        description="Day-ahead KPI forecasting via typical-day clustering "
        "and Markov profile prediction.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--h", type=int, help="points per day (default 96)")
        p.add_argument("--seed", type=int, help="seed for all randomness (default 0)")

    p_synth = sub.add_parser("synth", help="generate a synthetic KPI CSV")
    add_common(p_synth)
    p_synth.add_argument("--profile", choices=["weekly", "planted-k"])
    p_synth.add_argument("--days", type=int, help="number of days (default 70)")
    p_synth.add_argument("--noise", type=float, help="additive noise stddev (default 0)")
    p_synth.add_argument("--k", type=int, help="shape count for planted-k (default 3)")
    p_synth.add_argument("--p", type=int, help="number of dimensions (default 1)")
    p_synth.add_argument("--output", required=True, help="CSV file to write")

    def add_eval_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", help="input KPI CSV")
        p.add_argument("--k-min", dest="k_min", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--split", help="train,validation,test fractions")
        p.add_argument("--output-dir", dest="output_dir")

    p_train = sub.add_parser("train", help="select k and write a model JSON")
    add_common(p_train)
    add_eval_flags(p_train)
    p_train.add_argument("--output", help="model file (default <output-dir>/model.json)")

    p_fc = sub.add_parser("forecast", help="forecast the next day from a one-day CSV")
    add_common(p_fc)
    p_fc.add_argument("--model", help="model JSON written by `dayahead train`")
    p_fc.add_argument("--input", help="CSV holding exactly one day (h rows)")
    p_fc.add_argument("--output", help="forecast CSV (default <output-dir>/forecast.csv)")
    p_fc.add_argument("--output-dir", dest="output_dir")

    p_eval = sub.add_parser("evaluate", help="backtest methods and write a report")
    add_common(p_eval)
    add_eval_flags(p_eval)
    p_eval.add_argument("--methods", help="comma list: dayahead,meanday,omniscient,ar,hw")
    p_eval.add_argument("--mode", choices=["univariate", "multivariate"])
    p_eval.add_argument("--jobs", type=int, help="parallel per-column backtests")
    p_eval.add_argument("--ar-order", dest="ar_order", type=int, help="AR lag count (default h)")
    p_eval.add_argument("--hw-grid", dest="hw_grid",
                        help="comma list of smoothing values; grid is its cube")
    p_eval.add_argument("--original-units", dest="original_units",
                        action="store_const", const=True,
                        help="also render the original-unit MSE table")
    p_eval.add_argument("--export-csv", dest="export_csv",
                        action="store_const", const=True,
                        help="export per-forecast error matrices as CSV")

    p_cmp = sub.add_parser("compare", help="re-render stored evaluation reports")
    p_cmp.add_argument("reports", nargs="+", help="EvalReport JSON files")

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (DayAheadError, CsvFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
