"""Command line interface.

Subcommands: fit, select-bandwidth, region, simulate, bench.  All outputs are
plot-ready CSV plus JSON metadata; nothing is plotted directly.  Exit codes:
0 success, 2 validation failure, 3 numerical failure (degenerate weights or
variance, no events), 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import (
    default_covariate_box,
    default_time_box,
    pilot_r,
    pilot_s,
    select_bandwidth_1d,
    select_bandwidth_2d,
)
from .benchmark import BenchConfig, make_model, run_benchmark, scaling_study, write_report
from .dataio import DatasetSchema, filter_subpopulation, load_csv
from .errors import (
    DataValidationError,
    DegenerateVarianceError,
    DegenerateWeightsError,
    EmptyDatasetError,
    InsufficientReplicatesError,
    NoEventsError,
    SchemaError,
    SelectionFailedError,
)
from .estimators import beran_survival, kaplan_meier, smoothed_beran_survival
from .regions import region_method1, region_method2, write_region_csv
from .resampling import SCHEME_BERAN, SCHEME_SMOOTHED, ResamplingPlan
from .samples import TimeGrid

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4

_VALIDATION_ERRORS = (SchemaError, DataValidationError, EmptyDatasetError, ValueError)
_NUMERICAL_ERRORS = (
    DegenerateWeightsError,
    DegenerateVarianceError,
    NoEventsError,
    InsufficientReplicatesError,
    SelectionFailedError,
)


def _float_list(text: str) -> list[float]:
    return [float(part) for part in str(text).split(",") if part != ""]


def _pair(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise ValueError(f"expected 'low,high', got {text!r}")
    return (values[0], values[1])


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="input CSV path")
    parser.add_argument("--x-col", default="x", help="covariate column name")
    parser.add_argument("--z-col", default="z", help="observed-time column name")
    parser.add_argument("--status-col", default="delta", help="status column name (1=event)")
    parser.add_argument(
        "--filter",
        action="append",
        default=[],
        metavar="COL=VALUE",
        help="keep rows whose factor column equals VALUE; repeatable",
    )
    parser.add_argument("--support", type=_pair, default=None, help="covariate support 'a,b' for boundary reflection")


def _add_grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-grid", type=int, default=100, help="number of time grid points")
    parser.add_argument(
        "--t-max",
        type=float,
        default=None,
        help="upper end of the time grid (default: 0.95 sample quantile of the times)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condsurv",
        description="Conditional survival estimation with bootstrap bandwidths and confidence regions.",
    )
    parser.add_argument("--version", action="version", version=f"condsurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate survival curves on a dataset")
    _add_data_flags(fit)
    _add_grid_flags(fit)
    fit.add_argument("--estimator", choices=["beran", "smoothed-beran", "kaplan-meier"], default="beran")
    fit.add_argument("--x0", type=_float_list, default=[], help="conditioning covariate values, comma separated")
    fit.add_argument("--h", type=float, default=None, help="covariate bandwidth")
    fit.add_argument("--g", type=float, default=None, help="time bandwidth (smoothed estimator)")
    fit.add_argument("--out", required=True, help="output path prefix")

    sel = sub.add_parser("select-bandwidth", help="bootstrap bandwidth selection")
    _add_data_flags(sel)
    _add_grid_flags(sel)
    sel.add_argument("--estimator", choices=["beran", "smoothed-beran"], default="beran")
    sel.add_argument("--x0", type=_float_list, required=True)
    sel.add_argument("--B", type=int, default=500, help="number of bootstrap resamples")
    sel.add_argument("--seed", type=int, required=True)
    sel.add_argument("--c", type=float, default=1.5, help="covariate pilot constant")
    sel.add_argument("--strategy", choices=["grid", "multistart"], default="multistart")
    sel.add_argument("--grid-size", type=int, default=32)
    sel.add_argument("--box", type=_pair, default=None, help="covariate search interval 'low,high'")
    sel.add_argument("--box-g", type=_pair, default=None, help="time search interval 'low,high'")
    sel.add_argument("--fresh-resamples", action="store_true", help="draw new resamples per candidate")
    sel.add_argument("--out", required=True)

    reg = sub.add_parser("region", help="bootstrap confidence region for the survival curve")
    _add_data_flags(reg)
    _add_grid_flags(reg)
    reg.add_argument("--method", type=int, choices=[1, 2], default=1)
    reg.add_argument("--estimator", choices=["beran", "smoothed-beran"], default="beran")
    reg.add_argument("--x0", type=_float_list, required=True)
    reg.add_argument("--h", type=float, required=True)
    reg.add_argument("--g", type=float, default=None)
    reg.add_argument("--alpha", type=float, default=0.05)
    reg.add_argument("--B", type=int, default=500)
    reg.add_argument("--c", type=float, default=1.5)
    reg.add_argument("--seed", type=int, required=True)
    reg.add_argument("--out", required=True)

    for name, help_text in (
        ("simulate", "desk-scale simulation study on a closed-form model"),
        ("bench", "full-scale offline benchmark (defaults mirror the reference study)"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        full = name == "bench"
        cmd.add_argument("--model", choices=["model1", "model2"], default="model1")
        cmd.add_argument("--censoring", type=float, choices=[0.2, 0.5], default=0.2)
        cmd.add_argument(
            "--mode",
            choices=["bandwidth", "regions", "scaling"] if full else ["bandwidth", "regions"],
            default="bandwidth",
        )
        cmd.add_argument("--estimator", choices=["beran", "smoothed-beran"], default="beran")
        cmd.add_argument("--n", type=int, default=400)
        cmd.add_argument("--n-samples", type=int, default=300 if full else 50, help="number of simulated samples")
        cmd.add_argument("--B", type=int, default=500 if full else 100)
        cmd.add_argument("--n-grid", type=int, default=100)
        cmd.add_argument("--seed", type=int, required=True)
        cmd.add_argument("--strategy", choices=["grid", "multistart"], default="multistart")
        cmd.add_argument("--grid-size", type=int, default=32)
        cmd.add_argument("--alpha", type=float, default=0.05)
        cmd.add_argument("--h", type=float, default=None, help="fixed bandwidth for regions mode")
        cmd.add_argument("--g", type=float, default=None)
        cmd.add_argument("--mise-samples", type=int, default=100)
        cmd.add_argument("--mise-grid", type=int, default=24)
        cmd.add_argument("--workers", type=int, default=1)
        cmd.add_argument("--budget-minutes", type=float, default=None)
        if full:
            cmd.add_argument("--sizes", default="400,800", help="sample sizes for scaling mode")
        cmd.add_argument("--out", required=True, help="output directory")

    for sub_parser in sub.choices.values():
        sub_parser.add_argument("--config", default=None, help="JSON file whose entries override flags")
        sub_parser.add_argument("--error-json", default=None, help="write a machine-readable error record here on failure")
    return parser


def _apply_config_overrides(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)


def _load_dataset(args):
    filters: dict = {}
    for item in args.filter:
        if "=" not in item:
            raise ValueError(f"--filter expects COL=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        filters.setdefault(name, set()).add(value)
    schema = DatasetSchema(
        covariate_column=args.x_col,
        time_column=args.z_col,
        status_column=args.status_col,
        filter_columns=tuple(filters),
    )
    dataset = load_csv(args.data, schema)
    if filters:
        dataset = filter_subpopulation(dataset, filters)
    return dataset, sorted((k, sorted(v)) for k, v in filters.items())


def _build_grid(args, sample) -> TimeGrid:
    t_max = args.t_max
    if t_max is None:
        t_max = float(np.quantile(sample.z, 0.95))
    if t_max <= 0.0:
        raise ValueError("the time grid upper end must be positive")
    return TimeGrid.uniform(t_max, args.n_grid)


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_curve_csv(path, grid, values) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,s_hat\n")
        for t, v in zip(grid.points, values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def _x0_tag(x0: float) -> str:
    return f"{x0:g}".replace("-", "m").replace(".", "p")


def _cmd_fit(args) -> int:
    dataset, filters = _load_dataset(args)
    sample = dataset.sample
    grid = _build_grid(args, sample)
    meta_common = {
        "command": "fit",
        "estimator": args.estimator,
        "n": sample.n,
        "censoring_fraction": sample.censoring_fraction,
        "n_grid": grid.n_points,
        "t_max": grid.t_max,
        "filters": filters,
        "seed": None,
        "version": __version__,
    }
    if args.estimator == "kaplan-meier":
        curve = kaplan_meier(sample, grid)
        _write_curve_csv(f"{args.out}_km.csv", grid, curve.values)
        _write_json(f"{args.out}_km.json", meta_common | {"h": None, "g": None, "x0": None})
        return EXIT_OK
    if args.h is None:
        raise ValueError("--h is required for covariate-smoothing estimators")
    if not args.x0:
        raise ValueError("--x0 is required for covariate-smoothing estimators")
    if args.estimator == "smoothed-beran" and args.g is None:
        raise ValueError("--g is required for the smoothed estimator")
    for x0 in args.x0:
        if args.estimator == "beran":
            curve = beran_survival(sample, x0, args.h, grid, support=args.support)
        else:
            curve = smoothed_beran_survival(sample, x0, args.h, args.g, grid, support=args.support)
        stem = f"{args.out}_x{_x0_tag(x0)}"
        _write_curve_csv(f"{stem}.csv", grid, curve.values)
        _write_json(f"{stem}.json", meta_common | {"h": args.h, "g": args.g, "x0": x0})
    return EXIT_OK


def _cmd_select_bandwidth(args) -> int:
    dataset, filters = _load_dataset(args)
    sample = dataset.sample
    grid = _build_grid(args, sample)
    r = pilot_r(sample, args.c)
    box = args.box or default_covariate_box(sample)
    for x0 in args.x0:
        if args.estimator == "beran":
            plan = ResamplingPlan(SCHEME_BERAN, r, args.seed, args.B)
            selection = select_bandwidth_1d(
                sample, x0, box, plan, grid,
                strategy=args.strategy, grid_size=args.grid_size,
                support=args.support, fresh_resamples=args.fresh_resamples,
            )
        else:
            s = pilot_s(sample)
            box_g = args.box_g or default_time_box(sample)
            plan = ResamplingPlan(SCHEME_SMOOTHED, r, args.seed, args.B, pilot_s=s)
            selection = select_bandwidth_2d(
                sample, x0, box, box_g, plan, grid,
                strategy=args.strategy, grid_size=args.grid_size,
                support=args.support, fresh_resamples=args.fresh_resamples,
            )
        payload = {
            "command": "select-bandwidth",
            "estimator": args.estimator,
            "x0": x0,
            "h_star": selection.h_star,
            "g_star": selection.g_star,
            "pilot_r": selection.pilot_r,
            "pilot_s": selection.pilot_s,
            "search_box": selection.search_box,
            "objective_trace": selection.objective_trace,
            "B": selection.B,
            "seed": selection.seed,
            "n": sample.n,
            "censoring_fraction": sample.censoring_fraction,
            "n_grid": grid.n_points,
            "t_max": grid.t_max,
            "strategy": args.strategy,
            "filters": filters,
            "version": __version__,
        }
        _write_json(f"{args.out}_x{_x0_tag(x0)}.json", payload)
    return EXIT_OK


def _cmd_region(args) -> int:
    dataset, filters = _load_dataset(args)
    sample = dataset.sample
    grid = _build_grid(args, sample)
    r = pilot_r(sample, args.c)
    if args.estimator == "smoothed-beran":
        if args.g is None:
            raise ValueError("--g is required for the smoothed estimator")
        plan = ResamplingPlan(SCHEME_SMOOTHED, r, args.seed, args.B, pilot_s=pilot_s(sample))
    else:
        plan = ResamplingPlan(SCHEME_BERAN, r, args.seed, args.B)
    build = region_method1 if args.method == 1 else region_method2
    run_meta = {"B": args.B, "n": sample.n, "filters": filters, "version": __version__}
    for x0 in args.x0:
        region = build(
            sample, x0, args.h, plan, grid,
            alpha=args.alpha, g=args.g, estimator=args.estimator, support=args.support,
        )
        stem = f"{args.out}_x{_x0_tag(x0)}"
        write_region_csv(region, f"{stem}.csv", f"{stem}.json", extra=run_meta)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if getattr(args, "mode", None) == "scaling":
        model = make_model(args.model, args.censoring)
        sizes = [int(v) for v in _float_list(args.sizes)]
        result = scaling_study(model, sizes, args.B, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "timings.json", result)
        return EXIT_OK
    budget = None if args.budget_minutes is None else 60.0 * args.budget_minutes
    config = BenchConfig(
        model=args.model,
        censoring=args.censoring,
        estimator=args.estimator,
        mode=args.mode,
        n=args.n,
        n_samples=args.n_samples,
        B=args.B,
        n_grid=args.n_grid,
        seed=args.seed,
        strategy=args.strategy,
        grid_size=args.grid_size,
        alpha=args.alpha,
        bandwidth_h=args.h,
        bandwidth_g=args.g,
        mise_samples=args.mise_samples,
        mise_grid=args.mise_grid,
        workers=args.workers,
        budget_seconds=budget,
    )
    report = run_benchmark(config)
    write_report(report, args.out)
    return EXIT_BUDGET if report.incomplete else EXIT_OK


_DISPATCH = {
    "fit": _cmd_fit,
    "select-bandwidth": _cmd_select_bandwidth,
    "region": _cmd_region,
    "simulate": _cmd_simulate,
    "bench": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_overrides(args)
    try:
        return _DISPATCH[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        return _report_failure(args, exc, EXIT_NUMERICAL)
    except _VALIDATION_ERRORS as exc:
        return _report_failure(args, exc, EXIT_VALIDATION)
    except OSError as exc:
        return _report_failure(args, exc, EXIT_VALIDATION)


def _report_failure(args, exc: Exception, code: int) -> int:
    print(f"error: {exc}", file=sys.stderr)
    error_json = getattr(args, "error_json", None)
    if error_json:
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        if isinstance(exc, DataValidationError) and exc.line_number is not None:
            record["line_number"] = exc.line_number
        _write_json(error_json, record)
    return code


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
