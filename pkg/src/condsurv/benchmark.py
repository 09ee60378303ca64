"""Monte Carlo benchmark harness for the simulation models.

Covers the ground-truth MISE curves, the bandwidth-selector study (relative
bandwidth and error metrics) and the confidence-region study (coverage,
width and Winkler scores).  All randomness flows from one master seed with a
fixed stream layout: (seed, 0, j) generates sample j, (seed, 1, j) seeds its
resampling plan, (seed, 3, 0) the reference sample for search boxes,
(seed, 4, .) the ground-truth MISE samples and (seed, 5, .) the RMISE
evaluation samples.  Sample tasks are pure functions of their index, so
reports do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .bandwidth import (
    _CurveBatch,
    _quantile_spread,
    default_covariate_box,
    default_time_box,
    pilot_r,
    pilot_s,
    select_bandwidth_1d,
    select_bandwidth_2d,
)
from .kernels import DEFAULT_KERNEL, KernelSpec
from .regions import region_method1, region_method2
from .resampling import SCHEME_BERAN, SCHEME_SMOOTHED, ResamplingPlan, child_seed, resample, substream
from .samples import TimeGrid, integrate_on_grid
from .simulation import SimModel, generate_sample, make_model

__all__ = [
    "BenchConfig",
    "BenchReport",
    "BandwidthMetrics",
    "RegionMetrics",
    "mc_mise",
    "mise_optimal_1d",
    "mise_optimal_2d",
    "relative_metrics",
    "winkler_scores",
    "region_metrics",
    "run_benchmark",
    "write_report",
    "time_bandwidth_selection",
    "scaling_study",
]


@dataclass(frozen=True)
class BenchConfig:
    """Parameters of one benchmark run; defaults give a quick desk-scale study."""

    model: str = "model1"
    censoring: float = 0.2
    estimator: str = "beran"
    mode: str = "bandwidth"
    n: int = 400
    n_samples: int = 50
    B: int = 200
    n_grid: int = 100
    seed: int = 0
    strategy: str = "multistart"
    grid_size: int = 32
    alpha: float = 0.05
    methods: tuple[int, ...] = (1, 2)
    bandwidth_h: float | None = None
    bandwidth_g: float | None = None
    box_h: tuple[float, float] | None = None
    box_g: tuple[float, float] | None = None
    mise_samples: int = 100
    mise_grid: int = 24
    workers: int = 1
    budget_seconds: float | None = None
    keep_regions: bool = False

    def __post_init__(self):
        if self.mode not in ("bandwidth", "regions"):
            raise ValueError("mode must be 'bandwidth' or 'regions'")
        if self.estimator not in ("beran", "smoothed-beran"):
            raise ValueError("estimator must be 'beran' or 'smoothed-beran'")


@dataclass
class BandwidthMetrics:
    """Summary of selected bandwidths relative to the MISE-optimal benchmark."""

    mean_h: float
    sd_h: float
    h_bar: float
    r_bar: float
    mean_rmise_selected: float
    mean_g: float | None = None
    sd_g: float | None = None


@dataclass
class RegionMetrics:
    """Aggregate quality measures of a set of confidence regions."""

    coverage: float
    pointwise_coverage: float
    average_width: float
    iws: float


@dataclass
class BenchReport:
    """Outcome of one benchmark run; `regions` is kept only in memory."""

    model: str
    censoring: float
    estimator: str
    mode: str
    n: int
    n_samples: int
    B: int
    n_grid: int
    seed: int
    samples_completed: int
    incomplete: bool
    h_mise: float | None = None
    g_mise: float | None = None
    rmise_at_optimal: float | None = None
    bandwidth_metrics: BandwidthMetrics | None = None
    h_stars: list | None = None
    g_stars: list | None = None
    region_metrics_by_method: dict | None = None
    bandwidth_h: float | None = None
    bandwidth_g: float | None = None
    alpha: float | None = None
    regions: dict | None = field(default=None, repr=False)


def mc_mise(
    model: SimModel,
    estimator,
    h: float | None = None,
    g: float | None = None,
    *,
    n_samples: int,
    n: int,
    grid: TimeGrid,
    seed: int,
    kernel: KernelSpec = DEFAULT_KERNEL,
) -> float:
    """Monte Carlo MISE of an estimator against the model truth at x0.

    `estimator` is "beran", "smoothed-beran", or a callable mapping
    (sample, grid) to curve values (used to check the harness itself).
    Fresh samples are drawn from streams (seed, j).
    """
    truth = np.asarray(model.true_survival(grid.points, model.x0))
    widths = grid.cell_widths
    samples = [generate_sample(model, n, substream(seed, j)) for j in range(n_samples)]
    if callable(estimator):
        integrals = [
            integrate_on_grid((np.asarray(estimator(s, grid)) - truth) ** 2, grid)
            for s in samples
        ]
        return float(np.mean(integrals))
    batch = _CurveBatch(samples, grid.points, kernel, model.support)
    if estimator == "beran":
        values, ok = batch.beran_values(model.x0, float(h))
    elif estimator == "smoothed-beran":
        values, ok = batch.smoothed_values(model.x0, float(h), float(g))
    else:
        raise ValueError(f"unknown estimator: {estimator!r}")
    if not ok.all():
        return float("inf")
    diff = values - truth
    return float(np.mean((diff * diff) @ widths))


def _truth_and_batch(model, grid, n_samples, n, seed, kernel):
    samples = [generate_sample(model, n, substream(seed, j)) for j in range(n_samples)]
    batch = _CurveBatch(samples, grid.points, kernel, model.support)
    truth = np.asarray(model.true_survival(grid.points, model.x0))
    return batch, truth


def mise_optimal_1d(
    model: SimModel,
    box: tuple[float, float],
    grid: TimeGrid,
    *,
    n_samples: int,
    n: int,
    n_candidates: int,
    seed: int,
    kernel: KernelSpec = DEFAULT_KERNEL,
) -> tuple[float, float]:
    """Grid search for the MISE-optimal Beran bandwidth; returns (h, rmise).

    The same Monte Carlo samples are reused for every candidate.
    """
    batch, truth = _truth_and_batch(model, grid, n_samples, n, seed, kernel)
    widths = grid.cell_widths
    best_h, best_val = None, np.inf
    for h in np.linspace(box[0], box[1], n_candidates):
        values, ok = batch.beran_values(model.x0, float(h))
        if not ok.all():
            continue
        diff = values - truth
        val = float(np.mean((diff * diff) @ widths))
        if val < best_val:
            best_h, best_val = float(h), val
    if best_h is None:
        raise ValueError("no candidate bandwidth produced a finite MISE")
    return best_h, float(np.sqrt(best_val))


def mise_optimal_2d(
    model: SimModel,
    box_h: tuple[float, float],
    box_g: tuple[float, float],
    grid: TimeGrid,
    *,
    n_samples: int,
    n: int,
    n_candidates: int,
    seed: int,
    kernel: KernelSpec = DEFAULT_KERNEL,
) -> tuple[float, float, float]:
    """Mesh search for the MISE-optimal smoothed pair; returns (h, g, rmise)."""
    batch, truth = _truth_and_batch(model, grid, n_samples, n, seed, kernel)
    widths = grid.cell_widths
    best, best_val = None, np.inf
    for h in np.linspace(box_h[0], box_h[1], n_candidates):
        for g in np.linspace(box_g[0], box_g[1], n_candidates):
            values, ok = batch.smoothed_values(model.x0, float(h), float(g))
            if not ok.all():
                continue
            diff = values - truth
            val = float(np.mean((diff * diff) @ widths))
            if val < best_val:
                best, best_val = (float(h), float(g)), val
    if best is None:
        raise ValueError("no candidate pair produced a finite MISE")
    return best[0], best[1], float(np.sqrt(best_val))


def relative_metrics(
    selections,
    h_mise: float,
    rmise_selected,
    rmise_optimal: float,
    g_mise: float | None = None,
) -> BandwidthMetrics:
    """Relative bandwidth deviations and relative RMISE inflation.

    For one-dimensional selections the deviation statistic is the mean
    absolute relative difference from the optimal bandwidth; for pairs it is
    the mean Euclidean norm of the componentwise relative deviation vector.
    Raw relative RMISE differences are averaged without clipping, so slightly
    negative values can occur at reduced Monte Carlo scale.
    """
    h_stars = np.array([s.h_star for s in selections], dtype=float)
    rmise_selected = np.asarray(rmise_selected, dtype=float)
    rel_h = (h_stars - h_mise) / h_mise
    mean_g = sd_g = None
    if g_mise is not None:
        g_stars = np.array([s.g_star for s in selections], dtype=float)
        rel_g = (g_stars - g_mise) / g_mise
        h_bar = float(np.mean(np.hypot(rel_h, rel_g)))
        mean_g, sd_g = float(g_stars.mean()), float(g_stars.std())
    else:
        h_bar = float(np.mean(np.abs(rel_h)))
    r_bar = float(np.mean((rmise_selected - rmise_optimal) / rmise_optimal))
    return BandwidthMetrics(
        mean_h=float(h_stars.mean()),
        sd_h=float(h_stars.std()),
        h_bar=h_bar,
        r_bar=r_bar,
        mean_rmise_selected=float(rmise_selected.mean()),
        mean_g=mean_g,
        sd_g=sd_g,
    )


def winkler_scores(lower, upper, truth, alpha: float) -> np.ndarray:
    """Interval width plus the 2/alpha out-of-interval penalty, pointwise."""
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    truth = np.asarray(truth, float)
    width = upper - lower
    penalty = (2.0 / alpha) * (
        (lower - truth) * (truth < lower) + (truth - upper) * (truth > upper)
    )
    return width + penalty


def region_metrics(regions, model: SimModel) -> RegionMetrics:
    """Coverage, pointwise coverage, average width and integrated Winkler score.

    Coverage counts a region only when the true curve lies strictly inside at
    every grid point; pointwise coverage averages the per-point indicator.
    """
    regions = list(regions)
    grid = regions[0].grid
    truth = np.asarray(model.true_survival(grid.points, model.x0))
    full, pointwise, widths, iws = [], [], [], []
    for region in regions:
        inside = (truth > region.lower) & (truth < region.upper)
        full.append(bool(inside.all()))
        pointwise.append(float(inside.mean()))
        widths.append(float(np.mean(region.upper - region.lower)))
        scores = winkler_scores(region.lower, region.upper, truth, 1.0 - region.level)
        iws.append(integrate_on_grid(scores, grid))
    return RegionMetrics(
        coverage=float(np.mean(full)),
        pointwise_coverage=float(np.mean(pointwise)),
        average_width=float(np.mean(widths)),
        iws=float(np.mean(iws)),
    )


def _build_plan(sample, model, config, j) -> ResamplingPlan:
    seed = child_seed(config.seed, 1, j)
    r = pilot_r(sample, model.pilot_c)
    if config.estimator == "beran":
        return ResamplingPlan(SCHEME_BERAN, r, seed, config.B)
    return ResamplingPlan(SCHEME_SMOOTHED, r, seed, config.B, pilot_s=pilot_s(sample))


def _select_task(config, model, grid, box_h, box_g, j):
    sample = generate_sample(model, config.n, substream(config.seed, 0, j))
    plan = _build_plan(sample, model, config, j)
    if config.estimator == "beran":
        sel = select_bandwidth_1d(
            sample, model.x0, box_h, plan, grid,
            strategy=config.strategy, grid_size=config.grid_size, support=model.support,
        )
    else:
        sel = select_bandwidth_2d(
            sample, model.x0, box_h, box_g, plan, grid,
            strategy=config.strategy, grid_size=config.grid_size, support=model.support,
        )
    return sel


def _region_task(config, model, grid, h, g, j):
    sample = generate_sample(model, config.n, substream(config.seed, 0, j))
    plan = _build_plan(sample, model, config, j)
    shared = resample(sample, plan, DEFAULT_KERNEL, model.support)[0]
    out = {}
    for method in config.methods:
        build = region_method1 if method == 1 else region_method2
        out[method] = build(
            sample, model.x0, h, plan, grid,
            alpha=config.alpha, g=g, estimator=config.estimator,
            support=model.support, resamples=shared,
        )
    return out


def _map_with_budget(fn, n_tasks: int, workers: int, deadline: float | None):
    results, incomplete = [], False
    if workers <= 1:
        for j in range(n_tasks):
            if deadline is not None and time.perf_counter() > deadline:
                incomplete = True
                break
            results.append(fn(j))
        return results, incomplete
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, j) for j in range(n_tasks)]
        for j, fut in enumerate(futures):
            if deadline is not None and time.perf_counter() > deadline:
                incomplete = True
                for later in futures[j:]:
                    later.cancel()
                break
            results.append(fut.result())
    return results, incomplete


def run_benchmark(config: BenchConfig) -> BenchReport:
    """Run one bandwidth-selection or confidence-region study.

    A wall-clock budget, when set, is checked between per-sample tasks; on
    expiry the report carries the completed prefix and is flagged incomplete.
    """
    model = make_model(config.model, config.censoring)
    grid = TimeGrid.uniform(model.t_max, config.n_grid)
    reference = generate_sample(model, config.n, substream(config.seed, 3, 0))
    # the upper end stops at one covariate spread: beyond it the weights are
    # effectively uniform and the estimate degenerates to the marginal curve
    spread = _quantile_spread(reference.x)
    box_h = config.box_h or (0.05 * spread, spread)
    box_g = config.box_g or default_time_box(reference)
    deadline = None
    if config.budget_seconds is not None:
        deadline = time.perf_counter() + config.budget_seconds

    report = BenchReport(
        model=config.model,
        censoring=config.censoring,
        estimator=config.estimator,
        mode=config.mode,
        n=config.n,
        n_samples=config.n_samples,
        B=config.B,
        n_grid=config.n_grid,
        seed=config.seed,
        samples_completed=0,
        incomplete=False,
        alpha=config.alpha,
    )

    if config.mode == "bandwidth":
        mise_seed = child_seed(config.seed, 4)
        if config.estimator == "beran":
            h_mise, rmise_opt = mise_optimal_1d(
                model, box_h, grid,
                n_samples=config.mise_samples, n=config.n,
                n_candidates=config.mise_grid, seed=mise_seed,
            )
            g_mise = None
        else:
            h_mise, g_mise, rmise_opt = mise_optimal_2d(
                model, box_h, box_g, grid,
                n_samples=config.mise_samples, n=config.n,
                n_candidates=config.mise_grid, seed=mise_seed,
            )
        task = partial(_select_task, config, model, grid, box_h, box_g)
        selections, incomplete = _map_with_budget(task, config.n_samples, config.workers, deadline)
        report.incomplete = incomplete
        report.samples_completed = len(selections)
        report.h_mise, report.g_mise, report.rmise_at_optimal = h_mise, g_mise, rmise_opt
        if selections:
            eval_seed = child_seed(config.seed, 5)
            eval_batch, truth = _truth_and_batch(
                model, grid, config.mise_samples, config.n, eval_seed, DEFAULT_KERNEL
            )
            widths = grid.cell_widths

            def rmise_at(h, g=None):
                if config.estimator == "beran":
                    values, ok = eval_batch.beran_values(model.x0, h)
                else:
                    values, ok = eval_batch.smoothed_values(model.x0, h, g)
                diff = values - truth
                return float(np.sqrt(np.mean((diff * diff) @ widths)))

            rmise_selected = [rmise_at(s.h_star, s.g_star) for s in selections]
            rmise_ref = rmise_at(h_mise, g_mise)
            report.bandwidth_metrics = relative_metrics(
                selections, h_mise, rmise_selected, rmise_ref, g_mise=g_mise
            )
            report.h_stars = [s.h_star for s in selections]
            if g_mise is not None:
                report.g_stars = [s.g_star for s in selections]
        return report

    # regions mode
    h, g = config.bandwidth_h, config.bandwidth_g
    if h is None:
        mise_seed = child_seed(config.seed, 4)
        if config.estimator == "beran":
            h, _ = mise_optimal_1d(
                model, box_h, grid,
                n_samples=config.mise_samples, n=config.n,
                n_candidates=config.mise_grid, seed=mise_seed,
            )
        else:
            h, g, _ = mise_optimal_2d(
                model, box_h, box_g, grid,
                n_samples=config.mise_samples, n=config.n,
                n_candidates=config.mise_grid, seed=mise_seed,
            )
    if config.estimator == "smoothed-beran" and g is None:
        raise ValueError("regions with the smoothed estimator need bandwidth_g")
    task = partial(_region_task, config, model, grid, h, g)
    per_sample, incomplete = _map_with_budget(task, config.n_samples, config.workers, deadline)
    report.incomplete = incomplete
    report.samples_completed = len(per_sample)
    report.bandwidth_h, report.bandwidth_g = h, g
    if per_sample:
        report.region_metrics_by_method = {
            f"method{m}": asdict(region_metrics([row[m] for row in per_sample], model))
            for m in config.methods
        }
        if config.keep_regions:
            report.regions = {m: [row[m] for row in per_sample] for m in config.methods}
    return report


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def report_to_dict(report: BenchReport) -> dict:
    data = asdict(report)
    data.pop("regions", None)
    return _jsonable(data)


def write_report(report: BenchReport, out_dir) -> None:
    """Write report.json plus a metric table CSV shaped like the study tables."""
    from . import __version__

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = report_to_dict(report)
    data["version"] = __version__
    with open(out / "report.json", "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if report.mode == "bandwidth" and report.bandwidth_metrics is not None:
        bm = report.bandwidth_metrics
        rows = [
            ("h_mise", report.h_mise),
            ("g_mise", report.g_mise),
            ("rmise_at_optimal", report.rmise_at_optimal),
            ("mean_h_star", bm.mean_h),
            ("sd_h_star", bm.sd_h),
            ("mean_g_star", bm.mean_g),
            ("sd_g_star", bm.sd_g),
            ("H_bar", bm.h_bar),
            ("mean_rmise_at_selected", bm.mean_rmise_selected),
            ("R_bar", bm.r_bar),
        ]
        with open(out / "bandwidth_table.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            for name, value in rows:
                if value is not None:
                    writer.writerow([name, f"{value:.17g}"])
    if report.mode == "regions" and report.region_metrics_by_method is not None:
        methods = sorted(report.region_metrics_by_method)
        with open(out / "region_table.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric"] + methods)
            for name in ("average_width", "coverage", "pointwise_coverage", "iws"):
                row = [name]
                for m in methods:
                    row.append(f"{report.region_metrics_by_method[m][name]:.17g}")
                writer.writerow(row)


def time_bandwidth_selection(
    model: SimModel,
    n: int,
    B: int,
    seed: int,
    n_grid: int = 100,
    strategy: str = "grid",
    grid_size: int = 16,
) -> float:
    """Wall-clock seconds for one full bandwidth selection at sample size n."""
    sample = generate_sample(model, n, substream(seed, 0, 0))
    grid = TimeGrid.uniform(model.t_max, n_grid)
    plan = ResamplingPlan(SCHEME_BERAN, pilot_r(sample, model.pilot_c), child_seed(seed, 1, 0), B)
    box = default_covariate_box(sample)
    start = time.perf_counter()
    select_bandwidth_1d(
        sample, model.x0, box, plan, grid,
        strategy=strategy, grid_size=grid_size, support=model.support,
    )
    return time.perf_counter() - start


def scaling_study(model: SimModel, sizes, B: int, seed: int, **kwargs) -> dict:
    """Selection timings across sample sizes; cost grows superlinearly in n."""
    timings = {int(n): time_bandwidth_selection(model, int(n), B, seed, **kwargs) for n in sizes}
    sizes = sorted(timings)
    ratios = {
        f"{sizes[i + 1]}/{sizes[i]}": timings[sizes[i + 1]] / timings[sizes[i]]
        for i in range(len(sizes) - 1)
    }
    return {"B": B, "timings_seconds": timings, "ratios": ratios}
