"""Bootstrap confidence regions for the conditional survival curve.

Method 1 calibrates a variance-scaled envelope: the multiplier lambda* is the
bisection solution of the Monte Carlo coverage equation, where a replicate
counts as covered when the pilot curve stays inside its envelope at every
grid point.  Method 2 is a norm ball: the radius rho* is an order statistic
of the replicate distances to the pilot curve, giving a constant-width band
under the sup norm.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .bandwidth import _CurveBatch, _pilot_values
from .errors import DegenerateVarianceError, DegenerateWeightsError, InsufficientReplicatesError
from .estimators import _conditional_survival_values
from .kernels import DEFAULT_KERNEL, KernelSpec
from .resampling import SCHEME_BERAN, SCHEME_SMOOTHED, ResamplingPlan, resample
from .samples import SurvivalCurve, SurvivalSample, TimeGrid, integrate_on_grid

__all__ = [
    "ConfidenceRegion",
    "bootstrap_sigma",
    "coverage_fraction",
    "calibrate_lambda",
    "region_method1",
    "region_method2",
    "method2_radius",
    "lp_distance",
    "clamp_and_plateau_fix",
    "write_region_csv",
]


@dataclass(frozen=True)
class ConfidenceRegion:
    """Lower/upper envelope for S(.|x0) over a time grid."""

    grid: TimeGrid
    lower: np.ndarray
    upper: np.ndarray
    estimate: np.ndarray
    method: str
    estimator_tag: str
    level: float
    calibration: float
    x0: float
    h: float | None = None
    g: float | None = None
    sigma_star: np.ndarray | None = None
    seed: int | None = None
    degenerate: bool = False

    @property
    def average_width(self) -> float:
        return float(np.mean(self.upper - self.lower))


def _curve_matrix(curves) -> np.ndarray:
    if isinstance(curves, np.ndarray):
        mat = np.asarray(curves, dtype=float)
    else:
        mat = np.stack(
            [c.values if isinstance(c, SurvivalCurve) else np.asarray(c, float) for c in curves]
        )
    if mat.ndim != 2:
        raise ValueError("curves must form a (B, n_T) matrix")
    return mat


def bootstrap_sigma(curves) -> np.ndarray:
    """Pointwise population standard deviation across bootstrap curves."""
    mat = _curve_matrix(curves)
    if mat.shape[0] < 2:
        raise InsufficientReplicatesError("need at least two bootstrap curves")
    return mat.std(axis=0)


def coverage_fraction(lam: float, pilot_values, curves, sigma_star) -> float:
    """Fraction of replicates whose envelope at width lam*sigma contains the pilot curve.

    Containment is checked at every grid point simultaneously, with closed
    intervals so that points where all curves coincide (sigma = 0) count as
    covered.  Nondecreasing in lam.
    """
    mat = _curve_matrix(curves)
    pilot = np.asarray(pilot_values, dtype=float)
    sigma = np.asarray(sigma_star, dtype=float)
    inside = np.abs(pilot[None, :] - mat) <= lam * sigma[None, :]
    return float(inside.all(axis=1).mean())


def calibrate_lambda(
    pilot_values,
    curves,
    sigma_star,
    alpha: float,
    zeta: float = 1e-4,
    max_iter: int = 60,
) -> float:
    """Bisection solution of the coverage equation p_hat(lambda) = 1 - alpha.

    The bracket starts at lambda_L = 0 and doubles lambda_H from 1 until the
    coverage reaches 1 - alpha.  Bisection stops on an exact hit or when the
    coverage gap across the bracket drops below `zeta`.
    """
    sigma = np.asarray(sigma_star, dtype=float)
    if not np.any(sigma > 0.0):
        raise DegenerateVarianceError("bootstrap standard deviation is identically zero")
    target = 1.0 - alpha

    def p_hat(lam: float) -> float:
        return coverage_fraction(lam, pilot_values, curves, sigma)

    lam_low, lam_high = 0.0, 1.0
    doublings = 0
    while p_hat(lam_high) < target:
        lam_high *= 2.0
        doublings += 1
        if doublings > 60:
            raise DegenerateVarianceError(
                "coverage never reaches the target level; envelope cannot bracket"
            )
    lam_mid = 0.5 * (lam_low + lam_high)
    for _ in range(max_iter):
        lam_mid = 0.5 * (lam_low + lam_high)
        p_mid = p_hat(lam_mid)
        if abs(p_mid - target) < 1e-12 or p_hat(lam_high) - p_hat(lam_low) < zeta:
            return lam_mid
        if p_mid > target:
            lam_high = lam_mid
        else:
            lam_low = lam_mid
    return lam_mid


def clamp_and_plateau_fix(region: ConfidenceRegion) -> ConfidenceRegion:
    """Clamp the envelope into [0, 1] and widen a degenerate leading plateau.

    When the first grid points have lower = upper = 1 (no data information
    near t = 0) the lower bound there is replaced by its first value below 1.
    If no grid point has lower < 1 the region is flagged degenerate.
    """
    lower = np.clip(region.lower, 0.0, 1.0)
    upper = np.clip(region.upper, 0.0, 1.0)
    degenerate = region.degenerate
    flat = (lower >= 1.0) & (upper >= 1.0)
    if flat[0]:
        below = np.flatnonzero(lower < 1.0)
        if below.size == 0:
            degenerate = True
        else:
            run_end = np.flatnonzero(~flat)
            lead = run_end[0] if run_end.size else lower.size
            first_drop = below[0]
            lower[: min(lead, first_drop)] = lower[first_drop]
    return replace(region, lower=lower, upper=upper, degenerate=degenerate)


def _region_inputs(sample, x0, h, g, plan, grid, kernel, estimator, support, resamples):
    if estimator == "beran":
        if plan.scheme != SCHEME_BERAN:
            raise ValueError("beran regions require a beran-scheme plan")
    elif estimator == "smoothed-beran":
        if plan.scheme != SCHEME_SMOOTHED:
            raise ValueError("smoothed-beran regions require a smoothed-beran-scheme plan")
        if g is None:
            raise ValueError("smoothed-beran regions require a time bandwidth g")
    else:
        raise ValueError(f"unknown estimator tag: {estimator!r}")
    if resamples is None:
        resamples = resample(sample, plan, kernel, support)[0]
    batch = _CurveBatch(resamples, grid.points, kernel, support)
    if estimator == "beran":
        curves, ok = batch.beran_values(x0, h)
    else:
        curves, ok = batch.smoothed_values(x0, h, g)
    if not ok.all():
        raise DegenerateWeightsError("a bootstrap curve degenerated at the requested bandwidth")
    pilot = _pilot_values(sample, x0, plan, grid.points, kernel, support)
    center = _conditional_survival_values(sample, x0, h, grid.points, kernel, support, g=g)
    return pilot, curves, center


def region_method1(
    sample: SurvivalSample,
    x0: float,
    h: float,
    plan: ResamplingPlan,
    grid: TimeGrid,
    kernel: KernelSpec = DEFAULT_KERNEL,
    alpha: float = 0.05,
    g: float | None = None,
    estimator: str = "beran",
    support: tuple[float, float] | None = None,
    resamples=None,
    zeta: float = 1e-4,
) -> ConfidenceRegion:
    """Variance-scaled envelope: estimate +- lambda* sigma*(t|x0), calibrated by bisection."""
    pilot, curves, center = _region_inputs(
        sample, x0, h, g, plan, grid, kernel, estimator, support, resamples
    )
    sigma = bootstrap_sigma(curves)
    lam = calibrate_lambda(pilot, curves, sigma, alpha, zeta)
    region = ConfidenceRegion(
        grid=grid,
        lower=center - lam * sigma,
        upper=center + lam * sigma,
        estimate=center,
        method="method1",
        estimator_tag=estimator,
        level=1.0 - alpha,
        calibration=lam,
        x0=float(x0),
        h=float(h),
        g=None if g is None else float(g),
        sigma_star=sigma,
        seed=plan.seed,
    )
    return clamp_and_plateau_fix(region)


def _order_statistic_index(B: int, alpha: float) -> int:
    # ceil(B(1-alpha)) with protection against float fuzz, at least 1
    return max(1, min(B, int(math.ceil(B * (1.0 - alpha) - 1e-9))))


def lp_distance(values_a, values_b, grid: TimeGrid, p) -> float:
    """L_p distance between two curves on the grid; p may be 1, 2 or "sup"."""
    diff = np.abs(np.asarray(values_a, float) - np.asarray(values_b, float))
    if p == "sup" or p == np.inf:
        return float(diff.max())
    if p in (1, 2):
        return float(integrate_on_grid(diff**p, grid) ** (1.0 / p))
    raise ValueError("p must be 1, 2 or 'sup'")


def method2_radius(pilot_values, curves, grid: TimeGrid, alpha: float, p="sup") -> float:
    """Order-statistic radius of the L_p ball around the estimate.

    For p in {1, 2} the radius defines a membership test only; the sup norm
    additionally yields the plottable constant-width envelope.
    """
    mat = _curve_matrix(curves)
    dists = np.array([lp_distance(row, pilot_values, grid, p) for row in mat])
    dists.sort()
    return float(dists[_order_statistic_index(mat.shape[0], alpha) - 1])


def region_method2(
    sample: SurvivalSample,
    x0: float,
    h: float,
    plan: ResamplingPlan,
    grid: TimeGrid,
    kernel: KernelSpec = DEFAULT_KERNEL,
    alpha: float = 0.05,
    g: float | None = None,
    estimator: str = "beran",
    support: tuple[float, float] | None = None,
    resamples=None,
    norm: str = "sup",
) -> ConfidenceRegion:
    """Sup-norm ball region: estimate +- rho*, constant width before clamping."""
    if norm != "sup":
        raise ValueError("only the sup norm has an envelope representation")
    pilot, curves, center = _region_inputs(
        sample, x0, h, g, plan, grid, kernel, estimator, support, resamples
    )
    rho = method2_radius(pilot, curves, grid, alpha, p="sup")
    region = ConfidenceRegion(
        grid=grid,
        lower=center - rho,
        upper=center + rho,
        estimate=center,
        method="method2",
        estimator_tag=estimator,
        level=1.0 - alpha,
        calibration=rho,
        x0=float(x0),
        h=float(h),
        g=None if g is None else float(g),
        seed=plan.seed,
    )
    return clamp_and_plateau_fix(region)


def write_region_csv(region: ConfidenceRegion, csv_path, sidecar_path=None, extra=None) -> None:
    """Write the region as CSV columns t, lower, estimate, upper plus a JSON sidecar.

    `extra` entries (for example run metadata such as B or a version string)
    are merged into the sidecar.
    """
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lower", "estimate", "upper"])
        for t, lo, est, up in zip(region.grid.points, region.lower, region.estimate, region.upper):
            writer.writerow([f"{v:.17g}" for v in (t, lo, est, up)])
    if sidecar_path is not None:
        meta = {
            "method": region.method,
            "estimator": region.estimator_tag,
            "level": region.level,
            "lambda_or_rho": region.calibration,
            "bandwidths": {"h": region.h, "g": region.g},
            "x0": region.x0,
            "seed": region.seed,
            "average_width": region.average_width,
            "degenerate": region.degenerate,
        }
        if extra:
            meta.update(extra)
        with open(sidecar_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
