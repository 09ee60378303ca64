"""Conditional product-limit survival estimators.

Conventions:
  weights    w_i(x) = K((x - X_i)/h) / sum_j K((x - X_j)/h)
  survival   S_h(t|x) = prod over sorted Z_(i) <= t of
                 (1 - delta_(i) w_(i) / (1 - sum_{j<i} w_(j)))
  smoothing  S_hg(t|x) = 1 - sum_i s_(i) IK((t - Z_(i))/g)
             with jump masses s_(i) = S_h(Z_(i-1)|x) - S_h(Z_(i)|x), Z_(0) := 0

Ties in Z are ordered uncensored-first.  When the at-risk mass in a
denominator falls below 1e-12 the factor is 1 if the event mass is also
negligible and 0 otherwise (the curve absorbs at zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightsError
from .kernels import DEFAULT_KERNEL, KernelSpec, kernel_fn, integrated_kernel_fn, reflect_covariates
from .samples import SurvivalCurve, SurvivalSample, TimeGrid

__all__ = ["BeranWeights", "beran_weights", "beran_survival", "kaplan_meier", "smoothed_beran_survival"]

_AT_RISK_EPS = 1e-12


@dataclass(frozen=True)
class BeranWeights:
    """Nadaraya-Watson covariate weights at a conditioning point."""

    w: np.ndarray
    x0: float
    h: float


def _sort_order(z: np.ndarray, events: np.ndarray) -> np.ndarray:
    # ascending z; at ties, rows with events == 1 come first
    return np.lexsort((1.0 - events, z))


def _augmented_covariates(sample: SurvivalSample, support):
    """Covariates for kernel evaluation: the reflected triple when a support is declared."""
    if support is None:
        return sample.x, False
    a, b = support
    if not b > a:
        raise ValueError("support must satisfy a < b")
    x = sample.x
    if np.any(x < a) or np.any(x > b):
        raise ValueError("all covariates must lie inside the declared support")
    return np.concatenate([x, 2.0 * a - x, 2.0 * b - x]), True


def _folded_query_weights(x_kern: np.ndarray, folded: bool, queries: np.ndarray, h: float, kfn, order=None):
    """Normalized weights of each original point at each query covariate.

    With reflection the three kernel values of a point and its mirror images
    are summed first; the product-limit over the reflected sample telescopes
    to the product-limit over the original points with these folded weights,
    so downstream arrays stay length n.  When `order` is given the weights
    are returned in that order and normalized after reordering, which keeps
    results bit-identical under permutations of the input sample.  `ok`
    marks queries with positive kernel mass.
    """
    k = kfn((np.asarray(queries, dtype=float)[:, None] - x_kern[None, :]) / h)
    if folded:
        k = k.reshape(k.shape[0], 3, -1).sum(axis=1)
    if order is not None:
        k = k[:, order]
    tot = k.sum(axis=1, keepdims=True)
    ok = tot[:, 0] > 0.0
    w = k / np.where(tot > 0.0, tot, 1.0)
    return w, ok


def _product_limit_rows(w: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Survival values after each sorted observation, one row per sample."""
    cum = np.cumsum(w, axis=1)
    at_risk = 1.0 - (cum - w)
    event = w * d
    # clamping the denominator avoids subnormal divisions; with the clip it
    # yields factor 0 whenever the at-risk mass is negligible but the event
    # mass is not, and the explicit fix restores factor 1 when both vanish
    factors = 1.0 - event / np.maximum(at_risk, _AT_RISK_EPS)
    np.clip(factors, 0.0, 1.0, out=factors)
    factors[(at_risk <= _AT_RISK_EPS) & (event <= _AT_RISK_EPS)] = 1.0
    return np.cumprod(factors, axis=1)


def _grid_counts(z_sorted: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Number of sorted observations with Z <= t for each query time."""
    return np.searchsorted(z_sorted, t, side="right")


def _step_values(surv: np.ndarray, counts: np.ndarray) -> np.ndarray:
    padded = np.concatenate(([1.0], surv))
    return padded[counts]


def _jumps_from_survival(surv: np.ndarray) -> np.ndarray:
    jumps = np.empty_like(surv)
    jumps[..., 0] = 1.0 - surv[..., 0]
    jumps[..., 1:] = surv[..., :-1] - surv[..., 1:]
    return jumps


def _validate_bandwidth(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number")
    return value


def beran_weights(
    sample: SurvivalSample,
    x0: float,
    h: float,
    kernel: KernelSpec = DEFAULT_KERNEL,
    support: tuple[float, float] | None = None,
) -> BeranWeights:
    """Covariate weights w_i(x0) at bandwidth h.

    When a support interval is given the weights are computed on the
    boundary-reflected sample and have length 3n.

    Raises
    ------
    DegenerateWeightsError
        If every kernel value is zero (x0 too far from all covariates at h).
    """
    h = _validate_bandwidth(h, "h")
    if support is not None:
        sample = reflect_covariates(sample, support)
    k = kernel_fn(kernel)((x0 - sample.x) / h)
    tot = k.sum()
    if not tot > 0.0:
        raise DegenerateWeightsError(
            f"all kernel weights vanish at x0={x0!r} with bandwidth h={h!r}"
        )
    return BeranWeights(w=k / tot, x0=float(x0), h=h)


def _conditional_survival_values(
    sample: SurvivalSample,
    x0: float,
    h: float,
    points: np.ndarray,
    kernel: KernelSpec,
    support,
    g: float | None = None,
    uniform: bool = False,
) -> np.ndarray:
    """Shared evaluation path for Beran, smoothed Beran and Kaplan-Meier."""
    order = _sort_order(sample.z, sample.delta)
    z_s = sample.z[order]
    d_s = sample.delta[order]
    if uniform:
        w = np.full((1, sample.n), 1.0 / sample.n)
    else:
        x_kern, folded = _augmented_covariates(sample, support)
        w, ok = _folded_query_weights(
            x_kern, folded, np.atleast_1d(float(x0)), h, kernel_fn(kernel), order=order
        )
        if not ok[0]:
            raise DegenerateWeightsError(
                f"all kernel weights vanish at x0={x0!r} with bandwidth h={h!r}"
            )
    surv = _product_limit_rows(w, d_s[None, :])[0]
    if g is None:
        return _step_values(surv, _grid_counts(z_s, points))
    jumps = _jumps_from_survival(surv)
    ik = integrated_kernel_fn(kernel)((points[:, None] - z_s[None, :]) / g)
    return np.clip(1.0 - ik @ jumps, 0.0, 1.0)


def beran_survival(
    sample: SurvivalSample,
    x0: float,
    h: float,
    grid: TimeGrid,
    kernel: KernelSpec = DEFAULT_KERNEL,
    support: tuple[float, float] | None = None,
) -> SurvivalCurve:
    """Kernel-weighted product-limit estimate of S(t | x0) on a time grid.

    The curve is a right-continuous step function; censored observations
    contribute a factor of one.
    """
    h = _validate_bandwidth(h, "h")
    values = _conditional_survival_values(sample, x0, h, grid.points, kernel, support)
    return SurvivalCurve(grid=grid, values=values, estimator_tag="beran", x0=float(x0), h=h)


def kaplan_meier(sample: SurvivalSample, grid: TimeGrid) -> SurvivalCurve:
    """Product-limit estimate with uniform weights 1/n (no covariate)."""
    values = _conditional_survival_values(
        sample, 0.0, 1.0, grid.points, DEFAULT_KERNEL, None, uniform=True
    )
    return SurvivalCurve(
        grid=grid, values=values, estimator_tag="kaplan-meier", x0=float("nan"), h=None
    )


def smoothed_beran_survival(
    sample: SurvivalSample,
    x0: float,
    h: float,
    g: float,
    grid: TimeGrid,
    kernel: KernelSpec = DEFAULT_KERNEL,
    support: tuple[float, float] | None = None,
) -> SurvivalCurve:
    """Doubly-smoothed estimate of S(t | x0): Beran jumps convolved in time.

    The Beran step curve at bandwidth h supplies jump masses which are spread
    by the integrated kernel at scale g, giving a continuous curve in t.
    """
    h = _validate_bandwidth(h, "h")
    g = _validate_bandwidth(g, "g")
    values = _conditional_survival_values(sample, x0, h, grid.points, kernel, support, g=g)
    return SurvivalCurve(
        grid=grid, values=values, estimator_tag="smoothed-beran", x0=float(x0), h=h, g=g
    )
