"""Truncated-Gaussian kernel primitives and covariate boundary reflection.

Conventions:
  K(u)  renormalized Gaussian density on the truncation range, 0 outside
  IK(t) = integral of K over (-inf, t], clamped to 0 below the range and 1 above

With the default (-50, 50) range the truncation mass is exactly 1.0 in double
precision, so K and IK coincide bit-for-bit with the untruncated normal pdf/cdf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .samples import SurvivalSample

__all__ = [
    "KernelSpec",
    "DEFAULT_KERNEL",
    "eval_kernel",
    "eval_integrated_kernel",
    "kernel_fn",
    "integrated_kernel_fn",
    "kernel_rvs",
    "fold_into_support",
    "reflect_covariates",
]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and truncation range in kernel-argument units."""

    family: str = "truncated-gaussian"
    truncation_range: tuple[float, float] = (-50.0, 50.0)

    def __post_init__(self):
        if self.family != "truncated-gaussian":
            raise ValueError(f"unsupported kernel family: {self.family!r}")
        low, high = self.truncation_range
        if not (np.isfinite(low) and np.isfinite(high) and low < high):
            raise ValueError("truncation range must be a finite (low, high) with low < high")

    @property
    def mass(self) -> float:
        """Gaussian probability mass inside the truncation range."""
        low, high = self.truncation_range
        return float(ndtr(high) - ndtr(low))


DEFAULT_KERNEL = KernelSpec()


def _scalar_like(value, template):
    if np.ndim(template) == 0:
        return float(value)
    return value


def eval_kernel(spec: KernelSpec, u) -> float | np.ndarray:
    """Renormalized truncated-Gaussian density at u; 0 outside the range."""
    uu = np.asarray(u, dtype=float)
    low, high = spec.truncation_range
    dens = np.exp(-0.5 * uu * uu) * (_INV_SQRT_2PI / spec.mass)
    dens = np.where((uu < low) | (uu > high), 0.0, dens)
    return _scalar_like(dens, u)


def eval_integrated_kernel(spec: KernelSpec, t) -> float | np.ndarray:
    """Kernel distribution function at t, clamped to 0/1 outside the range."""
    tt = np.asarray(t, dtype=float)
    low, high = spec.truncation_range
    core = (ndtr(tt) - ndtr(low)) / spec.mass
    out = np.where(tt <= low, 0.0, np.where(tt >= high, 1.0, np.clip(core, 0.0, 1.0)))
    return _scalar_like(out, t)


def _is_effectively_untruncated(spec: KernelSpec) -> bool:
    low, high = spec.truncation_range
    return spec.mass == 1.0 and ndtr(low) == 0.0 and ndtr(high) == 1.0


def kernel_fn(spec: KernelSpec):
    """Vectorized density closure; plain Gaussian when truncation is numerically inert."""
    if _is_effectively_untruncated(spec):
        return lambda u: np.exp(-0.5 * np.square(u)) * _INV_SQRT_2PI
    return lambda u: eval_kernel(spec, np.asarray(u, dtype=float))


def integrated_kernel_fn(spec: KernelSpec):
    """Vectorized cdf closure; scipy's ndtr when truncation is numerically inert."""
    if _is_effectively_untruncated(spec):
        return ndtr
    return lambda t: eval_integrated_kernel(spec, np.asarray(t, dtype=float))


def kernel_rvs(spec: KernelSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Inverse-transform draws from the kernel density."""
    low, high = spec.truncation_range
    u = rng.random(size)
    with np.errstate(divide="ignore"):
        t = ndtri(ndtr(low) + u * spec.mass)
    return np.clip(t, low, high)


def fold_into_support(x, support: tuple[float, float]) -> np.ndarray:
    """Reflect points into (a, b) by repeated mirroring at the endpoints."""
    a, b = support
    if not b > a:
        raise ValueError("support must satisfy a < b")
    length = b - a
    y = np.mod(np.asarray(x, dtype=float) - a, 2.0 * length)
    return a + np.minimum(y, 2.0 * length - y)


def reflect_covariates(sample: SurvivalSample, support: tuple[float, float]) -> SurvivalSample:
    """Augment a sample with covariate reflections across both support endpoints.

    Each point contributes two mirror images, X -> 2a - X and X -> 2b - X, with
    (Z, delta) duplicated.  Used inside covariate-weight computation to correct
    kernel boundary bias.
    """
    a, b = support
    if not b > a:
        raise ValueError("support must satisfy a < b")
    x = sample.x
    if np.any(x < a) or np.any(x > b):
        raise ValueError("all covariates must lie inside the declared support")
    x_aug = np.concatenate([x, 2.0 * a - x, 2.0 * b - x])
    z_aug = np.tile(sample.z, 3)
    d_aug = np.tile(sample.delta, 3)
    return SurvivalSample(x=x_aug, z=z_aug, delta=d_aug)
