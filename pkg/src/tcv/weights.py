"""Weight functions for targeted selection.

A weight maps a predictor row (and the experiment's sample size n) to a
nonnegative real.  Selection is invariant under positive scaling of the
weight, so normalization is tracked but only needed for reporting:
``exact`` divides by a known constant so E[W(X)] = 1 under the declared
predictor distribution, ``empirical`` divides by the mean raw weight of the
batch being scored, ``unnormalized`` returns raw values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidVarianceError, InvalidWeightError
from .regions import EVERYWHERE, Region

EXACT = "exact"
EMPIRICAL = "empirical"
UNNORMALIZED = "unnormalized"


class WeightFunction:
    """Base: callable (x rows, n) -> weight values, plus metadata."""

    sup_bound: float | None = None
    normalization: str = UNNORMALIZED

    def raw(self, x: np.ndarray, n: int) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, x: np.ndarray, n: int) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = self.raw(x, n)
        if self.normalization == EMPIRICAL:
            m = v.mean()
            if m > 0:
                v = v / m
        return v


@dataclass(eq=False)
class RegionWeight(WeightFunction):
    """W(x) = 1(x in region) / C  (Example-style region weight)."""

    region: Region
    prob_region: float | None = None

    def __post_init__(self):
        if self.prob_region is not None and not 0.0 < self.prob_region <= 1.0:
            raise InvalidWeightError(f"prob_region must be in (0, 1], got {self.prob_region}")
        c = self.prob_region if self.prob_region is not None else 1.0
        self.sup_bound = 1.0 / c
        self.normalization = EXACT if self.prob_region is not None else UNNORMALIZED

    def raw(self, x, n):
        c = self.prob_region if self.prob_region is not None else 1.0
        return self.region.mask(x).astype(float) / c


@dataclass(eq=False)
class VarianceWeight(WeightFunction):
    """W(x) = (1/sigma2(x)) / norm_const  (inverse conditional variance)."""

    sigma2: Callable[[np.ndarray], np.ndarray]
    norm_const: float

    def __post_init__(self):
        if not self.norm_const > 0:
            raise InvalidWeightError("norm_const must be positive")
        self.sup_bound = None
        self.normalization = EXACT

    def raw(self, x, n):
        s2 = np.asarray(self.sigma2(x), dtype=float).ravel()
        if s2.shape[0] != x.shape[0]:
            s2 = np.broadcast_to(s2, (x.shape[0],)).astype(float)
        if np.any(s2 <= 0):
            raise InvalidVarianceError("sigma2 must be positive at every evaluation point")
        return 1.0 / s2 / self.norm_const


@dataclass(eq=False)
class PointWeight(WeightFunction):
    """W_n(x) proportional to exp(-||x - center||^2 * n).

    The sharpness grows with the experiment's sample size n, concentrating
    the target at the center point.
    """

    center: np.ndarray
    norm_const: float | None = None  # None -> empirical normalization

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).ravel()
        if not np.all(np.isfinite(self.center)):
            raise InvalidWeightError("center must be finite")
        if self.norm_const is not None:
            if not self.norm_const > 0:
                raise InvalidWeightError("norm_const must be positive")
            self.sup_bound = 1.0 / self.norm_const
            self.normalization = EXACT
        else:
            self.sup_bound = None
            self.normalization = EMPIRICAL

    def raw(self, x, n):
        d2 = np.sum((x - self.center) ** 2, axis=1)
        v = np.exp(-d2 * n)
        if self.norm_const is not None:
            v = v / self.norm_const
        return v


@dataclass(eq=False)
class PiecewiseWeight(WeightFunction):
    """Two-level weight: w_in inside the region, w_out outside."""

    region: Region
    w_in: float
    w_out: float

    def __post_init__(self):
        if self.w_in < 0 or self.w_out < 0:
            raise InvalidWeightError("weight levels must be nonnegative")
        if self.w_in + self.w_out <= 0:
            raise InvalidWeightError("at least one weight level must be positive")
        self.sup_bound = max(self.w_in, self.w_out)
        self.normalization = UNNORMALIZED

    def raw(self, x, n):
        inside = self.region.mask(x)
        return np.where(inside, self.w_in, self.w_out)


@dataclass(eq=False)
class ScaledWeight(WeightFunction):
    """kappa * base, used by the scale-invariance tests."""

    base: WeightFunction
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidWeightError("kappa must be positive")
        self.sup_bound = (None if self.base.sup_bound is None
                          else self.kappa * self.base.sup_bound)
        self.normalization = self.base.normalization

    def raw(self, x, n):
        return self.kappa * self.base.raw(x, n)


def region_weight(region: Region, prob_region: float | None = None) -> RegionWeight:
    return RegionWeight(region, prob_region)


def variance_weight(sigma2: Callable, norm_const: float) -> VarianceWeight:
    return VarianceWeight(sigma2, norm_const)


def point_weight(center, norm_const: float | None = None) -> PointWeight:
    return PointWeight(center, norm_const)


def piecewise_weight(region: Region, w_in: float, w_out: float) -> PiecewiseWeight:
    return PiecewiseWeight(region, w_in, w_out)


def constant_weight(value: float = 1.0) -> PiecewiseWeight:
    """W identically equal to ``value``; value 1 makes TCV the regular CV."""
    return PiecewiseWeight(EVERYWHERE, value, value)


def weight_sup(w: WeightFunction, probe, n: int | None = None) -> float:
    """Essential supremum of the weight: declared bound, else probe max.

    When ``w.sup_bound`` is None the value is an empirical surrogate (the
    max over the probe rows) and reports should flag it as such.
    """
    if w.sup_bound is not None:
        return float(w.sup_bound)
    x = probe.x if hasattr(probe, "x") else np.atleast_2d(np.asarray(probe, dtype=float))
    if x.shape[0] == 0:
        raise InvalidWeightError("probe sample must be nonempty")
    if n is None:
        n = x.shape[0]
    return float(np.max(w(x, n)))
