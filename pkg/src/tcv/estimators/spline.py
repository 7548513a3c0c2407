"""Additive model with fixed-knot natural cubic splines.

Every smoothed column contributes a 3-column natural cubic spline basis
(knots at the min, 1/3 and 2/3 quantiles, and max of the distinct training
values; linear extrapolation beyond the boundary knots).  Binary or
otherwise unsmoothed columns enter linearly.  The joint basis regression
is an ordinary least-squares problem, so no backfitting is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDesignError
from .ols import lstsq_pivoted

DF = 3  # basis columns per smoothed term, intercept excluded


@dataclass(frozen=True)
class AdditiveSplineConfig:
    smooth_columns: tuple[int, ...]
    linear_columns: tuple[int, ...] = ()
    allow_rank_fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "smooth_columns", tuple(self.smooth_columns))
        object.__setattr__(self, "linear_columns", tuple(self.linear_columns))
        if not self.smooth_columns and not self.linear_columns:
            raise ValueError("no columns selected")
        if set(self.smooth_columns) & set(self.linear_columns):
            raise ValueError("a column cannot be both smoothed and linear")


def spline_knots(values: np.ndarray) -> np.ndarray:
    """Four knots at the 0, 1/3, 2/3 and 1 quantiles of one training column.

    A point mass (e.g. a spike at zero) can pull an interior knot onto the
    boundary; such columns fall back to quantiles of the distinct values.
    """
    distinct = np.unique(values)
    if distinct.size < DF + 1:
        raise DegenerateDesignError(
            f"smoothed column needs >= {DF + 1} distinct values, got {distinct.size}")
    grid = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
    knots = np.quantile(values, grid)
    if np.unique(knots).size < 4:
        knots = np.quantile(distinct, grid)
    if np.unique(knots).size < 4:
        raise DegenerateDesignError("degenerate spline knots")
    return knots


def natural_basis(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Columns [x, N1(x), N2(x)] of the natural cubic spline on 4 knots."""
    x = np.asarray(x, dtype=float)
    k1, k2, k3, k4 = knots

    def d(k):
        return (np.clip(x - k, 0.0, None) ** 3
                - np.clip(x - k4, 0.0, None) ** 3) / (k4 - k)

    d3 = d(k3)
    return np.column_stack([x, d(k1) - d3, d(k2) - d3])


class AdditiveSplinePredictor:
    def __init__(self, smooth_columns, knots, linear_columns, beta, rank, n_train):
        self.smooth_columns = smooth_columns
        self.knots = knots  # list aligned with smooth_columns
        self.linear_columns = linear_columns
        self.beta = beta
        self.rank = rank
        self.n_train = n_train
        self.candidate_id = -1

    def _design(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cols = [np.ones((x.shape[0], 1))]
        for c, kn in zip(self.smooth_columns, self.knots):
            cols.append(natural_basis(x[:, c], kn))
        for c in self.linear_columns:
            cols.append(x[:, c:c + 1])
        return np.hstack(cols)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self._design(x) @ self.beta

    def summary(self) -> dict:
        return {"kind": "additive_spline", "terms": len(self.smooth_columns),
                "rank": self.rank}


def fit_additive_spline(cfg: AdditiveSplineConfig, data, train) -> AdditiveSplinePredictor:
    xt = data.x[train]
    knots = [spline_knots(xt[:, c]) for c in cfg.smooth_columns]
    pred = AdditiveSplinePredictor(cfg.smooth_columns, knots, cfg.linear_columns,
                                   None, 0, len(train))
    a = pred._design(xt)
    beta, rank = lstsq_pivoted(a, data.y[train], cfg.allow_rank_fallback, what="spline basis")
    pred.beta = beta
    pred.rank = rank
    return pred
