"""Nadaraya-Watson regression with a Gaussian kernel.

The bandwidth is chosen by leave-one-out least-squares cross-validation
over a log-spaced grid around the Silverman pilot bandwidth.  Query points
whose kernel mass underflows to zero fall back to the nearest training
neighbor's response.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDesignError


@dataclass(frozen=True)
class NwConfig:
    grid_size: int = 30
    lo_factor: float = 0.05
    hi_factor: float = 20.0

    def __post_init__(self):
        if self.grid_size < 1 or self.lo_factor <= 0 or self.hi_factor <= self.lo_factor:
            raise ValueError("invalid bandwidth grid")


def silverman_bandwidth(x: np.ndarray) -> float:
    """1.06 * sd * n^(-1/5); sd averaged over columns for multivariate x."""
    x = np.atleast_2d(x)
    sd = float(np.sqrt(np.mean(np.var(x, axis=0, ddof=1))))
    return 1.06 * sd * x.shape[0] ** (-0.2)


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared euclidean distances, rows of a x rows of b."""
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def loo_cv_score(x: np.ndarray, y: np.ndarray, h: float) -> float:
    """Sum of squared leave-one-out errors at bandwidth h."""
    d2 = _sq_dists(x, x)
    k = np.exp(-d2 / (2.0 * h * h))
    np.fill_diagonal(k, 0.0)
    wsum = k.sum(axis=1)
    pred = np.empty_like(y)
    ok = wsum > 0.0
    pred[ok] = (k @ y)[ok] / wsum[ok]
    if not np.all(ok):
        np.fill_diagonal(d2, np.inf)
        nearest = np.argmin(d2, axis=1)
        pred[~ok] = y[nearest[~ok]]
    return float(np.sum((y - pred) ** 2))


class NwPredictor:
    def __init__(self, x_train, y_train, bandwidth, cv_scores, grid):
        self.x_train = x_train
        self.y_train = y_train
        self.bandwidth = float(bandwidth)
        self.cv_scores = cv_scores
        self.grid = grid
        self.n_train = x_train.shape[0]
        self.candidate_id = -1

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.x_train.shape[1]:
            x = x.reshape(-1, self.x_train.shape[1])
        d2 = _sq_dists(x, self.x_train)
        k = np.exp(-d2 / (2.0 * self.bandwidth**2))
        wsum = k.sum(axis=1)
        out = np.empty(x.shape[0])
        ok = wsum > 0.0
        out[ok] = (k @ self.y_train)[ok] / wsum[ok]
        if not np.all(ok):
            nearest = np.argmin(d2, axis=1)
            out[~ok] = self.y_train[nearest[~ok]]
        return out

    def summary(self) -> dict:
        return {"kind": "nw", "bandwidth": self.bandwidth}


def fit_nw(cfg: NwConfig, data, train) -> NwPredictor:
    x = np.atleast_2d(data.x[train])
    y = data.y[train]
    if np.unique(x, axis=0).shape[0] < 2:
        raise DegenerateDesignError("all training predictors identical")
    pilot = silverman_bandwidth(x)
    if pilot <= 0:
        raise DegenerateDesignError("zero spread in training predictors")
    grid = np.geomspace(cfg.lo_factor * pilot, cfg.hi_factor * pilot, cfg.grid_size)
    scores = np.array([loo_cv_score(x, y, h) for h in grid])
    best = int(np.argmin(scores))  # ties resolve to the smallest bandwidth
    return NwPredictor(x, y, grid[best], scores, grid)
