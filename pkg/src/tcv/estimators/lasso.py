"""Lasso regression by cyclic coordinate descent.

Objective: (1/2n) * ||y - X beta||^2 + lambda * ||beta||_1 on standardized
columns with an unpenalized intercept (handled by centering).  The solver
keeps the Gram matrix and the running gradient vector, so a full sweep
costs O(p) plus O(p) per changed coefficient; the regularization path is
warm-started from large lambda down.  The per-sweep objective history is
recorded and must be non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ConvergenceError, DegenerateDesignError


@dataclass(frozen=True)
class LassoConfig:
    path_len: int = 100
    decades: float = 4.0
    cv_folds: int = 10
    tol: float = 1e-7
    max_sweeps: int = 20000
    standardize: bool = True
    lam: float | None = None  # fixed lambda skips the CV search

    def __post_init__(self):
        if self.path_len < 1 or self.decades <= 0 or self.tol <= 0:
            raise ValueError("invalid lasso path configuration")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")


@njit(cache=True)
def _cd(gram, c, yty, lam, beta, s, tol, max_sweeps, obj_out):
    """One lambda: cyclic CD on beta in place; s tracks gram @ beta.

    Returns (sweeps_used, converged, monotone) with the per-sweep objective
    written into obj_out[0:sweeps_used+1] (entry 0 is the starting value).

    Between full sweeps the solver iterates the current active set on its
    reduced Gram block, which keeps saturated fits (p >> n, small lambda)
    affordable; convergence is only ever declared by a full sweep, so the
    fixed point is identical to plain cyclic descent.
    """
    p = beta.size
    obj = 0.5 * yty - np.dot(c, beta) + 0.5 * np.dot(beta, s) + lam * np.abs(beta).sum()
    obj_out[0] = obj
    monotone = True
    sweeps = 0
    stalled = 0
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(p):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            g = c[j] - s[j] + gjj * beta[j]
            if g > lam:
                new = (g - lam) / gjj
            elif g < -lam:
                new = (g + lam) / gjj
            else:
                new = 0.0
            d = new - beta[j]
            if d != 0.0:
                beta[j] = new
                s += gram[j] * d
                ad = abs(d)
                if ad > max_delta:
                    max_delta = ad
        prev = obj
        obj = 0.5 * yty - np.dot(c, beta) + 0.5 * np.dot(beta, s) + lam * np.abs(beta).sum()
        sweeps += 1
        obj_out[sweeps] = obj
        if obj > prev + 1e-10 * (1.0 + abs(prev)):
            monotone = False
        if max_delta < tol:
            return sweeps, True, monotone
        # no representable objective progress for several sweeps means the
        # iterate is a floating-point fixed point; coefficients may still
        # slosh along a flat valley that leaves the fit unchanged
        if prev - obj <= 4.5e-16 * (1.0 + abs(prev)):
            stalled += 1
            if stalled >= 10:
                return sweeps, True, monotone
        else:
            stalled = 0

        na = 0
        for j in range(p):
            if beta[j] != 0.0:
                na += 1
        if na == 0 or sweeps >= max_sweeps:
            continue
        active = np.empty(na, dtype=np.int64)
        k = 0
        for j in range(p):
            if beta[j] != 0.0:
                active[k] = j
                k += 1
        gsub = np.empty((na, na))
        for a in range(na):
            for b in range(na):
                gsub[a, b] = gram[active[a], active[b]]
        csub = c[active]
        ssub = s[active]
        bsub = beta[active]
        bsub0 = bsub.copy()
        inact = obj - (-np.dot(csub, bsub) + 0.5 * np.dot(bsub, ssub)
                       + lam * np.abs(bsub).sum())
        stalled_in = 0
        while sweeps < max_sweeps:
            max_delta = 0.0
            for a in range(na):
                gjj = gsub[a, a]
                if gjj <= 0.0:
                    continue
                g = csub[a] - ssub[a] + gjj * bsub[a]
                if g > lam:
                    new = (g - lam) / gjj
                elif g < -lam:
                    new = (g + lam) / gjj
                else:
                    new = 0.0
                d = new - bsub[a]
                if d != 0.0:
                    bsub[a] = new
                    ssub += gsub[a] * d
                    ad = abs(d)
                    if ad > max_delta:
                        max_delta = ad
            prev = obj
            obj = inact + (-np.dot(csub, bsub) + 0.5 * np.dot(bsub, ssub)
                           + lam * np.abs(bsub).sum())
            sweeps += 1
            obj_out[sweeps] = obj
            if obj > prev + 1e-10 * (1.0 + abs(prev)):
                monotone = False
            if max_delta < tol:
                break
            # hand a floating-point-stalled reduced problem back to the full
            # sweep, which alone may declare convergence or grow the set
            if prev - obj <= 4.5e-16 * (1.0 + abs(prev)):
                stalled_in += 1
                if stalled_in >= 10:
                    break
            else:
                stalled_in = 0
        for a in range(na):
            d = bsub[a] - bsub0[a]
            if d != 0.0:
                beta[active[a]] = bsub[a]
                s += gram[active[a]] * d
    return sweeps, False, monotone


@njit(cache=True)
def _cd_path(gram, c, yty, lams, tol, max_sweeps):
    """Warm-started path; returns (betas, converged, monotone, last_sweeps)."""
    p = c.size
    betas = np.zeros((lams.size, p))
    beta = np.zeros(p)
    s = np.zeros(p)
    obj_buf = np.empty(max_sweeps + 1)
    converged = True
    monotone = True
    last_sweeps = 0
    for k in range(lams.size):
        sw, conv, mono = _cd(gram, c, yty, lams[k], beta, s, tol, max_sweeps, obj_buf)
        betas[k] = beta
        converged = converged and conv
        monotone = monotone and mono
        last_sweeps = sw
    return betas, converged, monotone, last_sweeps


def _standardize(x, y, scale_columns):
    xm = x.mean(axis=0)
    xc = x - xm
    if scale_columns:
        sd = np.sqrt(np.mean(xc * xc, axis=0))
        sd = np.where(sd > 0, sd, 1.0)
    else:
        sd = np.ones(x.shape[1])
    xs = xc / sd
    ym = y.mean()
    return xs, y - ym, xm, sd, ym


def _gram_parts(xs, yc):
    n = xs.shape[0]
    gram = xs.T @ xs / n
    c = xs.T @ yc / n
    yty = float(yc @ yc) / n
    return gram, c, yty


def _duality_gap(xs, yc, beta, lam):
    n = xs.shape[0]
    r = yc - xs @ beta
    z = xs.T @ r / n
    m = np.max(np.abs(z)) if z.size else 0.0
    tau = 1.0 if (m <= lam or m == 0.0) else lam / m
    gap = ((1.0 - tau) ** 2 * (r @ r) / (2.0 * n)
           + lam * np.abs(beta).sum() - tau * (z @ beta))
    return float(gap)


def _solve_path(xs, yc, lams, cfg):
    gram, c, yty = _gram_parts(xs, yc)
    betas, converged, monotone, _ = _cd_path(
        gram, c, yty, np.asarray(lams, dtype=float), cfg.tol, cfg.max_sweeps)
    if not monotone:
        raise AssertionError("coordinate-descent objective increased within a sweep")
    if not converged:
        raise ConvergenceError(
            f"lasso did not converge in {cfg.max_sweeps} sweeps",
            _duality_gap(xs, yc, betas[-1], float(lams[-1])))
    return betas


def lambda_max(xs: np.ndarray, yc: np.ndarray) -> float:
    """Smallest lambda with an all-zero solution: max_j |x_j . y| / n."""
    n = xs.shape[0]
    return float(np.max(np.abs(xs.T @ yc)) / n) if xs.size else 0.0


class LassoPredictor:
    def __init__(self, beta_std, x_mean, x_scale, y_mean, lam, path, cv_mse,
                 obj_history, n_train):
        self.beta_std = beta_std
        self.x_mean = x_mean
        self.x_scale = x_scale
        self.y_mean = y_mean
        self.lam = float(lam)
        self.path = path
        self.cv_mse = cv_mse
        self.obj_history = obj_history
        self.n_train = n_train
        self.candidate_id = -1

    @property
    def coef(self) -> np.ndarray:
        """Coefficients on the original column scale."""
        return self.beta_std / self.x_scale

    @property
    def intercept(self) -> float:
        return float(self.y_mean - np.dot(self.coef, self.x_mean))

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.y_mean + ((x - self.x_mean) / self.x_scale) @ self.beta_std

    def summary(self) -> dict:
        nz = int(np.sum(self.beta_std != 0))
        return {"kind": "lasso", "lambda": self.lam, "nonzero": nz,
                "intercept": self.intercept}


def fit_lasso(cfg: LassoConfig, data, train) -> LassoPredictor:
    x = np.atleast_2d(data.x[train])
    y = data.y[train]
    n = x.shape[0]
    if n < 2:
        raise DegenerateDesignError("need at least 2 training rows")

    xs, yc, xm, sd, ym = _standardize(x, y, cfg.standardize)

    if cfg.lam is not None:
        lams = np.array([cfg.lam], dtype=float)
        cv_mse = None
        sel = 0
    else:
        lmax = lambda_max(xs, yc)
        if lmax == 0.0:
            # response orthogonal to every column: intercept-only model
            beta = np.zeros(x.shape[1])
            return LassoPredictor(beta, xm, sd, ym, 0.0, np.array([0.0]), None,
                                  np.array([0.0]), n)
        lams = np.geomspace(lmax, lmax * 10.0 ** (-cfg.decades), cfg.path_len)
        folds = min(cfg.cv_folds, n)
        fold_of = np.arange(n) % folds  # interleaved, deterministic
        sse = np.zeros(lams.size)
        for f in range(folds):
            hold = fold_of == f
            xs_f, yc_f, xm_f, sd_f, ym_f = _standardize(
                x[~hold], y[~hold], cfg.standardize)
            betas_f = _solve_path(xs_f, yc_f, lams, cfg)
            pred = ym_f + ((x[hold] - xm_f) / sd_f) @ betas_f.T
            sse += np.sum((y[hold][:, None] - pred) ** 2, axis=0)
        cv_mse = sse / n
        sel = int(np.argmin(cv_mse))  # ties resolve to the largest lambda

    # solve the selected lambda from a cold start; exposes the sweep history
    gram, c, yty = _gram_parts(xs, yc)
    beta = np.zeros(x.shape[1])
    obj_buf = np.empty(cfg.max_sweeps + 1)
    sw, conv, mono = _cd(gram, c, yty, float(lams[sel]), beta,
                         np.zeros(x.shape[1]), cfg.tol, cfg.max_sweeps, obj_buf)
    if not mono:
        raise AssertionError("coordinate-descent objective increased within a sweep")
    if not conv:
        raise ConvergenceError(f"lasso did not converge in {cfg.max_sweeps} sweeps",
                               _duality_gap(xs, yc, beta, float(lams[sel])))
    history = obj_buf[:sw + 1].copy()
    return LassoPredictor(beta, xm, sd, ym, float(lams[sel]), lams, cv_mse,
                          history, n)
