"""Least squares on explicit term designs.

A design is a tuple of term descriptors over dataset columns:

    ("intercept",)        constant 1
    ("col", j)            raw column j
    ("log", j)            log of column j (requires positive values)
    ("square", j)         column j squared
    ("product", i, j)     elementwise product of columns i and j

The solver is QR with column pivoting; on rank deficiency it either raises
or, when the config allows, drops the pivoted-out columns with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import DomainError, RankFallbackWarning, SingularDesignError

Term = tuple


@dataclass(frozen=True)
class OlsConfig:
    terms: tuple[Term, ...]
    allow_rank_fallback: bool = False

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("design needs at least one term")
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))


def build_design(x: np.ndarray, terms: tuple[Term, ...]) -> np.ndarray:
    """Materialize the design matrix for rows ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for t in terms:
        kind = t[0]
        if kind == "intercept":
            cols.append(np.ones(x.shape[0]))
        elif kind == "col":
            cols.append(x[:, t[1]])
        elif kind == "log":
            v = x[:, t[1]]
            if np.any(v <= 0):
                raise DomainError(f"log term on column {t[1]} hit a nonpositive value")
            cols.append(np.log(v))
        elif kind == "square":
            cols.append(x[:, t[1]] ** 2)
        elif kind == "product":
            cols.append(x[:, t[1]] * x[:, t[2]])
        else:
            raise ValueError(f"unknown design term {t!r}")
    return np.column_stack(cols)


(_ORMQR,) = scipy.linalg.get_lapack_funcs(("ormqr",), (np.empty((1, 1)),))


def _first_occurrences(a: np.ndarray) -> np.ndarray | None:
    """Indices of the first copy of each bitwise-distinct column, or None
    when all columns are distinct."""
    cols = np.ascontiguousarray(a.T)
    seen = {}
    keep = []
    for j in range(cols.shape[0]):
        key = cols[j].tobytes()
        if key not in seen:
            seen[key] = j
            keep.append(j)
    if len(keep) == cols.shape[0]:
        return None
    return np.asarray(keep)


def lstsq_pivoted(a: np.ndarray, y: np.ndarray, allow_fallback: bool,
                  what: str = "design") -> tuple[np.ndarray, int]:
    """Least squares via column-pivoted QR.

    Returns (coefficients, rank).  Rank-deficient systems either raise
    SingularDesignError or, with ``allow_fallback``, solve on the pivoted
    column subset (dropped columns get coefficient 0) and warn once.

    Two exact shortcuts keep wide degenerate designs affordable: bitwise
    duplicate columns collapse to their first copy before factoring (the
    pivot would keep that copy and zero the clones anyway), and Q stays in
    reflector form, applied to y directly instead of being materialized.
    """
    n, m = a.shape
    keep = _first_occurrences(a) if allow_fallback and m >= 8 else None
    asolve = a if keep is None else a[:, keep]
    (qr_, tau), r, piv = scipy.linalg.qr(asolve, mode="raw", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n, m) * np.finfo(float).eps * (diag[0] if diag.size and diag[0] > 0 else 1.0)
    rank = int(np.sum(diag > tol))
    if rank == 0:
        raise SingularDesignError(f"{what} matrix is zero")
    if rank < m or n < m:
        if not allow_fallback:
            raise SingularDesignError(
                f"{what} matrix has rank {rank} with {m} columns ({n} rows)")
        warnings.warn(f"{what}: dropped {m - rank} collinear column(s)",
                      RankFallbackWarning, stacklevel=3)
    y2 = np.asarray(y, dtype=float).reshape(-1, 1)
    qty, _, info = _ORMQR("L", "T", qr_[:, :tau.size], tau, y2, 64)
    if info != 0:
        raise SingularDesignError(f"{what}: ormqr failed (info={info})")
    beta_kept = scipy.linalg.solve_triangular(r[:rank, :rank], qty[:rank, 0])
    beta = np.zeros(m)
    cols = piv[:rank] if keep is None else keep[piv[:rank]]
    beta[cols] = beta_kept
    return beta, rank


class LinearPredictor:
    """Predictor for any fixed linear-in-parameters design."""

    def __init__(self, terms, beta, rank, n_train):
        self.terms = terms
        self.beta = np.asarray(beta, dtype=float)
        self.rank = rank
        self.n_train = n_train
        self.candidate_id = -1

    def predict(self, x: np.ndarray) -> np.ndarray:
        return build_design(x, self.terms) @ self.beta

    def summary(self) -> dict:
        return {"kind": "ols", "coefficients": self.beta.tolist(), "rank": self.rank}


CACHE_MIN_TERMS = 32


def _training_design(data, train, terms) -> np.ndarray:
    # Terms are row-local, so wide designs are built once on the full data
    # and row-sliced per refit; log terms opt out because a bad row outside
    # `train` must not raise.
    if len(terms) < CACHE_MIN_TERMS or any(t[0] == "log" for t in terms):
        return build_design(data.x[train], terms)
    cache = getattr(data, "design_cache", None)
    if cache is None:
        cache = data.design_cache = {}
    full = cache.get(terms)
    if full is None:
        full = cache[terms] = build_design(data.x, terms)
    return full[train]


def fit_ols(cfg: OlsConfig, data, train) -> LinearPredictor:
    a = _training_design(data, train, cfg.terms)
    beta, rank = lstsq_pivoted(a, data.y[train], cfg.allow_rank_fallback)
    return LinearPredictor(cfg.terms, beta, rank, len(train))
