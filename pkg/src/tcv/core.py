"""Foundational data model: datasets, splits, candidates, and fitting.

A :class:`Dataset` is an immutable (by convention) matrix of predictors with
a response vector.  :func:`make_split` draws random train/test partitions,
optionally stratified.  A :class:`CandidateProcedure` couples an estimator
configuration with a data scope (global, or restricted to a region), and
:func:`fit` turns one into a :class:`Predictor` on given training rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (InsufficientLocalDataError, InvalidPlanError,
                     StratificationError)
from .regions import Region
from .rng import RngSpec


@dataclass(eq=False)
class Dataset:
    """Predictor matrix (n × p) with response vector (n,)."""

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]}")
        if self.x.shape[0] < 1 or self.x.shape[1] < 1:
            raise ValueError("need n >= 1 and p >= 1")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset contains non-finite entries")
        if self.column_names is not None:
            self.column_names = tuple(self.column_names)
            if len(self.column_names) != self.x.shape[1]:
                raise ValueError("column_names length does not match p")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def column_index(self, name: str) -> int:
        if self.column_names is None:
            raise KeyError("dataset has no column names")
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None


@dataclass(eq=False)
class Split:
    """Disjoint train/test index partition of {0..n-1}."""

    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=np.intp)
        self.test = np.asarray(self.test, dtype=np.intp)
        if self.train.size < 1 or self.test.size < 1:
            raise InvalidPlanError("both split sides must be nonempty")
        joint = np.concatenate([self.train, self.test])
        if np.unique(joint).size != joint.size:
            raise InvalidPlanError("split has repeated indices")

    @property
    def n1(self) -> int:
        return self.train.size

    @property
    def n2(self) -> int:
        return self.test.size


def make_split(n: int, n1: int, rng: RngSpec | np.random.Generator,
               stratify_on: np.ndarray | None = None) -> Split:
    """Draw a uniformly random n1/(n-n1) partition of {0..n-1}.

    ``stratify_on`` is a boolean mask of length n; when given, the train set
    carries each stratum in proportion n1/n.  Rounding: the False stratum
    gets floor(count * n1/n) training rows and the True stratum the
    remainder, so counts are deterministic given the mask.
    """
    if not 1 <= n1 < n:
        raise InvalidPlanError(f"need 1 <= n1 < n, got n1={n1}, n={n}")
    gen = rng.stream() if isinstance(rng, RngSpec) else rng
    if stratify_on is None:
        perm = gen.permutation(n)
        return Split(np.sort(perm[:n1]), np.sort(perm[n1:]))

    mask = np.asarray(stratify_on, dtype=bool).ravel()
    if mask.size != n:
        raise StratificationError(f"stratify mask has length {mask.size}, expected {n}")
    rows_true = np.flatnonzero(mask)
    rows_false = np.flatnonzero(~mask)
    if rows_true.size == 0 or rows_false.size == 0:
        raise StratificationError("both strata must be nonempty")
    take_false = int(np.floor(rows_false.size * n1 / n))
    take_true = n1 - take_false
    if not (0 < take_true <= rows_true.size and 0 < take_false <= rows_false.size):
        raise StratificationError(
            f"cannot place {take_true}/{take_false} train rows in strata of sizes "
            f"{rows_true.size}/{rows_false.size}")
    if take_true == rows_true.size or take_false == rows_false.size:
        raise StratificationError("a stratum would have no test rows")
    pt = gen.permutation(rows_true.size)
    pf = gen.permutation(rows_false.size)
    train = np.concatenate([rows_true[pt[:take_true]], rows_false[pf[:take_false]]])
    test = np.concatenate([rows_true[pt[take_true:]], rows_false[pf[take_false:]]])
    return Split(np.sort(train), np.sort(test))


class Predictor:
    """A fitted regression function: predict(x) plus audit metadata."""

    candidate_id: int = -1
    n_train: int = 0

    def predict(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def summary(self) -> dict:
        """Fitted quantities worth reporting (coefficients, bandwidth, ...)."""
        return {}


@dataclass(frozen=True)
class CandidateProcedure:
    """One entry of the selection roster.

    ``scope`` restricts the training data to a region before fitting (the
    fitted predictor still predicts everywhere); ``None`` means global.
    Roster ids must be distinct and contiguous from 0.
    """

    id: int
    name: str
    config: object
    scope: Region | None = None
    min_local_rows: int = 10

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("candidate id must be >= 0")
        if self.scope is not None and self.min_local_rows < 1:
            raise ValueError("min_local_rows must be >= 1")


def check_roster(roster: Sequence[CandidateProcedure]) -> None:
    """Validate the distinct-contiguous-ids roster invariant."""
    if not roster:
        raise InvalidPlanError("empty candidate roster")
    ids = sorted(c.id for c in roster)
    if ids != list(range(len(roster))):
        raise InvalidPlanError(f"roster ids must be 0..{len(roster) - 1}, got {ids}")


def fit(proc: CandidateProcedure, data: Dataset, train: np.ndarray,
        rng: RngSpec | np.random.Generator | None = None) -> Predictor:
    """Fit one candidate on the given training rows of ``data``.

    Local-scope candidates are fit on the region-filtered subset and must
    meet their ``min_local_rows`` floor.  Deterministic given ``rng``.
    """
    # import here: estimator modules are leaves and core is their consumer
    from .estimators import dispatch_fit

    train = np.asarray(train, dtype=np.intp)
    if train.size == 0 or train.min() < 0 or train.max() >= data.n:
        raise InvalidPlanError("invalid training indices")
    if proc.scope is not None:
        inside = proc.scope.mask(data.x[train])
        kept = train[inside]
        if kept.size < proc.min_local_rows:
            raise InsufficientLocalDataError(
                f"candidate {proc.id} ({proc.name}): region holds {kept.size} of "
                f"{train.size} training rows, below floor {proc.min_local_rows}")
        train = kept
    pred = dispatch_fit(proc.config, data, train, rng)
    pred.candidate_id = proc.id
    return pred
