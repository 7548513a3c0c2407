"""Region predicates over predictor rows.

A region is a conjunction of per-column constraints and is used in three
places: region/piecewise weights, the data scope of local candidates, and
stratified splitting.  Columns are addressed by position; the config layer
resolves column names to positions before anything here runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Interval:
    """One column constraint: strict bounds and/or exact equality.

    ``lo``/``hi`` are open bounds (lo < x < hi); ``equals`` tests exact
    equality and is meant for indicator columns.
    """

    column: int
    lo: float | None = None
    hi: float | None = None
    equals: float | None = None

    def __post_init__(self):
        if self.column < 0:
            raise ValueError("column index must be nonnegative")
        if self.lo is None and self.hi is None and self.equals is None:
            raise ValueError("empty constraint")
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Region:
    """Conjunction of :class:`Interval` constraints; empty means 'everywhere'."""

    clauses: tuple[Interval, ...] = ()

    def mask(self, x: np.ndarray) -> np.ndarray:
        """Boolean membership mask for the rows of ``x`` (k × p)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.ones(x.shape[0], dtype=bool)
        for c in self.clauses:
            if c.column >= x.shape[1]:
                raise IndexError(f"region column {c.column} out of range for p={x.shape[1]}")
            col = x[:, c.column]
            if c.lo is not None:
                out &= col > c.lo
            if c.hi is not None:
                out &= col < c.hi
            if c.equals is not None:
                out &= col == c.equals
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.mask(x)


EVERYWHERE = Region()


def box(column_bounds: dict[int, tuple[float | None, float | None]]) -> Region:
    """Region from {column: (lo, hi)} with open bounds."""
    clauses = tuple(Interval(column=c, lo=lo, hi=hi)
                    for c, (lo, hi) in sorted(column_bounds.items()))
    return Region(clauses)


def indicator_is(column: int, value: float) -> Region:
    """Region where an indicator column equals a value exactly."""
    return Region((Interval(column=column, equals=value),))
