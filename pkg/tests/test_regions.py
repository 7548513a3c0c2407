"""Region predicates: bounds, equality clauses, conjunction."""

import numpy as np
import pytest

from tcv.regions import EVERYWHERE, Interval, Region, box, indicator_is


def rows(*vals):
    return np.asarray(vals, dtype=float)


def test_bounds_are_open():
    r = box({0: (0.0, 1.0)})
    x = rows([0.0], [1e-12], [0.5], [1.0 - 1e-12], [1.0])
    assert r.mask(x).tolist() == [False, True, True, True, False]


def test_one_sided_bounds():
    below = box({0: (None, 50.0)})
    above = box({0: (50.0, None)})
    x = rows([49.9], [50.0], [50.1])
    assert below.mask(x).tolist() == [True, False, False]
    assert above.mask(x).tolist() == [False, False, True]


def test_indicator_equality_is_exact():
    r = indicator_is(1, 1.0)
    x = rows([0, 1.0], [0, 0.0], [0, 1.0 + 1e-9])
    assert r.mask(x).tolist() == [True, False, False]


def test_clauses_conjoin():
    r = Region((Interval(0, lo=-0.5, hi=0.5), Interval(1, lo=-0.5, hi=0.5)))
    x = rows([0.0, 0.0], [0.4, 0.6], [0.6, 0.4], [-0.4, 0.4])
    assert r.mask(x).tolist() == [True, False, False, True]


def test_everywhere_accepts_all_rows():
    x = rows([1.0], [-3.0], [99.0])
    assert EVERYWHERE.mask(x).all()
    assert EVERYWHERE(x).all()


def test_box_orders_columns_deterministically():
    assert box({2: (0, 1), 0: (0, 1)}) == box({0: (0, 1), 2: (0, 1)})


def test_column_out_of_range():
    with pytest.raises(IndexError):
        box({3: (0.0, 1.0)}).mask(rows([1.0, 2.0]))


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(-1, lo=0.0)
    with pytest.raises(ValueError):
        Interval(0)
    with pytest.raises(ValueError):
        Interval(0, lo=1.0, hi=1.0)


def test_mask_accepts_single_row():
    r = box({0: (0.0, 1.0)})
    assert r.mask(np.array([0.5])).tolist() == [True]
