"""Datasets, splits and candidate fitting."""

import numpy as np
import pytest

from tcv.core import (CandidateProcedure, Dataset, Split, check_roster, fit,
                      make_split)
from tcv.errors import (InsufficientLocalDataError, InvalidPlanError,
                        StratificationError)
from tcv.estimators.ols import OlsConfig
from tcv.regions import box
from tcv.rng import RngSpec


def small_data(n=20, p=2, seed=0):
    gen = np.random.default_rng(seed)
    x = gen.normal(size=(n, p))
    y = x[:, 0] + gen.normal(size=n)
    return Dataset(x, y)


# -- Dataset ----------------------------------------------------------------

def test_dataset_shapes_and_names():
    d = Dataset(np.ones((3, 2)), np.zeros(3), column_names=["a", "b"])
    assert d.n == 3 and d.p == 2
    assert d.column_index("b") == 1
    with pytest.raises(KeyError):
        d.column_index("c")


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        Dataset(np.ones((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan, 1.0]]), np.zeros(1))
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.array([1.0, np.inf]))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.zeros(3), column_names=["a"])


def test_column_index_without_names():
    with pytest.raises(KeyError):
        Dataset(np.ones((3, 2)), np.zeros(3)).column_index("a")


# -- Split / make_split -----------------------------------------------------

def test_split_validation():
    with pytest.raises(InvalidPlanError):
        Split(np.array([0, 1]), np.array([], dtype=int))
    with pytest.raises(InvalidPlanError):
        Split(np.array([0, 1]), np.array([1, 2]))


def test_make_split_partitions_exactly():
    s = make_split(10, 4, RngSpec(3))
    assert s.n1 == 4 and s.n2 == 6
    assert sorted(np.concatenate([s.train, s.test]).tolist()) == list(range(10))


def test_make_split_is_deterministic_given_spec():
    a = make_split(50, 25, RngSpec(9, replication=2))
    b = make_split(50, 25, RngSpec(9, replication=2))
    assert np.array_equal(a.train, b.train) and np.array_equal(a.test, b.test)


def test_make_split_bounds():
    with pytest.raises(InvalidPlanError):
        make_split(10, 0, RngSpec(0))
    with pytest.raises(InvalidPlanError):
        make_split(10, 10, RngSpec(0))


def test_stratified_split_counts_use_floor_for_false_stratum():
    # 30 rows, 9 inside the region; train share 10/30 puts
    # floor(21 * 10/30) = 7 false rows and the remaining 3 true rows in train
    mask = np.zeros(30, dtype=bool)
    mask[:9] = True
    s = make_split(30, 10, RngSpec(4), stratify_on=mask)
    assert int(mask[s.train].sum()) == 3
    assert int(mask[s.test].sum()) == 6


def test_stratified_split_rejects_bad_masks():
    with pytest.raises(StratificationError):
        make_split(10, 5, RngSpec(0), stratify_on=np.ones(9, dtype=bool))
    with pytest.raises(StratificationError):
        make_split(10, 5, RngSpec(0), stratify_on=np.ones(10, dtype=bool))
    # single true row: floor gives it to train, leaving its test side empty
    mask = np.zeros(10, dtype=bool)
    mask[0] = True
    with pytest.raises(StratificationError):
        make_split(10, 9, RngSpec(0), stratify_on=mask)


def test_stratified_split_keeps_both_sides_in_each_stratum():
    gen = np.random.default_rng(11)
    for n, n1, k in ((20, 10, 5), (41, 13, 7), (100, 37, 30)):
        mask = np.zeros(n, dtype=bool)
        mask[gen.permutation(n)[:k]] = True
        s = make_split(n, n1, RngSpec(5), stratify_on=mask)
        assert 0 < int(mask[s.train].sum()) < k
        assert 0 < int(mask[s.test].sum()) < k


# -- roster and fit ---------------------------------------------------------

def test_check_roster_requires_contiguous_ids():
    mk = lambda i: CandidateProcedure(i, f"c{i}", OlsConfig(terms=(("col", 0),)))
    check_roster([mk(0), mk(1)])
    with pytest.raises(InvalidPlanError):
        check_roster([])
    with pytest.raises(InvalidPlanError):
        check_roster([mk(0), mk(2)])
    with pytest.raises(InvalidPlanError):
        check_roster([mk(1), mk(1)])


def test_fit_rejects_bad_training_indices():
    d = small_data()
    proc = CandidateProcedure(0, "ols", OlsConfig(terms=(("col", 0),)))
    with pytest.raises(InvalidPlanError):
        fit(proc, d, np.array([], dtype=int))
    with pytest.raises(InvalidPlanError):
        fit(proc, d, np.array([0, d.n]))
    with pytest.raises(InvalidPlanError):
        fit(proc, d, np.array([-1]))


def test_fit_local_scope_filters_training_rows():
    gen = np.random.default_rng(2)
    x = np.linspace(-1, 1, 40)[:, None]
    d = Dataset(x, 2.0 * x[:, 0] + 0.01 * gen.normal(size=40))
    region = box({0: (0.0, None)})
    local = CandidateProcedure(0, "local", OlsConfig(terms=(("intercept",), ("col", 0))),
                               scope=region, min_local_rows=5)
    pred = fit(local, d, np.arange(40))
    assert pred.candidate_id == 0
    assert pred.n_train == int(region.mask(x).sum())


def test_fit_local_scope_floor():
    d = small_data(n=30)
    region = box({0: (100.0, None)})         # empty inside the sample
    local = CandidateProcedure(3, "far", OlsConfig(terms=(("col", 0),)),
                               scope=region, min_local_rows=5)
    with pytest.raises(InsufficientLocalDataError) as err:
        fit(local, d, np.arange(30))
    assert "candidate 3 (far)" in str(err.value)
    assert "below floor 5" in str(err.value)
