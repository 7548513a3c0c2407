"""Least squares: designs, the pivoted solver, fallback and caching."""

import warnings

import numpy as np
import pytest

from tcv.core import Dataset
from tcv.errors import DomainError, RankFallbackWarning, SingularDesignError
from tcv.estimators.ols import (OlsConfig, build_design, fit_ols,
                                lstsq_pivoted)


def test_build_design_terms():
    x = np.array([[2.0, 3.0], [4.0, 5.0]])
    a = build_design(x, (("intercept",), ("col", 1), ("log", 0),
                         ("square", 0), ("product", 0, 1)))
    expect = np.array([[1.0, 3.0, np.log(2.0), 4.0, 6.0],
                       [1.0, 5.0, np.log(4.0), 16.0, 20.0]])
    assert np.allclose(a, expect)


def test_build_design_rejects_bad_terms():
    x = np.ones((2, 2))
    with pytest.raises(ValueError):
        build_design(x, (("cube", 0),))
    with pytest.raises(DomainError):
        build_design(np.array([[0.0], [1.0]]), (("log", 0),))
    with pytest.raises(ValueError):
        OlsConfig(terms=())


def test_fit_recovers_exact_line():
    x = np.linspace(0, 1, 9)[:, None]
    d = Dataset(x, 3.0 + 2.0 * x[:, 0])
    pred = fit_ols(OlsConfig(terms=(("intercept",), ("col", 0))), d,
                   np.arange(9))
    assert np.allclose(pred.beta, [3.0, 2.0])
    assert pred.rank == 2 and pred.n_train == 9
    assert np.allclose(pred.predict(np.array([[10.0]])), 23.0)


def test_solver_matches_normal_equations():
    gen = np.random.default_rng(0)
    a = gen.normal(size=(40, 5))
    y = gen.normal(size=40)
    beta, rank = lstsq_pivoted(a, y, allow_fallback=False)
    assert rank == 5
    assert np.allclose(beta, np.linalg.solve(a.T @ a, a.T @ y))


def test_rank_deficiency_raises_without_fallback():
    gen = np.random.default_rng(1)
    a = gen.normal(size=(20, 3))
    a = np.column_stack([a, a[:, 0] + a[:, 1]])
    with pytest.raises(SingularDesignError) as err:
        lstsq_pivoted(a, gen.normal(size=20), allow_fallback=False)
    assert "rank 3 with 4 columns" in str(err.value)


def test_zero_design_always_raises():
    with pytest.raises(SingularDesignError) as err:
        lstsq_pivoted(np.zeros((5, 2)), np.ones(5), allow_fallback=True)
    assert "matrix is zero" in str(err.value)


def test_fallback_drops_columns_and_warns():
    gen = np.random.default_rng(2)
    base = gen.normal(size=(30, 3))
    a = np.column_stack([base, base @ [1.0, -2.0, 0.5]])
    y = base @ [1.0, 2.0, 3.0]
    with pytest.warns(RankFallbackWarning, match=r"dropped 1 collinear"):
        beta, rank = lstsq_pivoted(a, y, allow_fallback=True)
    assert rank == 3
    # fitted values still reproduce the full-rank solution
    assert np.allclose(a @ beta, y)


def test_fallback_collapses_bitwise_duplicate_columns():
    # wide enough (m >= 8) to take the dedup shortcut
    gen = np.random.default_rng(3)
    base = gen.normal(size=(50, 6))
    a = np.column_stack([base, base[:, 0], base[:, 3]])
    y = base @ np.arange(1.0, 7.0)
    with pytest.warns(RankFallbackWarning, match=r"dropped 2 collinear"):
        beta, rank = lstsq_pivoted(a, y, allow_fallback=True)
    assert rank == 6
    assert np.allclose(a @ beta, y)
    # a clone's coefficient lands on exactly one of the two copies
    assert np.allclose(beta[0] + beta[6], 1.0)
    assert np.allclose(beta[3] + beta[7], 4.0)


def test_underdetermined_system_needs_fallback():
    gen = np.random.default_rng(4)
    a = gen.normal(size=(3, 5))
    y = gen.normal(size=3)
    with pytest.raises(SingularDesignError):
        lstsq_pivoted(a, y, allow_fallback=False)
    with pytest.warns(RankFallbackWarning):
        beta, rank = lstsq_pivoted(a, y, allow_fallback=True)
    assert rank == 3
    assert np.allclose(a @ beta, y)


def test_wide_designs_are_cached_on_the_dataset():
    gen = np.random.default_rng(5)
    x = gen.normal(size=(60, 40))
    d = Dataset(x, gen.normal(size=60))
    terms = tuple(("col", j) for j in range(40))
    fit_ols(OlsConfig(terms=terms), d, np.arange(50))
    cache = d.design_cache
    assert terms in cache
    cached = cache[terms]
    fit_ols(OlsConfig(terms=terms), d, np.arange(10, 60))
    assert cache[terms] is cached


def test_small_designs_are_not_cached():
    gen = np.random.default_rng(6)
    d = Dataset(gen.normal(size=(10, 2)), gen.normal(size=10))
    fit_ols(OlsConfig(terms=(("col", 0), ("col", 1))), d, np.arange(10))
    assert not getattr(d, "design_cache", None)


def test_no_spurious_warnings_on_full_rank():
    gen = np.random.default_rng(7)
    a = gen.normal(size=(30, 8))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        beta, rank = lstsq_pivoted(a, gen.normal(size=30), allow_fallback=True)
    assert rank == 8
