"""Weight functions: levels, normalization modes, declared suprema."""

import numpy as np
import pytest

from tcv.errors import InvalidVarianceError, InvalidWeightError
from tcv.regions import box
from tcv.weights import (PiecewiseWeight, PointWeight, RegionWeight,
                         ScaledWeight, VarianceWeight, constant_weight,
                         weight_sup)

UNIT = box({0: (0.0, 1.0)})


def grid(*vals):
    return np.asarray(vals, dtype=float)[:, None]


def test_piecewise_levels():
    w = PiecewiseWeight(UNIT, 1.0, 0.25)
    got = w(grid(0.5, 1.5, -0.5, 0.9), n=100)
    assert got.tolist() == [1.0, 0.25, 0.25, 1.0]
    assert w.sup_bound == 1.0


def test_piecewise_validation():
    with pytest.raises(InvalidWeightError):
        PiecewiseWeight(UNIT, -1.0, 0.5)
    with pytest.raises(InvalidWeightError):
        PiecewiseWeight(UNIT, 0.0, 0.0)


def test_constant_weight_is_flat():
    w = constant_weight(3.0)
    assert np.all(w(grid(-5.0, 0.0, 7.0), n=10) == 3.0)


def test_region_weight_indicator_form():
    w = RegionWeight(UNIT)
    assert w(grid(0.5, 2.0), n=50).tolist() == [1.0, 0.0]
    assert w.sup_bound == 1.0


def test_region_weight_with_known_probability():
    w = RegionWeight(UNIT, prob_region=0.1)
    assert w(grid(0.5, 2.0), n=50).tolist() == [10.0, 0.0]
    assert w.sup_bound == 10.0
    with pytest.raises(InvalidWeightError):
        RegionWeight(UNIT, prob_region=0.0)
    with pytest.raises(InvalidWeightError):
        RegionWeight(UNIT, prob_region=1.5)


def test_variance_weight_inverts_sigma2():
    w = VarianceWeight(sigma2=lambda x: x[:, 0], norm_const=2.0)
    got = w(grid(1.0, 4.0), n=10)
    assert np.allclose(got, [0.5, 0.125])
    with pytest.raises(InvalidVarianceError):
        w(grid(1.0, 0.0), n=10)
    with pytest.raises(InvalidWeightError):
        VarianceWeight(sigma2=lambda x: x[:, 0], norm_const=0.0)


def test_point_weight_concentrates_with_n():
    w = PointWeight(center=[0.5])
    x = grid(0.5, 0.6)
    loose = w.raw(x, n=10)
    sharp = w.raw(x, n=1000)
    assert loose[0] == 1.0 and sharp[0] == 1.0
    assert sharp[1] < loose[1] < 1.0


def test_point_weight_empirical_normalization_means_one():
    w = PointWeight(center=[0.0])
    got = w(grid(-1.0, 0.0, 0.3, 2.0), n=5)
    assert np.isclose(got.mean(), 1.0)


def test_point_weight_exact_form():
    w = PointWeight(center=[0.0], norm_const=0.25)
    assert w.sup_bound == 4.0
    assert np.isclose(w(grid(0.0), n=3)[0], 4.0)
    with pytest.raises(InvalidWeightError):
        PointWeight(center=[np.inf])
    with pytest.raises(InvalidWeightError):
        PointWeight(center=[0.0], norm_const=-1.0)


def test_scaled_weight_multiplies_unnormalized_base():
    base = PiecewiseWeight(UNIT, 1.0, 0.0)
    w = ScaledWeight(base, kappa=7.0)
    assert w(grid(0.5, 2.0), n=10).tolist() == [7.0, 0.0]
    assert w.sup_bound == 7.0
    with pytest.raises(InvalidWeightError):
        ScaledWeight(base, kappa=0.0)


def test_weight_sup_prefers_declared_bound():
    assert weight_sup(RegionWeight(UNIT, prob_region=0.2), probe=grid(5.0)) == 5.0


def test_weight_sup_falls_back_to_probe_max():
    w = PointWeight(center=[0.0])        # no declared bound
    got = weight_sup(w, probe=grid(0.0, 1.0, 2.0), n=4)
    assert got >= 1.0
    with pytest.raises(InvalidWeightError):
        weight_sup(w, probe=np.empty((0, 1)))
