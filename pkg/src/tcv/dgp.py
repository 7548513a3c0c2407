"""Synthetic data-generating processes used by the replication harness.

Each generator draws a Dataset from a fixed design; the matching config
object also exposes the noiseless regression mean (``truth``) and, where a
local region is part of the setup, the region itself.  Everything is
bit-reproducible given an RngSpec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import InvalidPlanError
from .estimators.fourier import sine_basis
from .regions import Region, box, indicator_is
from .rng import RngSpec


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngSpec):
        return rng.stream()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngSpec or Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# A hundred redundant predictors next to one strong one


@dataclass(frozen=True)
class HundredCloneConfig:
    """One informative predictor, a block of perfectly correlated extras,
    and a Bernoulli indicator that switches the block off.

    The extra block's covariance is the constant matrix cov_extra * J,
    which has rank one: the extra columns are identical draws scaled by
    sqrt(cov_extra).  Column layout is x0, x1..x{p_extra}, then the
    indicator.
    """

    n: int = 800
    sigma: float = 25.0
    p_extra: int = 100
    var_x0: float = 20.0
    cov_extra: float = 0.1
    bernoulli_p: float = 0.1
    eval_n: int = 5000

    def __post_init__(self):
        if self.n < 1 or self.p_extra < 1:
            raise InvalidPlanError("need n >= 1 and p_extra >= 1")
        if self.sigma < 0 or self.var_x0 <= 0 or self.cov_extra <= 0:
            raise InvalidPlanError("scale parameters must be positive")
        if not 0 < self.bernoulli_p < 1:
            raise InvalidPlanError("bernoulli_p must lie in (0, 1)")

    @property
    def indicator_column(self) -> int:
        return 1 + self.p_extra

    def column_names(self) -> list[str]:
        return [f"x{j}" for j in range(self.p_extra + 1)] + ["ind"]

    def truth(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        block = x[:, 1:self.p_extra + 1].sum(axis=1)
        return x[:, 0] + (1.0 - x[:, self.indicator_column]) * block

    def local_region(self) -> Region:
        return indicator_is(self.indicator_column, 1.0)


def gen_hundred_clone(cfg: HundredCloneConfig, rng) -> Dataset:
    gen = as_generator(rng)
    x0 = np.sqrt(cfg.var_x0) * gen.standard_normal(cfg.n)
    z = gen.standard_normal(cfg.n)
    block = np.repeat(np.sqrt(cfg.cov_extra) * z[:, None], cfg.p_extra, axis=1)
    ind = (gen.random(cfg.n) < cfg.bernoulli_p).astype(float)
    x = np.column_stack([x0, block, ind])
    y = cfg.truth(x) + cfg.sigma * gen.standard_normal(cfg.n)
    return Dataset(x, y, column_names=cfg.column_names())


# ---------------------------------------------------------------------------
# Quadratic head, linear tail


@dataclass(frozen=True)
class BentLineConfig:
    """Scalar design on (0,1): quadratic mean below the break, linear above.

    The two branches meet at the break point, so the mean is continuous.
    """

    n: int = 200
    sigma: float = 1.0
    break_point: float = 0.1
    eval_n: int = 5000

    def __post_init__(self):
        if self.n < 1:
            raise InvalidPlanError("need n >= 1")
        if not 0 < self.break_point < 1:
            raise InvalidPlanError("break point must lie in (0, 1)")

    def truth(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        return np.where(x <= self.break_point,
                        250.0 * (x + 0.1) ** 2, 100.0 * x)

    def local_region(self) -> Region:
        return box({0: (None, self.break_point)})


def gen_bent_line(cfg: BentLineConfig, rng) -> Dataset:
    gen = as_generator(rng)
    x = gen.random(cfg.n)
    y = cfg.truth(x) + cfg.sigma * gen.standard_normal(cfg.n)
    return Dataset(x[:, None], y, column_names=["x"])


# ---------------------------------------------------------------------------
# Sparse signal among a thousand autocorrelated predictors


@dataclass(frozen=True)
class SparseHighDimConfig:
    """Sparse nonlinear mean over an AR(1) predictor process.

    Predictors have unit variance and covariance ar_coef^|i-j|, realized by
    the recursion x_j = ar_coef * x_{j-1} + sqrt(1 - ar_coef^2) * z_j; only
    the first four columns carry signal.
    """

    n: int = 200
    p: int = 1000
    sigma: float = 1.0
    ar_coef: float = 0.1
    region_half_width: float = 0.5
    eval_n: int = 5000

    def __post_init__(self):
        if self.n < 1 or self.p < 4:
            raise InvalidPlanError("need n >= 1 and p >= 4")
        if not 0 <= self.ar_coef < 1:
            raise InvalidPlanError("ar_coef must lie in [0, 1)")
        if self.region_half_width <= 0:
            raise InvalidPlanError("region half width must be positive")

    def truth(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (2.0 * np.exp(-5.0 * x[:, 0] ** 2) + 2.0 * x[:, 0]
                + x[:, 1] + 0.5 * x[:, 2] + 0.1 * x[:, 3])

    def local_region(self) -> Region:
        h = self.region_half_width
        return box({0: (-h, h), 1: (-h, h)})


def gen_sparse_highdim(cfg: SparseHighDimConfig, rng) -> Dataset:
    gen = as_generator(rng)
    z = gen.standard_normal((cfg.n, cfg.p))
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    scale = np.sqrt(1.0 - cfg.ar_coef ** 2)
    for j in range(1, cfg.p):
        x[:, j] = cfg.ar_coef * x[:, j - 1] + scale * z[:, j]
    y = cfg.truth(x) + cfg.sigma * gen.standard_normal(cfg.n)
    return Dataset(x, y)


# ---------------------------------------------------------------------------
# Closed-form losses for the two-candidate rate illustration


@dataclass(frozen=True)
class RateToyConfig:
    """Mean x^2 on (0,1) with a shrinking uniform weight window [0, n^(-1/8)].

    Candidate 1 knows the mean up to the average of the realized noise;
    candidate 2 predicts zero.  Both weighted L2 losses are available in
    closed form, which makes this the one setting with an exact oracle.
    """

    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidPlanError("sigma must be positive")


def rate_toy_losses(n: int, n1: int, eps_bar: float) -> tuple[float, float]:
    """Closed-form weighted squared losses of the two toy candidates.

    Candidate 1's loss is the squared mean of its n1 realized noise draws;
    candidate 2's loss is n^(-1/2)/5 exactly, independent of the data.
    """
    if n < 1:
        raise InvalidPlanError(f"need n >= 1, got {n}")
    if n1 < 1:
        raise InvalidPlanError(f"need n1 >= 1, got {n1}")
    return float(eps_bar) ** 2, n ** -0.5 / 5


def draw_rate_toy_eps_bar(cfg: RateToyConfig, n1: int, rng) -> float:
    gen = as_generator(rng)
    return float(np.mean(cfg.sigma * gen.standard_normal(n1)))


# ---------------------------------------------------------------------------
# Lacunary sine series with coefficient gaps


def beta_schedule(j: int) -> float:
    """Series coefficient at index j: 1/j^2, except zero on gap intervals.

    The gaps are [2^(3^(q-1)), 2^(3^q)] for odd q, derived from sample
    sizes of the form 2^(12 * 3^(q-1)) via exact integer twelfth and
    fourth roots; enumeration stops once a gap starts beyond j.
    """
    if j < 1:
        raise InvalidPlanError(f"coefficient index must be >= 1, got {j}")
    q = 1
    while True:
        lo = 2 ** (3 ** (q - 1))
        if lo > j:
            break
        if j <= 2 ** (3 ** q):
            return 0.0
        q += 2
    return 1.0 / (j * j)


@dataclass(frozen=True)
class GappedSineConfig:
    """Truth sum_j beta_j * sqrt2 sin(4^j pi x) truncated at j_max.

    The truncation error sum_{j>j_max} beta_j^2 is bounded by
    j_max^(-3)/3, far below every tolerance used downstream.
    """

    j_max: int = 64
    sigma: float = 1.0

    def __post_init__(self):
        if self.j_max < 1:
            raise InvalidPlanError("j_max must be >= 1")
        if self.sigma < 0:
            raise InvalidPlanError("sigma must be nonnegative")

    def betas(self) -> np.ndarray:
        return np.array([beta_schedule(j) for j in range(1, self.j_max + 1)])

    def tail_bound(self) -> float:
        return self.j_max ** -3 / 3

    def truth(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        out = np.zeros_like(x)
        for j, b in enumerate(self.betas(), start=1):
            if b != 0.0:
                out += b * sine_basis(x, j)
        return out


def gen_gapped_sine(cfg: GappedSineConfig, n: int, rng) -> Dataset:
    gen = as_generator(rng)
    x = gen.random(n)
    y = cfg.truth(x) + cfg.sigma * gen.standard_normal(n)
    return Dataset(x[:, None], y, column_names=["x"])


def dataset_csv(data: Dataset) -> str:
    """Render a dataset as CSV, predictors first, response last."""
    names = data.column_names or [f"x{j}" for j in range(data.p)]
    lines = [",".join(list(names) + ["y"])]
    for i in range(data.n):
        cells = [format(v, ".17g") for v in data.x[i]] + [format(data.y[i], ".17g")]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
