"""Truncated sine-series regression on [0, 1].

The basis is phi_j(x) = sqrt(2) * sin(4^j * pi * x), orthonormal under the
uniform distribution on [0, 1].  Coefficients are estimated by the sample
mean of y * phi_j(x); the truncation point depends only on the training
size, so two fixed rules ("short" and "long") give a nested model pair
differing in exactly one term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

SQRT2 = np.sqrt(2.0)


def _int_fourth_root(n: int) -> int:
    """Exact floor(n ** (1/4)) without float-power edge cases."""
    k = int(round(n ** 0.25))
    while (k + 1) ** 4 <= n:
        k += 1
    while k > 0 and k**4 > n:
        k -= 1
    return k


def truncation_size(n1: int, rule: str) -> int:
    k = _int_fourth_root(n1)
    if rule == "short":
        return k - 1
    if rule == "long":
        return k
    raise ValueError(f"unknown truncation rule {rule!r}")


def sine_basis(x: np.ndarray, j: int) -> np.ndarray:
    """phi_j evaluated exactly at float inputs.

    4^j * x is a power-of-two scaling, hence exact in float64 for j <= 511;
    reducing mod 2 before the sine keeps the argument in range, so large-j
    terms are the true values at the represented x (identically 0 once
    4^j * x becomes an even integer) instead of catastrophic-cancellation
    noise.
    """
    z = np.mod((4.0**j) * np.asarray(x, dtype=float), 2.0)
    return SQRT2 * np.sin(np.pi * z)


@dataclass(frozen=True)
class FourierConfig:
    truncation: str  # "short": floor(n1^(1/4)) - 1 terms, "long": floor(n1^(1/4))


class FourierPredictor:
    def __init__(self, coef, n_train):
        self.coef = np.asarray(coef, dtype=float)  # coef[j-1] multiplies phi_j
        self.n_train = n_train
        self.candidate_id = -1

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        out = np.zeros_like(x)
        for j, b in enumerate(self.coef, start=1):
            if b != 0.0:
                out = out + b * sine_basis(x, j)
        return out

    def summary(self) -> dict:
        return {"kind": "fourier", "coefficients": self.coef.tolist()}


def fit_fourier(cfg: FourierConfig, data, train) -> FourierPredictor:
    if data.p != 1:
        raise DomainError("sine-series estimator expects a single predictor column")
    x = data.x[train, 0]
    y = data.y[train]
    n1 = x.size
    if n1 < 16:
        raise DomainError(f"need n1 >= 16 for a nonempty truncation, got {n1}")
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("predictor values must lie in [0, 1]")
    p = truncation_size(n1, cfg.truncation)
    coef = np.array([np.mean(y * sine_basis(x, j)) for j in range(1, p + 1)])
    return FourierPredictor(coef, n1)
