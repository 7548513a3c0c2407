"""Ingestion of the Boston housing table into a modeling dataset.

The raw table ships with the package (14 columns, 506 census tracts, the
standard public scaling of B, LSTAT and NOX).  The modeling dataset uses
the classic hedonic design: response log(MEDV), regressors RM^2, AGE,
log(DIS), log(RAD), TAX, PTRATIO, B, log(LSTAT), CRIM, ZN, INDUS, CHAS
and NOX^2.
"""

from __future__ import annotations

import warnings
from importlib import resources

import numpy as np
import pandas as pd

from .core import Dataset
from .errors import ConfigError, DomainError
from .regions import Region, box

RAW_COLUMNS = ("CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE",
               "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT", "MEDV")

DESIGN_COLUMNS = ("rm_sq", "age", "log_dis", "log_rad", "tax", "ptratio",
                  "b", "log_lstat", "crim", "zn", "indus", "chas", "nox_sq")

AGE_THRESHOLD = 50.0


def bundled_housing_path():
    return resources.files("tcv").joinpath("data/boston_housing.csv")


def _check_log_input(values: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(values <= 0)
    if bad.size:
        raise DomainError(
            f"column {name} has nonpositive value {values[bad[0]]} at row "
            f"{bad[0]}, cannot take its log")


def load_housing(path=None) -> Dataset:
    """Read the housing CSV and return the derived modeling dataset."""
    if path is None:
        path = bundled_housing_path()
    table = pd.read_csv(path)
    missing = [c for c in RAW_COLUMNS if c not in table.columns]
    if missing:
        raise ConfigError(f"housing table is missing columns {missing}")
    if len(table) != 506:
        warnings.warn(f"expected 506 housing rows, got {len(table)}")

    chas = table["CHAS"].to_numpy(dtype=float)
    if not np.all(np.isin(chas, (0.0, 1.0))):
        raise ConfigError("CHAS must be a 0/1 indicator")
    age = table["AGE"].to_numpy(dtype=float)
    if np.any(age < 0) or np.any(age > 100):
        raise ConfigError("AGE must lie in [0, 100]")
    for name in ("DIS", "RAD", "LSTAT", "MEDV"):
        _check_log_input(table[name].to_numpy(dtype=float), name)

    x = np.column_stack([
        table["RM"].to_numpy(dtype=float) ** 2,
        age,
        np.log(table["DIS"].to_numpy(dtype=float)),
        np.log(table["RAD"].to_numpy(dtype=float)),
        table["TAX"].to_numpy(dtype=float),
        table["PTRATIO"].to_numpy(dtype=float),
        table["B"].to_numpy(dtype=float),
        np.log(table["LSTAT"].to_numpy(dtype=float)),
        table["CRIM"].to_numpy(dtype=float),
        table["ZN"].to_numpy(dtype=float),
        table["INDUS"].to_numpy(dtype=float),
        chas,
        table["NOX"].to_numpy(dtype=float) ** 2,
    ])
    y = np.log(table["MEDV"].to_numpy(dtype=float))
    return Dataset(x, y, column_names=list(DESIGN_COLUMNS))


def new_area_region(data: Dataset) -> Region:
    """Rows with AGE below 50: the relatively new census tracts."""
    return box({data.column_index("age"): (None, AGE_THRESHOLD)})


def new_area_mask(data: Dataset) -> np.ndarray:
    return new_area_region(data).mask(data.x)
