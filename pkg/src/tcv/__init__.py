"""Targeted cross-validation: model selection under weighted squared loss.

The package scores candidate fitting procedures by a weighted sum of
squared test-set residuals, aggregates over repeated sample splits by
averaging or voting, and ships the simulation and housing experiments
used to benchmark the selector against unweighted cross-validation.
"""

from .core import CandidateProcedure, Dataset, Split, fit, make_split
from .engine import (AVERAGE, VOTE, MtcvPlan, SelectionReport, mtcv_scores,
                     regular_cv, select_mtcv, select_single_split, tcv_score)
from .errors import (ConfigError, ConvergenceError, ExcessiveSkipsError,
                     InvalidPlanError, InvalidWeightError, TcvError,
                     ZeroWeightSplit)
from .regions import EVERYWHERE, Interval, Region, box, indicator_is
from .rng import RngSpec
from .weights import (PiecewiseWeight, PointWeight, RegionWeight,
                      VarianceWeight, WeightFunction, constant_weight,
                      point_weight, weight_sup)

__version__ = "0.1.0"

__all__ = [
    "AVERAGE",
    "VOTE",
    "EVERYWHERE",
    "CandidateProcedure",
    "ConfigError",
    "ConvergenceError",
    "Dataset",
    "ExcessiveSkipsError",
    "Interval",
    "InvalidPlanError",
    "InvalidWeightError",
    "MtcvPlan",
    "PiecewiseWeight",
    "PointWeight",
    "Region",
    "RegionWeight",
    "RngSpec",
    "SelectionReport",
    "Split",
    "TcvError",
    "VarianceWeight",
    "WeightFunction",
    "ZeroWeightSplit",
    "box",
    "constant_weight",
    "fit",
    "indicator_is",
    "make_split",
    "mtcv_scores",
    "point_weight",
    "regular_cv",
    "select_mtcv",
    "select_single_split",
    "tcv_score",
    "weight_sup",
    "__version__",
]
