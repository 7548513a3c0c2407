"""Exception and warning types shared across the package."""

from __future__ import annotations


class TcvError(Exception):
    """Base class for all package errors."""


class InvalidPlanError(TcvError):
    """Split or selection plan is structurally invalid (e.g. n1 >= n, K < 1)."""


class StratificationError(TcvError):
    """Stratified split impossible (empty stratum or unsatisfiable counts)."""


class InsufficientLocalDataError(TcvError):
    """A local-scope candidate saw fewer training rows than its floor."""


class SingularDesignError(TcvError):
    """Design matrix is rank deficient and no fallback was allowed."""


class DegenerateDesignError(TcvError):
    """Estimator cannot work with the training predictors (e.g. all x equal)."""


class DomainError(TcvError):
    """Input outside an estimator's required domain."""


class ConvergenceError(TcvError):
    """Iterative solver failed to converge; carries the final duality gap."""

    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (duality gap {gap:.3e})")
        self.gap = gap


class InvalidWeightError(TcvError):
    """Weight construction parameters out of range."""


class InvalidVarianceError(TcvError):
    """Conditional variance nonpositive at an evaluation point."""


class ZeroWeightSplit(TcvError):
    """Signal: a test split carried zero total weight (policy decides)."""


class ExcessiveSkipsError(TcvError):
    """More than half of the requested splits were skipped."""


class ConfigError(TcvError):
    """Experiment configuration failed schema validation."""


class ReplicationFailed(TcvError):
    """A replication raised after the skip policy; the experiment aborts."""


class RankFallbackWarning(UserWarning):
    """OLS dropped collinear design columns instead of erroring."""
