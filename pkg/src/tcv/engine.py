"""Targeted cross-validation: scoring, single-split and multi-split selection.

The criterion for one train/test split is the unnormalized weighted sum of
squared test errors; selection is the argmin over candidates, which makes
every decision invariant under positive scaling of the weight.  Multiple
random splits are aggregated either by averaging the per-split criteria or
by voting (share of split wins); ties always resolve to the lowest
candidate id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import CandidateProcedure, Dataset, Predictor, Split, check_roster, fit, make_split
from .errors import ExcessiveSkipsError, InvalidPlanError, TcvError, ZeroWeightSplit
from .regions import Region
from .rng import RngSpec
from .weights import WeightFunction, constant_weight

AVERAGE = "average"
VOTE = "vote"
SKIP_SPLIT = "skip_split"
ERROR = "error"


@dataclass(frozen=True)
class MtcvPlan:
    """How to run multi-split selection: split sizes, count, aggregation."""

    n1: int
    n_splits: int
    aggregator: str = AVERAGE
    stratify: Region | None = None
    zero_weight_policy: str = SKIP_SPLIT

    def __post_init__(self):
        if self.n_splits < 1:
            raise InvalidPlanError(f"need at least one split, got {self.n_splits}")
        if self.aggregator not in (AVERAGE, VOTE):
            raise InvalidPlanError(f"unknown aggregator {self.aggregator!r}")
        if self.zero_weight_policy not in (SKIP_SPLIT, ERROR):
            raise InvalidPlanError(f"unknown zero-weight policy {self.zero_weight_policy!r}")


@dataclass
class SelectionReport:
    """Outcome of one multi-split selection run."""

    candidate_names: list[str]
    aggregator: str
    scores: np.ndarray            # K x m, NaN on skipped splits
    mean_scores: np.ndarray       # per candidate, over counted splits
    vote_shares: np.ndarray       # per candidate, over counted splits
    winner: int
    per_split_winners: list[int | None]
    skipped_splits: int

    @property
    def aggregate(self) -> np.ndarray:
        return self.mean_scores if self.aggregator == AVERAGE else self.vote_shares

    def to_json(self) -> str:
        def clean(v):
            return [None if np.isnan(s) else s for s in v]
        doc = {
            "candidates": self.candidate_names,
            "aggregator": self.aggregator,
            "winner": int(self.winner),
            "winner_name": self.candidate_names[self.winner],
            "mean_scores": self.mean_scores.tolist(),
            "vote_shares": self.vote_shares.tolist(),
            "skipped_splits": self.skipped_splits,
            "per_split_winners": [None if w is None else int(w)
                                  for w in self.per_split_winners],
            "scores": [clean(row) for row in self.scores.tolist()],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def scores_csv(self) -> str:
        lines = ["split," + ",".join(self.candidate_names)]
        for k, row in enumerate(self.scores):
            cells = ["" if np.isnan(v) else format(v, ".6g") for v in row]
            lines.append(f"{k}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def tcv_score(pred: Predictor, data: Dataset, test: np.ndarray,
              w: WeightFunction, n: int) -> float:
    """Weighted sum of squared prediction errors over the test rows.

    No normalization: the sum itself is the selection criterion, and any
    report-level MSE normalization happens downstream.
    """
    test = np.asarray(test, dtype=np.intp)
    if test.size == 0:
        raise InvalidPlanError("empty test set")
    resid = data.y[test] - pred.predict(data.x[test])
    wv = w(data.x[test], n)
    return float(np.dot(resid * resid, wv))


def _score_matrix(preds: list[Predictor], data: Dataset, test: np.ndarray,
                  weights: list[WeightFunction], n: int) -> np.ndarray:
    """Scores for every (weight, candidate) pair on one test set.

    Residuals are computed once per candidate and reused across weights so
    a multi-weight run costs one round of fitting.
    """
    x_test = data.x[test]
    y_test = data.y[test]
    r2 = np.empty((len(preds), test.size))
    for j, pred in enumerate(preds):
        resid = y_test - pred.predict(x_test)
        r2[j] = resid * resid
    out = np.empty((len(weights), len(preds)))
    for i, w in enumerate(weights):
        wv = w(x_test, n)
        out[i] = r2 @ wv
    return out


def select_single_split(roster: list[CandidateProcedure], data: Dataset,
                        split: Split, w: WeightFunction,
                        rng: RngSpec) -> tuple[int, np.ndarray]:
    """Fit every candidate on one split and return (winner id, scores)."""
    check_roster(roster)
    wv = w(data.x[split.test], data.n)
    if not np.any(wv > 0):
        raise ZeroWeightSplit("test split carries zero total weight")
    scores = np.empty(len(roster))
    for j, proc in enumerate(roster):
        pred = _fit_candidate(proc, data, split.train, rng)
        scores[j] = tcv_score(pred, data, split.test, w, data.n)
    return int(np.argmin(scores)), scores


def _fit_candidate(proc, data, train, rng):
    try:
        return fit(proc, data, train, rng.child(purpose=f"fit-{proc.id}"))
    except TcvError as e:
        e.args = (f"candidate {proc.id} ({proc.name}): {e}",)
        raise


def mtcv_scores(roster: list[CandidateProcedure], data: Dataset, plan: MtcvPlan,
                weights: list[WeightFunction], rng: RngSpec) -> np.ndarray:
    """Score matrix (n_weights x K x m) over K shared random splits.

    Candidates are fit once per split and scored under every weight; a
    zero-total-weight test split yields NaN scores for that weight only
    (or raises, per the plan's policy).
    """
    check_roster(roster)
    if not 1 <= plan.n1 < data.n:
        raise InvalidPlanError(f"plan n1={plan.n1} invalid for n={data.n}")
    mask = plan.stratify.mask(data.x) if plan.stratify is not None else None
    out = np.full((len(weights), plan.n_splits, len(roster)), np.nan)
    for k in range(plan.n_splits):
        split_rng = rng.child(split=k)
        split = make_split(data.n, plan.n1, split_rng.child(purpose="split"), mask)
        x_test = data.x[split.test]
        wvals = [w(x_test, data.n) for w in weights]
        live = [i for i, wv in enumerate(wvals) if np.any(wv > 0)]
        if len(live) < len(weights) and plan.zero_weight_policy == ERROR:
            raise ZeroWeightSplit(f"split {k}: test rows carry zero total weight")
        if not live:
            continue
        preds = [_fit_candidate(proc, data, split.train, split_rng) for proc in roster]
        y_test = data.y[split.test]
        r2 = np.stack([(y_test - p.predict(x_test)) ** 2 for p in preds])
        for i in live:
            out[i, k] = r2 @ wvals[i]
    return out


def report_from_scores(scores_km: np.ndarray, names: list[str],
                       aggregator: str) -> SelectionReport:
    """Aggregate one weight's K x m score matrix into a SelectionReport."""
    k_total, m = scores_km.shape
    counted = ~np.isnan(scores_km[:, 0])
    n_counted = int(np.sum(counted))
    skipped = k_total - n_counted
    if skipped > k_total / 2:
        raise ExcessiveSkipsError(
            f"{skipped} of {k_total} splits skipped (zero test weight)")
    live = scores_km[counted]
    mean_scores = live.mean(axis=0)
    winners = np.argmin(live, axis=1)
    votes = np.bincount(winners, minlength=m).astype(float)
    vote_shares = votes / n_counted
    winner = (int(np.argmin(mean_scores)) if aggregator == AVERAGE
              else int(np.argmax(vote_shares)))
    per_split = []
    j = 0
    for k in range(k_total):
        if counted[k]:
            per_split.append(int(winners[j]))
            j += 1
        else:
            per_split.append(None)
    return SelectionReport(list(names), aggregator, scores_km, mean_scores,
                           vote_shares, winner, per_split, skipped)


def select_mtcv(roster: list[CandidateProcedure], data: Dataset, plan: MtcvPlan,
                w: WeightFunction, rng: RngSpec) -> SelectionReport:
    """Multi-split targeted selection under one weight."""
    scores = mtcv_scores(roster, data, plan, [w], rng)[0]
    return report_from_scores(scores, [c.name for c in roster], plan.aggregator)


def regular_cv(roster: list[CandidateProcedure], data: Dataset, plan: MtcvPlan,
               rng: RngSpec) -> SelectionReport:
    """Ordinary cross-validation: targeted selection under W = 1."""
    return select_mtcv(roster, data, plan, constant_weight(1.0), rng)
