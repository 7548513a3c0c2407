"""Replication harness: repeated experiments, evaluation metrics, probes.

One experiment repeatedly draws (or splits off) selection data, runs the
targeted and ordinary selectors on it, refits every candidate on the full
selection data, and scores everything on evaluation data the selectors
never saw.  Means and standard errors over replications mirror the usual
simulation-table layout; probes estimate ranking probabilities and loss
ratios against the known truth by Monte-Carlo integration.

Two reporting conventions exist for the local metric and both appear in
practice, so the spec of an experiment picks one:

* ``weight_mean``: mean over the whole evaluation set of indicator times
  squared error.  Local and outside values then add up to the overall MSE.
* ``per_point``: mean squared error over the region's rows only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CandidateProcedure, Dataset, check_roster, fit, make_split
from .dgp import draw_rate_toy_eps_bar, rate_toy_losses
from .engine import MtcvPlan, mtcv_scores, report_from_scores, select_mtcv
from .errors import InvalidPlanError, InvalidWeightError, ReplicationFailed
from .regions import Region
from .rng import RngSpec
from .weights import WeightFunction, constant_weight

WEIGHT_MEAN = "weight_mean"
PER_POINT = "per_point"


def weighted_mse(pred, eval_data: Dataset, w: WeightFunction) -> float:
    """Normalized weighted MSE: sum w * err^2 / sum w on the eval set."""
    wv = w(eval_data.x, eval_data.n)
    total = wv.sum()
    if total <= 0:
        raise InvalidWeightError("evaluation weights sum to zero")
    resid = eval_data.y - pred.predict(eval_data.x)
    return float(np.dot(resid * resid, wv) / total)


def _region_metrics(sq_err: np.ndarray, mask: np.ndarray | None,
                    convention: str, include_outside: bool) -> list[float]:
    out = [float(sq_err.mean())]
    if mask is None:
        return out
    if convention == WEIGHT_MEAN:
        out.append(float(np.dot(sq_err, mask) / sq_err.size))
        if include_outside:
            out.append(float(np.dot(sq_err, ~mask) / sq_err.size))
    elif convention == PER_POINT:
        if not mask.any():
            raise InvalidWeightError("no evaluation rows inside the region")
        out.append(float(sq_err[mask].mean()))
        if include_outside:
            out.append(float(sq_err[~mask].mean()))
    else:
        raise InvalidPlanError(f"unknown local-metric convention {convention!r}")
    return out


@dataclass
class ExperimentSpec:
    """Everything one table-producing experiment needs.

    Exactly one of ``draw`` (synthetic: fresh selection and evaluation
    data per replication) or ``dataset`` (ingested: an outer stratified
    split carves out the evaluation fraction per replication) is set.
    Selectors are the targeted runs in ``weights`` plus, optionally, the
    ordinary unweighted one labeled "cv"; all of them share candidate
    fits split by split.
    """

    name: str
    roster: list[CandidateProcedure]
    plan: MtcvPlan
    weights: dict[str, WeightFunction]
    n_replications: int
    rng: RngSpec
    draw: Callable[[RngSpec], Dataset] | None = None
    draw_eval: Callable[[RngSpec], Dataset] | None = None
    dataset: Dataset | None = None
    eval_fraction: float = 0.2
    outer_stratify: Region | None = None
    local_region: Region | None = None
    local_convention: str = WEIGHT_MEAN
    include_outside: bool = False
    include_cv: bool = True

    def __post_init__(self):
        check_roster(self.roster)
        if self.n_replications < 1:
            raise InvalidPlanError("need at least one replication")
        if (self.draw is None) == (self.dataset is None):
            raise InvalidPlanError("set exactly one of draw and dataset")
        if self.draw is not None and self.draw_eval is None:
            raise InvalidPlanError("synthetic experiments need draw_eval")
        if self.dataset is not None and not 0 < self.eval_fraction < 1:
            raise InvalidPlanError("eval_fraction must lie in (0, 1)")
        if not self.weights and not self.include_cv:
            raise InvalidPlanError("no selector configured")
        labels = list(self.weights) + (["cv"] if self.include_cv else [])
        if len(set(labels)) != len(labels):
            raise InvalidPlanError(f"duplicate selector labels in {labels}")

    @property
    def selector_labels(self) -> list[str]:
        return list(self.weights) + (["cv"] if self.include_cv else [])

    @property
    def metric_names(self) -> list[str]:
        names = ["overall"]
        if self.local_region is not None:
            names.append("local")
            if self.include_outside:
                names.append("outside")
        return names


@dataclass
class ReplicationSummary:
    name: str
    method_names: list[str]
    metric_names: list[str]
    means: np.ndarray                       # methods x metrics
    ses: np.ndarray
    selection_freq: dict[str, np.ndarray]   # by averaging, per selector
    vote_selection_freq: dict[str, np.ndarray]
    skipped_splits: dict[str, int]
    n_replications: int
    runtime_s: float
    per_rep: np.ndarray                     # reps x methods x metrics

    def method_row(self, method: str) -> dict[str, float]:
        i = self.method_names.index(method)
        return {m: float(self.means[i, j])
                for j, m in enumerate(self.metric_names)}

    def se_row(self, method: str) -> dict[str, float]:
        i = self.method_names.index(method)
        return {m: float(self.ses[i, j])
                for j, m in enumerate(self.metric_names)}


def _selection_parts(spec: ExperimentSpec, rep_rng: RngSpec):
    if spec.draw is not None:
        sel = spec.draw(rep_rng.child(purpose="data"))
        ev = spec.draw_eval(rep_rng.child(purpose="eval"))
        return sel, ev
    data = spec.dataset
    n_eval = int(round(spec.eval_fraction * data.n))
    if not 0 < n_eval < data.n:
        raise InvalidPlanError("eval fraction leaves an empty side")
    mask = (spec.outer_stratify.mask(data.x)
            if spec.outer_stratify is not None else None)
    outer = make_split(data.n, data.n - n_eval,
                       rep_rng.child(purpose="outer").stream(), mask)
    sel = Dataset(data.x[outer.train], data.y[outer.train],
                  column_names=data.column_names)
    ev = Dataset(data.x[outer.test], data.y[outer.test],
                 column_names=data.column_names)
    return sel, ev


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ReplicationSummary:
    """Run all replications and aggregate means, SEs and selection counts.

    With threads > 1, replications run on a thread pool; every replication
    has its own substream and writes its own slice, so results match the
    serial run bit for bit.
    """
    t0 = time.perf_counter()
    m = len(spec.roster)
    labels = spec.selector_labels
    all_weights = list(spec.weights.values())
    if spec.include_cv:
        all_weights.append(constant_weight(1.0))
    metric_names = spec.metric_names
    method_names = [c.name for c in spec.roster] + labels

    per_rep = np.empty((spec.n_replications, m + len(labels), len(metric_names)))
    avg_winners = np.empty((spec.n_replications, len(labels)), dtype=int)
    vote_winners = np.empty_like(avg_winners)
    skip_counts = np.zeros_like(avg_winners)

    def one_rep(r: int) -> None:
        rep_rng = spec.rng.child(replication=r)
        try:
            sel_data, eval_data = _selection_parts(spec, rep_rng)
            scores = mtcv_scores(spec.roster, sel_data, spec.plan,
                                 all_weights, rep_rng)
            finals = [fit(proc, sel_data, np.arange(sel_data.n),
                          rep_rng.child(purpose=f"final-{proc.id}"))
                      for proc in spec.roster]
            mask = (spec.local_region.mask(eval_data.x)
                    if spec.local_region is not None else None)
            rows = np.empty((m, len(metric_names)))
            for j, pred in enumerate(finals):
                err = eval_data.y - pred.predict(eval_data.x)
                rows[j] = _region_metrics(err * err, mask,
                                          spec.local_convention,
                                          spec.include_outside)
            per_rep[r, :m] = rows
            for i, lab in enumerate(labels):
                report = report_from_scores(scores[i], method_names[:m],
                                            spec.plan.aggregator)
                avg_winners[r, i] = int(np.argmin(report.mean_scores))
                vote_winners[r, i] = int(np.argmax(report.vote_shares))
                skip_counts[r, i] = report.skipped_splits
                per_rep[r, m + i] = rows[report.winner]
        except Exception as e:
            raise ReplicationFailed(
                f"{spec.name}: replication {r} failed: {e}") from e

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for outcome in pool.map(one_rep, range(spec.n_replications)):
                pass
    else:
        for r in range(spec.n_replications):
            one_rep(r)

    picks = {lab: np.bincount(avg_winners[:, i], minlength=m)
             for i, lab in enumerate(labels)}
    vote_picks = {lab: np.bincount(vote_winners[:, i], minlength=m)
                  for i, lab in enumerate(labels)}
    skipped = {lab: int(skip_counts[:, i].sum())
               for i, lab in enumerate(labels)}

    means = per_rep.mean(axis=0)
    if spec.n_replications > 1:
        ses = per_rep.std(axis=0, ddof=1) / np.sqrt(spec.n_replications)
    else:
        ses = np.zeros_like(means)
    reps = spec.n_replications
    return ReplicationSummary(
        name=spec.name,
        method_names=method_names,
        metric_names=metric_names,
        means=means,
        ses=ses,
        selection_freq={lab: picks[lab] / reps for lab in labels},
        vote_selection_freq={lab: vote_picks[lab] / reps for lab in labels},
        skipped_splits=skipped,
        n_replications=reps,
        runtime_s=time.perf_counter() - t0,
        per_rep=per_rep,
    )


# ---------------------------------------------------------------------------
# Artifact rendering


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def summary_csv(summary: ReplicationSummary, header_fields: dict | None = None) -> str:
    """Table-shaped CSV: one row per method and metric, mean then SE."""
    fields = {"name": summary.name,
              "n_replications": summary.n_replications}
    fields.update(header_fields or {})
    head = "# " + " ".join(f"{k}={v}" for k, v in fields.items())
    lines = [head, "method,metric,mean,se"]
    for i, method in enumerate(summary.method_names):
        for j, metric in enumerate(summary.metric_names):
            lines.append(",".join([method, metric,
                                   _fmt(float(summary.means[i, j])),
                                   _fmt(float(summary.ses[i, j]))]))
    return "\n".join(lines) + "\n"


def summary_manifest(summary: ReplicationSummary,
                     header_fields: dict | None = None) -> dict:
    doc = {
        "name": summary.name,
        "n_replications": summary.n_replications,
        "runtime_s": summary.runtime_s,
        "methods": summary.method_names,
        "metrics": summary.metric_names,
        "means": summary.means.tolist(),
        "ses": summary.ses.tolist(),
        "selection_freq_average": {k: v.tolist()
                                   for k, v in summary.selection_freq.items()},
        "selection_freq_vote": {k: v.tolist()
                                for k, v in summary.vote_selection_freq.items()},
        "skipped_splits": summary.skipped_splits,
    }
    doc.update(header_fields or {})
    return doc


def rows_csv(rows: list[dict], header_fields: dict | None = None) -> str:
    """Generic CSV for probe outputs: one dict per row, shared keys."""
    if not rows:
        raise InvalidPlanError("no rows to render")
    keys = list(rows[0])
    lines = []
    if header_fields:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in header_fields.items()))
    lines.append(",".join(keys))
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in keys))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Probes against the known truth


def mc_weighted_l2(pred, truth: Callable, probe_x: np.ndarray,
                   w: WeightFunction | None = None) -> float:
    """Monte-Carlo weighted L2 norm of truth minus prediction."""
    err = truth(probe_x) - pred.predict(probe_x)
    if w is None:
        return float(np.sqrt(np.mean(err * err)))
    wv = w(probe_x, probe_x.shape[0])
    return float(np.sqrt(np.mean(err * err * wv)))


def l4_l2_ratio_from_errors(err: np.ndarray,
                            wv: np.ndarray | None = None) -> float:
    """Ratio of the weighted L4 and L2 norms of pointwise errors."""
    e2 = np.asarray(err, dtype=float) ** 2
    if wv is None:
        m2, m4 = float(np.mean(e2)), float(np.mean(e2 * e2))
    else:
        m2, m4 = float(np.mean(e2 * wv)), float(np.mean(e2 * e2 * wv))
    if m2 == 0:
        raise InvalidWeightError("zero L2 error, ratio undefined")
    return m4 ** 0.25 / m2 ** 0.5


@dataclass
class RankingProbeConfig:
    """Estimate how often the second candidate's loss exceeds the first's
    by the factor 1 + c, per (n, n1) grid point."""

    draw: Callable[[int, RngSpec], Dataset]
    truth: Callable[[np.ndarray], np.ndarray]
    roster: list[CandidateProcedure]
    grid: list[tuple[int, int]]
    c_rule: Callable[[int, int], float]          # (n1, n) -> margin
    reps: int
    rng: RngSpec
    w: WeightFunction | None = None
    probe_n: int = 100_000
    lower_bound_rule: Callable[[int], float] = lambda n: n ** (1 / 3)

    def __post_init__(self):
        if len(self.roster) != 2:
            raise InvalidPlanError("ranking probe compares exactly two candidates")
        if self.reps < 1 or self.probe_n < 1:
            raise InvalidPlanError("reps and probe_n must be positive")
        for n, n1 in self.grid:
            if not self.lower_bound_rule(n) <= n1 < n:
                raise InvalidPlanError(
                    f"grid point (n={n}, n1={n1}) violates the declared "
                    f"training-size bounds")


def ranking_probe(cfg: RankingProbeConfig) -> list[dict]:
    """Empirical probability of the dominance event on each grid point."""
    out = []
    for g, (n, n1) in enumerate(cfg.grid):
        c = cfg.c_rule(n1, n)
        hits = 0
        loss_sums = [0.0, 0.0]
        for r in range(cfg.reps):
            rep_rng = cfg.rng.child(replication=r, split=g)
            data = cfg.draw(n1, rep_rng.child(purpose="data"))
            probe_x = cfg.draw(cfg.probe_n, rep_rng.child(purpose="probe")).x
            losses = []
            for proc in cfg.roster:
                pred = fit(proc, data, np.arange(data.n),
                           rep_rng.child(purpose=f"fit-{proc.id}"))
                losses.append(mc_weighted_l2(pred, cfg.truth, probe_x, cfg.w))
            if losses[1] >= (1.0 + c) * losses[0]:
                hits += 1
            loss_sums[0] += losses[0]
            loss_sums[1] += losses[1]
        p_hat = hits / cfg.reps
        out.append({
            "n": n, "n1": n1, "c": c, "p_hat": p_hat,
            "se": float(np.sqrt(p_hat * (1 - p_hat) / cfg.reps)),
            "mean_loss_first": loss_sums[0] / cfg.reps,
            "mean_loss_second": loss_sums[1] / cfg.reps,
        })
    return out


def rate_toy_probe(cfg, n: int, n1: int, reps: int, rng: RngSpec) -> dict:
    """Closed-form toy comparison: how often candidate 1 beats candidate 2."""
    wins = 0
    loss1_sum = 0.0
    for r in range(reps):
        eps_bar = draw_rate_toy_eps_bar(cfg, n1, rng.child(replication=r))
        loss1, loss2 = rate_toy_losses(n, n1, eps_bar)
        loss1_sum += loss1
        if loss1 <= loss2:
            wins += 1
    freq = wins / reps
    return {
        "n": n, "n1": n1, "reps": reps,
        "loss2": rate_toy_losses(n, n1, 0.0)[1],
        "mean_loss1": loss1_sum / reps,
        "first_better_freq": freq,
        "se": float(np.sqrt(freq * (1 - freq) / reps)),
    }


def l4_l2_ratio_probe(proc: CandidateProcedure,
                      draw: Callable[[int, RngSpec], Dataset],
                      truth: Callable, n1: int, reps: int, rng: RngSpec,
                      w: WeightFunction | None = None,
                      probe_n: int = 100_000) -> dict:
    """Average L4/L2 loss-norm ratio of one candidate over repeated fits."""
    ratios = []
    for r in range(reps):
        rep_rng = rng.child(replication=r)
        data = draw(n1, rep_rng.child(purpose="data"))
        pred = fit(proc, data, np.arange(data.n), rep_rng.child(purpose="fit"))
        probe_x = draw(probe_n, rep_rng.child(purpose="probe")).x
        err = truth(probe_x) - pred.predict(probe_x)
        wv = w(probe_x, probe_n) if w is not None else None
        ratios.append(l4_l2_ratio_from_errors(err, wv))
    ratios = np.array(ratios)
    return {"n1": n1, "reps": reps, "mean_ratio": float(ratios.mean()),
            "max_ratio": float(ratios.max())}


def consistency_curve(draw: Callable[[int, RngSpec], Dataset],
                      truth: Callable, roster: list[CandidateProcedure],
                      w: WeightFunction, n_grid: list[int],
                      plan_for_n: Callable[[int], MtcvPlan], reps: int,
                      rng: RngSpec, probe_n: int = 20_000) -> list[dict]:
    """Frequency of selecting the per-n truth-best candidate, versus n.

    The best candidate at each n is the one with the smallest mean
    truth-based weighted L2 loss of its full-data fit over the same
    replications the selector saw.
    """
    out = []
    for g, n in enumerate(n_grid):
        plan = plan_for_n(n)
        picks = np.zeros(len(roster), dtype=int)
        loss_sums = np.zeros(len(roster))
        for r in range(reps):
            rep_rng = rng.child(replication=r, split=g)
            data = draw(n, rep_rng.child(purpose="data"))
            report = select_mtcv(roster, data, plan, w, rep_rng)
            picks[report.winner] += 1
            probe_x = draw(probe_n, rep_rng.child(purpose="probe")).x
            for j, proc in enumerate(roster):
                pred = fit(proc, data, np.arange(data.n),
                           rep_rng.child(purpose=f"final-{proc.id}"))
                loss_sums[j] += mc_weighted_l2(pred, truth, probe_x, w)
        best = int(np.argmin(loss_sums))
        freq = picks[best] / reps
        out.append({
            "n": n, "best": best, "best_name": roster[best].name,
            "freq_best_selected": freq,
            "se": float(np.sqrt(freq * (1 - freq) / reps)),
            "mean_losses": ";".join(format(v / reps, ".6g") for v in loss_sums),
        })
    return out
