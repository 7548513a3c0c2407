"""Replication harness: metrics, experiment runs, artifact rendering, probes."""

import numpy as np
import pytest

from tcv.bench import (
    PER_POINT,
    WEIGHT_MEAN,
    ExperimentSpec,
    RankingProbeConfig,
    _region_metrics,
    consistency_curve,
    l4_l2_ratio_from_errors,
    l4_l2_ratio_probe,
    mc_weighted_l2,
    ranking_probe,
    rate_toy_probe,
    rows_csv,
    run_experiment,
    summary_csv,
    summary_manifest,
    weighted_mse,
)
from tcv.core import CandidateProcedure, Dataset
from tcv.dgp import RateToyConfig
from tcv.engine import MtcvPlan
from tcv.errors import InvalidPlanError, InvalidWeightError, ReplicationFailed
from tcv.estimators.ols import OlsConfig
from tcv.regions import box
from tcv.rng import RngSpec
from tcv.weights import PiecewiseWeight, RegionWeight, ScaledWeight, constant_weight

LEFT = box({0: (None, 0.5)})


class FlatPredictor:
    """Stands in for a fitted candidate; predicts one constant."""

    def __init__(self, value=0.0):
        self.value = value

    def predict(self, x):
        return np.full(x.shape[0], self.value)


def line_dataset(n, rng, slope=2.0, noise=0.0):
    gen = rng.stream()
    x = gen.random((n, 1))
    y = slope * x[:, 0] + noise * gen.standard_normal(n)
    return Dataset(x, y)


def mean_vs_line_roster():
    return [
        CandidateProcedure(0, "line",
                           OlsConfig(terms=(("intercept",), ("col", 0)))),
        CandidateProcedure(1, "mean", OlsConfig(terms=(("intercept",),))),
    ]


# ---------------------------------------------------------------------------
# Pointwise metrics


def test_weighted_mse_hand_case():
    data = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([1.0, 3.0, 2.0]))
    w = PiecewiseWeight(LEFT, 2.0, 0.5)
    # weights (2, .5, .5) on squared errors (1, 9, 4): 8.5 / 3
    got = weighted_mse(FlatPredictor(), data, w)
    assert got == pytest.approx(8.5 / 3, rel=1e-15)


def test_weighted_mse_is_scale_invariant():
    data = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([1.0, 3.0, 2.0]))
    w = PiecewiseWeight(LEFT, 2.0, 0.5)
    base = weighted_mse(FlatPredictor(), data, w)
    scaled = weighted_mse(FlatPredictor(), data, ScaledWeight(w, 7.0))
    assert scaled == pytest.approx(base, rel=1e-14)


def test_weighted_mse_rejects_zero_total_weight():
    data = Dataset(np.array([[0.0], [0.2]]), np.array([1.0, 2.0]))
    far = RegionWeight(box({0: (10.0, None)}))
    with pytest.raises(InvalidWeightError):
        weighted_mse(FlatPredictor(), data, far)


def test_region_metrics_weight_mean_partitions_overall():
    sq = np.array([1.0, 2.0, 3.0, 4.0])
    mask = np.array([True, False, True, False])
    overall, local, outside = _region_metrics(sq, mask, WEIGHT_MEAN, True)
    assert overall == 2.5
    assert local == 1.0
    assert outside == 1.5
    assert local + outside == overall


def test_region_metrics_per_point_averages_inside():
    sq = np.array([1.0, 2.0, 3.0, 4.0])
    mask = np.array([True, False, True, False])
    overall, local, outside = _region_metrics(sq, mask, PER_POINT, True)
    assert overall == 2.5
    assert local == 2.0
    assert outside == 3.0


def test_region_metrics_edge_cases():
    sq = np.array([1.0, 2.0])
    assert _region_metrics(sq, None, WEIGHT_MEAN, True) == [1.5]
    with pytest.raises(InvalidWeightError):
        _region_metrics(sq, np.array([False, False]), PER_POINT, False)
    with pytest.raises(InvalidPlanError):
        _region_metrics(sq, np.array([True, False]), "harmonic", False)


# ---------------------------------------------------------------------------
# Experiment spec validation


def spec_kwargs(**extra):
    base = dict(
        name="toy",
        roster=mean_vs_line_roster(),
        plan=MtcvPlan(n1=20, n_splits=3),
        weights={"w": RegionWeight(LEFT)},
        n_replications=2,
        rng=RngSpec(7),
        draw=lambda rng: line_dataset(40, rng),
        draw_eval=lambda rng: line_dataset(30, rng),
    )
    base.update(extra)
    return base


def test_spec_requires_exactly_one_data_source():
    data = line_dataset(40, RngSpec(1))
    with pytest.raises(InvalidPlanError, match="exactly one"):
        ExperimentSpec(**spec_kwargs(draw=None, draw_eval=None))
    with pytest.raises(InvalidPlanError, match="exactly one"):
        ExperimentSpec(**spec_kwargs(dataset=data))


def test_spec_synthetic_needs_eval_draw():
    with pytest.raises(InvalidPlanError, match="draw_eval"):
        ExperimentSpec(**spec_kwargs(draw_eval=None))


def test_spec_eval_fraction_bounds():
    data = line_dataset(40, RngSpec(1))
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(InvalidPlanError, match="eval_fraction"):
            ExperimentSpec(**spec_kwargs(draw=None, draw_eval=None,
                                         dataset=data, eval_fraction=bad))


def test_spec_needs_some_selector():
    with pytest.raises(InvalidPlanError, match="no selector"):
        ExperimentSpec(**spec_kwargs(weights={}, include_cv=False))


def test_spec_rejects_label_collision_with_cv():
    with pytest.raises(InvalidPlanError, match="duplicate"):
        ExperimentSpec(**spec_kwargs(weights={"cv": RegionWeight(LEFT)}))


def test_spec_rejects_zero_replications():
    with pytest.raises(InvalidPlanError, match="replication"):
        ExperimentSpec(**spec_kwargs(n_replications=0))


def test_spec_label_and_metric_names():
    spec = ExperimentSpec(**spec_kwargs(local_region=LEFT,
                                        include_outside=True))
    assert spec.selector_labels == ["w", "cv"]
    assert spec.metric_names == ["overall", "local", "outside"]
    bare = ExperimentSpec(**spec_kwargs())
    assert bare.metric_names == ["overall"]


# ---------------------------------------------------------------------------
# Running experiments


@pytest.fixture(scope="module")
def toy_summary():
    spec = ExperimentSpec(**spec_kwargs(local_region=LEFT, n_replications=3))
    return run_experiment(spec)


def test_run_experiment_shapes(toy_summary):
    s = toy_summary
    assert s.method_names == ["line", "mean", "w", "cv"]
    assert s.metric_names == ["overall", "local"]
    assert s.means.shape == (4, 2)
    assert s.ses.shape == (4, 2)
    assert s.per_rep.shape == (3, 4, 2)
    assert s.n_replications == 3
    assert s.runtime_s > 0


def test_run_experiment_noiseless_line_is_always_selected(toy_summary):
    s = toy_summary
    # the line candidate reproduces the truth, so both selectors take it
    # every time and inherit its error rows
    for lab in ("w", "cv"):
        assert s.selection_freq[lab].tolist() == [1.0, 0.0]
        assert s.vote_selection_freq[lab].tolist() == [1.0, 0.0]
        assert s.skipped_splits[lab] == 0
        assert s.method_row(lab) == s.method_row("line")
    assert s.method_row("line")["overall"] < 1e-20
    assert s.se_row("line")["overall"] < 1e-20
    assert s.method_row("mean")["overall"] > 0.1


def test_run_experiment_is_deterministic():
    spec = ExperimentSpec(**spec_kwargs())
    a = run_experiment(spec)
    b = run_experiment(ExperimentSpec(**spec_kwargs()))
    assert np.array_equal(a.per_rep, b.per_rep)
    assert summary_csv(a) == summary_csv(b)


def test_run_experiment_threads_match_serial():
    serial = run_experiment(ExperimentSpec(**spec_kwargs(n_replications=4)))
    pooled = run_experiment(ExperimentSpec(**spec_kwargs(n_replications=4)),
                            threads=3)
    assert np.array_equal(serial.per_rep, pooled.per_rep)
    assert serial.selection_freq["w"].tolist() == pooled.selection_freq["w"].tolist()


def test_run_experiment_ingested_dataset_path():
    data = line_dataset(120, RngSpec(11), noise=0.1)
    spec = ExperimentSpec(**spec_kwargs(
        draw=None, draw_eval=None, dataset=data, eval_fraction=0.25,
        outer_stratify=LEFT, local_region=LEFT, n_replications=2,
        plan=MtcvPlan(n1=45, n_splits=3)))
    summ = run_experiment(spec)
    assert summ.per_rep.shape == (2, 4, 2)
    assert np.isfinite(summ.means).all()
    again = run_experiment(ExperimentSpec(**spec_kwargs(
        draw=None, draw_eval=None, dataset=data, eval_fraction=0.25,
        outer_stratify=LEFT, local_region=LEFT, n_replications=2,
        plan=MtcvPlan(n1=45, n_splits=3))))
    assert np.array_equal(summ.per_rep, again.per_rep)


def test_run_experiment_wraps_replication_errors():
    def degenerate(rng):
        d = line_dataset(40, rng)
        return Dataset(np.zeros_like(d.x), d.y)

    roster = [CandidateProcedure(0, "slope", OlsConfig(terms=(("col", 0),)))]
    spec = ExperimentSpec(**spec_kwargs(roster=roster, draw=degenerate))
    with pytest.raises(ReplicationFailed, match="replication 0 failed"):
        run_experiment(spec)


# ---------------------------------------------------------------------------
# Artifact rendering


def test_summary_csv_layout(toy_summary):
    text = summary_csv(toy_summary, {"master_seed": 7})
    lines = text.splitlines()
    assert lines[0].startswith("# name=toy ")
    assert "master_seed=7" in lines[0]
    assert lines[1] == "method,metric,mean,se"
    assert len(lines) == 2 + 4 * 2
    first = lines[2].split(",")
    assert first[:2] == ["line", "overall"]
    assert float(first[2]) < 1e-12
    assert text.endswith("\n")


def test_summary_manifest_contents(toy_summary):
    doc = summary_manifest(toy_summary, {"config_hash": "abc"})
    assert doc["name"] == "toy"
    assert doc["config_hash"] == "abc"
    assert doc["methods"] == ["line", "mean", "w", "cv"]
    assert doc["means"] == toy_summary.means.tolist()
    assert doc["selection_freq_average"]["w"] == [1.0, 0.0]
    assert doc["skipped_splits"] == {"w": 0, "cv": 0}


def test_rows_csv_layout():
    rows = [{"n": 10, "p_hat": 0.5}, {"n": 20, "p_hat": 0.25}]
    text = rows_csv(rows, {"seed": 3})
    assert text == "# seed=3\nn,p_hat\n10,0.5\n20,0.25\n"
    assert rows_csv(rows).splitlines()[0] == "n,p_hat"
    with pytest.raises(InvalidPlanError):
        rows_csv([])


# ---------------------------------------------------------------------------
# Monte-Carlo probes


def test_mc_weighted_l2_constant_error():
    probe_x = np.array([[0.0], [1.0]])
    truth = lambda x: np.full(x.shape[0], 2.0)
    assert mc_weighted_l2(FlatPredictor(), truth, probe_x) == 2.0
    w = PiecewiseWeight(LEFT, 3.0, 1.0)
    # mean weight is 2, constant squared error 4: sqrt(8)
    got = mc_weighted_l2(FlatPredictor(), truth, probe_x, w)
    assert got == pytest.approx(np.sqrt(8.0), rel=1e-15)


def test_l4_l2_ratio_constant_error_is_one():
    assert l4_l2_ratio_from_errors(np.full(5, 3.0)) == 1.0
    err = np.array([1.0, 3.0])
    expect = ((1 + 81) / 2) ** 0.25 / ((1 + 9) / 2) ** 0.5
    assert l4_l2_ratio_from_errors(err) == pytest.approx(expect, rel=1e-15)
    with pytest.raises(InvalidWeightError):
        l4_l2_ratio_from_errors(np.zeros(4))


def probe_kwargs(**extra):
    base = dict(
        draw=lambda n, rng: line_dataset(n, rng, noise=0.2),
        truth=lambda x: 2.0 * x[:, 0],
        roster=mean_vs_line_roster(),
        grid=[(64, 16)],
        c_rule=lambda n1, n: 0.0,
        reps=4,
        rng=RngSpec(5),
        probe_n=200,
    )
    base.update(extra)
    return base


def test_ranking_probe_config_validation():
    with pytest.raises(InvalidPlanError, match="exactly two"):
        RankingProbeConfig(**probe_kwargs(roster=mean_vs_line_roster()[:1]))
    with pytest.raises(InvalidPlanError, match="positive"):
        RankingProbeConfig(**probe_kwargs(reps=0))
    with pytest.raises(InvalidPlanError, match="positive"):
        RankingProbeConfig(**probe_kwargs(probe_n=0))
    with pytest.raises(InvalidPlanError, match="bounds"):
        RankingProbeConfig(**probe_kwargs(grid=[(1000, 5)]))
    with pytest.raises(InvalidPlanError, match="bounds"):
        RankingProbeConfig(**probe_kwargs(grid=[(64, 64)]))
    # a laxer bound rule admits the same grid point
    RankingProbeConfig(**probe_kwargs(grid=[(1000, 5)],
                                      lower_bound_rule=lambda n: 1.0))


def test_ranking_probe_identical_candidates_always_hit():
    roster = [
        CandidateProcedure(0, "a", OlsConfig(terms=(("intercept",), ("col", 0)))),
        CandidateProcedure(1, "b", OlsConfig(terms=(("intercept",), ("col", 0)))),
    ]
    rows = ranking_probe(RankingProbeConfig(**probe_kwargs(roster=roster)))
    assert len(rows) == 1
    row = rows[0]
    assert row["n"] == 64 and row["n1"] == 16 and row["c"] == 0.0
    assert row["p_hat"] == 1.0
    assert row["se"] == 0.0
    assert row["mean_loss_first"] == row["mean_loss_second"]


def test_ranking_probe_clear_gap_detected():
    # the mean candidate misses the slope; with c = 0 the better-fitting
    # line should win every draw
    rows = ranking_probe(RankingProbeConfig(**probe_kwargs()))
    assert rows[0]["p_hat"] == 1.0
    assert rows[0]["mean_loss_second"] > rows[0]["mean_loss_first"]


def test_rate_toy_probe_exact_parts():
    out = rate_toy_probe(RateToyConfig(), n=100, n1=25, reps=60, rng=RngSpec(9))
    assert out["loss2"] == 100 ** -0.5 / 5
    assert out["n"] == 100 and out["n1"] == 25 and out["reps"] == 60
    assert 0.0 <= out["first_better_freq"] <= 1.0
    f = out["first_better_freq"]
    assert out["se"] == pytest.approx(np.sqrt(f * (1 - f) / 60))
    # mean of squared averages of 25 unit-normal draws sits near 1/25
    assert out["mean_loss1"] == pytest.approx(1 / 25, rel=0.6)


def test_l4_l2_ratio_probe_near_gaussian_value():
    proc = mean_vs_line_roster()[0]
    out = l4_l2_ratio_probe(proc,
                            draw=lambda n, rng: line_dataset(n, rng, noise=0.3),
                            truth=lambda x: 2.0 * x[:, 0],
                            n1=60, reps=5, rng=RngSpec(2), probe_n=400)
    assert out["n1"] == 60 and out["reps"] == 5
    assert 1.0 <= out["mean_ratio"] <= out["max_ratio"] < 3.0


def test_consistency_curve_finds_the_truthful_candidate():
    rows = consistency_curve(
        draw=lambda n, rng: line_dataset(n, rng, noise=0.05),
        truth=lambda x: 2.0 * x[:, 0],
        roster=mean_vs_line_roster(),
        w=constant_weight(),
        n_grid=[60],
        plan_for_n=lambda n: MtcvPlan(n1=n // 2, n_splits=5),
        reps=4,
        rng=RngSpec(3),
        probe_n=300,
    )
    assert len(rows) == 1
    row = rows[0]
    assert row["best"] == 0 and row["best_name"] == "line"
    assert row["freq_best_selected"] == 1.0
    assert row["se"] == 0.0
    losses = [float(v) for v in row["mean_losses"].split(";")]
    assert losses[0] < losses[1]
