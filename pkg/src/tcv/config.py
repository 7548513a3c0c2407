"""Declarative experiment configuration: schema, presets, canonical form.

A config file names one of the built-in presets and optionally overrides
its knobs.  Validation is strict (unknown keys are rejected before any
computation) and the canonical serialization materializes every default,
so equal configurations hash equally.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Callable

import jsonschema
import numpy as np

from . import dgp
from .bench import (PER_POINT, WEIGHT_MEAN, ExperimentSpec, RankingProbeConfig,
                    ranking_probe, rate_toy_probe, run_experiment)
from .core import CandidateProcedure
from .engine import MtcvPlan
from .errors import ConfigError
from .estimators import (AdditiveSplineConfig, ForestConfig, FourierConfig,
                         LassoConfig, NwConfig, OlsConfig)
from .housing import load_housing, new_area_region
from .regions import Interval, Region
from .rng import RngSpec
from .weights import (PiecewiseWeight, RegionWeight, WeightFunction,
                      constant_weight, point_weight)

DEFAULT_SEED = 20260825

EXPERIMENTS = ("sim1", "sim2", "sim3", "boston", "rate_toy", "fourier_probe")

_OVERRIDE_KEYS = {
    "sim1": ("n", "sigma", "n1", "n_splits", "n_replications", "eval_n"),
    "sim2": ("n", "n1", "n_splits", "n_replications", "eval_n"),
    "sim3": ("n", "p", "n1", "n_splits", "n_replications", "eval_n",
             "n_trees", "mtry", "min_local_rows"),
    "boston": ("n_splits", "n_replications", "eval_fraction", "data_path"),
    "rate_toy": ("n", "n1", "sigma", "reps"),
    "fourier_probe": ("n", "n1", "reps", "probe_n", "j_max"),
}

_NUMBER = {"type": "number"}
_COUNT = {"type": "integer", "minimum": 1}


def _override_schema(kind: str) -> dict:
    props = {}
    for key in _OVERRIDE_KEYS[kind]:
        if key == "data_path":
            props[key] = {"type": "string"}
        elif key in ("sigma", "eval_fraction"):
            props[key] = _NUMBER
        else:
            props[key] = _COUNT
    return {"type": "object", "properties": props, "additionalProperties": False}


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "paper_scale": {"type": "boolean"},
        "overrides": {"type": "object"},
    },
    "required": ["experiment"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class ResolvedConfig:
    experiment: str
    seed: int
    paper_scale: bool
    overrides: dict

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed,
                "paper_scale": self.paper_scale, "overrides": dict(self.overrides)}


def parse_config(doc) -> ResolvedConfig:
    """Validate a config document (dict or JSON text) and fill defaults."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
        kind = doc["experiment"]
        jsonschema.validate(doc.get("overrides", {}), _override_schema(kind))
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<top>"
        raise ConfigError(f"config invalid at {path}: {e.message}") from e
    return ResolvedConfig(
        experiment=kind,
        seed=int(doc.get("seed", DEFAULT_SEED)),
        paper_scale=bool(doc.get("paper_scale", False)),
        overrides=dict(doc.get("overrides", {})),
    )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize_config(cfg: ResolvedConfig) -> str:
    return canonical_json(cfg.as_dict())


def config_hash(cfg: ResolvedConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Region / roster / weight / plan documents (used by the ad-hoc selection
# command; estimator configs that need callables stay library-only)


def _column_id(ref, column_names) -> int:
    if isinstance(ref, bool):
        raise ConfigError(f"column reference {ref!r} must be an index or name")
    if isinstance(ref, int):
        return ref
    if isinstance(ref, str):
        if column_names and ref in column_names:
            return list(column_names).index(ref)
        raise ConfigError(f"unknown column name {ref!r}")
    raise ConfigError(f"column reference {ref!r} must be an index or name")


def parse_region(doc, column_names=None) -> Region:
    clauses = doc if isinstance(doc, list) else [doc]
    out = []
    for clause in clauses:
        extra = set(clause) - {"column", "lo", "hi", "equals"}
        if extra:
            raise ConfigError(f"unknown region keys {sorted(extra)}")
        if "column" not in clause:
            raise ConfigError("region clause needs a column")
        out.append(Interval(_column_id(clause["column"], column_names),
                            lo=clause.get("lo"), hi=clause.get("hi"),
                            equals=clause.get("equals")))
    return Region(tuple(out))


def _parse_terms(terms, column_names):
    parsed = []
    for t in terms:
        if t == "intercept" or t == ["intercept"]:
            parsed.append(("intercept",))
            continue
        if not isinstance(t, list) or not t:
            raise ConfigError(f"bad design term {t!r}")
        kind, *cols = t
        if kind in ("col", "log", "square") and len(cols) == 1:
            parsed.append((kind, _column_id(cols[0], column_names)))
        elif kind == "product" and len(cols) == 2:
            parsed.append((kind, _column_id(cols[0], column_names),
                           _column_id(cols[1], column_names)))
        else:
            raise ConfigError(f"bad design term {t!r}")
    return tuple(parsed)


def parse_estimator(doc, column_names=None):
    extra = set(doc) - {"estimator", "config"}
    if extra:
        raise ConfigError(f"unknown estimator keys {sorted(extra)}")
    kind = doc.get("estimator")
    params = dict(doc.get("config", {}))
    try:
        if kind == "ols":
            terms = _parse_terms(params.pop("terms"), column_names)
            return OlsConfig(terms=terms, **params)
        if kind == "nw":
            return NwConfig(**params)
        if kind == "lasso":
            return LassoConfig(**params)
        if kind == "forest":
            return ForestConfig(**params)
        if kind == "spline":
            smooth = tuple(_column_id(c, column_names)
                           for c in params.pop("smooth_columns"))
            linear = tuple(_column_id(c, column_names)
                           for c in params.pop("linear_columns", ()))
            return AdditiveSplineConfig(smooth_columns=smooth,
                                        linear_columns=linear, **params)
        if kind == "fourier":
            return FourierConfig(**params)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"bad {kind} estimator config: {e}") from e
    raise ConfigError(f"unknown estimator kind {kind!r}")


def parse_roster(docs, column_names=None) -> list[CandidateProcedure]:
    roster = []
    for i, doc in enumerate(docs):
        extra = set(doc) - {"name", "estimator", "config", "scope",
                            "min_local_rows"}
        if extra:
            raise ConfigError(f"unknown candidate keys {sorted(extra)}")
        est = parse_estimator({"estimator": doc.get("estimator"),
                               "config": doc.get("config", {})}, column_names)
        scope = (parse_region(doc["scope"], column_names)
                 if "scope" in doc else None)
        roster.append(CandidateProcedure(
            id=i, name=doc.get("name", f"candidate{i}"), config=est,
            scope=scope, min_local_rows=doc.get("min_local_rows", 10)))
    return roster


def parse_weight(doc, column_names=None) -> WeightFunction:
    extra = set(doc) - {"kind", "value", "region", "w_in", "w_out",
                        "prob_region", "center", "norm_const"}
    if extra:
        raise ConfigError(f"unknown weight keys {sorted(extra)}")
    kind = doc.get("kind")
    if kind == "constant":
        return constant_weight(doc.get("value", 1.0))
    if kind == "region":
        return RegionWeight(parse_region(doc["region"], column_names),
                            prob_region=doc.get("prob_region"))
    if kind == "piecewise":
        return PiecewiseWeight(parse_region(doc["region"], column_names),
                               doc["w_in"], doc["w_out"])
    if kind == "point":
        return point_weight(np.asarray(doc["center"], dtype=float),
                            norm_const=doc.get("norm_const"))
    raise ConfigError(f"unknown weight kind {kind!r}")


def parse_plan(doc, column_names=None) -> MtcvPlan:
    extra = set(doc) - {"n1", "n_splits", "aggregator", "stratify",
                        "zero_weight_policy"}
    if extra:
        raise ConfigError(f"unknown plan keys {sorted(extra)}")
    for key in ("n1", "n_splits"):
        if key not in doc:
            raise ConfigError(f"plan needs {key}")
    stratify = (parse_region(doc["stratify"], column_names)
                if "stratify" in doc else None)
    kwargs = {}
    if "aggregator" in doc:
        kwargs["aggregator"] = doc["aggregator"]
    if "zero_weight_policy" in doc:
        kwargs["zero_weight_policy"] = doc["zero_weight_policy"]
    return MtcvPlan(n1=doc["n1"], n_splits=doc["n_splits"],
                    stratify=stratify, **kwargs)


# ---------------------------------------------------------------------------
# Presets


@dataclass
class Job:
    """One unit of CLI work: a table experiment or a probe."""

    name: str
    kind: str                       # "table" or "rows"
    run: Callable[[], object]       # -> ReplicationSummary or list[dict]


def _sim1_spec(cfg: dgp.HundredCloneConfig, reps: int, n1: int, k: int,
               rng: RngSpec, name: str) -> ExperimentSpec:
    region = cfg.local_region()
    p = cfg.p_extra
    full_terms = tuple(("col", j) for j in range(p + 1)) + tuple(
        ("product", cfg.indicator_column, j) for j in range(1, p + 1))
    roster = [
        CandidateProcedure(0, "simple_global",
                           OlsConfig(terms=(("col", 0),))),
        CandidateProcedure(1, "full_global",
                           OlsConfig(terms=full_terms, allow_rank_fallback=True)),
        CandidateProcedure(2, "simple_local",
                           OlsConfig(terms=(("col", 0),)), scope=region),
    ]
    eval_cfg = replace(cfg, n=cfg.eval_n)
    return ExperimentSpec(
        name=name, roster=roster,
        plan=MtcvPlan(n1=n1, n_splits=k),
        weights={"tcv": RegionWeight(region)},
        n_replications=reps, rng=rng,
        draw=lambda r: dgp.gen_hundred_clone(cfg, r),
        draw_eval=lambda r: dgp.gen_hundred_clone(eval_cfg, r),
        local_region=region, local_convention=WEIGHT_MEAN,
    )


def _sim1_jobs(rc: ResolvedConfig, threads: int) -> list[Job]:
    ov = rc.overrides
    reps = ov.get("n_replications", 500 if rc.paper_scale else 200)
    sigmas = [float(ov["sigma"])] if "sigma" in ov else [25.0, 3.0]
    jobs = []
    for sigma in sigmas:
        cfg = dgp.HundredCloneConfig(n=ov.get("n", 800), sigma=sigma,
                                     eval_n=ov.get("eval_n", 5000))
        n1 = ov.get("n1", cfg.n // 2)
        k = ov.get("n_splits", 100)
        name = f"sim1_sigma{sigma:g}"
        rng = RngSpec(rc.seed, purpose=name)
        jobs.append(Job(name, "table",
                        lambda c=cfg, r=reps, a=n1, b=k, g=rng, m=name:
                        run_experiment(_sim1_spec(c, r, a, b, g, m),
                                       threads=threads)))
    return jobs


def _sim2_spec(rc: ResolvedConfig) -> ExperimentSpec:
    ov = rc.overrides
    cfg = dgp.BentLineConfig(n=ov.get("n", 200), eval_n=ov.get("eval_n", 5000))
    region = cfg.local_region()
    roster = [
        CandidateProcedure(0, "nw", NwConfig()),
        CandidateProcedure(1, "linear",
                           OlsConfig(terms=(("intercept",), ("col", 0)))),
    ]
    weights = {f"tcv_{a:g}": PiecewiseWeight(region, a, b)
               for a, b in ((0.5, 0.5), (0.8, 0.2), (0.9, 0.1), (1.0, 0.0))}
    eval_cfg = replace(cfg, n=cfg.eval_n)
    return ExperimentSpec(
        name="sim2", roster=roster,
        plan=MtcvPlan(n1=ov.get("n1", cfg.n // 2),
                      n_splits=ov.get("n_splits", 100)),
        weights=weights,
        n_replications=ov.get("n_replications", 500 if rc.paper_scale else 200),
        rng=RngSpec(rc.seed, purpose="sim2"),
        draw=lambda r: dgp.gen_bent_line(cfg, r),
        draw_eval=lambda r: dgp.gen_bent_line(eval_cfg, r),
        local_region=region, local_convention=WEIGHT_MEAN,
        include_outside=True, include_cv=False,
    )


def _sim3_spec(rc: ResolvedConfig) -> ExperimentSpec:
    ov = rc.overrides
    cfg = dgp.SparseHighDimConfig(n=ov.get("n", 200), p=ov.get("p", 1000),
                                  eval_n=ov.get("eval_n", 5000))
    region = cfg.local_region()
    n_trees = ov.get("n_trees", 500 if rc.paper_scale else 200)
    # a third of the columns per split, the usual regression-forest rule;
    # 32 of 1000 starves the split search and the global forest collapses
    # toward the sample mean, inverting the intended local ranking
    mtry = ov.get("mtry", max(1, cfg.p // 3))
    floor = ov.get("min_local_rows", 2)
    # saturated p >> n fits crawl at the default tolerance; 1e-5 picks the
    # same lambda on these designs, and the raised sweep budget absorbs the
    # slow small-sample region fits (their sweeps touch few coordinates)
    lasso = LassoConfig(tol=1e-5, max_sweeps=200_000)
    forest = ForestConfig(n_trees=n_trees, mtry=mtry)
    roster = [
        CandidateProcedure(0, "lasso", lasso),
        CandidateProcedure(1, "rf", forest),
        CandidateProcedure(2, "lasso_local", lasso, scope=region,
                           min_local_rows=floor),
        CandidateProcedure(3, "rf_local", forest, scope=region,
                           min_local_rows=floor),
    ]
    eval_cfg = replace(cfg, n=cfg.eval_n)
    return ExperimentSpec(
        name="sim3", roster=roster,
        plan=MtcvPlan(n1=ov.get("n1", cfg.n // 2),
                      n_splits=ov.get("n_splits", 100 if rc.paper_scale else 10)),
        weights={"tcv": RegionWeight(region)},
        n_replications=ov.get("n_replications", 100 if rc.paper_scale else 50),
        rng=RngSpec(rc.seed, purpose="sim3"),
        draw=lambda r: dgp.gen_sparse_highdim(cfg, r),
        draw_eval=lambda r: dgp.gen_sparse_highdim(eval_cfg, r),
        local_region=region, local_convention=PER_POINT,
    )


def _boston_spec(rc: ResolvedConfig) -> ExperimentSpec:
    ov = rc.overrides
    data = load_housing(ov.get("data_path"))
    region = new_area_region(data)
    chas = data.column_index("chas")
    smooth = tuple(j for j in range(data.p) if j != chas)
    # the river dummy can be constant inside a local training subset, so the
    # hedonic fits need the drop-and-warn path instead of a hard error
    hedonic = OlsConfig(terms=(("intercept",),)
                        + tuple(("col", j) for j in range(data.p)),
                        allow_rank_fallback=True)
    roster = [
        CandidateProcedure(0, "hedonic_global", hedonic),
        CandidateProcedure(1, "additive_spline",
                           AdditiveSplineConfig(smooth_columns=smooth,
                                                linear_columns=(chas,))),
        CandidateProcedure(2, "hedonic_local", hedonic, scope=region),
    ]
    eval_fraction = ov.get("eval_fraction", 0.2)
    n_sel = data.n - int(round(eval_fraction * data.n))
    return ExperimentSpec(
        name="boston", roster=roster,
        plan=MtcvPlan(n1=n_sel // 2, n_splits=ov.get("n_splits", 100),
                      stratify=region),
        weights={"tcv": RegionWeight(region)},
        n_replications=ov.get("n_replications", 500 if rc.paper_scale else 100),
        rng=RngSpec(rc.seed, purpose="boston"),
        dataset=data, eval_fraction=eval_fraction, outer_stratify=region,
        local_region=region, local_convention=WEIGHT_MEAN,
    )


def _rate_toy_job(rc: ResolvedConfig) -> Job:
    ov = rc.overrides
    cfg = dgp.RateToyConfig(sigma=ov.get("sigma", 1.0))
    n = ov.get("n", 10_000)
    n1 = ov.get("n1", 1_000)
    reps = ov.get("reps", 10_000)
    rng = RngSpec(rc.seed, purpose="rate_toy")
    return Job("rate_toy", "rows",
               lambda: [rate_toy_probe(cfg, n, n1, reps, rng)])


def fourier_roster() -> list[CandidateProcedure]:
    return [CandidateProcedure(0, "series_short", FourierConfig("short")),
            CandidateProcedure(1, "series_long", FourierConfig("long"))]


def _fourier_job(rc: ResolvedConfig) -> Job:
    ov = rc.overrides
    sine = dgp.GappedSineConfig(j_max=ov.get("j_max", 64))
    n = ov.get("n", 4096)
    n1 = ov.get("n1", 1024)
    probe_cfg = RankingProbeConfig(
        draw=lambda m, r: dgp.gen_gapped_sine(sine, m, r),
        truth=sine.truth,
        roster=fourier_roster(),
        grid=[(n, n1)],
        c_rule=lambda a, b: a ** (-1 / 3) / 3,
        reps=ov.get("reps", 200),
        rng=RngSpec(rc.seed, purpose="fourier_probe"),
        probe_n=ov.get("probe_n", 100_000),
    )
    return Job("fourier_ranking", "rows", lambda: ranking_probe(probe_cfg))


def build_jobs(rc: ResolvedConfig, threads: int = 1) -> list[Job]:
    """Turn a resolved config into runnable jobs."""
    if rc.experiment == "sim1":
        return _sim1_jobs(rc, threads)
    if rc.experiment == "sim2":
        return [Job("sim2", "table",
                    lambda: run_experiment(_sim2_spec(rc), threads=threads))]
    if rc.experiment == "sim3":
        return [Job("sim3", "table",
                    lambda: run_experiment(_sim3_spec(rc), threads=threads))]
    if rc.experiment == "boston":
        return [Job("boston", "table",
                    lambda: run_experiment(_boston_spec(rc), threads=threads))]
    if rc.experiment == "rate_toy":
        return [_rate_toy_job(rc)]
    if rc.experiment == "fourier_probe":
        return [_fourier_job(rc)]
    raise ConfigError(f"unknown experiment {rc.experiment!r}")
