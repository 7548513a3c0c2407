"""Command-line surface: run experiments, select on user data, run probes.

Subcommands
-----------
run        execute a preset or config-file experiment, write CSV + JSON +
           figure artifacts into the output directory
select     one-shot selection on a user CSV with a roster/weight/plan file
probe      ranking, consistency and loss-ratio probes on built-in setups
dump-dgp   write one draw of a built-in data-generating process as CSV

Every artifact carries the config hash and the master seed; reruns with
identical configuration and seed produce byte-identical delimited output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import pandas as pd

from . import config as cfgmod
from . import dgp
from .bench import (RankingProbeConfig, consistency_curve, l4_l2_ratio_probe,
                    ranking_probe, rows_csv, summary_csv, summary_manifest)
from .core import CandidateProcedure, Dataset
from .engine import MtcvPlan, select_mtcv
from .errors import ConfigError, TcvError
from .estimators import NwConfig, OlsConfig
from .rng import RngSpec
from .weights import PiecewiseWeight

PROBE_Y_KEYS = ("p_hat", "first_better_freq", "freq_best_selected",
                "mean_ratio")


def _fail(err: Exception, code: int) -> int:
    doc = {"error": type(err).__name__, "message": str(err)}
    print(json.dumps(doc), file=sys.stderr)
    return code


def _print_summary(summary) -> None:
    width = max(len(m) for m in summary.method_names) + 2
    print(f"\n{summary.name}  ({summary.n_replications} replications, "
          f"{summary.runtime_s:.1f}s)")
    head = "".join(f"{m:>18}" for m in summary.metric_names)
    print(f"{'method':<{width}}{head}")
    for i, method in enumerate(summary.method_names):
        cells = "".join(
            f"{format(summary.means[i, j], '.6g') + ' (' + format(summary.ses[i, j], '.2g') + ')':>18}"
            for j in range(len(summary.metric_names)))
        print(f"{method:<{width}}{cells}")
    for lab, freq in summary.selection_freq.items():
        cells = ", ".join(f"{n}={v:.3f}" for n, v in
                          zip(summary.method_names, freq))
        print(f"selection ({lab}, averaging): {cells}")
    for lab, freq in summary.vote_selection_freq.items():
        cells = ", ".join(f"{n}={v:.3f}" for n, v in
                          zip(summary.method_names, freq))
        print(f"selection ({lab}, voting):    {cells}")


def _write_rows_job(name: str, rows: list[dict], out_dir: str,
                    header: dict, figures: bool) -> None:
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w") as fh:
        fh.write(rows_csv(rows, header))
    with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
        json.dump({"name": name, "rows": rows, **header}, fh, indent=2)
    if figures:
        y_key = next((k for k in PROBE_Y_KEYS if k in rows[0]), None)
        if y_key is not None:
            from .figures import render_rows_figure
            x_key = "n1" if "n1" in rows[0] else "n"
            se_key = "se" if "se" in rows[0] else None
            render_rows_figure(rows, out_dir, name, x_key, y_key, se_key,
                               title=name)
    print(f"\n{name}:")
    for row in rows:
        print("  " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float)
                               else f"{k}={v}" for k, v in row.items()))


def cmd_run(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of --config and --preset")
    if args.config is not None:
        with open(args.config) as fh:
            doc = fh.read()
    else:
        doc = {"experiment": args.preset}
    rc = cfgmod.parse_config(doc)
    if args.seed is not None:
        rc = replace(rc, seed=args.seed)
    if args.paper_scale:
        rc = replace(rc, paper_scale=True)
    digest = cfgmod.config_hash(rc)
    header = {"config_hash": digest, "master_seed": rc.seed}

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        fh.write(cfgmod.serialize_config(rc) + "\n")

    for job in cfgmod.build_jobs(rc, threads=args.threads):
        result = job.run()
        if job.kind == "table":
            with open(os.path.join(args.out, f"{job.name}.csv"), "w") as fh:
                fh.write(summary_csv(result, header))
            manifest = summary_manifest(result, header)
            with open(os.path.join(args.out, f"{job.name}.json"), "w") as fh:
                json.dump(manifest, fh, indent=2)
            from .figures import render_summary_figures
            render_summary_figures(result, args.out, job.name)
            _print_summary(result)
        else:
            _write_rows_job(job.name, result, args.out, header, figures=True)
    return 0


def _load_user_csv(path: str, response: str | None):
    table = pd.read_csv(path)
    if table.shape[1] < 2:
        raise ConfigError("data needs at least one predictor and a response")
    if response is None:
        response = table.columns[-1]
    if response not in table.columns:
        raise ConfigError(f"response column {response!r} not in data")
    y = table[response].to_numpy(dtype=float)
    xcols = [c for c in table.columns if c != response]
    x = table[xcols].to_numpy(dtype=float)
    return Dataset(x, y, column_names=xcols)


def cmd_select(args) -> int:
    data = _load_user_csv(args.data, args.response)
    with open(args.spec) as fh:
        doc = json.load(fh)
    extra = set(doc) - {"roster", "weight", "plan"}
    if extra:
        raise ConfigError(f"unknown selection spec keys {sorted(extra)}")
    for key in ("roster", "weight", "plan"):
        if key not in doc:
            raise ConfigError(f"selection spec needs {key}")
    names = data.column_names
    roster = cfgmod.parse_roster(doc["roster"], names)
    weight = cfgmod.parse_weight(doc["weight"], names)
    plan = cfgmod.parse_plan(doc["plan"], names)
    rng = RngSpec(args.seed if args.seed is not None else cfgmod.DEFAULT_SEED)
    report = select_mtcv(roster, data, plan, weight, rng)

    print(f"winner: {report.winner} ({report.candidate_names[report.winner]})")
    for j, name in enumerate(report.candidate_names):
        print(f"  {name}: mean score {report.mean_scores[j]:.6g}, "
              f"vote share {report.vote_shares[j]:.3f}")
    if report.skipped_splits:
        print(f"skipped splits: {report.skipped_splits}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "selection.json"), "w") as fh:
            fh.write(report.to_json() + "\n")
        with open(os.path.join(args.out, "selection_scores.csv"), "w") as fh:
            fh.write(report.scores_csv())
    return 0


def cmd_probe(args) -> int:
    seed = args.seed if args.seed is not None else cfgmod.DEFAULT_SEED
    if args.probe_kind == "ranking":
        sine = dgp.GappedSineConfig(j_max=args.j_max)
        probe_cfg = RankingProbeConfig(
            draw=lambda m, r: dgp.gen_gapped_sine(sine, m, r),
            truth=sine.truth,
            roster=cfgmod.fourier_roster(),
            grid=[(args.n, args.n1)],
            c_rule=lambda a, b: a ** (-1 / 3) / 3,
            reps=args.reps,
            rng=RngSpec(seed, purpose="fourier_probe"),
            probe_n=args.probe_n,
        )
        rows = ranking_probe(probe_cfg)
        name = "ranking_probe"
    elif args.probe_kind == "consistency":
        cfg0 = dgp.BentLineConfig()
        region = cfg0.local_region()
        roster = [
            CandidateProcedure(0, "nw", NwConfig()),
            CandidateProcedure(1, "linear",
                               OlsConfig(terms=(("intercept",), ("col", 0)))),
        ]
        n_grid = [int(v) for v in args.n_grid.split(",")]
        rows = consistency_curve(
            draw=lambda n, r: dgp.gen_bent_line(replace(cfg0, n=n), r),
            truth=cfg0.truth,
            roster=roster,
            w=PiecewiseWeight(region, 1.0, 0.0),
            n_grid=n_grid,
            plan_for_n=lambda n: MtcvPlan(n1=n // 2, n_splits=args.splits),
            reps=args.reps,
            rng=RngSpec(seed, purpose="consistency"),
        )
        name = "consistency_curve"
    else:
        sine = dgp.GappedSineConfig(j_max=args.j_max)
        roster = cfgmod.fourier_roster()
        proc = roster[0 if args.truncation == "short" else 1]
        rows = [l4_l2_ratio_probe(
            proc,
            draw=lambda m, r: dgp.gen_gapped_sine(sine, m, r),
            truth=sine.truth, n1=args.n1, reps=args.reps,
            rng=RngSpec(seed, purpose="l4l2"),
            probe_n=args.probe_n)]
        name = f"l4l2_{args.truncation}"

    header = {"master_seed": seed}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_rows_job(name, rows, args.out, header, figures=True)
    else:
        for row in rows:
            print(", ".join(f"{k}={v:.6g}" if isinstance(v, float)
                            else f"{k}={v}" for k, v in row.items()))
    return 0


def cmd_dump_dgp(args) -> int:
    seed = args.seed if args.seed is not None else cfgmod.DEFAULT_SEED
    rng = RngSpec(seed, purpose=f"dump-{args.preset}")
    if args.preset == "sim1":
        cfg = dgp.HundredCloneConfig(**({"n": args.n} if args.n else {}))
        data = dgp.gen_hundred_clone(cfg, rng)
    elif args.preset == "sim2":
        cfg = dgp.BentLineConfig(**({"n": args.n} if args.n else {}))
        data = dgp.gen_bent_line(cfg, rng)
    elif args.preset == "sim3":
        cfg = dgp.SparseHighDimConfig(**({"n": args.n} if args.n else {}))
        data = dgp.gen_sparse_highdim(cfg, rng)
    elif args.preset == "fourier":
        data = dgp.gen_gapped_sine(dgp.GappedSineConfig(), args.n or 1024, rng)
    else:
        raise ConfigError(f"unknown dgp preset {args.preset!r}")
    text = dgp.dataset_csv(data)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {data.n} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcv",
        description="Targeted cross-validation: weighted model selection, "
                    "replication experiments and probes.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or config-file experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--preset", choices=cfgmod.EXPERIMENTS,
                     help="built-in experiment with default settings")
    run.add_argument("--seed", type=int, help="master seed override")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--out", default="tcv_out", help="output directory")
    run.add_argument("--paper-scale", action="store_true",
                     help="full replication counts instead of desk scale")
    run.set_defaults(fn=cmd_run)

    sel = sub.add_parser("select", help="one-shot selection on a user CSV")
    sel.add_argument("--data", required=True, help="CSV with header row")
    sel.add_argument("--response", help="response column (default: last)")
    sel.add_argument("--spec", required=True,
                     help="JSON file with roster, weight and plan")
    sel.add_argument("--seed", type=int)
    sel.add_argument("--out", help="directory for report artifacts")
    sel.set_defaults(fn=cmd_select)

    probe = sub.add_parser("probe", help="truth-based probes")
    kinds = probe.add_subparsers(dest="probe_kind", required=True)
    ranking = kinds.add_parser("ranking", help="dominance-event probability")
    ranking.add_argument("--n", type=int, default=4096)
    ranking.add_argument("--n1", type=int, default=1024)
    ranking.add_argument("--reps", type=int, default=200)
    ranking.add_argument("--probe-n", type=int, default=100_000)
    ranking.add_argument("--j-max", type=int, default=64)
    consistency = kinds.add_parser("consistency",
                                   help="selection frequency of the best vs n")
    consistency.add_argument("--n-grid", default="100,200,400")
    consistency.add_argument("--reps", type=int, default=100)
    consistency.add_argument("--splits", type=int, default=10)
    l4l2 = kinds.add_parser("l4l2", help="L4/L2 loss-norm ratio")
    l4l2.add_argument("--truncation", choices=("short", "long"),
                      default="short")
    l4l2.add_argument("--n1", type=int, default=1024)
    l4l2.add_argument("--reps", type=int, default=20)
    l4l2.add_argument("--probe-n", type=int, default=100_000)
    l4l2.add_argument("--j-max", type=int, default=64)
    for sp in (ranking, consistency, l4l2):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
    probe.set_defaults(fn=cmd_probe)

    dump = sub.add_parser("dump-dgp", help="write one draw of a DGP as CSV")
    dump.add_argument("--preset", required=True,
                      choices=("sim1", "sim2", "sim3", "fourier"))
    dump.add_argument("--n", type=int, help="sample size override")
    dump.add_argument("--seed", type=int)
    dump.add_argument("--out", help="output file (default: stdout)")
    dump.set_defaults(fn=cmd_dump_dgp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        return _fail(e, 2)
    except (TcvError, OSError) as e:
        return _fail(e, 1)


if __name__ == "__main__":
    sys.exit(main())
