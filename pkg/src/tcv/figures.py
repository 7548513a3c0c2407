"""File-based figure rendering for experiment summaries and probe tables.

Everything draws through the Agg backend and writes PNG files next to the
delimited output; nothing here opens a window.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .bench import ReplicationSummary  # noqa: E402


def mse_bar_figure(summary: ReplicationSummary, metric: str):
    j = summary.metric_names.index(metric)
    means = summary.means[:, j]
    ses = summary.ses[:, j]
    fig, ax = plt.subplots(figsize=(1.2 * len(means) + 2, 4))
    pos = np.arange(len(means))
    ax.bar(pos, means, yerr=ses, capsize=4, color="#4878a8")
    ax.set_xticks(pos)
    ax.set_xticklabels(summary.method_names, rotation=30, ha="right")
    ax.set_ylabel(f"{metric} MSE")
    ax.set_title(f"{summary.name}: {metric} ({summary.n_replications} replications)")
    fig.tight_layout()
    return fig


def selection_figure(summary: ReplicationSummary):
    labels = list(summary.selection_freq)
    if not labels:
        return None
    n_cand = len(next(iter(summary.selection_freq.values())))
    cand_names = summary.method_names[:n_cand]
    fig, ax = plt.subplots(figsize=(1.0 * n_cand * len(labels) + 2, 4))
    width = 0.38
    pos = np.arange(n_cand)
    for i, lab in enumerate(labels):
        off = (i - (len(labels) - 1) / 2) * (2 * width + 0.1) / len(labels)
        ax.bar(pos + off, summary.selection_freq[lab],
               width=2 * width / len(labels), label=f"{lab} (average)")
    ax.set_xticks(pos)
    ax.set_xticklabels(cand_names, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("selection frequency")
    ax.set_title(f"{summary.name}: selection frequencies")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def rows_figure(rows: list[dict], x_key: str, y_key: str,
                se_key: str | None = None, title: str = ""):
    xs = np.array([row[x_key] for row in rows], dtype=float)
    ys = np.array([row[y_key] for row in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    if se_key is not None:
        errs = np.array([row[se_key] for row in rows], dtype=float)
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=4)
    else:
        ax.plot(xs, ys, marker="o")
    ax.set_xlabel(x_key)
    ax.set_ylabel(y_key)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def _save(fig, path: str) -> str:
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_summary_figures(summary: ReplicationSummary, out_dir: str,
                           stem: str) -> list[str]:
    paths = []
    for metric in summary.metric_names:
        fig = mse_bar_figure(summary, metric)
        paths.append(_save(fig, os.path.join(out_dir, f"{stem}_{metric}.png")))
    fig = selection_figure(summary)
    if fig is not None:
        paths.append(_save(fig, os.path.join(out_dir, f"{stem}_selection.png")))
    return paths


def render_rows_figure(rows: list[dict], out_dir: str, stem: str,
                       x_key: str, y_key: str, se_key: str | None = None,
                       title: str = "") -> list[str]:
    fig = rows_figure(rows, x_key, y_key, se_key, title)
    return [_save(fig, os.path.join(out_dir, f"{stem}.png"))]
