"""Bagged regression trees (random forest).

Each tree grows on a bootstrap resample with greedy variance-reduction
splits over ``mtry`` features drawn fresh at every node; splits keep at
least ``min_leaf`` rows per side, so a sample below ``2 * min_leaf`` rows
gives a single root leaf.  Growing and prediction are numba kernels, and the
whole fit is deterministic given its rng stream (per-tree seeds and
bootstrap draws come from the caller's generator).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import InvalidPlanError
from ..rng import RngSpec

NO_DEPTH_CAP = 1 << 30


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    mtry: int = 32
    min_leaf: int = 5
    max_depth: int | None = None

    def __post_init__(self):
        if self.n_trees < 1 or self.mtry < 1 or self.min_leaf < 1:
            raise ValueError("invalid forest configuration")


@njit(cache=True)
def _grow_tree(x, y, boot, mtry, min_leaf, max_depth, seed,
               col_order, sidx, feat, thr, left, right, value):
    # col_order holds, per feature, the training rows sorted by that feature;
    # sidx is a (p, n) workspace that carries the same orders over the
    # bootstrap multiset and is re-partitioned in place at every split, so
    # node scans never sort
    np.random.seed(seed)
    n = boot.size
    p = x.shape[1]
    counts = np.zeros(col_order.shape[1], dtype=np.int64)
    for i in range(n):
        counts[boot[i]] += 1
    for f in range(p):
        k = 0
        for t in range(col_order.shape[1]):
            r = col_order[f, t]
            for _ in range(counts[r]):
                sidx[f, k] = r
                k += 1
    perm = np.arange(p)
    tmp = np.empty(n, dtype=np.int64)
    go_left = np.empty(col_order.shape[1], dtype=np.uint8)
    stack = np.empty((2 * n + 2, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start
        tot = 0.0
        for i in range(start, end):
            tot += y[sidx[0, i]]
        value[node] = tot / m
        feat[node] = -1
        if m < 2 * min_leaf or depth >= max_depth:
            continue
        ymin = y[sidx[0, start]]
        ymax = ymin
        for i in range(start + 1, end):
            v = y[sidx[0, i]]
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        if ymin == ymax:
            continue
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        base = tot * tot / m
        for t in range(mtry):
            j = t + np.random.randint(p - t)
            tmp_f = perm[t]
            perm[t] = perm[j]
            perm[j] = tmp_f
            f = perm[t]
            sl = 0.0
            for cut in range(1, m - min_leaf + 1):
                sl += y[sidx[f, start + cut - 1]]
                if cut < min_leaf:
                    continue
                vlo = x[sidx[f, start + cut - 1], f]
                vhi = x[sidx[f, start + cut], f]
                if vlo == vhi:
                    continue
                sr = tot - sl
                gain = sl * sl / cut + sr * sr / (m - cut) - base
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (vlo + vhi)
        if best_f < 0:
            continue
        nl = 0
        for i in range(start, end):
            r = sidx[best_f, i]
            if x[r, best_f] <= best_thr:
                go_left[r] = 1
                nl += 1
            else:
                go_left[r] = 0
        for f in range(p):
            kl = 0
            kr = nl
            for i in range(start, end):
                r = sidx[f, i]
                if go_left[r] == 1:
                    tmp[kl] = r
                    kl += 1
                else:
                    tmp[kr] = r
                    kr += 1
            for i in range(m):
                sidx[f, start + i] = tmp[i]
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes + 1
        stack[top + 1, 1] = start + nl
        stack[top + 1, 2] = end
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _predict_forest(x, feat, thr, left, right, value, offsets):
    n = x.shape[0]
    n_trees = offsets.size - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            node = offsets[t]
            while feat[node] >= 0:
                if x[i, feat[node]] <= thr[node]:
                    node = left[node] + offsets[t]
                else:
                    node = right[node] + offsets[t]
            acc += value[node]
        out[i] = acc / n_trees
    return out


class ForestPredictor:
    def __init__(self, feat, thr, left, right, value, offsets, n_train):
        self.feat = feat
        self.thr = thr
        self.left = left
        self.right = right
        self.value = value
        self.offsets = offsets
        self.n_train = n_train
        self.candidate_id = -1

    @property
    def n_trees(self) -> int:
        return self.offsets.size - 1

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
        return _predict_forest(x, self.feat, self.thr, self.left, self.right,
                               self.value, self.offsets)

    def summary(self) -> dict:
        return {"kind": "forest", "n_trees": self.n_trees,
                "n_nodes": int(self.offsets[-1])}


def fit_forest(cfg: ForestConfig, data, train,
               rng: RngSpec | np.random.Generator) -> ForestPredictor:
    x = np.ascontiguousarray(data.x[train])
    y = np.ascontiguousarray(data.y[train])
    n1, p = x.shape
    if cfg.mtry > p:
        raise InvalidPlanError(f"mtry={cfg.mtry} exceeds p={p}")
    if n1 < 1:
        raise InvalidPlanError("forest fitting needs at least one row")
    gen = rng.stream() if isinstance(rng, RngSpec) else rng
    if gen is None:
        raise InvalidPlanError("forest fitting requires an rng")
    max_depth = cfg.max_depth if cfg.max_depth is not None else NO_DEPTH_CAP

    cap = 2 * n1 + 2
    col_order = np.ascontiguousarray(np.argsort(x, axis=0, kind="stable").T)
    sidx = np.empty((p, n1), dtype=np.int64)
    feats, thrs, lefts, rights, values = [], [], [], [], []
    sizes = np.empty(cfg.n_trees, dtype=np.int64)
    for t in range(cfg.n_trees):
        boot = gen.integers(0, n1, n1)
        seed = int(gen.integers(0, 2**31 - 1))
        feat = np.empty(cap, dtype=np.int64)
        thr = np.empty(cap)
        left = np.empty(cap, dtype=np.int64)
        right = np.empty(cap, dtype=np.int64)
        value = np.empty(cap)
        n_nodes = _grow_tree(x, y, boot, cfg.mtry, cfg.min_leaf, max_depth,
                             seed, col_order, sidx, feat, thr, left, right,
                             value)
        sizes[t] = n_nodes
        feats.append(feat[:n_nodes])
        thrs.append(thr[:n_nodes])
        lefts.append(left[:n_nodes])
        rights.append(right[:n_nodes])
        values.append(value[:n_nodes])
    offsets = np.zeros(cfg.n_trees + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(sizes)
    return ForestPredictor(np.concatenate(feats), np.concatenate(thrs),
                           np.concatenate(lefts), np.concatenate(rights),
                           np.concatenate(values), offsets, n1)
