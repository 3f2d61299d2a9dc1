"""Depth-limited regression trees on histogram-binned features.

One tree builder serves both boosting flavors in the engine: second-order
gradient boosting (gradient/hessian leaf statistics) and weighted weak
learners for AdaBoost (targets in {-1,+1} with sample weights, which is
the same machinery with G = sum(w*y), H = sum(w)).

Split search is exact over quantile bins: per node, per-bin gradient and
hessian sums accumulate via one bincount over all features, then a
cumulative scan finds the best (feature, bin). Gain is the usual
second-order score G_L^2/H_L + G_R^2/H_R - G^2/H. Ties resolve to the
lowest (feature, bin) pair, so training is bit-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def quantile_bin_edges(X: np.ndarray, max_bins: int = 64) -> list[np.ndarray]:
    """Per-feature interior edges from training quantiles (deduplicated)."""
    edges = []
    qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
    for j in range(X.shape[1]):
        col = X[:, j]
        e = np.unique(np.quantile(col, qs))
        e = e[np.isfinite(e)]
        edges.append(e)
    return edges


def bin_features(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Bin codes: code = #edges <= x, so 'left' at bin b means x < edges[b]."""
    n, d = X.shape
    codes = np.zeros((n, d), dtype=np.int32)
    for j in range(d):
        codes[:, j] = np.searchsorted(edges[j], X[:, j], side="right")
    return codes


@dataclass
class RegressionTree:
    """Flat-array tree: internal nodes hold (feature, threshold); leaves hold values."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    is_leaf: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = ~self.is_leaf[node]
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = ~self.is_leaf[node]
        return self.value[node]

    def to_arrays(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "is_leaf": self.is_leaf.tolist(),
        }

    @classmethod
    def from_arrays(cls, d: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=float),
            is_leaf=np.asarray(d["is_leaf"], dtype=bool),
        )


@dataclass
class _Builder:
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    is_leaf: list = field(default_factory=list)

    def add(self) -> int:
        for lst, default in (
            (self.feature, -1),
            (self.threshold, 0.0),
            (self.left, -1),
            (self.right, -1),
            (self.value, 0.0),
            (self.is_leaf, True),
        ):
            lst.append(default)
        return len(self.feature) - 1


def build_tree(
    codes: np.ndarray,
    edges: list[np.ndarray],
    grad: np.ndarray,
    hess: np.ndarray,
    max_depth: int,
    min_child: int = 1,
) -> RegressionTree:
    """Grow one tree on pre-binned features. Leaf value = G/H."""
    n, d = codes.shape
    n_bins = max((len(e) for e in edges), default=0) + 1
    offsets = (np.arange(d, dtype=np.int64) * n_bins)[None, :]
    b = _Builder()
    root = b.add()
    stack = [(root, np.arange(n, dtype=np.int64), 0)]

    while stack:
        node, rows, depth = stack.pop()
        g_tot = float(grad[rows].sum())
        h_tot = float(hess[rows].sum())
        b.value[node] = g_tot / h_tot if h_tot > 0 else 0.0
        if depth >= max_depth or len(rows) < 2 * min_child:
            continue

        flat = (codes[rows].astype(np.int64) + offsets).ravel()
        size = d * n_bins
        hist_g = np.bincount(flat, weights=np.repeat(grad[rows], d), minlength=size)
        hist_h = np.bincount(flat, weights=np.repeat(hess[rows], d), minlength=size)
        hist_n = np.bincount(flat, minlength=size).reshape(d, n_bins)
        hist_g = hist_g.reshape(d, n_bins)
        hist_h = hist_h.reshape(d, n_bins)

        gl = np.cumsum(hist_g, axis=1)[:, :-1]
        hl = np.cumsum(hist_h, axis=1)[:, :-1]
        nl = np.cumsum(hist_n, axis=1)[:, :-1]
        gr = g_tot - gl
        hr = h_tot - hl
        nr = len(rows) - nl

        valid = (nl >= min_child) & (nr >= min_child) & (hl > 0) & (hr > 0)
        for j in range(d):
            valid[j, len(edges[j]):] = False
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(valid, gl * gl / hl + gr * gr / hr, -np.inf)
        best_flat = int(np.argmax(gain))
        best_f, best_bin = divmod(best_flat, n_bins - 1)
        parent_score = g_tot * g_tot / h_tot if h_tot > 0 else 0.0
        if gain[best_f, best_bin] <= parent_score + 1e-12:
            continue

        go_left = codes[rows, best_f] <= best_bin
        left_rows, right_rows = rows[go_left], rows[~go_left]
        lnode, rnode = b.add(), b.add()
        b.is_leaf[node] = False
        b.feature[node] = best_f
        b.threshold[node] = float(edges[best_f][best_bin])
        b.left[node] = lnode
        b.right[node] = rnode
        stack.append((rnode, right_rows, depth + 1))
        stack.append((lnode, left_rows, depth + 1))

    return RegressionTree(
        feature=np.asarray(b.feature, dtype=np.int32),
        threshold=np.asarray(b.threshold, dtype=float),
        left=np.asarray(b.left, dtype=np.int32),
        right=np.asarray(b.right, dtype=np.int32),
        value=np.asarray(b.value, dtype=float),
        is_leaf=np.asarray(b.is_leaf, dtype=bool),
    )
