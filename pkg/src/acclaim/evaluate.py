"""Detector evaluation: AUC, stratified splits, global-vs-local comparison,
and the prosociality-composite baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .boosting import GradientBoostedClassifier
from .errors import BaselineSkipped, DegenerateLabels, UndefinedAuc
from .featurize.semantic import SemanticStylePca
from .glm import fit_logit

log = logging.getLogger(__name__)


def auc(scores, labels) -> float:
    """P(random positive outscores random negative), ties at 1/2.

    Computed from the rank-sum statistic with average ranks for ties.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAuc("need at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    i = 0
    rank = 1
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (rank + rank + (j - i))
        rank += j - i + 1
        i = j + 1
    rank_sum = ranks[y].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass
class EvalSplit:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int


def stratified_split(frame: pd.DataFrame, label_col: str = "y",
                     group_col: str = "subreddit", test_frac: float = 0.2,
                     seed: int = 0) -> EvalSplit:
    """One 80:20 split, stratified by outcome within each community.

    Every community lands on both sides, and each community's test slice
    serves both the local model and the global model's per-community
    evaluation.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5BA1]))
    train_parts, test_parts = [], []
    ids = (
        frame["post_id"].to_numpy()
        if "post_id" in frame.columns
        else frame.index.to_numpy()
    )
    order = frame.index.to_numpy()[np.argsort(ids, kind="stable")]
    f = frame.loc[order]
    for (_, _), g in f.groupby([group_col, label_col], sort=True):
        idx = g.index.to_numpy()
        idx = idx[rng.permutation(len(idx))]
        n_test = max(1, int(round(test_frac * len(idx)))) if len(idx) > 1 else 0
        test_parts.append(idx[:n_test])
        train_parts.append(idx[n_test:])
    return EvalSplit(
        train_idx=np.sort(np.concatenate(train_parts)),
        test_idx=np.sort(np.concatenate(test_parts)) if test_parts else np.array([]),
        seed=seed,
    )


@dataclass
class AucComparison:
    global_auc: float
    local_auc: dict[str, float]
    global_auc_by_subreddit: dict[str, float]
    deltas: dict[str, float]
    baseline_auc: dict[str, float] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    @property
    def mean_local_auc(self) -> float:
        return float(np.mean(list(self.local_auc.values()))) if self.local_auc else np.nan

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "subreddit": s,
                "local_auc": self.local_auc.get(s, np.nan),
                "global_auc_on_slice": self.global_auc_by_subreddit.get(s, np.nan),
                "delta": self.deltas.get(s, np.nan),
            }
            for s in sorted(self.global_auc_by_subreddit)
        ]
        return pd.DataFrame(rows, columns=["subreddit", "local_auc",
                                           "global_auc_on_slice", "delta"])


def run_global_local(
    frame: pd.DataFrame,
    feature_cols: list[str],
    label_col: str = "y",
    group_col: str = "subreddit",
    n_rounds: int = 200,
    learning_rate: float = 0.1,
    max_depth: int = 6,
    min_local_rows: int = 200,
    seed: int = 0,
) -> tuple[AucComparison, GradientBoostedClassifier, dict[str, GradientBoostedClassifier]]:
    """Pooled global detector plus one local detector per qualifying community.

    Deltas (local - global) are computed on the identical per-community
    test slice. Communities failing the class-presence or minimum-rows
    requirement keep their global score and report no local model.
    """
    split = stratified_split(frame, label_col, group_col, seed=seed)
    X = frame[feature_cols].to_numpy(dtype=float)
    y = frame[label_col].to_numpy(dtype=int)
    pos = {idx: i for i, idx in enumerate(frame.index)}
    tr = np.array([pos[i] for i in split.train_idx])
    te = np.array([pos[i] for i in split.test_idx])

    global_model = GradientBoostedClassifier(
        n_rounds=n_rounds, learning_rate=learning_rate, max_depth=max_depth,
        seed=seed, scope="global",
    ).fit(X[tr], y[tr], feature_names=feature_cols)
    g_scores = global_model.decision_function(X[te])
    comparison = AucComparison(
        global_auc=auc(g_scores, y[te]),
        local_auc={}, global_auc_by_subreddit={}, deltas={},
    )

    local_models: dict[str, GradientBoostedClassifier] = {}
    subs = frame[group_col].to_numpy()
    for subreddit in sorted(pd.unique(subs)):
        sub_tr = tr[subs[tr] == subreddit]
        sub_te = te[subs[te] == subreddit]
        if len(sub_te) == 0 or len(np.unique(y[sub_te])) < 2:
            comparison.skipped.append(
                {"subreddit": subreddit, "reason": "test slice single-class"}
            )
            continue
        comparison.global_auc_by_subreddit[subreddit] = auc(
            global_model.decision_function(X[sub_te]), y[sub_te]
        )
        n_rows = len(sub_tr) + len(sub_te)
        if n_rows < min_local_rows or len(np.unique(y[sub_tr])) < 2:
            comparison.skipped.append(
                {"subreddit": subreddit, "reason": "insufficient local data"}
            )
            continue
        local = GradientBoostedClassifier(
            n_rounds=n_rounds, learning_rate=learning_rate, max_depth=max_depth,
            seed=seed, scope=subreddit,
        ).fit(X[sub_tr], y[sub_tr], feature_names=feature_cols)
        local_models[subreddit] = local
        local_auc = auc(local.decision_function(X[sub_te]), y[sub_te])
        comparison.local_auc[subreddit] = local_auc
        comparison.deltas[subreddit] = (
            local_auc - comparison.global_auc_by_subreddit[subreddit]
        )
    return comparison, global_model, local_models


PROSOCIAL_COLUMNS = ["prosocial_support", "prosocial_agreement", "prosocial_politeness"]


def prosociality_baseline(
    frame: pd.DataFrame,
    label_col: str = "y",
    seed: int = 0,
    split: EvalSplit | None = None,
) -> dict:
    """First principal component of the three prosociality scores as a single
    logistic regressor; returns its test AUC alongside composite diagnostics.
    """
    missing = [c for c in PROSOCIAL_COLUMNS if c not in frame.columns]
    if missing:
        raise BaselineSkipped(f"missing columns: {missing}")
    if split is None:
        split = stratified_split(frame, label_col, seed=seed)

    cols = frame[PROSOCIAL_COLUMNS].to_numpy(dtype=float)
    mean = cols.mean(axis=0)
    sd = cols.std(ddof=0, axis=0)
    sd[sd == 0] = 1.0
    normed = (cols - mean) / sd
    pca = SemanticStylePca(n_components=1).fit(normed)
    composite = pca.transform(normed)[:, 0]

    pos = {idx: i for i, idx in enumerate(frame.index)}
    tr = np.array([pos[i] for i in split.train_idx])
    te = np.array([pos[i] for i in split.test_idx])
    y = frame[label_col].to_numpy(dtype=float)
    if len(np.unique(y[tr])) < 2:
        raise DegenerateLabels("baseline training labels single-class")

    X_tr = sp.csr_matrix(np.column_stack([np.ones(len(tr)), composite[tr]]))
    fit = fit_logit(X_tr, y[tr], columns=["intercept", "prosociality"],
                    penalized=np.array([False, True]))
    scores = fit.coefficients[0] + fit.coefficients[1] * composite[te]
    return {
        "auc": auc(scores, y[te]),
        "explained_variance_ratio": float(pca.explained_variance_ratio_[0]),
        "coefficient": float(fit.coefficients[1]),
    }
