"""Risk stratification: per-subreddit baseline-risk models on Z, decile
binning, covariate balance diagnostics, and the retention gate.

Risk models see only the Z covariates (enforced against the feature
table's family tags); linguistic variation is deliberately left to explain
outcome differences within balanced strata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, ClassifierMixin

from .corpus import Z_COLUMNS
from .errors import EmptyGroup, PipelineHalt, SubredditSkipped
from .table import FeatureTable
from .trees import RegressionTree, bin_features, build_tree, quantile_bin_edges


class AdaBoostRisk(BaseEstimator, ClassifierMixin):
    """Discrete AdaBoost (SAMME) over depth-2 trees.

    Weak learners are weighted regression trees on targets in {-1,+1};
    their sign is the vote. The risk score is the logistic transform of
    the normalized vote margin, 1/(1+exp(-2*m)) with m in [-1, 1]; decile
    assignment is rank-based, so any monotone transform of the margin
    yields identical strata.
    """

    def __init__(self, n_rounds: int = 100, max_depth: int = 2,
                 learning_rate: float = 1.0, max_bins: int = 64, seed: int = 0):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.max_bins = max_bins
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if len(np.unique(y)) < 2:
            raise SubredditSkipped("risk model needs both classes")
        sign_y = np.where(y > 0, 1.0, -1.0)
        n = len(y)
        w = np.full(n, 1.0 / n)

        self.edges_ = quantile_bin_edges(X, self.max_bins)
        codes = bin_features(X, self.edges_)
        self.trees_: list[RegressionTree] = []
        self.alphas_: list[float] = []

        for _ in range(self.n_rounds):
            tree = build_tree(codes, self.edges_, grad=w * sign_y, hess=w,
                              max_depth=self.max_depth)
            votes = np.sign(tree.predict(X))
            votes[votes == 0] = 1.0
            err = float(w[votes != sign_y].sum())
            if err >= 0.5:
                if not self.trees_:
                    # degenerate weak learner; keep one zero-weight vote
                    self.trees_.append(tree)
                    self.alphas_.append(0.0)
                break
            err = max(err, 1e-10)
            alpha = self.learning_rate * np.log((1.0 - err) / err)
            self.trees_.append(tree)
            self.alphas_.append(alpha)
            if err <= 1e-10:
                break
            w *= np.exp(alpha * (votes != sign_y))
            w /= w.sum()
        return self

    def margin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = sum(self.alphas_)
        if total <= 0:
            return np.zeros(len(X))
        acc = np.zeros(len(X))
        for tree, alpha in zip(self.trees_, self.alphas_):
            votes = np.sign(tree.predict(X))
            votes[votes == 0] = 1.0
            acc += alpha * votes
        return acc / total

    def predict_proba(self, X) -> np.ndarray:
        p1 = 1.0 / (1.0 + np.exp(-2.0 * self.margin(X)))
        return np.column_stack([1.0 - p1, p1])

    def decision_function(self, X) -> np.ndarray:
        return self.margin(X)


def fit_risk_model(table: FeatureTable, rows: pd.Index, subreddit: str,
                   seed: int = 0, n_rounds: int = 100) -> AdaBoostRisk:
    """Fit the per-subreddit risk model on the candidate pool rows.

    Refuses any non-Z feature column by provenance check.
    """
    table.assert_family(Z_COLUMNS, "Z")
    sub = table.frame.loc[rows]
    if len(sub) < 20:
        raise SubredditSkipped(f"{subreddit}: fewer than 20 candidates")
    X = sub[Z_COLUMNS].to_numpy(dtype=float)
    y = sub["y"].to_numpy()
    return AdaBoostRisk(n_rounds=n_rounds, seed=seed).fit(X, y)


def assign_deciles(risk_scores: np.ndarray, post_ids, n_bins: int = 10) -> np.ndarray:
    """Equal-count bins by rank; ties broken by post_id.

    decile(rank r of n, 1-based) = 1 + floor(n_bins * (r-1) / n).
    """
    scores = np.asarray(risk_scores, dtype=float)
    ids = np.asarray(post_ids, dtype=object)
    n = len(scores)
    order = np.lexsort((ids, scores))
    deciles = np.empty(n, dtype=int)
    ranks = np.arange(n)
    deciles[order] = 1 + (n_bins * ranks) // n
    return deciles


def smd(values_t, values_c) -> float:
    """|mean_t - mean_c| / sqrt((var_t + var_c) / 2), population variances."""
    t = np.asarray(values_t, dtype=float)
    c = np.asarray(values_c, dtype=float)
    if len(t) == 0 or len(c) == 0:
        raise EmptyGroup("smd needs nonempty groups")
    diff = abs(t.mean() - c.mean())
    pooled = np.sqrt((t.var(ddof=0) + c.var(ddof=0)) / 2.0)
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else np.inf
    return float(diff / pooled)


@dataclass
class StratumAssignment:
    subreddit: str
    decile: int
    post_ids: list[str]
    n_pos: int
    n_ctl: int
    retained: bool = True
    reasons: set[str] = field(default_factory=set)


@dataclass
class BalanceDiagnostics:
    """Per-stratum and pre/post SMD tables over exactly the Z covariates."""

    per_stratum: pd.DataFrame      # subreddit, decile, covariate, smd
    mean_by_stratum: pd.DataFrame  # subreddit, decile, mean_smd
    pre_by_covariate: pd.Series    # unmatched per-covariate SMD (mean over subreddits)
    post_by_covariate: pd.Series   # retained-strata per-covariate SMD (mean over strata)


def stratify_subreddit(table: FeatureTable, rows: pd.Index, subreddit: str,
                       seed: int = 0, n_rounds: int = 100,
                       n_bins: int = 10) -> tuple[np.ndarray, AdaBoostRisk]:
    """Risk-fit plus decile assignment for one subreddit's candidates."""
    sub = table.frame.loc[rows]
    if len(sub) < n_bins:
        raise SubredditSkipped(f"{subreddit}: fewer than {n_bins} candidates")
    model = fit_risk_model(table, rows, subreddit, seed=seed, n_rounds=n_rounds)
    scores = model.predict_proba(sub[Z_COLUMNS].to_numpy(dtype=float))[:, 1]
    deciles = assign_deciles(scores, sub["post_id"].to_numpy(), n_bins=n_bins)
    return deciles, model


def balance_diagnostics(frame: pd.DataFrame, strata: list[StratumAssignment]) -> BalanceDiagnostics:
    """SMD per stratum per covariate, plus unmatched and matched summaries.

    `frame` needs columns y, subreddit, post_id and the Z covariates and is
    indexed by post_id.
    """
    rows = []
    for st in strata:
        cell = frame.loc[st.post_ids]
        pos = cell[cell["y"] == 1]
        ctl = cell[cell["y"] == 0]
        for cov in Z_COLUMNS:
            value = (
                smd(pos[cov], ctl[cov]) if len(pos) and len(ctl) else np.nan
            )
            rows.append(
                {"subreddit": st.subreddit, "decile": st.decile,
                 "covariate": cov, "smd": value}
            )
    per_stratum = pd.DataFrame(rows, columns=["subreddit", "decile", "covariate", "smd"])
    if len(per_stratum):
        mean_by_stratum = (
            per_stratum.groupby(["subreddit", "decile"])["smd"].mean().reset_index()
            .rename(columns={"smd": "mean_smd"})
        )
    else:
        mean_by_stratum = pd.DataFrame(columns=["subreddit", "decile", "mean_smd"])

    pre_rows = {}
    for cov in Z_COLUMNS:
        per_sub = []
        for subreddit, g in frame.groupby("subreddit"):
            pos, ctl = g[g["y"] == 1], g[g["y"] == 0]
            if len(pos) and len(ctl):
                per_sub.append(smd(pos[cov], ctl[cov]))
        pre_rows[cov] = float(np.mean(per_sub)) if per_sub else np.nan
    pre = pd.Series(pre_rows, name="pre_smd")

    retained = per_stratum.merge(
        pd.DataFrame(
            [{"subreddit": s.subreddit, "decile": s.decile} for s in strata if s.retained]
        ),
        on=["subreddit", "decile"],
    ) if any(s.retained for s in strata) else per_stratum.iloc[0:0]
    post = retained.groupby("covariate")["smd"].mean().reindex(Z_COLUMNS)
    post.name = "post_smd"
    return BalanceDiagnostics(
        per_stratum=per_stratum,
        mean_by_stratum=mean_by_stratum,
        pre_by_covariate=pre,
        post_by_covariate=post,
    )


def gate_strata(strata: list[StratumAssignment], mean_by_stratum: pd.DataFrame,
                threshold: float = 0.30, min_per_class: int = 10) -> list[StratumAssignment]:
    """Retain strata with overlap (>= min per class) and mean SMD <= threshold."""
    mean_smd = {
        (r.subreddit, r.decile): r.mean_smd for r in mean_by_stratum.itertuples()
    }
    for st in strata:
        st.reasons = set()
        overlap_bad = st.n_pos < min_per_class or st.n_ctl < min_per_class
        if overlap_bad:
            st.reasons.add("overlap_fail")
        value = mean_smd.get((st.subreddit, st.decile), np.nan)
        balance_bad = not (np.isfinite(value) and value <= threshold)
        # SMD undefined on an empty class: overlap_fail already covers it
        if balance_bad and (np.isfinite(value) or not overlap_bad):
            st.reasons.add("balance_fail")
        st.retained = not st.reasons
    if not any(st.retained for st in strata):
        raise PipelineHalt(
            "stratify",
            "zero retained strata",
            diagnostics={
                "n_strata": len(strata),
                "reasons": {
                    r: sum(1 for s in strata if r in s.reasons)
                    for r in ("overlap_fail", "balance_fail")
                },
                "threshold": threshold,
            },
        )
    return [st for st in strata if st.retained]
