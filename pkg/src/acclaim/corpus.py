"""Corpus store: baseline covariates, outcome labels, candidate pools.

Observation window = baseline window (first 14 days, author covariates)
followed by the sampling window (candidates and outcomes). All day and
month boundaries are UTC.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import AuthorIneligible, GroupTooSmall

SECONDS_PER_DAY = 86400

Z_COLUMNS = [
    "daily_post_rate",
    "daily_removal_rate",
    "mean_score",
    "mean_awards",
    "account_age_days",
    "trend_days",
]

#: Z columns that get log1p scaling when enabled (all nonnegative by construction).
Z_LOG_COLUMNS = ["daily_post_rate", "daily_removal_rate", "mean_awards", "account_age_days"]

OUTCOMES = ("score", "award", "gold")


@dataclass
class Windows:
    """Observation window split into baseline and sampling sub-windows."""

    observation_start: int
    observation_end: int
    baseline_days: int = 14

    @property
    def baseline_end(self) -> int:
        return self.observation_start + self.baseline_days * SECONDS_PER_DAY

    def in_baseline(self, ts) -> np.ndarray:
        return (ts >= self.observation_start) & (ts < self.baseline_end)

    def in_sampling(self, ts) -> np.ndarray:
        return (ts >= self.baseline_end) & (ts < self.observation_end)


@dataclass
class BaselineCovariates:
    daily_post_rate: float
    daily_removal_rate: float
    mean_score: float
    mean_awards: float
    account_age_days: float
    trend_days: float


def post_text(df: pd.DataFrame) -> pd.Series:
    """Analyzed text: title and body joined with a blank line."""
    return df["title"].str.cat(df["body"], sep="\n\n")


def compute_baseline_covariates(
    author_history: pd.DataFrame,
    windows: Windows,
    author_created_utc: int,
    at_time: int,
) -> BaselineCovariates:
    """Covariates for one author from their baseline-window posts.

    `at_time` is the posting timestamp the age/trend fields are evaluated
    at. Raises AuthorIneligible when the author has no baseline post.
    """
    in_base = author_history[windows.in_baseline(author_history["created_utc"])]
    if len(in_base) == 0:
        raise AuthorIneligible("no posts in the baseline window")
    days = windows.baseline_days
    return BaselineCovariates(
        daily_post_rate=len(in_base) / days,
        daily_removal_rate=float(in_base["removed"].sum()) / days,
        mean_score=float(in_base["score"].mean()),
        mean_awards=float((in_base["n_awards"] + in_base["n_gold"]).mean()),
        account_age_days=(at_time - author_created_utc) / SECONDS_PER_DAY,
        trend_days=(at_time - windows.observation_start) / SECONDS_PER_DAY,
    )


def author_baseline_table(df: pd.DataFrame, windows: Windows) -> pd.DataFrame:
    """Author-level baseline stats for every author with >= 1 baseline post."""
    base = df[windows.in_baseline(df["created_utc"])]
    if len(base) == 0:
        return pd.DataFrame(
            columns=["daily_post_rate", "daily_removal_rate", "mean_score", "mean_awards"]
        )
    days = windows.baseline_days
    grouped = base.groupby("author_id")
    out = pd.DataFrame(
        {
            "daily_post_rate": grouped.size() / days,
            "daily_removal_rate": grouped["removed"].sum() / days,
            "mean_score": grouped["score"].mean(),
            "mean_awards": (base["n_awards"] + base["n_gold"]).groupby(base["author_id"]).mean(),
        }
    )
    return out


def attach_covariates(
    df: pd.DataFrame, windows: Windows, log_scale: bool = True
) -> tuple[pd.DataFrame, pd.Index]:
    """Merge per-post Z covariates onto `df`; returns (table, eligible authors).

    Posts by authors without baseline activity get NaN covariates; they are
    excluded from candidate pools rather than given defaults.
    """
    authors = author_baseline_table(df, windows)
    out = df.merge(authors, left_on="author_id", right_index=True, how="left")
    out["account_age_days"] = (out["created_utc"] - out["author_created_utc"]) / SECONDS_PER_DAY
    out["trend_days"] = (out["created_utc"] - windows.observation_start) / SECONDS_PER_DAY
    out["is_new"] = out["account_age_days"] < 90
    if log_scale:
        for col in Z_LOG_COLUMNS:
            out[col] = np.log1p(out[col].clip(lower=0))
    return out, authors.index


def nearest_rank_percentile(values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile: the ceil(q/100 * n)-th smallest value."""
    sorted_vals = np.sort(np.asarray(values))
    n = len(sorted_vals)
    rank = int(np.ceil(q / 100.0 * n))
    return float(sorted_vals[max(rank, 1) - 1])


def label_outcomes(df: pd.DataFrame, min_group: int = 4) -> tuple[pd.DataFrame, list[dict]]:
    """Label every post; score quartiles within (subreddit, UTC month).

    Returns the labeled frame plus a report of skipped quartile groups.
    high_score requires score strictly above the nearest-rank P75, so
    threshold ties never enter the positive set.
    """
    out = df.copy()
    out["awarded"] = out["n_awards"] >= 1
    out["gilded"] = out["n_gold"] >= 1
    month = pd.to_datetime(out["created_utc"], unit="s", utc=True).dt.strftime("%Y-%m")
    out["month"] = month
    out["score_quartile"] = 0
    out["high_score"] = False

    skipped = []
    for (subreddit, mon), idx in out.groupby(["subreddit", "month"]).groups.items():
        scores = out.loc[idx, "score"].to_numpy()
        if len(scores) < min_group:
            skipped.append(
                {"subreddit": subreddit, "month": mon, "n_posts": len(scores),
                 "reason": GroupTooSmall.__name__}
            )
            continue
        p25 = nearest_rank_percentile(scores, 25)
        p50 = nearest_rank_percentile(scores, 50)
        p75 = nearest_rank_percentile(scores, 75)
        quart = np.select(
            [scores <= p25, scores <= p50, scores <= p75], [1, 2, 3], default=4
        )
        out.loc[idx, "score_quartile"] = quart
        out.loc[idx, "high_score"] = scores > p75
    return out, skipped


@dataclass
class CandidatePool:
    outcome: str
    positives: list[str]
    controls: list[str]
    sampling_seed: int
    undersupplied_cells: list[dict] = field(default_factory=list)
    skipped_subreddits: list[dict] = field(default_factory=list)

    @property
    def post_ids(self) -> list[str]:
        return self.positives + self.controls


def _cell_rng(seed: int, subreddit: str, day: int) -> np.random.Generator:
    key = zlib.crc32(subreddit.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([seed, key, day]))


def build_candidate_pool(
    labeled: pd.DataFrame,
    outcome: str,
    windows: Windows,
    ratio: int = 3,
    seed: int = 0,
    eligible_authors: pd.Index | None = None,
) -> CandidatePool:
    """Positives plus same-subreddit same-UTC-day controls at `ratio`:1.

    Score controls come from quartiles 1-2 (quartile 3 is omitted as a
    buffer); award/gold controls are all non-positives. Control draws are
    uniform without replacement per (subreddit, day) cell, deterministic
    under `seed`. Removed posts stay eligible as controls only. Award/gold
    pools use no buffer band (noted in the pool report).
    """
    if outcome not in OUTCOMES:
        raise ValueError(f"unknown outcome {outcome!r}")
    df = labeled[windows.in_sampling(labeled["created_utc"])]
    if eligible_authors is not None:
        df = df[df["author_id"].isin(eligible_authors)]

    if outcome == "score":
        df = df[df["score_quartile"] > 0]
        is_pos = (df["score_quartile"] == 4) & ~df["removed"]
        control_ok = df["score_quartile"].isin([1, 2])
    else:
        flag = "awarded" if outcome == "award" else "gilded"
        is_pos = df[flag] & ~df["removed"]
        control_ok = ~df[flag]

    day = (df["created_utc"] // SECONDS_PER_DAY).astype(int)
    pool = CandidatePool(outcome=outcome, positives=[], controls=[], sampling_seed=seed)

    for subreddit in sorted(df["subreddit"].unique()):
        sub_mask = df["subreddit"] == subreddit
        pos_ids = df.loc[sub_mask & is_pos, "post_id"]
        if len(pos_ids) == 0:
            pool.skipped_subreddits.append(
                {"subreddit": subreddit, "reason": "zero positives"}
            )
            continue
        pool.positives.extend(sorted(pos_ids))
        pos_days = set(day[sub_mask & is_pos])
        eligible = df[sub_mask & control_ok & day.isin(pos_days)]
        for d, cell in eligible.groupby(day.loc[eligible.index]):
            n_pos_day = int((day[sub_mask & is_pos] == d).sum())
            want = ratio * n_pos_day
            ids = np.array(sorted(cell["post_id"]))
            if len(ids) <= want:
                take = ids
                if len(ids) < want:
                    pool.undersupplied_cells.append(
                        {"subreddit": subreddit, "day": int(d),
                         "wanted": want, "available": len(ids)}
                    )
            else:
                rng = _cell_rng(seed, subreddit, int(d))
                take = np.sort(rng.choice(ids, size=want, replace=False))
            pool.controls.extend(take.tolist())
    return pool
