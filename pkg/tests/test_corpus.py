import numpy as np
import pandas as pd
import pytest

from acclaim.corpus import (
    SECONDS_PER_DAY,
    build_candidate_pool,
    compute_baseline_covariates,
    label_outcomes,
    nearest_rank_percentile,
)
from acclaim.errors import AuthorIneligible

from conftest import OBS_START, make_posts


class TestWindows:
    def test_baseline_boundary_exclusive(self, windows):
        last_in = windows.baseline_end - 1
        first_out = windows.baseline_end
        assert windows.in_baseline(np.array([last_in, first_out])).tolist() == [True, False]
        assert windows.in_sampling(np.array([last_in, first_out])).tolist() == [False, True]

    def test_observation_end_exclusive(self, windows):
        ts = np.array([windows.observation_end - 1, windows.observation_end])
        assert windows.in_sampling(ts).tolist() == [True, False]


class TestBaselineCovariates:
    def test_one_post_per_day_rate(self, windows):
        posts = make_posts(
            [{"created_utc": OBS_START + d * SECONDS_PER_DAY + 100} for d in range(14)]
        )
        cov = compute_baseline_covariates(
            posts, windows, author_created_utc=OBS_START - 100 * SECONDS_PER_DAY,
            at_time=OBS_START + 20 * SECONDS_PER_DAY,
        )
        assert cov.daily_post_rate == pytest.approx(1.0)

    def test_empty_history_raises(self, windows):
        posts = make_posts([{"created_utc": OBS_START + 20 * SECONDS_PER_DAY}])
        with pytest.raises(AuthorIneligible):
            compute_baseline_covariates(
                posts, windows, author_created_utc=0, at_time=OBS_START
            )

    def test_removal_rate_and_mean_score_fixture(self, windows):
        # 7 posts, 2 removed, scores {3,5,1,0,2,4,6}: oracle by direct arithmetic
        scores = [3, 5, 1, 0, 2, 4, 6]
        removed = [True, True, False, False, False, False, False]
        posts = make_posts(
            [
                {"created_utc": OBS_START + i * SECONDS_PER_DAY, "score": s, "removed": r}
                for i, (s, r) in enumerate(zip(scores, removed))
            ]
        )
        cov = compute_baseline_covariates(
            posts, windows, author_created_utc=0, at_time=OBS_START
        )
        assert cov.daily_removal_rate == pytest.approx(2 / 14, abs=1e-12)
        assert cov.mean_score == pytest.approx(np.mean(scores), abs=1e-12)
        assert cov.mean_score == pytest.approx(3.0)

    def test_age_and_trend_at_posting_time(self, windows):
        posts = make_posts([{"created_utc": OBS_START}])
        at = OBS_START + 30 * SECONDS_PER_DAY
        cov = compute_baseline_covariates(
            posts, windows, author_created_utc=OBS_START - 90 * SECONDS_PER_DAY, at_time=at
        )
        assert cov.account_age_days == pytest.approx(120.0)
        assert cov.trend_days == pytest.approx(30.0)


class TestLabelOutcomes:
    def test_nearest_rank_p75_oracle(self):
        # nearest-rank oracle: ceil(0.75 * 8) = 6th smallest of 1..8 is 6
        scores = list(range(1, 9))
        assert nearest_rank_percentile(scores, 75) == 6
        posts = make_posts([{"score": s} for s in scores])
        labeled, skipped = label_outcomes(posts)
        high = set(labeled.loc[labeled["high_score"], "score"])
        assert high == {7, 8}
        assert not skipped

    def test_all_equal_scores_no_high(self):
        posts = make_posts([{"score": 5}] * 8)
        labeled, _ = label_outcomes(posts)
        assert not labeled["high_score"].any()

    def test_awarded_gilded_definitions(self):
        posts = make_posts([{"n_awards": 1, "n_gold": 0}, {"n_awards": 0, "n_gold": 2}])
        labeled, _ = label_outcomes(posts)
        assert labeled["awarded"].tolist() == [True, False]
        assert labeled["gilded"].tolist() == [False, True]

    def test_small_group_skipped(self):
        posts = make_posts([{"score": s} for s in (1, 2, 3)])
        labeled, skipped = label_outcomes(posts)
        assert len(skipped) == 1 and skipped[0]["n_posts"] == 3
        assert (labeled["score_quartile"] == 0).all()

    def test_order_independence(self, rng):
        posts = make_posts(
            [{"score": int(s), "subreddit": f"s{i % 3}"}
             for i, s in enumerate(rng.integers(0, 50, size=60))]
        )
        labeled, _ = label_outcomes(posts)
        shuffled = posts.sample(frac=1.0, random_state=7)
        relabeled, _ = label_outcomes(shuffled)
        merged = labeled.set_index("post_id")[["score_quartile", "high_score"]].join(
            relabeled.set_index("post_id")[["score_quartile", "high_score"]],
            rsuffix="_b",
        )
        assert (merged["score_quartile"] == merged["score_quartile_b"]).all()
        assert (merged["high_score"] == merged["high_score_b"]).all()

    def test_quartiles_partition(self, rng):
        posts = make_posts([{"score": int(s)} for s in rng.integers(0, 100, 40)])
        labeled, _ = label_outcomes(posts)
        assert set(labeled["score_quartile"]) <= {1, 2, 3, 4}
        assert (labeled["high_score"] == (labeled["score_quartile"] == 4)).all()


def _sampling_posts(windows, n_days=20, per_day=20, subreddit="s1", rng=None):
    rng = rng or np.random.default_rng(0)
    rows = []
    for d in range(n_days):
        for k in range(per_day):
            rows.append(
                {
                    "subreddit": subreddit,
                    "created_utc": windows.baseline_end + d * SECONDS_PER_DAY + k * 97,
                    "score": int(rng.integers(0, 100)),
                }
            )
    return rows


class TestCandidatePool:
    def test_three_to_one_when_supply_allows(self, windows, rng):
        posts = make_posts(_sampling_posts(windows, rng=rng))
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "score", windows, ratio=3, seed=1)
        # 20/day positives = 5 per day (top quartile of 0..99 scores), 10 eligible
        # controls per day (quartiles 1-2): undersupply expected at 15 wanted
        assert len(pool.positives) > 0
        by_day = {}
        for pid in pool.controls:
            day = int(labeled.set_index("post_id").loc[pid, "created_utc"]) // SECONDS_PER_DAY
            by_day[day] = by_day.get(day, 0) + 1
        q = labeled.set_index("post_id")
        for pid in pool.controls:
            assert q.loc[pid, "score_quartile"] in (1, 2)

    def test_exact_ratio_with_ample_supply(self, windows):
        # one day: 4 positives (awarded), 40 eligible controls
        rows = [{"created_utc": windows.baseline_end + 100 + i, "n_awards": 1}
                for i in range(4)]
        rows += [{"created_utc": windows.baseline_end + 500 + i} for i in range(40)]
        posts = make_posts(rows)
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "award", windows, ratio=3, seed=5)
        assert len(pool.positives) == 4
        assert len(pool.controls) == 12
        assert not pool.undersupplied_cells

    def test_undersupply_flagged_never_replacement(self, windows):
        rows = [{"created_utc": windows.baseline_end + 100 + i, "n_awards": 1}
                for i in range(10)]
        rows += [{"created_utc": windows.baseline_end + 500 + i} for i in range(12)]
        posts = make_posts(rows)
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "award", windows, ratio=3, seed=5)
        assert len(pool.controls) == 12
        assert len(set(pool.controls)) == 12
        assert pool.undersupplied_cells

    def test_quartile3_never_control(self, windows, rng):
        posts = make_posts(_sampling_posts(windows, rng=rng))
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "score", windows, ratio=3, seed=2)
        q = labeled.set_index("post_id")["score_quartile"]
        assert all(q[pid] != 3 for pid in pool.controls)
        assert set(pool.controls).isdisjoint(pool.positives)

    def test_deterministic_under_seed(self, windows, rng):
        posts = make_posts(_sampling_posts(windows, rng=rng))
        labeled, _ = label_outcomes(posts)
        a = build_candidate_pool(labeled, "score", windows, seed=9)
        b = build_candidate_pool(labeled, "score", windows, seed=9)
        c = build_candidate_pool(labeled, "score", windows, seed=10)
        assert a.positives == b.positives and a.controls == b.controls
        assert a.controls != c.controls

    def test_removed_posts_not_positives_but_controls_ok(self, windows):
        rows = [{"created_utc": windows.baseline_end + 100, "n_awards": 1,
                 "removed": True}]
        rows += [{"created_utc": windows.baseline_end + 200 + i, "n_awards": int(i == 0)}
                 for i in range(8)]
        posts = make_posts(rows)
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "award", windows, ratio=3, seed=1)
        removed_id = posts.iloc[0]["post_id"]
        assert removed_id not in pool.positives

    def test_zero_positive_subreddit_reported(self, windows):
        rows = [{"created_utc": windows.baseline_end + 100 + i, "subreddit": "dead"}
                for i in range(8)]
        rows += [{"created_utc": windows.baseline_end + 100 + i, "subreddit": "live",
                  "n_awards": int(i == 0)} for i in range(8)]
        posts = make_posts(rows)
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "award", windows, ratio=3, seed=1)
        assert {e["subreddit"] for e in pool.skipped_subreddits} == {"dead"}

    def test_controls_share_day_with_positive(self, windows):
        rows = [{"created_utc": windows.baseline_end + 100, "n_awards": 1}]
        rows += [{"created_utc": windows.baseline_end + 300 + i} for i in range(5)]
        # different day, no positive there
        rows += [{"created_utc": windows.baseline_end + 3 * SECONDS_PER_DAY + i}
                 for i in range(5)]
        posts = make_posts(rows)
        labeled, _ = label_outcomes(posts)
        pool = build_candidate_pool(labeled, "award", windows, ratio=3, seed=1)
        day_of = labeled.set_index("post_id")["created_utc"] // SECONDS_PER_DAY
        pos_days = {day_of[p] for p in pool.positives}
        assert all(day_of[c] in pos_days for c in pool.controls)
