"""IRLS logit, design assembly, and cluster-robust covariance oracles."""

import numpy as np
import pandas as pd
import pytest
import scipy.sparse as sp

from acclaim.corpus import SECONDS_PER_DAY, Z_COLUMNS
from acclaim.design import ModelSpec, build_design
from acclaim.errors import NumericError, SingleClusterError
from acclaim.glm import (
    cluster_robust_cov,
    fit_logit,
    gradient,
    log_likelihood,
    prune_collinear,
)

from conftest import OBS_START


def _dense_fit(X, y, **kw):
    return fit_logit(sp.csr_matrix(np.asarray(X, dtype=float)), np.asarray(y, float), **kw)


class TestFitLogit:
    def test_intercept_only_closed_form(self):
        y = np.array([1, 0, 0, 0] * 25, dtype=float)
        fit = _dense_fit(np.ones((100, 1)), y, columns=["intercept"],
                         penalized=np.array([False]))
        assert fit.coefficients[0] == pytest.approx(np.log(0.25 / 0.75), abs=1e-6)

    def test_2x2_log_odds_ratio_oracle(self):
        n11, n10, n01, n00 = 30, 20, 15, 35
        x = np.r_[np.ones(n11 + n10), np.zeros(n01 + n00)]
        y = np.r_[np.ones(n11), np.zeros(n10), np.ones(n01), np.zeros(n00)]
        fit = _dense_fit(np.column_stack([np.ones_like(x), x]), y,
                         columns=["intercept", "x"],
                         penalized=np.array([False, True]))
        closed_form = np.log(n11 * n00 / (n10 * n01))
        assert fit.coef("x") == pytest.approx(closed_form, abs=1e-6)

    def test_gradient_matches_central_finite_differences(self, rng):
        X = sp.csr_matrix(rng.normal(size=(80, 4)))
        y = (rng.random(80) < 0.4).astype(float)
        pen = np.array([False, True, True, True])
        beta = rng.normal(scale=0.5, size=4)
        g = gradient(X, y, beta, pen, ridge=1e-8)
        h = 1e-6
        fd = np.empty(4)
        for j in range(4):
            up, dn = beta.copy(), beta.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (
                log_likelihood(X, y, up, pen, 1e-8)
                - log_likelihood(X, y, dn, pen, 1e-8)
            ) / (2 * h)
        assert np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0)) < 1e-6

    def test_row_permutation_invariance(self, rng):
        X = rng.normal(size=(200, 3))
        y = (rng.random(200) < 0.5).astype(float)
        fit_a = _dense_fit(X, y)
        perm = rng.permutation(200)
        fit_b = _dense_fit(X[perm], y[perm])
        assert np.max(np.abs(fit_a.coefficients - fit_b.coefficients)) < 1e-8

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            _dense_fit(np.array([[np.nan], [1.0]]), np.array([0.0, 1.0]))

    def test_collinear_column_pruned(self, rng):
        x = rng.normal(size=100)
        X = np.column_stack([np.ones(100), x, 2 * x])
        y = (rng.random(100) < 0.5).astype(float)
        fit = _dense_fit(X, y, columns=["intercept", "a", "b"])
        assert fit.dropped_columns == ["b"]

    def test_perfect_separation_converges_penalized(self, rng):
        x = np.r_[np.full(30, -1.0), np.full(30, 1.0)]
        y = (x > 0).astype(float)
        fit = _dense_fit(np.column_stack([np.ones(60), x]), y,
                         separation_flag=True)
        assert fit.converged

    def test_max_iter_exceeded_carries_trace(self, rng):
        from acclaim.errors import MaxIterExceeded

        X = rng.normal(size=(200, 3))
        y = (X[:, 0] + 0.5 * rng.normal(size=200) > 0).astype(float)
        with pytest.raises(MaxIterExceeded) as err:
            _dense_fit(X, y, max_iter=1)
        assert err.value.trace and err.value.result is not None


class TestPruneCollinear:
    def test_keeps_independent_columns(self, rng):
        X = sp.csr_matrix(rng.normal(size=(50, 4)))
        keep, dropped = prune_collinear(X, ["a", "b", "c", "d"])
        assert keep == [0, 1, 2, 3] and not dropped

    def test_scale_invariant(self, rng):
        base = rng.normal(size=50)
        X = sp.csr_matrix(np.column_stack([base * 1e6, base * 1e-6]))
        keep, dropped = prune_collinear(X, ["big", "small"])
        assert len(keep) == 1 and len(dropped) == 1


class TestClusterRobust:
    def test_singleton_clusters_match_heteroskedastic_oracle(self, rng):
        X = np.column_stack([np.ones(40), rng.normal(size=40)])
        y = (rng.random(40) < 0.5).astype(float)
        fit = _dense_fit(X, y)
        cov = cluster_robust_cov(fit, np.arange(40))
        # direct HC computation with the same G/(G-1) factor
        p = fit.fitted_p
        Xd = fit.X.toarray()
        H = Xd.T @ (Xd * (p * (1 - p))[:, None])
        bread = np.linalg.inv(H)
        meat = Xd.T @ (Xd * ((y - p) ** 2)[:, None])
        oracle = bread @ meat @ bread * (40 / 39)
        assert np.max(np.abs(cov - oracle)) < 1e-10

    def test_20_row_4_cluster_brute_force_oracle(self, rng):
        X = np.column_stack([np.ones(20), rng.normal(size=20), rng.normal(size=20)])
        y = (rng.random(20) < 0.5).astype(float)
        clusters = np.repeat(np.arange(4), 5)
        fit = _dense_fit(X, y)
        cov = cluster_robust_cov(fit, clusters)
        # brute force: explicit per-cluster score sums
        p = fit.fitted_p
        Xd = fit.X.toarray()
        H = Xd.T @ (Xd * (p * (1 - p))[:, None])
        meat = np.zeros((3, 3))
        for g in range(4):
            rows = clusters == g
            u = Xd[rows].T @ (y[rows] - p[rows])
            meat += np.outer(u, u)
        oracle = np.linalg.inv(H) @ meat @ np.linalg.inv(H) * (4 / 3)
        assert np.max(np.abs(cov - oracle)) < 1e-10

    def test_duplication_keeps_z_within_small_sample_factor(self, rng):
        X = np.column_stack([np.ones(60), rng.normal(size=60)])
        y = (rng.random(60) < 0.5).astype(float)
        clusters = np.repeat(np.arange(6), 10)
        fit1 = _dense_fit(X, y)
        cov1 = cluster_robust_cov(fit1, clusters)
        z1 = fit1.coefficients[1] / np.sqrt(cov1[1, 1])
        X2 = np.vstack([X, X])
        y2 = np.r_[y, y]
        clusters2 = np.r_[clusters, clusters + 6]
        fit2 = _dense_fit(X2, y2)
        cov2 = cluster_robust_cov(fit2, clusters2)
        z2 = fit2.coefficients[1] / np.sqrt(cov2[1, 1])
        # doubling clusters scales z by sqrt(2) up to the G/(G-1) factors
        factor = np.sqrt(2.0) * np.sqrt((6 / 5) / (12 / 11))
        assert z2 == pytest.approx(z1 * factor, rel=1e-8)

    def test_robust_equals_model_based_at_half_probability(self):
        # orthogonal design, perfectly balanced outcome: p_hat = 0.5 rows,
        # homoskedastic weights; singleton-cluster sandwich collapses to the
        # model covariance after removing the small-sample factor
        X = np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 1.0], [1.0, -1.0]] * 5)
        y = np.array([1.0, 1.0, 0.0, 0.0] * 5)
        fit = _dense_fit(X, y)
        assert np.allclose(fit.fitted_p, 0.5, atol=1e-8)
        cov = cluster_robust_cov(fit, np.arange(20))
        assert np.max(np.abs(cov / (20 / 19) - fit.cov_model)) < 1e-8

    def test_single_cluster_raises(self, rng):
        X = np.column_stack([np.ones(10), rng.normal(size=10)])
        fit = _dense_fit(X, (rng.random(10) < 0.5).astype(float))
        with pytest.raises(SingleClusterError):
            cluster_robust_cov(fit, np.zeros(10))


def _design_frame(rng, n=200, n_subs=2, n_new=40):
    frame = pd.DataFrame(
        {
            "y": rng.integers(0, 2, n),
            "subreddit": [f"s{i % n_subs}" for i in range(n)],
            "decile": [1 + (i // n_subs) % 2 for i in range(n)],
            "created_utc": OBS_START
            + rng.integers(0, 3, n) * SECONDS_PER_DAY
            + rng.integers(0, 24, n) * 3600,
            "is_new": [i < n_new for i in range(n)],
            "feat_a": rng.normal(size=n),
            "feat_b": rng.normal(size=n),
        }
    )
    for c in Z_COLUMNS:
        frame[c] = rng.normal(size=n)
    return frame


class TestBuildDesign:
    def test_reference_drop_two_subs_two_deciles(self, rng):
        frame = _design_frame(rng)
        design = build_design(
            frame, ModelSpec("score", ["feat_a", "feat_b"], list(Z_COLUMNS))
        )
        mu_cols = [c for c in design.columns if c.startswith("mu[")]
        assert len(mu_cols) == 3

    def test_all_veteran_interactions_dropped(self, rng):
        frame = _design_frame(rng, n_new=0)
        design = build_design(
            frame, ModelSpec("score", ["feat_a", "feat_b"], list(Z_COLUMNS))
        )
        assert not any(c.endswith(":new") for c in design.columns)
        assert any(c.endswith(":new") for c in design.dropped_constant)

    def test_column_count_formula(self, rng):
        frame = _design_frame(rng)
        design = build_design(
            frame, ModelSpec("score", ["feat_a", "feat_b"], list(Z_COLUMNS))
        )
        n_mu = frame.groupby(["subreddit", "decile"]).ngroups
        n_day = (frame["created_utc"] // SECONDS_PER_DAY).nunique()
        n_hour = (frame["created_utc"] % SECONDS_PER_DAY // 3600).nunique()
        expected = 1 + 2 + 2 + len(Z_COLUMNS) + 1 + (n_mu - 1) + (n_day - 1) + (n_hour - 1)
        assert len(design.columns) == expected

    def test_separation_level_flagged_rows_kept(self, rng):
        frame = _design_frame(rng)
        frame.loc[frame["subreddit"] == "s0", "y"] = 1
        design = build_design(
            frame, ModelSpec("score", ["feat_a"], list(Z_COLUMNS))
        )
        assert design.separation_levels
        assert design.X.shape[0] == len(frame)

    def test_deterministic_column_order(self, rng):
        frame = _design_frame(rng)
        spec = ModelSpec("score", ["feat_a", "feat_b"], list(Z_COLUMNS))
        assert build_design(frame, spec).columns == build_design(frame, spec).columns
