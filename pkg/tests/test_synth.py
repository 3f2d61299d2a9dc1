import numpy as np
import pandas as pd
import pytest

from acclaim import schema
from acclaim.errors import ConfigError, SchemaError
from acclaim.synth import (
    GeneratorConfig,
    GroundTruth,
    config_hash,
    evaluate_recovery,
    generate_corpus,
    naive_fit,
)


def small_config(**kw):
    base = dict(
        n_subreddits=3,
        posts_per_subreddit=120,
        authors_per_subreddit=20,
        true_beta={"lex_money": 0.4},
        gamma={"daily_post_rate": 0.3},
        observation_days=30,
        with_embeddings=False,
        seed=5,
    )
    base.update(kw)
    return GeneratorConfig(**base)


class TestGenerator:
    def test_bitwise_reproducible(self):
        df1, t1 = generate_corpus(small_config())
        df2, t2 = generate_corpus(small_config())
        pd.testing.assert_frame_equal(df1, df2)
        assert t1.to_json() == t2.to_json()
        assert t1.recipe_hash == config_hash(small_config())

    def test_schema_valid(self):
        df, _ = generate_corpus(small_config(with_embeddings=True))
        assert schema.validate_frame(df, require_neural=True) == []

    def test_ground_truth_probabilities_in_unit_interval(self):
        _, truth = generate_corpus(small_config())
        probs = np.array(list(truth.probabilities.values()))
        assert probs.min() > 0.0 and probs.max() < 1.0

    def test_embedding_centroid_offsets_within_tolerance(self):
        cfg = small_config(
            with_embeddings=True, posts_per_subreddit=400,
            embedding_offsets={"sub000": 2.0}, embedding_offset=0.0,
            embedding_noise=1.0,
        )
        df, _ = generate_corpus(cfg)
        sub0 = df[df["subreddit"] == "sub000"]
        emb = sub0[schema.embedding_columns()].to_numpy()
        n, d = emb.shape
        # centroid norm concentrates at sqrt(offset^2 + d/n); 3/sqrt(n) tolerance
        norm = np.linalg.norm(emb.mean(axis=0))
        expected = np.sqrt(2.0 ** 2 + d / n)
        assert abs(norm - expected) < 3.0 / np.sqrt(n)
        # a no-offset community centers near the origin
        rest = df[df["subreddit"] == "sub001"][schema.embedding_columns()].to_numpy()
        assert np.linalg.norm(rest.mean(axis=0)) < np.sqrt(d / len(rest)) + 3 / np.sqrt(len(rest))

    def test_infeasible_rate_rejected(self):
        with pytest.raises(ConfigError):
            generate_corpus(small_config(base_category_rate=0.05))

    def test_unknown_feature_rejected(self):
        with pytest.raises(ConfigError):
            generate_corpus(small_config(true_beta={"lex_nonexistent": 0.4}))
        with pytest.raises(ConfigError):
            generate_corpus(small_config(true_beta={"flesch": 0.1}))

    def test_newcomer_fraction_realized(self):
        df, _ = generate_corpus(small_config(newcomer_fraction=0.5,
                                             posts_per_subreddit=300))
        age_days = (df["created_utc"] - df["author_created_utc"]) / 86400
        frac = (age_days < 90).mean()
        assert 0.25 < frac < 0.75

    def test_award_rate_moves_with_intercept(self):
        low, _ = generate_corpus(small_config(intercept=-3.5))
        high, _ = generate_corpus(small_config(intercept=-1.0))
        assert high["n_awards"].ge(1).mean() > low["n_awards"].ge(1).mean()

    def test_misspecification_toggle_changes_labels(self):
        a, _ = generate_corpus(small_config())
        b, _ = generate_corpus(small_config(misspecification=0.5))
        assert not a["n_awards"].equals(b["n_awards"])

    def test_score_text_effects_shift_scores(self):
        a, _ = generate_corpus(small_config())
        b, _ = generate_corpus(small_config(score_text_effects={"lex_money": 3.0}))
        assert not a["score"].equals(b["score"])


class TestNaiveFit:
    def test_null_world_recovers_null(self, rng):
        frame = pd.DataFrame(
            {"x": rng.normal(size=3000), "y": rng.integers(0, 2, 3000)}
        )
        betas = naive_fit(frame, ["x"])
        assert abs(betas["x"]) < 0.1


def _fake_report(rows):
    return pd.DataFrame(
        rows,
        columns=["term", "family", "beta", "se_robust", "z", "p", "q",
                 "odds_ratio", "ci_low", "ci_high", "tier"],
    )


def _truth(beta):
    return GroundTruth(
        beta=beta, theta={}, gamma={}, intercept=-2.0, probabilities={},
        feature_scale={k: (0.0, 1.0) for k in beta}, recipe_hash="x",
    )


class TestEvaluateRecovery:
    def test_exact_estimates_zero_bias_full_coverage(self):
        report = _fake_report(
            [
                {"term": "a", "family": "main", "beta": 0.4, "q": 0.001,
                 "ci_low": np.exp(0.3), "ci_high": np.exp(0.5)},
                {"term": "b", "family": "main", "beta": -0.2, "q": 0.4,
                 "ci_low": np.exp(-0.3), "ci_high": np.exp(-0.1)},
            ]
        )
        out = evaluate_recovery(report, _truth({"a": 0.4, "b": -0.2}))
        assert out["bias"] == pytest.approx(0.0)
        assert out["rmse"] == pytest.approx(0.0)
        assert out["coverage"] == 1.0

    def test_hand_counted_coverage_fixture(self):
        # 3 features; CIs built so exactly 2 cover the truth
        report = _fake_report(
            [
                {"term": "a", "family": "main", "beta": 0.5, "q": 0.01,
                 "ci_low": np.exp(0.2), "ci_high": np.exp(0.8)},   # covers 0.4
                {"term": "b", "family": "main", "beta": 0.9, "q": 0.01,
                 "ci_low": np.exp(0.7), "ci_high": np.exp(1.1)},   # misses 0.4
                {"term": "c", "family": "main", "beta": 0.0, "q": 0.9,
                 "ci_low": np.exp(-0.2), "ci_high": np.exp(0.2)},  # covers 0.0
            ]
        )
        out = evaluate_recovery(report, _truth({"a": 0.4, "b": 0.4, "c": 0.0}))
        assert out["coverage"] == pytest.approx(2 / 3)
        assert out["bias"] == pytest.approx((0.1 + 0.5 + 0.0) / 3)

    def test_realized_fdr_counts_nulls(self):
        report = _fake_report(
            [
                {"term": "true1", "family": "main", "beta": 0.5, "q": 0.001,
                 "ci_low": 1.0, "ci_high": 2.0},
                {"term": "null1", "family": "main", "beta": 0.1, "q": 0.02,
                 "ci_low": 1.0, "ci_high": 1.3},
                {"term": "null2", "family": "main", "beta": 0.0, "q": 0.9,
                 "ci_low": 0.9, "ci_high": 1.1},
            ]
        )
        out = evaluate_recovery(report, _truth({"true1": 0.5}))
        assert out["n_discoveries"] == 2
        assert out["n_false_discoveries"] == 1
        assert out["realized_fdr"] == pytest.approx(0.5)
        assert out["n_null"] == 2

    def test_name_mismatch_raises(self):
        report = _fake_report(
            [{"term": "a", "family": "main", "beta": 0.4, "q": 0.01,
              "ci_low": 1.0, "ci_high": 2.0}]
        )
        with pytest.raises(SchemaError):
            evaluate_recovery(report, _truth({"missing": 0.4}))

    def test_engine_scale_conversion(self):
        report = _fake_report(
            [{"term": "a", "family": "main", "beta": 0.8, "q": 0.01,
              "ci_low": np.exp(0.6), "ci_high": np.exp(1.0)}]
        )
        truth = _truth({"a": 0.4})
        truth.feature_scale["a"] = (0.0, 1.0)
        # engine standardized with sd twice the population sd
        out = evaluate_recovery(report, truth, engine_scale={"a": (0.0, 2.0)})
        assert out["bias"] == pytest.approx(0.0)
