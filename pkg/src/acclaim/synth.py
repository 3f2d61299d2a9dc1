"""Synthetic corpus generator with planted effects and known ground truth.

The generator builds a schema-valid canonical table: author baseline
activity driving the Z covariates, bag-of-words text realizing target
lexicon rates, numeric neural columns, embeddings with configurable
per-community centroid offsets, and outcome labels drawn from the same
fixed-effects logistic functional form the estimator fits. Award labels
are exactly the recorded Bernoulli draws, so planted coefficients are
recoverable without mechanical misclassification.

Key correctness rule: any feature carrying a planted or confounded
coefficient enters the outcome model at its *realized* value, computed
exactly the way the engine computes it (token shares for lexicon
categories, sentence punctuation ratio, raw numeric columns).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .corpus import SECONDS_PER_DAY, Windows, attach_covariates, Z_COLUMNS
from .errors import ConfigError, SchemaError
from .featurize.lexicon import LexiconHierarchy, load_lexicon
from .glm import fit_logit
from .inference import bh_fdr

DEFAULT_OBSERVATION_START = 1588291200  # 2020-05-01T00:00:00Z


@dataclass
class GeneratorConfig:
    n_subreddits: int = 10
    posts_per_subreddit: int = 500
    authors_per_subreddit: int = 60
    true_beta: dict = field(default_factory=dict)     # feature -> coefficient (1-SD scale)
    true_theta: dict = field(default_factory=dict)    # feature -> newcomer interaction
    gamma: dict = field(default_factory=dict)         # Z covariate -> coefficient
    intercept: float = -2.2
    confound_z_to_a: float = 0.0
    confounded_features: list = field(default_factory=list)
    fe_subreddit_sigma: float = 0.3
    fe_day_sigma: float = 0.1
    fe_hour_sigma: float = 0.05
    fe_day_drift: float = 0.0          # linear day trend added to the day effects
    newcomer_fraction: float = 0.15
    tokens_lo: int = 20
    tokens_hi: int = 45
    base_category_rate: float = 0.008
    category_slope: float = 0.012      # token-share change per 1 SD of the latent
    question_base: float = 0.2
    question_slope: float = 0.15
    observation_days: int = 60
    baseline_days: int = 14
    with_embeddings: bool = True
    embedding_offset: float = 0.5      # uniform centroid offset magnitude
    embedding_offsets: dict = field(default_factory=dict)  # per-subreddit override
    embedding_noise: float = 1.0
    gold_rate: float = 0.01
    misspecification: float = 0.0      # quadratic term on the first planted feature
    score_text_effects: dict = field(default_factory=dict)  # feature -> score points per SD
    seed: int = 0

    def validate(self, lexicon: LexiconHierarchy) -> None:
        modeled = self.modeled_lexicon_categories()
        total = self.base_category_rate * len(lexicon.names) + self.category_slope * 4 * len(modeled)
        if total > 0.8:
            raise ConfigError(f"infeasible lexicon rates: expected share {total:.2f} > 0.8")
        plantable = (list(self.true_beta) + list(self.true_theta)
                     + list(self.confounded_features) + list(self.score_text_effects))
        for f in plantable:
            if f.startswith("lex_"):
                if f[len("lex_"):] not in lexicon.categories:
                    raise ConfigError(f"unknown lexicon category for feature {f}")
            elif f not in ("question_ratio", "toxicity", "sentiment", "politeness"):
                raise ConfigError(f"cannot plant on feature {f}")

    def modeled_features(self) -> list[str]:
        names = (list(self.true_beta) + list(self.true_theta)
                 + list(self.confounded_features) + list(self.score_text_effects))
        seen, out = set(), []
        for n in names:
            if n not in seen:
                seen.add(n)
                out.append(n)
        return out

    def modeled_lexicon_categories(self) -> list[str]:
        return [f[len("lex_"):] for f in self.modeled_features() if f.startswith("lex_")]


@dataclass
class GroundTruth:
    beta: dict
    theta: dict
    gamma: dict
    intercept: float
    probabilities: dict            # post_id -> P(award)
    feature_scale: dict            # feature -> (mean, sd) used for standardization
    recipe_hash: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "beta": self.beta,
                "theta": self.theta,
                "gamma": self.gamma,
                "intercept": self.intercept,
                "probabilities": self.probabilities,
                "feature_scale": {k: list(v) for k, v in self.feature_scale.items()},
                "recipe_hash": self.recipe_hash,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        return cls(
            beta=d["beta"], theta=d["theta"], gamma=d["gamma"],
            intercept=d["intercept"], probabilities=d["probabilities"],
            feature_scale={k: tuple(v) for k, v in d["feature_scale"].items()},
            recipe_hash=d["recipe_hash"],
        )


def config_hash(config: GeneratorConfig) -> str:
    return hashlib.sha256(
        json.dumps(asdict(config), sort_keys=True).encode()
    ).hexdigest()


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _category_pools(lexicon: LexiconHierarchy) -> dict[str, list[str]]:
    """Exact words that match only their own category (plus its umbrella)."""
    parent = {}
    for umb, children in lexicon.umbrella_children.items():
        for c in children:
            parent[c] = umb
    pools: dict[str, list[str]] = {}
    for cat, patterns in lexicon.categories.items():
        allowed = {cat}
        if cat in parent:
            allowed.add(parent[cat])
        words = [
            p for p in sorted(patterns)
            if not p.endswith("*") and set(lexicon.match(p)) <= allowed and lexicon.match(p)
        ]
        if words:
            pools[cat] = words
    return pools


def _filler_vocab(lexicon: LexiconHierarchy, n: int = 160) -> list[str]:
    out = []
    consonants = "bcdfgklmnprstvz"
    vowels = "aeiou"
    for c1 in consonants:
        for v in vowels:
            for c2 in consonants:
                w = c1 + v + c2 + "u" + c1
                if not lexicon.match(w):
                    out.append(w)
                if len(out) >= n:
                    return out
    return out


def generate_corpus(
    config: GeneratorConfig, lexicon: LexiconHierarchy | None = None
) -> tuple[pd.DataFrame, GroundTruth]:
    """Emit (canonical table, ground truth); a pure function of the config."""
    lexicon = lexicon or load_lexicon()
    config.validate(lexicon)
    root = np.random.SeedSequence(config.seed)
    rng = np.random.default_rng(root)

    obs_start = DEFAULT_OBSERVATION_START
    windows = Windows(
        observation_start=obs_start,
        observation_end=obs_start + config.observation_days * SECONDS_PER_DAY,
        baseline_days=config.baseline_days,
    )
    n_days = config.observation_days - config.baseline_days

    pools = _category_pools(lexicon)
    fillers = _filler_vocab(lexicon)
    cats = [c for c in lexicon.names if c in pools]
    cat_idx = {c: i for i, c in enumerate(cats)}
    modeled = config.modeled_features()
    modeled_lex = [f for f in modeled if f.startswith("lex_")]
    for f in modeled_lex:
        if f[len("lex_"):] not in pools:
            raise ConfigError(f"category {f} has no usable pool words")

    day_fe = rng.normal(0.0, config.fe_day_sigma, size=n_days)
    if config.fe_day_drift:
        day_fe = day_fe + config.fe_day_drift * (np.arange(n_days) / max(n_days - 1, 1))
    hour_fe = rng.normal(0.0, config.fe_hour_sigma, size=24)
    sub_fe = rng.normal(0.0, config.fe_subreddit_sigma, size=config.n_subreddits)

    records: list[dict] = []
    sample_rows: list[dict] = []
    post_counter = 0
    author_counter = 0

    sub_streams = root.spawn(config.n_subreddits)
    for s in range(config.n_subreddits):
        subreddit = f"sub{s:03d}"
        srng = np.random.default_rng(sub_streams[s])

        n_auth = config.authors_per_subreddit
        traits = srng.normal(0.0, 1.0, size=n_auth)
        is_new_author = srng.random(n_auth) < config.newcomer_fraction
        # age at window start: newcomers stay < 90 days through the window
        age_start = np.where(
            is_new_author,
            srng.uniform(2.0, max(3.0, 88.0 - config.observation_days), size=n_auth),
            200.0 + 1300.0 * _sigmoid(traits) + srng.uniform(0.0, 100.0, size=n_auth),
        )
        author_ids = [f"a{author_counter + i:06d}" for i in range(n_auth)]
        author_counter += n_auth
        author_created = (obs_start - age_start * SECONDS_PER_DAY).astype(np.int64)

        # baseline posts: activity, score, removal, awards all driven by the trait
        n_base = 1 + srng.poisson(np.exp(0.2 + 0.5 * traits))
        base_author = np.repeat(np.arange(n_auth), n_base)
        n_total = len(base_author)
        base_ts = obs_start + srng.integers(
            0, config.baseline_days * SECONDS_PER_DAY, size=n_total
        )
        base_score = np.round(srng.normal(3.0 + 2.0 * traits[base_author], 2.0)).astype(int)
        base_awards = srng.poisson(0.08 * np.exp(0.6 * traits[base_author]))
        base_removed = srng.random(n_total) < _sigmoid(-2.0 + 0.8 * traits[base_author])
        base_words = np.asarray(fillers, dtype=object)[
            srng.integers(0, len(fillers), (n_total, 8))
        ]
        for k in range(n_total):
            a = int(base_author[k])
            records.append(
                {
                    "post_id": f"p{post_counter:07d}",
                    "subreddit": subreddit,
                    "author_id": author_ids[a],
                    "created_utc": int(base_ts[k]),
                    "author_created_utc": int(author_created[a]),
                    "title": "baseline note",
                    "body": " ".join(base_words[k]),
                    "score": int(base_score[k]),
                    "n_awards": int(base_awards[k]),
                    "n_gold": 0,
                    "removed": bool(base_removed[k]),
                }
            )
            post_counter += 1

        # sampling-window posts (all draws batched across the subreddit)
        n_posts = config.posts_per_subreddit
        weights = np.exp(0.4 * traits)
        weights /= weights.sum()
        post_author = srng.choice(n_auth, size=n_posts, p=weights)
        post_day = srng.integers(0, n_days, size=n_posts)
        post_hour = srng.integers(0, 24, size=n_posts)
        post_sec = srng.integers(0, 3600, size=n_posts)
        n_tokens = srng.integers(config.tokens_lo, config.tokens_hi + 1, size=n_posts)

        latents = {
            f: config.confound_z_to_a * traits[post_author]
            + np.sqrt(max(1.0 - config.confound_z_to_a ** 2, 0.0))
            * srng.normal(0.0, 1.0, size=n_posts)
            if f in config.confounded_features
            else srng.normal(0.0, 1.0, size=n_posts)
            for f in modeled
        }

        # category token shares; remainder goes to filler words
        probs = np.tile(np.full(len(cats), config.base_category_rate), (n_posts, 1))
        for f in modeled_lex:
            probs[:, cat_idx[f[len("lex_"):]]] = np.maximum(
                config.base_category_rate + config.category_slope * latents[f],
                0.0005,
            )
        filler_mass = np.maximum(1.0 - probs.sum(axis=1), 0.15)
        full = np.column_stack([probs, filler_mass])
        full /= full.sum(axis=1, keepdims=True)

        # multinomial with per-post n via the sequential-binomial decomposition
        counts = np.zeros((n_posts, full.shape[1]), dtype=np.int64)
        remaining_n = n_tokens.astype(np.int64).copy()
        remaining_p = np.ones(n_posts)
        for j in range(full.shape[1] - 1):
            ratio = np.clip(full[:, j] / np.maximum(remaining_p, 1e-12), 0.0, 1.0)
            counts[:, j] = srng.binomial(remaining_n, ratio)
            remaining_n -= counts[:, j]
            remaining_p -= full[:, j]
        counts[:, -1] = remaining_n

        # materialize tokens per category in one batch, split back per post
        post_tokens: list[list[str]] = [[] for _ in range(n_posts)]
        for j, cat in enumerate(cats + ["__filler__"]):
            pool = fillers if cat == "__filler__" else pools[cat]
            col = counts[:, j]
            total = int(col.sum())
            if total == 0:
                continue
            words = np.asarray(pool, dtype=object)[srng.integers(0, len(pool), total)]
            bounds = np.cumsum(col)[:-1]
            for i, chunk in enumerate(np.split(words, bounds)):
                if len(chunk):
                    post_tokens[i].extend(chunk)

        q_prob = np.full(n_posts, config.question_base)
        if "question_ratio" in modeled:
            q_prob = np.clip(
                config.question_base + config.question_slope * latents["question_ratio"],
                0.0, 1.0,
            )
        sent_len = srng.integers(6, 13, size=n_posts)
        n_sents = np.maximum((n_tokens + sent_len - 1) // sent_len, 1)
        punct_bounds = np.cumsum(n_sents)
        flat_q = srng.random(int(punct_bounds[-1]))
        flat_bang = srng.random(int(punct_bounds[-1])) >= 0.8
        realized_q = np.zeros(n_posts)

        neural = {}
        for f, base, scale, lo, hi in (
            ("toxicity", 0.15, 0.10, 0.0, 1.0),
            ("sentiment", 0.0, 0.30, -1.0, 1.0),
            ("politeness", 0.5, 0.15, 0.0, 1.0),
        ):
            x = latents[f] if f in modeled else srng.normal(size=n_posts)
            neural[f] = np.clip(base + scale * x, lo, hi)
        prosocial = srng.random((n_posts, 3))
        scores = np.round(srng.normal(5.0 + 2.0 * traits[post_author], 4.0)).astype(int)
        gold = (srng.random(n_posts) < config.gold_rate).astype(int)
        removed = srng.random(n_posts) < 0.02

        for i in range(n_posts):
            tokens = post_tokens[i]
            start = punct_bounds[i - 1] if i else 0
            qdraw = flat_q[start : punct_bounds[i]][: n_sents[i]]
            bang = flat_bang[start : punct_bounds[i]][: n_sents[i]]
            puncts = np.where(qdraw < q_prob[i], "?", np.where(bang, "!", "."))
            realized_q[i] = float(np.mean(puncts == "?"))
            L = int(sent_len[i])
            sentences = [
                " ".join(tokens[k : k + L]) + puncts[idx]
                for idx, k in enumerate(range(0, len(tokens), L))
            ]
            a = int(post_author[i])
            ts = int(
                obs_start
                + (config.baseline_days + int(post_day[i])) * SECONDS_PER_DAY
                + int(post_hour[i]) * 3600
                + int(post_sec[i])
            )
            records.append(
                {
                    "post_id": f"p{post_counter:07d}",
                    "subreddit": subreddit,
                    "author_id": author_ids[a],
                    "created_utc": ts,
                    "author_created_utc": int(author_created[a]),
                    "title": sentences[0],
                    "body": " ".join(sentences[1:]),
                    "score": int(scores[i]),
                    "n_awards": 0,  # set from the outcome draw below
                    "n_gold": int(gold[i]),
                    "removed": bool(removed[i]),
                    "toxicity": float(neural["toxicity"][i]),
                    "sentiment": float(neural["sentiment"][i]),
                    "politeness": float(neural["politeness"][i]),
                    "prosocial_support": float(prosocial[i, 0]),
                    "prosocial_agreement": float(prosocial[i, 1]),
                    "prosocial_politeness": float(prosocial[i, 2]),
                }
            )
            realized = {}
            for f in modeled:
                if f.startswith("lex_"):
                    realized[f] = 100.0 * counts[i, cat_idx[f[len("lex_"):]]] / n_tokens[i]
                elif f == "question_ratio":
                    realized[f] = realized_q[i]
                else:
                    realized[f] = float(neural[f][i])
            sample_rows.append(
                {
                    "post_id": records[-1]["post_id"],
                    "sub_index": s,
                    "day": int(post_day[i]),
                    "hour": int(post_hour[i]),
                    "realized": realized,
                }
            )
            post_counter += 1

    df = pd.DataFrame.from_records(records)

    if config.with_embeddings:
        erng = np.random.default_rng(root.spawn(config.n_subreddits + 1)[-1])
        dim = 384
        directions = erng.normal(size=(config.n_subreddits, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        sub_code = df["subreddit"].str.slice(3).astype(int).to_numpy()
        mags = np.array(
            [
                config.embedding_offsets.get(f"sub{s:03d}", config.embedding_offset)
                for s in range(config.n_subreddits)
            ]
        )
        emb = (
            directions[sub_code] * mags[sub_code, None]
            + config.embedding_noise * erng.normal(size=(len(df), dim))
        )
        emb_cols = {f"emb_{i:03d}": emb[:, i] for i in range(dim)}
        df = pd.concat([df, pd.DataFrame(emb_cols, index=df.index)], axis=1)

    # outcome draw from the fixed-effects logistic form on realized features
    with_z, _ = attach_covariates(df, windows, log_scale=True)
    sample_ids = [r["post_id"] for r in sample_rows]
    zdf = with_z.set_index("post_id").loc[sample_ids]

    feature_scale: dict[str, tuple[float, float]] = {}
    eta = np.full(len(sample_rows), config.intercept)
    std_features: dict[str, np.ndarray] = {}
    for f in modeled:
        vals = np.array([r["realized"].get(f, np.nan) for r in sample_rows])
        mean, sd = float(vals.mean()), float(vals.std(ddof=0))
        sd = sd if sd > 0 else 1.0
        feature_scale[f] = (mean, sd)
        std_features[f] = (vals - mean) / sd
    for z in Z_COLUMNS:
        vals = zdf[z].to_numpy(dtype=float)
        mean, sd = float(vals.mean()), float(vals.std(ddof=0))
        sd = sd if sd > 0 else 1.0
        feature_scale[f"Z:{z}"] = (mean, sd)
        if z in config.gamma:
            eta += config.gamma[z] * (vals - mean) / sd

    is_new = zdf["is_new"].to_numpy(dtype=bool)

    for f, b in config.true_beta.items():
        eta += b * std_features[f]
    for f, th in config.true_theta.items():
        eta += th * std_features[f] * is_new
    if config.misspecification and config.true_beta:
        first = next(iter(config.true_beta))
        eta += config.misspecification * (std_features[first] ** 2 - 1.0)

    subs = np.array([r["sub_index"] for r in sample_rows])
    days = np.array([r["day"] for r in sample_rows])
    hours = np.array([r["hour"] for r in sample_rows])
    eta += sub_fe[subs] + day_fe[days] + hour_fe[hours]

    prob = _sigmoid(eta)
    orng = np.random.default_rng(root.spawn(config.n_subreddits + 2)[-1])
    awarded = orng.random(len(prob)) < prob
    id_pos = {pid: k for k, pid in enumerate(df["post_id"])}
    award_col = df["n_awards"].to_numpy().copy()
    for k, r in enumerate(sample_rows):
        if awarded[k]:
            award_col[id_pos[r["post_id"]]] = 1
    df["n_awards"] = award_col

    if config.score_text_effects:
        bump = np.zeros(len(sample_rows))
        for f, w in config.score_text_effects.items():
            bump += w * std_features[f]
        score_col = df["score"].to_numpy().copy()
        for k, r in enumerate(sample_rows):
            score_col[id_pos[r["post_id"]]] += int(round(bump[k]))
        df["score"] = score_col

    truth = GroundTruth(
        beta=dict(config.true_beta),
        theta=dict(config.true_theta),
        gamma=dict(config.gamma),
        intercept=config.intercept,
        probabilities={r["post_id"]: float(p) for r, p in zip(sample_rows, prob)},
        feature_scale=feature_scale,
        recipe_hash=config_hash(config),
    )
    return df, truth


def naive_fit(frame: pd.DataFrame, feature_cols: list[str], label_col: str = "y"):
    """No-FE, no-stratification logistic fit of the label on the features.

    The features are z-scored on the given rows. Returns {feature: beta}.
    """
    X = frame[feature_cols].to_numpy(dtype=float)
    mean, sd = X.mean(axis=0), X.std(ddof=0, axis=0)
    sd[sd == 0] = 1.0
    X = (X - mean) / sd
    design = sp.csr_matrix(np.column_stack([np.ones(len(X)), X]))
    fit = fit_logit(
        design,
        frame[label_col].to_numpy(dtype=float),
        columns=["intercept"] + list(feature_cols),
        penalized=np.array([False] + [True] * len(feature_cols)),
    )
    return {c: fit.coef(c) for c in feature_cols if c in fit.columns}


def evaluate_recovery(report: pd.DataFrame, truth: GroundTruth,
                      family: str = "main", alpha: float = 0.05,
                      engine_scale: dict | None = None) -> dict:
    """Bias, RMSE, CI coverage and realized FDR against the ground truth.

    Bias/RMSE/coverage cover the features named in truth.beta; realized
    FDR treats every family feature absent from truth.beta (or with a zero
    coefficient) as null.

    `engine_scale` maps feature -> (mean, sd) of the engine's standardizer
    (fitted on the retained analysis set). When given, engine estimates are
    converted to the generator-population 1-SD scale (the scale truth.beta
    is planted on): beta_pop = beta_engine * sd_pop / sd_engine. This is a
    unit conversion, not a correction; the two standardization populations
    differ by construction.
    """
    rows = report[report["family"] == family].set_index("term")
    missing = [f for f in truth.beta if f not in rows.index]
    if missing:
        raise SchemaError([f"feature {f} missing from the report" for f in missing])

    def to_pop_scale(feature: str, value: float) -> float:
        if engine_scale is None or feature not in engine_scale:
            return value
        sd_pop = truth.feature_scale.get(feature, (0.0, 1.0))[1]
        sd_eng = engine_scale[feature][1]
        return value * sd_pop / sd_eng

    errors, covered = [], []
    for f, b_true in truth.beta.items():
        r = rows.loc[f]
        errors.append(to_pop_scale(f, r["beta"]) - b_true)
        lo = to_pop_scale(f, np.log(r["ci_low"]))
        hi = to_pop_scale(f, np.log(r["ci_high"]))
        covered.append(min(lo, hi) <= b_true <= max(lo, hi))

    discoveries = rows[np.isfinite(rows["q"]) & (rows["q"] < alpha)]
    null_terms = [
        t for t in rows.index if truth.beta.get(t, 0.0) == 0.0
    ]
    false_disc = sum(1 for t in discoveries.index if t in set(null_terms))
    realized_fdr = false_disc / max(len(discoveries), 1)

    errors = np.array(errors, dtype=float)
    return {
        "bias": float(errors.mean()) if errors.size else 0.0,
        "rmse": float(np.sqrt((errors ** 2).mean())) if errors.size else 0.0,
        "coverage": float(np.mean(covered)) if covered else 1.0,
        "n_discoveries": int(len(discoveries)),
        "n_false_discoveries": int(false_disc),
        "realized_fdr": float(realized_fdr),
        "n_null": len(null_terms),
    }
