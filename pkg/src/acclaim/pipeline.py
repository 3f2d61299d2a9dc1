"""Pipeline orchestration: ingest -> featurize -> stratify -> estimate ->
predict -> distinct, with artifact emission and a run manifest.

Stages are plain functions over an in-memory blackboard (`RunState`), so
the CLI subcommands and the acceptance studies can run any prefix of the
pipeline programmatically. All randomness flows from seeds in the config;
reruns produce byte-identical numeric artifacts (the manifest carries
wall-clock timings and is excluded from that guarantee).
"""

from __future__ import annotations

import configparser
import datetime as dt
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import schema
from .corpus import (
    SECONDS_PER_DAY,
    Windows,
    Z_COLUMNS,
    attach_covariates,
    build_candidate_pool,
    label_outcomes,
)
from .design import ModelSpec, build_design
from .distinct import compute_centroids, welch_t
from .errors import (
    AcclaimError,
    BaselineSkipped,
    ConfigError,
    PipelineHalt,
    SchemaError,
    SubredditSkipped,
)
from .evaluate import prosociality_baseline, run_global_local, stratified_split
from .featurize import (
    ColumnStandardizer,
    ResidualUmbrellas,
    build_feature_table,
    export_exemplars,
    load_lexicon,
)
from .glm import cluster_robust_cov, fit_logit
from .inference import effect_tables, newcomer_composition
from .stratify import (
    StratumAssignment,
    balance_diagnostics,
    gate_strata,
    stratify_subreddit,
)
from .table import FeatureTable

log = logging.getLogger(__name__)

STAGES = ("ingest", "featurize", "stratify", "estimate", "predict", "distinct")


def _parse_date(value: str) -> int:
    d = dt.datetime.strptime(value.strip(), "%Y-%m-%d").replace(tzinfo=dt.timezone.utc)
    return int(d.timestamp())


@dataclass
class PipelineConfig:
    table_path: str = ""
    lexicon_path: str | None = None
    out_dir: str = "out"
    observation_start: int = 1588291200   # 2020-05-01
    observation_end: int = 1601510400     # 2020-10-01 (exclusive)
    baseline_days: int = 14
    outcomes: list[str] = field(default_factory=lambda: ["score", "award", "gold"])
    control_ratio: int = 3
    pool_seed: int = 1
    z_log_scale: bool = True
    use_lda: bool = True
    n_topics: int = 10
    lda_sweeps: int = 1000
    lda_average: int = 100
    clr_epsilon: float = 1e-6
    use_pca: bool = True
    n_components: int = 10
    exemplar_k: int = 30
    n_deciles: int = 10
    smd_threshold: float = 0.30
    adaboost_rounds: int = 100
    min_per_class: int = 10
    strat_seed: int = 2
    ridge: float = 1e-8
    tol: float = 1e-8
    max_iter: int = 100
    predict_enabled: bool = True
    gbt_rounds: int = 200
    gbt_learning_rate: float = 0.1
    gbt_depth: int = 6
    min_local_rows: int = 200
    test_fraction: float = 0.2
    predict_seed: int = 3
    distinct_enabled: bool = True
    distinct_sample: int = 2000
    distinct_top_k: int = 10
    distinct_seed: int = 4
    jobs: int = 1

    def __post_init__(self):
        base_end = self.observation_start + self.baseline_days * SECONDS_PER_DAY
        if not (self.observation_start < base_end < self.observation_end):
            raise ConfigError("windows must satisfy baseline within observation")
        for t in (self.smd_threshold, self.control_ratio, self.n_deciles,
                  self.n_topics, self.n_components, self.gbt_depth):
            if t <= 0:
                raise ConfigError("thresholds must be positive")
        bad = [o for o in self.outcomes if o not in ("score", "award", "gold")]
        if bad:
            raise ConfigError(f"unknown outcomes: {bad}")

    @property
    def windows(self) -> Windows:
        return Windows(self.observation_start, self.observation_end, self.baseline_days)

    def config_hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "out_dir"}
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()[:16]

    @classmethod
    def from_ini(cls, path) -> "PipelineConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")

        def get(section, key, cast, default):
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                if cast is bool:
                    return parser.getboolean(section, key)
                return cast(raw)
            return default

        d = cls()
        return cls(
            table_path=get("input", "table", str, d.table_path),
            lexicon_path=get("input", "lexicon", str, None) or None,
            out_dir=get("output", "out_dir", str, d.out_dir),
            observation_start=get("windows", "observation_start", _parse_date,
                                  d.observation_start),
            observation_end=get("windows", "observation_end", _parse_date,
                                d.observation_end),
            baseline_days=get("windows", "baseline_days", int, d.baseline_days),
            outcomes=[
                o.strip()
                for o in get("outcomes", "outcomes", str, ",".join(d.outcomes)).split(",")
                if o.strip()
            ],
            control_ratio=get("sampling", "control_ratio", int, d.control_ratio),
            pool_seed=get("sampling", "pool_seed", int, d.pool_seed),
            z_log_scale=get("features", "z_log_scale", bool, d.z_log_scale),
            use_lda=get("features", "use_lda", bool, d.use_lda),
            n_topics=get("features", "n_topics", int, d.n_topics),
            lda_sweeps=get("features", "lda_sweeps", int, d.lda_sweeps),
            lda_average=get("features", "lda_average", int, d.lda_average),
            clr_epsilon=get("features", "clr_epsilon", float, d.clr_epsilon),
            use_pca=get("features", "use_pca", bool, d.use_pca),
            n_components=get("features", "n_components", int, d.n_components),
            exemplar_k=get("features", "exemplar_k", int, d.exemplar_k),
            n_deciles=get("stratify", "n_deciles", int, d.n_deciles),
            smd_threshold=get("stratify", "smd_threshold", float, d.smd_threshold),
            adaboost_rounds=get("stratify", "adaboost_rounds", int, d.adaboost_rounds),
            min_per_class=get("stratify", "min_per_class", int, d.min_per_class),
            strat_seed=get("stratify", "seed", int, d.strat_seed),
            ridge=get("estimate", "ridge", float, d.ridge),
            tol=get("estimate", "tol", float, d.tol),
            max_iter=get("estimate", "max_iter", int, d.max_iter),
            predict_enabled=get("predict", "enabled", bool, d.predict_enabled),
            gbt_rounds=get("predict", "rounds", int, d.gbt_rounds),
            gbt_learning_rate=get("predict", "learning_rate", float, d.gbt_learning_rate),
            gbt_depth=get("predict", "max_depth", int, d.gbt_depth),
            min_local_rows=get("predict", "min_local_rows", int, d.min_local_rows),
            test_fraction=get("predict", "test_fraction", float, d.test_fraction),
            predict_seed=get("predict", "seed", int, d.predict_seed),
            distinct_enabled=get("distinct", "enabled", bool, d.distinct_enabled),
            distinct_sample=get("distinct", "n_sample", int, d.distinct_sample),
            distinct_top_k=get("distinct", "top_k", int, d.distinct_top_k),
            distinct_seed=get("distinct", "seed", int, d.distinct_seed),
            jobs=get("run", "jobs", int, d.jobs),
        )


@dataclass
class RunState:
    config: PipelineConfig
    df: pd.DataFrame | None = None
    labeled: pd.DataFrame | None = None
    eligible_authors: pd.Index | None = None
    label_report: list = field(default_factory=list)
    pools: dict = field(default_factory=dict)
    features: FeatureTable | None = None
    feature_artifacts: dict = field(default_factory=dict)
    exemplars: dict | None = None
    strata: dict = field(default_factory=dict)
    balance: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)
    prediction: dict = field(default_factory=dict)
    distinct: dict = field(default_factory=dict)
    row_counts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def stage_ingest(state: RunState, df: pd.DataFrame | None = None) -> None:
    cfg = state.config
    if df is None:
        df = schema.load_table(cfg.table_path)
    else:
        problems = schema.validate_frame(df)
        if problems:
            raise SchemaError(problems)
    state.df = df
    labeled, skipped = label_outcomes(df)
    state.label_report = skipped
    with_z, eligible = attach_covariates(labeled, cfg.windows, log_scale=cfg.z_log_scale)
    state.labeled = with_z
    state.eligible_authors = eligible
    for outcome in cfg.outcomes:
        pool = build_candidate_pool(
            with_z, outcome, cfg.windows, ratio=cfg.control_ratio,
            seed=cfg.pool_seed, eligible_authors=eligible,
        )
        state.pools[outcome] = pool
        state.row_counts[f"pool_{outcome}_positives"] = len(pool.positives)
        state.row_counts[f"pool_{outcome}_controls"] = len(pool.controls)
    state.row_counts["input_rows"] = len(df)


def stage_featurize(state: RunState) -> None:
    cfg = state.config
    all_ids: list[str] = []
    seen = set()
    for outcome in cfg.outcomes:
        for pid in state.pools[outcome].post_ids:
            if pid not in seen:
                seen.add(pid)
                all_ids.append(pid)
    all_ids.sort()
    frame = state.labeled.set_index("post_id", drop=False).loc[all_ids].reset_index(drop=True)
    lexicon = load_lexicon(cfg.lexicon_path)
    table, artifacts = build_feature_table(
        frame,
        lexicon,
        n_topics=cfg.n_topics,
        lda_sweeps=cfg.lda_sweeps,
        lda_average=cfg.lda_average,
        clr_epsilon=cfg.clr_epsilon,
        n_components=cfg.n_components,
        seed=cfg.pool_seed,
        use_lda=cfg.use_lda,
        use_pca=cfg.use_pca,
    )
    table.frame.index = table.frame["post_id"]
    state.features = table
    state.feature_artifacts = artifacts
    state.feature_artifacts["lexicon"] = lexicon
    state.row_counts["featurized_rows"] = len(table.frame)
    pc_cols = [c for c in table.frame.columns if c.startswith("pc_")]
    if pc_cols:
        state.exemplars = export_exemplars(
            table.frame[pc_cols].to_numpy(dtype=float),
            table.frame["post_id"].to_numpy(),
            k=cfg.exemplar_k,
        )


def _pool_frame(state: RunState, outcome: str) -> pd.DataFrame:
    pool = state.pools[outcome]
    table = state.features
    ids = [pid for pid in pool.post_ids if pid in table.frame.index]
    frame = table.frame.loc[ids].copy()
    positives = set(pool.positives)
    frame["y"] = frame["post_id"].map(lambda p: 1 if p in positives else 0)
    return frame


def stage_stratify(state: RunState, outcome: str) -> None:
    cfg = state.config
    frame = _pool_frame(state, outcome)
    table = state.features

    def one(subreddit: str):
        rows = frame.index[frame["subreddit"] == subreddit]
        sub_table = FeatureTable(
            frame.loc[rows], family=dict(table.family), provenance=dict(table.provenance)
        )
        sub_table.family["y"] = "outcome"
        try:
            deciles, model = stratify_subreddit(
                sub_table, rows, subreddit, seed=cfg.strat_seed,
                n_rounds=cfg.adaboost_rounds, n_bins=cfg.n_deciles,
            )
        except SubredditSkipped as exc:
            return subreddit, None, str(exc)
        return subreddit, pd.Series(deciles, index=rows), None

    subreddits = sorted(frame["subreddit"].unique())
    results = Parallel(n_jobs=cfg.jobs)(delayed(one)(s) for s in subreddits) \
        if cfg.jobs != 1 else [one(s) for s in subreddits]

    frame["decile"] = 0
    skipped = []
    for subreddit, deciles, err in results:
        if deciles is None:
            skipped.append({"subreddit": subreddit, "reason": err})
            continue
        frame.loc[deciles.index, "decile"] = deciles.to_numpy()
    frame = frame[frame["decile"] > 0]

    strata: list[StratumAssignment] = []
    for (subreddit, decile), g in frame.groupby(["subreddit", "decile"], sort=True):
        strata.append(
            StratumAssignment(
                subreddit=str(subreddit), decile=int(decile),
                post_ids=g["post_id"].tolist(),
                n_pos=int((g["y"] == 1).sum()), n_ctl=int((g["y"] == 0).sum()),
            )
        )
    diag_frame = frame.set_index("post_id", drop=False)
    diagnostics = balance_diagnostics(diag_frame, strata)
    retained = gate_strata(
        strata, diagnostics.mean_by_stratum,
        threshold=cfg.smd_threshold, min_per_class=cfg.min_per_class,
    )
    state.strata[outcome] = {
        "frame": frame, "strata": strata, "retained": retained,
        "diagnostics": diagnostics, "skipped": skipped,
    }
    state.row_counts[f"retained_rows_{outcome}"] = int(
        sum(len(s.post_ids) for s in retained)
    )


def stage_estimate(state: RunState, outcome: str) -> None:
    cfg = state.config
    info = state.strata[outcome]
    frame = info["frame"]
    retained_ids = [pid for s in info["retained"] for pid in s.post_ids]
    analysis = frame.set_index("post_id", drop=False).loc[retained_ids].copy()

    lexicon = state.feature_artifacts["lexicon"]
    residual = ResidualUmbrellas(lexicon).fit(analysis)
    analysis = residual.transform(analysis)

    a_cols = [c for c in analysis.columns if state.features.family.get(c) == "A"]
    a_cols += [f.residual_column for f in residual.fits_]
    a_cols = sorted(set(a_cols))
    z_cols = [c for c in Z_COLUMNS if c in analysis.columns]

    scaler = ColumnStandardizer(columns=a_cols + z_cols).fit(analysis)
    analysis = scaler.transform(analysis)
    kept = set(analysis.columns)
    a_kept = [c for c in a_cols if c in kept]
    z_kept = [c for c in z_cols if c in kept]

    spec = ModelSpec(outcome=outcome, language_terms=a_kept, covariate_terms=z_kept)
    design = build_design(analysis, spec)
    fit = fit_logit(
        design.X, design.y, columns=design.columns, penalized=design.penalized,
        ridge=cfg.ridge, tol=cfg.tol, max_iter=cfg.max_iter,
        separation_flag=bool(design.separation_levels), families=design.families,
    )
    robust = cluster_robust_cov(fit, design.clusters)
    report = effect_tables(fit, robust)
    report.insert(0, "outcome", outcome)
    newcomers = newcomer_composition(report)
    newcomers.insert(0, "outcome", outcome)
    state.estimates[outcome] = {
        "fit": fit,
        "report": report,
        "newcomers": newcomers,
        "dropped_constant": scaler.constant_columns_ + design.dropped_constant,
        "residual_fits": residual.fits_,
        "scaler_params": dict(scaler.params_),
    }
    state.row_counts[f"design_rows_{outcome}"] = int(design.X.shape[0])
    state.row_counts[f"design_cols_{outcome}"] = int(len(fit.columns))


def _predict_features(state: RunState, frame: pd.DataFrame, train_ids) -> tuple[pd.DataFrame, list[str]]:
    lexicon = state.feature_artifacts["lexicon"]
    residual = ResidualUmbrellas(lexicon).fit(frame.loc[train_ids])
    out = residual.transform(frame)
    a_cols = [
        c for c in out.columns
        if state.features.family.get(c) == "A" or c.startswith("other_")
    ]
    scaler = ColumnStandardizer(columns=a_cols).fit(out.loc[train_ids])
    out = scaler.transform(out)
    a_cols = [c for c in a_cols if c in out.columns]
    n_missing = int(out[a_cols].isna().sum().sum())
    if n_missing:
        log.warning("imputing %d missing feature values as 0 post-standardization",
                    n_missing)
        out[a_cols] = out[a_cols].fillna(0.0)
    return out, a_cols


def stage_predict(state: RunState) -> None:
    cfg = state.config
    outcome = "score" if "score" in cfg.outcomes else cfg.outcomes[0]
    frame = _pool_frame(state, outcome)
    split = stratified_split(frame, seed=cfg.predict_seed,
                             test_frac=cfg.test_fraction)
    features, a_cols = _predict_features(state, frame, split.train_idx)

    comparison, global_model, local_models = run_global_local(
        features, a_cols, n_rounds=cfg.gbt_rounds,
        learning_rate=cfg.gbt_learning_rate, max_depth=cfg.gbt_depth,
        min_local_rows=cfg.min_local_rows, seed=cfg.predict_seed,
    )
    try:
        baseline = prosociality_baseline(features, seed=cfg.predict_seed)
        comparison.baseline_auc["prosociality_pc1"] = baseline["auc"]
    except BaselineSkipped as exc:
        baseline = {"skipped": str(exc)}
        log.warning("prosociality baseline skipped: %s", exc)
    state.prediction = {
        "outcome": outcome,
        "comparison": comparison,
        "global_model": global_model,
        "local_models": local_models,
        "baseline": baseline,
    }
    state.row_counts["predict_rows"] = len(frame)


def stage_distinct(state: RunState) -> None:
    cfg = state.config
    outcome = state.prediction.get("outcome") or cfg.outcomes[0]
    frame = _pool_frame(state, outcome)
    emb_cols = [c for c in schema.embedding_columns() if c in frame.columns]
    if len(emb_cols) != schema.EMBEDDING_DIM:
        state.distinct = {"skipped": "embedding block missing"}
        return
    report = compute_centroids(
        frame[emb_cols].to_numpy(dtype=float),
        frame["subreddit"].to_numpy(),
        n_sample=cfg.distinct_sample,
        seed=cfg.distinct_seed,
    )
    groups: dict[str, str] = {}
    welch = None
    comparison = state.prediction.get("comparison")
    if comparison is not None and comparison.deltas:
        ordered = sorted(comparison.deltas.items(), key=lambda kv: (-kv[1], kv[0]))
        k = cfg.distinct_top_k
        gains = [s for s, d in ordered[:k] if d > 0]
        losses = [s for s, d in ordered[-k:] if d < 0]
        groups = {**{s: "gain" for s in gains}, **{s: "loss" for s in losses}}
        g = [report.distances[s] for s in gains if s in report.distances]
        l = [report.distances[s] for s in losses if s in report.distances]
        if len(g) >= 2 and len(l) >= 2:
            welch = welch_t(g, l)
    state.distinct = {"report": report, "groups": groups, "welch": welch}


def run_stages(config: PipelineConfig, through: str = "distinct",
               df: pd.DataFrame | None = None) -> RunState:
    """Run the pipeline through the named stage, returning the blackboard."""
    if through not in STAGES:
        raise ConfigError(f"unknown stage {through}")
    state = RunState(config=config)
    last = STAGES.index(through)

    def timed(name, fn, *args):
        start = time.perf_counter()
        try:
            fn(*args)
        except (SchemaError, ConfigError):
            raise
        except PipelineHalt as halt:
            halt.state = state  # partial results for the incomplete-run artifacts
            raise
        except AcclaimError as exc:
            halt = PipelineHalt(name, str(exc), diagnostics={"error": type(exc).__name__})
            halt.state = state
            raise halt from exc
        state.timings[name] = state.timings.get(name, 0.0) + time.perf_counter() - start

    timed("ingest", stage_ingest, state, df)
    if last >= 1:
        timed("featurize", stage_featurize, state)
    if last >= 2:
        for outcome in config.outcomes:
            timed("stratify", stage_stratify, state, outcome)
    if last >= 3:
        for outcome in config.outcomes:
            timed("estimate", stage_estimate, state, outcome)
    if last >= 4 and config.predict_enabled:
        timed("predict", stage_predict, state)
    if last >= 5 and config.distinct_enabled:
        timed("distinct", stage_distinct, state)
    return state


def run_pipeline(config: PipelineConfig, df: pd.DataFrame | None = None,
                 through: str = "distinct") -> dict:
    """Full run with artifact emission; returns the manifest dict."""
    from . import report as report_mod

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / "INCOMPLETE"
    try:
        state = run_stages(config, through=through, df=df)
    except PipelineHalt as halt:
        partial = getattr(halt, "state", None)
        if partial is not None:
            try:
                report_mod.emit_artifacts(partial, out_dir)
            except Exception:
                log.exception("could not emit partial artifacts after halt")
        marker.write_text(
            json.dumps(
                {"stage": halt.stage, "message": str(halt),
                 "diagnostics": halt.diagnostics},
                indent=2, sort_keys=True, default=str,
            )
        )
        raise
    if marker.exists():
        marker.unlink()
    manifest = report_mod.emit_artifacts(state, out_dir)
    return manifest
