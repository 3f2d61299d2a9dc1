"""Artifact emission and table rendering.

Every rendered markdown number comes from a cell of an emitted CSV (the
renderer operates on the same frames that are written to disk, and does
no arithmetic beyond rounding). CSV artifacts carry the manifest hash as
a leading comment line; JSON artifacts carry a "manifest" key.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

NUMERIC_ARTIFACTS = [
    "effects.csv",
    "effects.md",
    "balance.csv",
    "auc_comparison.csv",
    "exemplars.json",
    "distinctiveness.csv",
]


def _write_csv(df: pd.DataFrame, path: Path, manifest_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# manifest: {manifest_hash}\n")
        df.to_csv(fh, index=False)


def effects_frame(state) -> pd.DataFrame:
    parts = [e["report"] for e in state.estimates.values()]
    if not parts:
        return pd.DataFrame(
            columns=["outcome", "term", "family", "beta", "se_robust", "z", "p",
                     "q", "odds_ratio", "ci_low", "ci_high", "tier"]
        )
    out = pd.concat(parts, ignore_index=True)
    return out.sort_values(["outcome", "family", "term"], kind="stable").reset_index(drop=True)


def balance_frame(state) -> pd.DataFrame:
    rows = []
    for outcome, info in state.strata.items():
        status = {
            (s.subreddit, s.decile): (s.retained, ",".join(sorted(s.reasons)))
            for s in info["strata"]
        }
        for r in info["diagnostics"].per_stratum.itertuples():
            retained, reason = status.get((r.subreddit, r.decile), (False, ""))
            rows.append(
                {"outcome": outcome, "subreddit": r.subreddit, "decile": r.decile,
                 "covariate": r.covariate, "smd": r.smd,
                 "retained": retained, "reason": reason}
            )
    return pd.DataFrame(
        rows, columns=["outcome", "subreddit", "decile", "covariate", "smd",
                       "retained", "reason"]
    )


def auc_frame(state) -> pd.DataFrame:
    pred = state.prediction
    if not pred:
        return pd.DataFrame(columns=["outcome", "subreddit", "local_auc",
                                     "global_auc_on_slice", "delta"])
    comparison = pred["comparison"]
    out = comparison.to_frame()
    out.insert(0, "outcome", pred["outcome"])
    summary = [
        {"outcome": pred["outcome"], "subreddit": "(global)",
         "local_auc": np.nan, "global_auc_on_slice": comparison.global_auc,
         "delta": np.nan}
    ]
    for name, value in sorted(comparison.baseline_auc.items()):
        summary.append(
            {"outcome": pred["outcome"], "subreddit": f"(baseline:{name})",
             "local_auc": np.nan, "global_auc_on_slice": value, "delta": np.nan}
        )
    return pd.concat([pd.DataFrame(summary), out], ignore_index=True)


def distinct_frame(state) -> pd.DataFrame:
    cols = ["record_type", "subreddit", "distance", "n_sampled", "group",
            "t", "df", "p", "mean_gain", "mean_loss"]
    info = state.distinct
    if not info or "report" not in info:
        return pd.DataFrame(columns=cols)
    report = info["report"]
    groups = info.get("groups", {})
    rows = [
        {"record_type": "distance", "subreddit": s,
         "distance": report.distances[s], "n_sampled": report.sample_sizes[s],
         "group": groups.get(s, ""), "t": np.nan, "df": np.nan, "p": np.nan,
         "mean_gain": np.nan, "mean_loss": np.nan}
        for s in sorted(report.distances)
    ]
    welch = info.get("welch")
    if welch is not None:
        rows.append(
            {"record_type": "welch", "subreddit": "", "distance": np.nan,
             "n_sampled": np.nan, "group": "", "t": welch.t, "df": welch.df,
             "p": welch.p, "mean_gain": welch.mean_g, "mean_loss": welch.mean_l}
        )
    return pd.DataFrame(rows, columns=cols)


FEATURE_GROUPS = (
    ("pc_", "Semantic style dimensions"),
    ("topic_clr_", "Topics (CLR)"),
    ("other_", "Lexicon"),
    ("lex_", "Lexicon"),
)
SURFACE = {"flesch": "Surface & tone", "question_ratio": "Surface & tone",
           "sentiment": "Surface & tone", "politeness": "Surface & tone",
           "toxicity": "Toxicity"}


def _group_of(term: str) -> str:
    if term in SURFACE:
        return SURFACE[term]
    for prefix, name in FEATURE_GROUPS:
        if term.startswith(prefix):
            return name
    return "Other"


def _stars(tier: str) -> str:
    return tier if tier in ("***", "**", "*") else "-"


def _arrow(odds_ratio: float, tier: str) -> str:
    if tier not in ("***", "**", "*"):
        return "—"
    return "↑↑" if odds_ratio > 1.0 else "↓↓"


def render_tables(effects: pd.DataFrame, auc: pd.DataFrame,
                  distinct: pd.DataFrame, newcomers: pd.DataFrame | None = None,
                  notes: list[str] | None = None) -> str:
    """Markdown mirroring the effect-table conventions: OR to 2 decimals,
    q-tier stars ('-' when not significant), direction arrows."""
    lines: list[str] = ["# Effect and evaluation report", ""]
    for note in notes or []:
        lines.append(f"> {note}")
    if notes:
        lines.append("")

    for outcome in sorted(effects["outcome"].unique()) if len(effects) else []:
        sub = effects[(effects["outcome"] == outcome) & (effects["family"] == "main")]
        lines.append(f"## Outcome: {outcome}")
        lines.append("")
        lines.append("| Group | Feature | Odds Ratio | q-sig | Direction |")
        lines.append("|---|---|---|---|---|")
        sub = sub.assign(group=[_group_of(t) for t in sub["term"]])
        sub = sub.sort_values(["group", "term"], kind="stable")
        for r in sub.itertuples():
            lines.append(
                f"| {r.group} | {r.term} | {r.odds_ratio:.2f} | "
                f"{_stars(r.tier)} | {_arrow(r.odds_ratio, r.tier)} |"
            )
        lines.append("")

        cov = effects[(effects["outcome"] == outcome) & (effects["family"] == "covariate")]
        if len(cov):
            lines.append("### Baseline covariates and newcomer indicator")
            lines.append("")
            lines.append("| Term | Odds Ratio | q-sig |")
            lines.append("|---|---|---|")
            for r in cov.itertuples():
                lines.append(f"| {r.term} | {r.odds_ratio:.2f} | {_stars(r.tier)} |")
            lines.append("")

        if newcomers is not None and len(newcomers):
            nsub = newcomers[newcomers["outcome"] == outcome]
            if len(nsub):
                lines.append("### Newcomer interactions")
                lines.append("")
                lines.append(
                    "| Feature | Interaction OR | q-sig | Veterans OR | Newcomers OR |"
                )
                lines.append("|---|---|---|---|---|")
                for r in nsub.itertuples():
                    if r.main_significant:
                        vet = f"{r.or_veteran:.2f}"
                        new = f"{r.or_newcomer:.2f}"
                    else:
                        vet = new = "—"
                    lines.append(
                        f"| {r.feature} | {r.or_interaction:.2f} | "
                        f"{_stars(r.tier_interaction)} | {vet} | {new} |"
                    )
                lines.append("")

    if len(auc):
        lines.append("## Detector evaluation (AUC)")
        lines.append("")
        summary = auc[auc["subreddit"].str.startswith("(")]
        for r in summary.itertuples():
            lines.append(f"- {r.subreddit}: AUC {r.global_auc_on_slice:.3f}")
        locals_only = auc[~auc["subreddit"].str.startswith("(")].dropna(subset=["local_auc"])
        if len(locals_only):
            lines.append(f"- mean local AUC: {locals_only['local_auc'].mean():.3f}")
            lines.append("")
            lines.append("### Local minus global, top gains and losses")
            lines.append("")
            lines.append("| Subreddit | Local AUC | Global AUC (slice) | Delta |")
            lines.append("|---|---|---|---|")
            ranked = locals_only.sort_values("delta", ascending=False, kind="stable")
            k = min(10, len(ranked))
            shown = pd.concat([ranked.head(k), ranked.tail(k)]).drop_duplicates("subreddit")
            for r in shown.itertuples():
                lines.append(
                    f"| {r.subreddit} | {r.local_auc:.3f} | "
                    f"{r.global_auc_on_slice:.3f} | {r.delta:+.3f} |"
                )
        lines.append("")

    if len(distinct):
        welch = distinct[distinct["record_type"] == "welch"]
        lines.append("## Community distinctiveness")
        lines.append("")
        if len(welch):
            w = welch.iloc[0]
            lines.append(
                f"Gain-group mean distance {w['mean_gain']:.3f} vs loss-group "
                f"{w['mean_loss']:.3f}; Welch t = {w['t']:.2f} "
                f"(df = {w['df']:.1f}), p = {w['p']:.3f}."
            )
        dist_rows = distinct[distinct["record_type"] == "distance"]
        lines.append("")
        lines.append("| Subreddit | Distance | Group |")
        lines.append("|---|---|---|")
        for r in dist_rows.itertuples():
            lines.append(f"| {r.subreddit} | {r.distance:.4f} | {r.group or '—'} |")
        lines.append("")

    return "\n".join(lines) + "\n"


def emit_artifacts(state, out_dir: Path) -> dict:
    """Write the seven artifacts plus serialized models; returns the manifest."""
    import acclaim

    out_dir = Path(out_dir)
    manifest_hash = state.config.config_hash()

    effects = effects_frame(state)
    balance = balance_frame(state)
    auc = auc_frame(state)
    distinct = distinct_frame(state)
    newcomer_parts = [
        e["newcomers"] for e in state.estimates.values() if len(e["newcomers"])
    ]
    newcomers = pd.concat(newcomer_parts, ignore_index=True) if newcomer_parts else None

    _write_csv(effects, out_dir / "effects.csv", manifest_hash)
    _write_csv(balance, out_dir / "balance.csv", manifest_hash)
    _write_csv(auc, out_dir / "auc_comparison.csv", manifest_hash)
    _write_csv(distinct, out_dir / "distinctiveness.csv", manifest_hash)

    notes = [
        f"manifest: {manifest_hash}",
        "features standardized on the retained analysis set per outcome "
        "(population SD); odds ratios are per 1-SD increases",
    ]
    (out_dir / "effects.md").write_text(
        render_tables(effects, auc, distinct, newcomers, notes=notes),
        encoding="utf-8",
    )

    exemplars = {"manifest": manifest_hash, "exemplars": state.exemplars}
    if state.exemplars and state.features is not None:
        texts = state.features.frame.set_index("post_id")["text"]
        wanted = sorted(
            {pid for c in state.exemplars["components"] for pid in c["top"] + c["bottom"]}
        )
        exemplars["texts"] = {pid: str(texts.get(pid, ""))[:2000] for pid in wanted}
    with open(out_dir / "exemplars.json", "w", encoding="utf-8") as fh:
        json.dump(exemplars, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")

    models_dir = out_dir / "models"
    if state.prediction.get("global_model") is not None:
        models_dir.mkdir(exist_ok=True)

        def write_model(path, model):
            wrapped = {"manifest": manifest_hash, "model": json.loads(model.to_json())}
            path.write_text(json.dumps(wrapped, sort_keys=True))

        write_model(models_dir / "global.json", state.prediction["global_model"])
        for name, model in sorted(state.prediction.get("local_models", {}).items()):
            write_model(models_dir / f"local_{name}.json", model)

    manifest = {
        "manifest": manifest_hash,
        "versions": {
            "acclaim": acclaim.__version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "row_counts": state.row_counts,
        "wall_clock_seconds": {k: round(v, 3) for k, v in state.timings.items()},
        "artifacts": NUMERIC_ARTIFACTS + ["manifest.json"],
        "skipped_label_groups": state.label_report,
        "notes": notes[1:],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest
