"""Command-line interface.

Exit codes: 0 success, 2 input/config validation failure, 3 pipeline halt,
1 internal error. The default config path can come from the
ACCLAIM_CONFIG environment variable.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click
import pandas as pd

from . import schema
from .errors import AcclaimError, ConfigError, PipelineHalt, SchemaError
from .pipeline import PipelineConfig, run_pipeline

EXIT_VALIDATION = 2
EXIT_HALT = 3
EXIT_INTERNAL = 1

log = logging.getLogger("acclaim")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _config_options(fn):
    @click.option("--config", "config_path", envvar="ACCLAIM_CONFIG",
                  type=click.Path(exists=True), help="Pipeline config file "
                  "(key = value sections); env ACCLAIM_CONFIG.")
    @click.option("--table", type=click.Path(exists=True), default=None,
                  help="Canonical input CSV (overrides config).")
    @click.option("--seed", type=int, default=None,
                  help="Master seed (derives all stage seeds).")
    @click.option("--outcome", "outcomes", multiple=True,
                  type=click.Choice(["score", "award", "gold"]),
                  help="Restrict to these outcomes.")
    @click.option("--out-dir", type=click.Path(), default=None)
    @click.option("--jobs", type=int, default=None, help="Parallel workers.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper


def _build_config(config_path, table, seed, outcomes, out_dir, jobs) -> PipelineConfig:
    cfg = PipelineConfig.from_ini(config_path) if config_path else PipelineConfig()
    if table:
        cfg.table_path = table
    if not cfg.table_path:
        raise ConfigError("no input table: pass --table or set [input] table")
    if seed is not None:
        cfg.pool_seed = seed
        cfg.strat_seed = seed + 1
        cfg.predict_seed = seed + 2
        cfg.distinct_seed = seed + 3
    if outcomes:
        cfg.outcomes = list(dict.fromkeys(outcomes))
    if out_dir:
        cfg.out_dir = out_dir
    if jobs is not None:
        cfg.jobs = jobs
    return cfg


def _execute(stage: str, **kwargs):
    try:
        cfg = _build_config(**kwargs)
        manifest = run_pipeline(cfg, through=stage)
        click.echo(f"ok: artifacts in {cfg.out_dir} (manifest {manifest['manifest']})")
    except (SchemaError, ConfigError) as exc:
        click.echo(f"validation failure: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except PipelineHalt as exc:
        click.echo(f"pipeline halt: {exc}", err=True)
        sys.exit(EXIT_HALT)
    except AcclaimError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)


def _stage_command(name: str, stage: str, doc: str):
    @main.command(name=name, help=doc)
    @_config_options
    def cmd(config_path, table, seed, outcomes, out_dir, jobs):
        _execute(stage, config_path=config_path, table=table, seed=seed,
                 outcomes=outcomes, out_dir=out_dir, jobs=jobs)

    return cmd


_stage_command("ingest", "ingest", "Validate input, label outcomes, build candidate pools.")
_stage_command("featurize", "featurize", "Compute the pre-feedback feature table.")
_stage_command("stratify", "stratify", "Fit risk models, bin deciles, gate on balance.")
_stage_command("estimate", "estimate", "Fit the fixed-effects logit and emit effect tables.")
_stage_command("predict", "predict", "Train global/local detectors and report AUC.")
_stage_command("distinct", "distinct", "Centroid distinctiveness and the gain/loss test.")
_stage_command("run-all", "distinct", "Run the full pipeline end to end.")


@main.command("synth", help="Generate a synthetic corpus with known ground truth.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--truth", "truth_path", type=click.Path(), default=None,
              help="Ground-truth sidecar path (default: <out>.truth.json).")
@click.option("--seed", type=int, default=0)
@click.option("--subreddits", type=int, default=10)
@click.option("--posts", type=int, default=500)
@click.option("--days", type=int, default=60)
@click.option("--beta", "betas", multiple=True, metavar="FEATURE=VALUE",
              help="Planted main effect, e.g. lex_money=0.405.")
@click.option("--theta", "thetas", multiple=True, metavar="FEATURE=VALUE")
@click.option("--gamma", "gammas", multiple=True, metavar="ZCOL=VALUE")
@click.option("--confound", type=float, default=0.0,
              help="Author-trait loading on the confounded features.")
@click.option("--confounded", "confounded", multiple=True, metavar="FEATURE")
@click.option("--intercept", type=float, default=-2.2,
              help="Base log-odds of the award outcome (controls prevalence).")
@click.option("--gold-rate", type=float, default=0.01)
@click.option("--embeddings/--no-embeddings", default=True)
def synth_cmd(out_path, truth_path, seed, subreddits, posts, days, betas,
              thetas, gammas, confound, confounded, intercept, gold_rate,
              embeddings):
    from .synth import GeneratorConfig, generate_corpus

    def parse_kv(items):
        out = {}
        for item in items:
            key, _, value = item.partition("=")
            out[key] = float(value)
        return out

    try:
        cfg = GeneratorConfig(
            n_subreddits=subreddits, posts_per_subreddit=posts,
            observation_days=days, true_beta=parse_kv(betas),
            true_theta=parse_kv(thetas), gamma=parse_kv(gammas),
            confound_z_to_a=confound, confounded_features=list(confounded),
            intercept=intercept, gold_rate=gold_rate,
            with_embeddings=embeddings, seed=seed,
        )
        df, truth = generate_corpus(cfg)
    except (ConfigError, SchemaError) as exc:
        click.echo(f"validation failure: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    df.to_csv(out_path, index=False)
    sidecar = truth_path or f"{out_path}.truth.json"
    Path(sidecar).write_text(truth.to_json() + "\n")
    click.echo(f"ok: {len(df)} rows -> {out_path}; ground truth -> {sidecar}")


@main.command("render", help="Re-render markdown tables from emitted CSVs.")
@click.option("--out-dir", type=click.Path(exists=True), required=True)
def render_cmd(out_dir):
    from .inference import newcomer_composition
    from .report import render_tables

    out = Path(out_dir)
    try:
        effects = pd.read_csv(out / "effects.csv", comment="#")
        auc = pd.read_csv(out / "auc_comparison.csv", comment="#")
        distinct = pd.read_csv(out / "distinctiveness.csv", comment="#")
    except FileNotFoundError as exc:
        click.echo(f"validation failure: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    newcomer_parts = []
    for outcome in effects["outcome"].unique() if len(effects) else []:
        part = newcomer_composition(effects[effects["outcome"] == outcome])
        if len(part):
            part.insert(0, "outcome", outcome)
            newcomer_parts.append(part)
    newcomers = pd.concat(newcomer_parts, ignore_index=True) if newcomer_parts else None
    (out / "effects.md").write_text(
        render_tables(effects, auc, distinct, newcomers), encoding="utf-8"
    )
    click.echo(f"ok: rendered {out / 'effects.md'}")


@main.command("schema", help="Export or check the canonical schema manifest.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the schema manifest JSON here.")
@click.option("--check", "check_path", type=click.Path(exists=True), default=None,
              help="Validate a CSV against the canonical schema.")
@click.option("--require-neural", is_flag=True,
              help="Demand embeddings and neural score columns when checking.")
def schema_cmd(out_path, check_path, require_neural):
    if out_path:
        schema.write_manifest(out_path)
        click.echo(f"ok: schema manifest -> {out_path}")
    if check_path:
        try:
            schema.load_table(check_path, require_neural=require_neural)
        except SchemaError as exc:
            click.echo(json.dumps({"ok": False, "problems": exc.problems}, indent=2))
            sys.exit(EXIT_VALIDATION)
        click.echo(json.dumps({"ok": True, "problems": []}))
    if not out_path and not check_path:
        click.echo(json.dumps(schema.manifest(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
