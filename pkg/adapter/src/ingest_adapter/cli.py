"""Adapter CLI: extract neural feature columns, validate canonical files."""

from __future__ import annotations

import json
import sys

import click
import pandas as pd

from .adapter import IoError, extract_neural_features, load_schema_manifest, validate_schema


@click.group()
def main():
    pass


@main.command("extract", help="Append embeddings and score columns to a canonical CSV.")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True,
              help="Engine schema manifest JSON (acclaim schema --out ...).")
@click.option("--embedder", type=click.Choice(["hashed", "minilm"]), default="hashed")
@click.option("--batch-size", type=int, default=256)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
def extract_cmd(in_path, out_path, schema_path, embedder, batch_size, manifest_path):
    try:
        manifest = extract_neural_features(
            in_path, out_path, schema_path,
            embedder=embedder, batch_size=batch_size, manifest_path=manifest_path,
        )
    except (IoError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"ok: {manifest.rows_out} rows -> {out_path}"
        + (f" (skipped: {sorted(manifest.skipped_scorers)})"
           if manifest.skipped_scorers else "")
    )


@main.command("validate", help="Check a CSV against the engine schema manifest.")
@click.option("--file", "file_path", type=click.Path(exists=True), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--raw-only", is_flag=True, help="Skip neural column checks.")
def validate_cmd(file_path, schema_path, raw_only):
    try:
        manifest = load_schema_manifest(schema_path)
        df = pd.read_csv(file_path, keep_default_na=False, na_values=[""])
    except (IoError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    report = validate_schema(df, manifest, neural=not raw_only)
    click.echo(json.dumps(report, indent=2))
    if not report["ok"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
