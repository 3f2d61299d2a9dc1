"""Neural-feature extraction onto the canonical post table.

Consumes the engine strictly through its external interfaces: the
canonical CSV schema and the schema manifest JSON file (exported by
`acclaim schema --out ...`). Appends the embedding block and the score
columns in input row order, preserving row count, and writes a sidecar
manifest recording which scorer versions ran and any per-scorer skips.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .scorers import EMBEDDING_DIM, default_scorers


class IoError(Exception):
    pass


@dataclass
class AdapterManifest:
    scorers: dict = field(default_factory=dict)
    skipped_scorers: dict = field(default_factory=dict)
    embedding_dim: int = EMBEDDING_DIM
    batch_size: int = 0
    rows_in: int = 0
    rows_out: int = 0
    flagged_rows: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "scorers": self.scorers,
                "skipped_scorers": self.skipped_scorers,
                "embedding_dim": self.embedding_dim,
                "batch_size": self.batch_size,
                "rows_in": self.rows_in,
                "rows_out": self.rows_out,
                "flagged_rows": self.flagged_rows,
            },
            indent=2,
            sort_keys=True,
        )


def load_schema_manifest(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read schema manifest {path}: {exc}") from exc


def _column_specs(manifest: dict, neural: bool) -> list[dict]:
    specs = list(manifest["columns"])
    if neural:
        specs = specs + list(manifest["neural_columns"])
    return specs


_DTYPE_OK = {
    "str": lambda s: s.dtype == object or pd.api.types.is_string_dtype(s),
    "int": lambda s: pd.api.types.is_integer_dtype(s),
    "float": lambda s: pd.api.types.is_numeric_dtype(s),
    "bool": lambda s: pd.api.types.is_bool_dtype(s)
    or set(pd.unique(s.dropna())) <= {0, 1, True, False},
}


def validate_schema(df: pd.DataFrame, manifest: dict, neural: bool = True) -> dict:
    """Column presence, dtype, and range checks per the engine's manifest.

    Returns {"ok": bool, "problems": [machine-readable strings]}.
    """
    problems: list[str] = []
    for spec in _column_specs(manifest, neural):
        name = spec["name"]
        if name not in df.columns:
            if spec.get("required", True) or neural:
                problems.append(f"missing column: {name}")
            continue
        series = df[name]
        if not _DTYPE_OK[spec["dtype"]](series):
            problems.append(f"column {name}: expected {spec['dtype']}, got {series.dtype}")
            continue
        if spec["dtype"] in ("int", "float"):
            values = pd.to_numeric(series, errors="coerce").to_numpy(dtype=float)
            finite = np.isfinite(values)
            if "min" in spec and (values[finite] < spec["min"]).any():
                row = int(np.flatnonzero(finite & (values < spec["min"]))[0])
                problems.append(f"column {name}: below {spec['min']} at row {row}")
            if "max" in spec and (values[finite] > spec["max"]).any():
                row = int(np.flatnonzero(finite & (values > spec["max"]))[0])
                problems.append(f"column {name}: above {spec['max']} at row {row}")
    if neural:
        emb = manifest["embedding"]
        wanted = [f"{emb['prefix']}{i:03d}" for i in range(emb["dim"])]
        missing = [c for c in wanted if c not in df.columns]
        for name in missing[:5]:
            problems.append(f"missing column: {name}")
        if len(missing) > 5:
            problems.append(f"... and {len(missing) - 5} more embedding columns")
    if "post_id" in df.columns and df["post_id"].duplicated().any():
        problems.append("duplicate post_id values")
    return {"ok": not problems, "problems": problems}


def extract_neural_features(
    in_path,
    out_path,
    schema_manifest_path,
    embedder: str = "hashed",
    batch_size: int = 256,
    manifest_path=None,
) -> AdapterManifest:
    """Append embeddings and score columns; returns the adapter manifest.

    Scorers that fail to load are skipped: their columns are emitted as
    nulls and flagged in the manifest. Rows with empty analyzed text keep
    null scores and are flagged by row index.
    """
    schema_manifest = load_schema_manifest(schema_manifest_path)
    try:
        df = pd.read_csv(
            in_path,
            dtype={"post_id": str, "subreddit": str, "author_id": str},
            keep_default_na=False,
            na_values=[""],
        )
    except OSError as exc:
        raise IoError(f"cannot read {in_path}: {exc}") from exc
    raw_check = validate_schema(df, schema_manifest, neural=False)
    if not raw_check["ok"]:
        raise ValueError("input fails raw schema validation: "
                         + "; ".join(raw_check["problems"]))

    texts = (df["title"].fillna("").astype(str) + "\n\n"
             + df["body"].fillna("").astype(str)).tolist()
    flagged = [i for i, t in enumerate(texts) if not t.strip()]

    manifest = AdapterManifest(batch_size=batch_size, rows_in=len(df))
    new_columns: dict[str, np.ndarray] = {}

    scorer_factories = {
        "embedding": lambda: default_scorers(embedder)[0],
        "toxicity": lambda: default_scorers()[1],
        "sentiment": lambda: default_scorers()[2],
        "politeness": lambda: default_scorers()[3],
        "prosociality": lambda: default_scorers()[4],
    }
    for group, factory in scorer_factories.items():
        try:
            scorer = factory()
        except Exception as exc:  # model load failure: skip with null columns
            manifest.skipped_scorers[group] = str(exc)
            new_columns.update(_null_columns(group, len(df)))
            continue
        manifest.scorers[group] = {"name": scorer.name, "version": scorer.version}
        results = {c: np.full(len(df), np.nan) for c in scorer.columns}
        for start in range(0, len(df), batch_size):
            stop = min(start + batch_size, len(df))
            batch = scorer.score(texts[start:stop])
            for c in scorer.columns:
                results[c][start:stop] = batch[c]
        for c in scorer.columns:
            results[c][flagged] = np.nan
        new_columns.update(results)

    out = pd.concat([df, pd.DataFrame(new_columns, index=df.index)], axis=1)
    manifest.rows_out = len(out)
    manifest.flagged_rows = flagged
    out.to_csv(out_path, index=False)
    if manifest_path is None:
        manifest_path = f"{out_path}.manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json() + "\n")
    return manifest


def _null_columns(group: str, n: int) -> dict:
    from . import scorers as s

    columns = {
        "embedding": [f"emb_{i:03d}" for i in range(EMBEDDING_DIM)],
        "toxicity": ["toxicity"],
        "sentiment": ["sentiment"],
        "politeness": ["politeness"],
        "prosociality": s.MarkerProsociality.columns,
    }[group]
    return {c: np.full(n, np.nan) for c in columns}
