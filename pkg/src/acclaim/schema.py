"""Canonical input schema: column manifest, validation, and loading.

The engine ingests one columnar CSV (UTF-8, header row). Raw columns are
required; neural columns (embeddings and model scores) are optional as a
group but validated for type and range when present. The manifest is also
shipped as a JSON file so external producers (e.g. the ingest adapter) can
validate their output without importing the engine.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pandas as pd

from .errors import SchemaError

EMBEDDING_DIM = 384
EMBEDDING_PREFIX = "emb_"

SCHEMA_VERSION = 1

RAW_COLUMNS = [
    {"name": "post_id", "dtype": "str", "required": True},
    {"name": "subreddit", "dtype": "str", "required": True},
    {"name": "author_id", "dtype": "str", "required": True},
    {"name": "created_utc", "dtype": "int", "required": True, "min": 0},
    {"name": "author_created_utc", "dtype": "int", "required": True, "min": 0},
    {"name": "title", "dtype": "str", "required": True},
    {"name": "body", "dtype": "str", "required": True},
    {"name": "score", "dtype": "int", "required": True},
    {"name": "n_awards", "dtype": "int", "required": True, "min": 0},
    {"name": "n_gold", "dtype": "int", "required": True, "min": 0},
    {"name": "removed", "dtype": "bool", "required": True},
]

NEURAL_COLUMNS = [
    {"name": "toxicity", "dtype": "float", "min": 0.0, "max": 1.0},
    {"name": "sentiment", "dtype": "float", "min": -1.0, "max": 1.0},
    {"name": "politeness", "dtype": "float"},
    {"name": "prosocial_support", "dtype": "float", "min": 0.0, "max": 1.0},
    {"name": "prosocial_agreement", "dtype": "float", "min": 0.0, "max": 1.0},
    {"name": "prosocial_politeness", "dtype": "float", "min": 0.0, "max": 1.0},
]

NEURAL_SCORE_NAMES = [c["name"] for c in NEURAL_COLUMNS]


def embedding_columns() -> list[str]:
    return [f"{EMBEDDING_PREFIX}{i:03d}" for i in range(EMBEDDING_DIM)]


def manifest() -> dict:
    """Schema manifest as a plain dict (what the JSON file contains)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "columns": RAW_COLUMNS,
        "neural_columns": NEURAL_COLUMNS,
        "embedding": {
            "prefix": EMBEDDING_PREFIX,
            "dim": EMBEDDING_DIM,
            "dtype": "float",
        },
    }


def write_manifest(path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def packaged_manifest_path():
    """Path to the manifest JSON shipped inside the package."""
    return resources.files("acclaim.data") / "schema_manifest.json"


_DTYPE_CHECKS = {
    "str": lambda s: s.dtype == object or pd.api.types.is_string_dtype(s),
    "int": lambda s: pd.api.types.is_integer_dtype(s),
    "float": lambda s: pd.api.types.is_numeric_dtype(s),
    "bool": lambda s: pd.api.types.is_bool_dtype(s)
    or set(pd.unique(s.dropna())) <= {0, 1, True, False},
}


def validate_frame(df: pd.DataFrame, require_neural: bool = False) -> list[str]:
    """Check a loaded table against the manifest; returns problem strings.

    An empty list means the table is valid. `require_neural` additionally
    demands the embedding block and all neural score columns (the contract
    the ingest adapter must meet).
    """
    problems: list[str] = []
    for col in RAW_COLUMNS:
        problems.extend(_check_column(df, col, required=True))

    have_emb = [c for c in embedding_columns() if c in df.columns]
    if require_neural or have_emb:
        missing = [c for c in embedding_columns() if c not in df.columns]
        for name in missing[:5]:
            problems.append(f"missing column: {name}")
        if len(missing) > 5:
            problems.append(f"... and {len(missing) - 5} more embedding columns")
    for col in NEURAL_COLUMNS:
        problems.extend(_check_column(df, col, required=require_neural))

    if "post_id" in df.columns and df["post_id"].duplicated().any():
        dupes = df.loc[df["post_id"].duplicated(), "post_id"].head(3).tolist()
        problems.append(f"duplicate post_id values: {dupes}")
    return problems


def _check_column(df: pd.DataFrame, spec: dict, required: bool) -> list[str]:
    name = spec["name"]
    if name not in df.columns:
        return [f"missing column: {name}"] if required else []
    series = df[name]
    if not _DTYPE_CHECKS[spec["dtype"]](series):
        return [f"column {name}: expected {spec['dtype']}, got {series.dtype}"]
    problems = []
    if spec["dtype"] in ("int", "float"):
        values = series.to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        if "min" in spec and finite.size and finite.min() < spec["min"]:
            row = int(np.argmin(values))
            problems.append(
                f"column {name}: value {finite.min()} below {spec['min']} (row {row})"
            )
        if "max" in spec and finite.size and finite.max() > spec["max"]:
            row = int(np.argmax(values))
            problems.append(
                f"column {name}: value {finite.max()} above {spec['max']} (row {row})"
            )
    return problems


def load_table(path, require_neural: bool = False) -> pd.DataFrame:
    """Load the canonical CSV and validate it; raises SchemaError on problems."""
    df = pd.read_csv(
        path,
        dtype={"post_id": str, "subreddit": str, "author_id": str},
        keep_default_na=False,
        na_values=[""],
        comment="#",
    )
    for col in ("title", "body"):
        if col in df.columns:
            df[col] = df[col].fillna("").astype(str)
    if "removed" in df.columns and not pd.api.types.is_bool_dtype(df["removed"]):
        df["removed"] = (
            df["removed"].replace({"True": 1, "False": 0, "true": 1, "false": 0}).astype(int).astype(bool)
        )
    problems = validate_frame(df, require_neural=require_neural)
    if problems:
        raise SchemaError(problems)
    return df
