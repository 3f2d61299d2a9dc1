"""Shared fixtures: canonical frame builders and small synthetic corpora."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from acclaim.corpus import SECONDS_PER_DAY, Windows

OBS_START = 1588291200  # 2020-05-01T00:00:00Z


def make_posts(rows: list[dict]) -> pd.DataFrame:
    """Canonical frame from partial dicts; missing fields get defaults."""
    defaults = {
        "subreddit": "s1",
        "author_id": "a1",
        "created_utc": OBS_START + 20 * SECONDS_PER_DAY,
        "author_created_utc": OBS_START - 400 * SECONDS_PER_DAY,
        "title": "a title",
        "body": "a body",
        "score": 1,
        "n_awards": 0,
        "n_gold": 0,
        "removed": False,
    }
    records = []
    for i, row in enumerate(rows):
        rec = dict(defaults)
        rec["post_id"] = f"p{i:05d}"
        rec.update(row)
        records.append(rec)
    return pd.DataFrame.from_records(records)


@pytest.fixture
def windows() -> Windows:
    return Windows(OBS_START, OBS_START + 45 * SECONDS_PER_DAY, baseline_days=14)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
