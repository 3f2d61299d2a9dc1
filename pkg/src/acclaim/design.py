"""Design matrix assembly for the fixed-effects logistic model.

Dense blocks for the language features, their newcomer interactions, the
baseline covariates and the newcomer indicator; sparse one-hot blocks for
the three fixed-effect families (subreddit x risk-decile, calendar day,
hour of day) with one reference level dropped per family. Column order is
deterministic: intercept, A, A x NEW, Z, NEW, mu, delta, eta.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .corpus import SECONDS_PER_DAY

log = logging.getLogger(__name__)


@dataclass
class ModelSpec:
    outcome: str
    language_terms: list[str]
    covariate_terms: list[str]
    include_interactions: bool = True
    include_intercept: bool = True


@dataclass
class Design:
    X: sp.csr_matrix
    y: np.ndarray
    columns: list[str]
    families: dict[str, str]
    penalized: np.ndarray
    clusters: np.ndarray
    dropped_constant: list[str] = field(default_factory=list)
    separation_levels: list[str] = field(default_factory=list)


def _one_hot(levels: pd.Series, prefix: str) -> tuple[sp.csr_matrix, list[str]]:
    """One-hot with the first (sorted) level dropped as reference."""
    cats = sorted(levels.unique())
    names = [f"{prefix}[{c}]" for c in cats[1:]]
    if not names:
        return sp.csr_matrix((len(levels), 0)), []
    code = {c: i for i, c in enumerate(cats)}
    codes = levels.map(code).to_numpy()
    keep = codes > 0
    rows = np.flatnonzero(keep)
    cols = codes[keep] - 1
    data = np.ones(len(rows))
    mat = sp.csr_matrix((data, (rows, cols)), shape=(len(levels), len(names)))
    return mat, names


def build_design(frame: pd.DataFrame, spec: ModelSpec) -> Design:
    """Build the sparse design and response from the retained analysis rows.

    `frame` must carry the (already standardized) language and covariate
    columns plus is_new, subreddit, decile, created_utc and y. FE levels
    with an all-identical outcome are flagged (perfect separation) but
    their rows and columns are kept; the penalized fit handles them.
    """
    n = len(frame)
    y = frame["y"].to_numpy(dtype=float)

    blocks: list[sp.csr_matrix] = []
    columns: list[str] = []
    families: dict[str, str] = {}

    def add_dense(matrix: np.ndarray, names: list[str], family: str):
        if matrix.shape[1]:
            blocks.append(sp.csr_matrix(matrix))
            columns.extend(names)
            families.update({c: family for c in names})

    if spec.include_intercept:
        add_dense(np.ones((n, 1)), ["intercept"], "intercept")

    A = frame[spec.language_terms].to_numpy(dtype=float)
    add_dense(A, list(spec.language_terms), "main")

    if spec.include_interactions:
        new = frame["is_new"].to_numpy(dtype=float)
        add_dense(A * new[:, None],
                  [f"{c}:new" for c in spec.language_terms], "interaction")

    add_dense(frame[spec.covariate_terms].to_numpy(dtype=float),
              list(spec.covariate_terms), "covariate")
    add_dense(frame["is_new"].to_numpy(dtype=float)[:, None], ["new"], "covariate")

    cell = frame["subreddit"].astype(str) + "#d" + frame["decile"].astype(str)
    day = (frame["created_utc"] // SECONDS_PER_DAY).astype(int)
    hour = ((frame["created_utc"] % SECONDS_PER_DAY) // 3600).astype(int)
    for series, prefix in ((cell, "mu"), (day, "day"), (hour, "hour")):
        mat, names = _one_hot(series, prefix)
        if names:
            blocks.append(mat)
            columns.extend(names)
            for c in names:
                families[c] = "fe"

    X = sp.hstack(blocks, format="csc")

    # drop constant columns (all-zero interactions when nobody is new, etc.)
    col_max = X.max(axis=0).toarray().ravel()
    col_min = X.min(axis=0).toarray().ravel()
    constant = (col_max == col_min)
    if spec.include_intercept:
        constant[0] = False
    dropped = [c for c, bad in zip(columns, constant) if bad]
    if dropped:
        log.info("dropping %d constant design columns: %s", len(dropped), dropped[:8])
        keep = ~constant
        X = X[:, np.flatnonzero(keep)]
        columns = [c for c, ok in zip(columns, keep) if ok]
    families = {c: families[c] for c in columns}

    separation = []
    for series, prefix in ((cell, "mu"), (day, "day"), (hour, "hour")):
        stats = pd.Series(y).groupby(series.to_numpy()).agg(["min", "max"])
        for level, row in stats.iterrows():
            if row["min"] == row["max"]:
                separation.append(f"{prefix}[{level}]")
    if separation:
        log.warning("perfect-separation flag: %d FE levels with identical outcome",
                    len(separation))

    penalized = np.array(
        [families[c] in ("main", "interaction", "covariate") for c in columns]
    )
    return Design(
        X=X.tocsr(),
        y=y,
        columns=columns,
        families=families,
        penalized=penalized,
        clusters=frame["subreddit"].to_numpy(),
        dropped_constant=dropped,
        separation_levels=separation,
    )
