"""Community linguistic distinctiveness from embedding centroids, and the
gain-vs-loss separation test.

Distinctiveness d_s = 1 - cos(mu_s, mu_global) in [0, 2]; the global
centroid averages the pooled union of the per-community samples. Welch's
test uses sample variances (ddof=1), unlike the population-SD convention
used for standardization elsewhere.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import t as t_dist

from .errors import DegenerateCentroid, InsufficientGroup


@dataclass
class CentroidReport:
    centroids: dict[str, np.ndarray]
    global_centroid: np.ndarray
    distances: dict[str, float]
    sample_sizes: dict[str, int]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"subreddit": s, "distance": self.distances[s],
                 "n_sampled": self.sample_sizes[s]}
                for s in sorted(self.distances)
            ],
            columns=["subreddit", "distance", "n_sampled"],
        )


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateCentroid("zero-norm centroid")
    return float(1.0 - (u @ v) / (nu * nv))


def compute_centroids(embeddings: np.ndarray, subreddits, n_sample: int = 2000,
                      seed: int = 0) -> CentroidReport:
    """Per-community centroid of up to `n_sample` sampled rows, global
    centroid over the union of samples, and cosine distances.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    subreddits = np.asarray(subreddits)
    centroids: dict[str, np.ndarray] = {}
    sizes: dict[str, int] = {}
    pooled = []
    for s in sorted(pd.unique(subreddits)):
        rows = np.flatnonzero(subreddits == s)
        if len(rows) > n_sample:
            rng = np.random.default_rng(
                np.random.SeedSequence([seed, zlib.crc32(str(s).encode())])
            )
            rows = np.sort(rng.choice(rows, size=n_sample, replace=False))
        sample = embeddings[rows]
        centroids[str(s)] = sample.mean(axis=0)
        sizes[str(s)] = len(rows)
        pooled.append(sample)
    global_centroid = np.concatenate(pooled, axis=0).mean(axis=0)
    distances = {
        s: cosine_distance(c, global_centroid) for s, c in centroids.items()
    }
    return CentroidReport(
        centroids=centroids,
        global_centroid=global_centroid,
        distances=distances,
        sample_sizes=sizes,
    )


@dataclass
class WelchResult:
    mean_g: float
    mean_l: float
    var_g: float
    var_l: float
    n_g: int
    n_l: int
    t: float
    df: float
    p: float


def welch_t(group_g, group_l) -> WelchResult:
    """Welch's unequal-variance t-test, two-sided p at Satterthwaite df."""
    g = np.asarray(group_g, dtype=float)
    l = np.asarray(group_l, dtype=float)
    if len(g) < 2 or len(l) < 2:
        raise InsufficientGroup("each group needs >= 2 values")
    vg, vl = g.var(ddof=1), l.var(ddof=1)
    ng, nl = len(g), len(l)
    se2 = vg / ng + vl / nl
    if se2 == 0.0:
        t_stat, df, p = 0.0, float(ng + nl - 2), 1.0
    else:
        t_stat = (g.mean() - l.mean()) / np.sqrt(se2)
        df = se2 ** 2 / ((vg / ng) ** 2 / (ng - 1) + (vl / nl) ** 2 / (nl - 1))
        p = float(2.0 * t_dist.sf(abs(t_stat), df))
    return WelchResult(
        mean_g=float(g.mean()), mean_l=float(l.mean()),
        var_g=float(vg), var_l=float(vl), n_g=ng, n_l=nl,
        t=float(t_stat), df=float(df), p=p,
    )
