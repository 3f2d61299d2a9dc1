"""Semantic style: PCA of sentence embeddings, component scores, exemplars."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import InsufficientRows, ShapeError


class SemanticStylePca(BaseEstimator, TransformerMixin):
    """PCA by SVD of the mean-centered embedding matrix.

    Components are orthonormal with a deterministic sign convention (the
    largest-magnitude loading of each component is positive). Scores are
    mean-centered projections.
    """

    def __init__(self, n_components: int = 10):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        if n <= self.n_components:
            raise InsufficientRows(
                f"need more than {self.n_components} rows, have {n}"
            )
        self.mean_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        total = float((s ** 2).sum())
        k = self.n_components
        components = vt[:k]
        # sign convention: flip so each component's max-|loading| is positive
        signs = np.sign(components[np.arange(k), np.abs(components).argmax(axis=1)])
        signs[signs == 0] = 1.0
        self.components_ = components * signs[:, None]
        self.explained_variance_ratio_ = (s[:k] ** 2) / total if total > 0 else np.zeros(k)
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mean_.shape[0]:
            raise ShapeError(
                f"embedding dim {X.shape[1]} != fitted dim {self.mean_.shape[0]}"
            )
        return (X - self.mean_) @ self.components_.T

    # alias matching the domain vocabulary
    pc_scores = transform


def export_exemplars(scores, post_ids, k: int = 30):
    """Per-component top-k and bottom-k post ids by score.

    Ties are broken by post_id (lexicographically smaller id wins on both
    boundaries). When n < 2k, k is reduced to floor(n/2) and the output is
    flagged.
    """
    scores = np.asarray(scores, dtype=float)
    ids = np.asarray(post_ids, dtype=object)
    n, n_pc = scores.shape
    reduced = False
    if n < 2 * k:
        k = n // 2
        reduced = True
    out = {"k": k, "reduced": reduced, "components": []}
    order_ids = np.argsort(ids, kind="stable")
    for j in range(n_pc):
        col = scores[:, j]
        asc = order_ids[np.argsort(col[order_ids], kind="stable")]
        desc = order_ids[np.argsort(-col[order_ids], kind="stable")]
        out["components"].append(
            {
                "component": j + 1,
                "bottom": [str(ids[i]) for i in asc[:k]],
                "top": [str(ids[i]) for i in desc[:k]],
            }
        )
    return out
