"""Residual umbrella transform: replace each umbrella lexicon column by its
OLS residual on its child columns.

An umbrella category is highly collinear with the sum of its children; its
residual keeps only the umbrella-specific signal, which makes downstream
coefficients stable and interpretable. The residual column is named
``other_<umbrella>`` and is empirically orthogonal to every child on the
fitting sample.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import InsufficientRows
from .lexicon import LexiconHierarchy

log = logging.getLogger(__name__)


@dataclass
class ResidualFit:
    umbrella: str
    intercept: float
    weights: dict[str, float]
    residual_column: str
    dropped_children: list[str]


def _ols(y: np.ndarray, X: np.ndarray) -> tuple[float, np.ndarray]:
    design = np.column_stack([np.ones(len(y)), X])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0]), coef[1:]


class ResidualUmbrellas(BaseEstimator, TransformerMixin):
    """Fit/transform over a DataFrame of lexicon percentage columns.

    Parameters
    ----------
    lexicon : hierarchy whose umbrella_children mapping names the columns.
    prefix : column-name prefix shared by category columns (e.g. "lex_").
    """

    def __init__(self, lexicon: LexiconHierarchy, prefix: str = "lex_"):
        self.lexicon = lexicon
        self.prefix = prefix

    def fit(self, X: pd.DataFrame, y=None):
        self.fits_ = []
        for umbrella, children in self.lexicon.umbrella_children.items():
            ucol = self.prefix + umbrella
            ccols = [self.prefix + c for c in children if self.prefix + c in X.columns]
            if ucol not in X.columns or not ccols:
                continue
            if len(X) < len(ccols) + 2:
                raise InsufficientRows(
                    f"umbrella {umbrella}: need >= {len(ccols) + 2} rows, have {len(X)}"
                )
            kept, dropped = self._prune_collinear(X[ccols].to_numpy(float), ccols)
            if dropped:
                log.warning("umbrella %s: dropped collinear children %s", umbrella, dropped)
            intercept, w = _ols(X[ucol].to_numpy(float), X[kept].to_numpy(float))
            self.fits_.append(
                ResidualFit(
                    umbrella=umbrella,
                    intercept=intercept,
                    weights=dict(zip(kept, w)),
                    residual_column=f"other_{umbrella}",
                    dropped_children=dropped,
                )
            )
        return self

    @staticmethod
    def _prune_collinear(C: np.ndarray, names: list[str], tol: float = 1e-10):
        centered = C - C.mean(axis=0)
        gram = centered.T @ centered
        from scipy.linalg import qr

        _, r, piv = qr(gram, pivoting=True)
        diag = np.abs(np.diag(r))
        scale = diag[0] if diag.size and diag[0] > 0 else 1.0
        keep_idx = sorted(piv[i] for i in range(len(names)) if diag[i] > tol * scale)
        kept = [names[i] for i in keep_idx]
        dropped = [n for n in names if n not in kept]
        return kept, dropped

    def transform(self, X: pd.DataFrame) -> pd.DataFrame:
        out = X.copy()
        for f in self.fits_:
            ucol = self.prefix + f.umbrella
            pred = f.intercept + sum(
                w * out[c].to_numpy(float) for c, w in f.weights.items()
            )
            out[f.residual_column] = out[ucol].to_numpy(float) - pred
            out.drop(columns=[ucol], inplace=True)
        return out
