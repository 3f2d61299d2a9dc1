"""Column standardization with an explicit fitting population.

Population SD (divide by n) throughout; the fitted parameters let the same
scaling be applied to rows outside the fitting population (e.g. a test
split scaled by train-split parameters). Constant columns are dropped and
recorded, never divided by zero.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import NoVaryingColumns


class ColumnStandardizer(BaseEstimator, TransformerMixin):
    def __init__(self, columns: list[str] | None = None):
        self.columns = columns

    def fit(self, X: pd.DataFrame, y=None):
        cols = self.columns if self.columns is not None else list(X.columns)
        self.params_ = {}
        self.constant_columns_ = []
        for c in cols:
            values = X[c].to_numpy(dtype=float)
            mean = float(values.mean())
            sd = float(values.std(ddof=0))
            if sd == 0.0 or not np.isfinite(sd):
                self.constant_columns_.append(c)
            else:
                self.params_[c] = (mean, sd)
        if cols and not self.params_:
            raise NoVaryingColumns("every column is constant on the population")
        return self

    def transform(self, X: pd.DataFrame) -> pd.DataFrame:
        out = X.copy()
        for c, (mean, sd) in self.params_.items():
            out[c] = (out[c].to_numpy(dtype=float) - mean) / sd
        drop = [c for c in self.constant_columns_ if c in out.columns]
        if drop:
            out = out.drop(columns=drop)
        return out
