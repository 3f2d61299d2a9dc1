"""Gradient-boosted decision trees with logistic loss.

Friedman-style boosting: the score starts at the prior log-odds, each
round fits a depth-limited regression tree to the current gradient with a
second-order (Newton) leaf step, and the learning rate shrinks each
update. No row or column subsampling, so training is deterministic
without any RNG; the seed is recorded as metadata only.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import DegenerateLabels
from .trees import RegressionTree, bin_features, build_tree, quantile_bin_edges

SERIAL_VERSION = 1


def _sigmoid(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


class GradientBoostedClassifier(BaseEstimator, ClassifierMixin):
    def __init__(self, n_rounds: int = 200, learning_rate: float = 0.1,
                 max_depth: int = 6, min_child: int = 1, max_bins: int = 64,
                 seed: int = 0, scope: str = "global"):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_child = min_child
        self.max_bins = max_bins
        self.seed = seed
        self.scope = scope

    def fit(self, X, y, feature_names: list[str] | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        pbar = y.mean()
        if pbar <= 0.0 or pbar >= 1.0:
            raise DegenerateLabels("training labels contain a single class")
        self.feature_names_ = (
            list(feature_names) if feature_names is not None
            else [f"f{i}" for i in range(X.shape[1])]
        )
        self.base_score_ = float(np.log(pbar / (1.0 - pbar)))
        self.edges_ = quantile_bin_edges(X, self.max_bins)
        codes = bin_features(X, self.edges_)

        self.trees_: list[RegressionTree] = []
        self.train_loss_: list[float] = []
        F = np.full(len(y), self.base_score_)
        self.train_loss_.append(self._loss(y, F))
        for _ in range(self.n_rounds):
            p = _sigmoid(F)
            grad = y - p
            hess = np.maximum(p * (1.0 - p), 1e-12)
            tree = build_tree(codes, self.edges_, grad, hess,
                              max_depth=self.max_depth, min_child=self.min_child)
            self.trees_.append(tree)
            F = F + self.learning_rate * tree.predict(X)
            self.train_loss_.append(self._loss(y, F))
        return self

    @staticmethod
    def _loss(y, F) -> float:
        return float(np.mean(np.logaddexp(0.0, F) - y * F))

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            F += self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    # versioned text serialization: manifest + trees as node arrays
    def to_json(self) -> str:
        payload = {
            "format": "acclaim-gbt",
            "version": SERIAL_VERSION,
            "manifest": self.feature_names_,
            "base_score": self.base_score_,
            "metadata": {
                "n_rounds": self.n_rounds,
                "learning_rate": self.learning_rate,
                "max_depth": self.max_depth,
                "min_child": self.min_child,
                "max_bins": self.max_bins,
                "seed": self.seed,
                "scope": self.scope,
            },
            "trees": [t.to_arrays() for t in self.trees_],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GradientBoostedClassifier":
        payload = json.loads(text)
        if "model" in payload:  # manifest-referencing wrapper
            payload = payload["model"]
        if payload.get("format") != "acclaim-gbt":
            raise ValueError("not a serialized boosted model")
        if payload.get("version") != SERIAL_VERSION:
            raise ValueError(f"unsupported model version {payload.get('version')}")
        meta = payload["metadata"]
        model = cls(
            n_rounds=meta["n_rounds"], learning_rate=meta["learning_rate"],
            max_depth=meta["max_depth"], min_child=meta["min_child"],
            max_bins=meta["max_bins"], seed=meta["seed"], scope=meta["scope"],
        )
        model.feature_names_ = payload["manifest"]
        model.base_score_ = payload["base_score"]
        model.trees_ = [RegressionTree.from_arrays(t) for t in payload["trees"]]
        model.train_loss_ = []
        return model
