"""Latent topic mixtures via collapsed Gibbs sampling.

Symmetric Dirichlet priors (document side 50/K, word side 0.01), a fixed
sweep budget, and document-topic proportions averaged over the final
sweeps. The token-level sampler runs in a numba kernel with an inline
xorshift64* generator, so results are bit-reproducible for a given seed
on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import InsufficientRows


@dataclass
class TopicMixture:
    proportions: np.ndarray
    clr: np.ndarray | None
    epsilon: float
    dropped_index: int


@njit(cache=True)
def _gibbs_kernel(tokens, doc_of, doc_len, n_docs, vocab_size, n_topics,
                  alpha, beta, n_sweeps, n_average, seed):
    n_tokens = tokens.shape[0]
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, vocab_size), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    z = np.zeros(n_tokens, dtype=np.int64)
    probs = np.zeros(n_topics, dtype=np.float64)
    theta_sum = np.zeros((n_docs, n_topics), dtype=np.float64)

    state = np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15)
    if state == np.uint64(0):
        state = np.uint64(0x106689D45497FDB5)

    # xorshift64* inline; u in [0, 1)
    for t in range(n_tokens):
        state ^= state >> np.uint64(12)
        state ^= state << np.uint64(25)
        state ^= state >> np.uint64(27)
        r = state * np.uint64(0x2545F4914F6CDD1D)
        u = (r >> np.uint64(11)) * (1.0 / 9007199254740992.0)
        k = int(u * n_topics)
        if k >= n_topics:
            k = n_topics - 1
        z[t] = k
        n_dk[doc_of[t], k] += 1
        n_kw[k, tokens[t]] += 1
        n_k[k] += 1

    vbeta = vocab_size * beta
    for sweep in range(n_sweeps):
        for t in range(n_tokens):
            d = doc_of[t]
            w = tokens[t]
            k = z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1

            total = 0.0
            for j in range(n_topics):
                p = (n_dk[d, j] + alpha) * (n_kw[j, w] + beta) / (n_k[j] + vbeta)
                total += p
                probs[j] = total

            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            r = state * np.uint64(0x2545F4914F6CDD1D)
            u = (r >> np.uint64(11)) * (1.0 / 9007199254740992.0) * total

            k = n_topics - 1
            for j in range(n_topics):
                if u < probs[j]:
                    k = j
                    break
            z[t] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1

        if sweep >= n_sweeps - n_average:
            for d in range(n_docs):
                denom = doc_len[d] + n_topics * alpha
                for j in range(n_topics):
                    theta_sum[d, j] += (n_dk[d, j] + alpha) / denom

    return theta_sum / n_average


class LatentTopicModel(BaseEstimator, TransformerMixin):
    """Collapsed-Gibbs LDA producing per-document topic proportions.

    Documents with no tokens get uniform proportions and are flagged in
    ``empty_docs_``.
    """

    def __init__(self, n_topics: int = 10, alpha: float | None = None,
                 beta: float = 0.01, n_sweeps: int = 1000,
                 n_average: int = 100, seed: int = 0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_sweeps = n_sweeps
        self.n_average = n_average
        self.seed = seed

    def fit(self, docs: list[list[str]], y=None):
        if len(docs) < self.n_topics:
            raise InsufficientRows(
                f"need >= {self.n_topics} documents, have {len(docs)}"
            )
        vocab = sorted({w for doc in docs for w in doc})
        if not vocab:
            raise InsufficientRows("empty vocabulary")
        self.vocab_ = vocab
        word_id = {w: i for i, w in enumerate(vocab)}

        self.empty_docs_ = [i for i, doc in enumerate(docs) if len(doc) == 0]
        tokens, doc_of = [], []
        for i, doc in enumerate(docs):
            for w in doc:
                tokens.append(word_id[w])
                doc_of.append(i)
        doc_len = np.array([len(doc) for doc in docs], dtype=np.int64)

        alpha = self.alpha if self.alpha is not None else 50.0 / self.n_topics
        n_average = min(self.n_average, self.n_sweeps)
        theta = _gibbs_kernel(
            np.array(tokens, dtype=np.int64),
            np.array(doc_of, dtype=np.int64),
            doc_len,
            len(docs),
            len(vocab),
            self.n_topics,
            float(alpha),
            float(self.beta),
            int(self.n_sweeps),
            int(n_average),
            int(self.seed),
        )
        for i in self.empty_docs_:
            theta[i] = 1.0 / self.n_topics
        self.doc_topic_ = theta
        return self

    def transform(self, docs=None) -> np.ndarray:
        """Proportions for the fitted corpus (rows sum to 1)."""
        return self.doc_topic_

    def mixtures(self, epsilon: float = 1e-6, dropped_index: int | None = None):
        from .compositional import clr_transform

        drop = self.n_topics - 1 if dropped_index is None else dropped_index
        clr = clr_transform(self.doc_topic_, epsilon)
        return [
            TopicMixture(proportions=self.doc_topic_[i], clr=clr[i],
                         epsilon=epsilon, dropped_index=drop)
            for i in range(len(self.doc_topic_))
        ]
