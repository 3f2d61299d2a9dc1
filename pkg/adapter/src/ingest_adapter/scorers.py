"""Pluggable text scorers behind a uniform batch interface.

Every scorer declares the columns it produces, a name and a version that
the adapter manifest records, and a `score(texts) -> {column: ndarray}`
batch method. License-restricted or heavyweight models can be swapped for
the deterministic fallback scorers without changing the output schema;
the manifest records whichever implementation actually ran.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

EMBEDDING_DIM = 384

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class HashedEmbedder:
    """Deterministic hashing-trick sentence embedding (no model download).

    Each token hashes to a (dimension, sign) pair; the post vector is the
    L2-normalized signed bag of tokens. Not semantically meaningful, but
    stable, fast, and schema-identical to a transformer embedding.
    """

    name = "hashed-bow"
    version = "1"
    columns = [f"emb_{i:03d}" for i in range(EMBEDDING_DIM)]

    def score(self, texts: list[str]) -> dict[str, np.ndarray]:
        out = np.zeros((len(texts), EMBEDDING_DIM))
        for i, text in enumerate(texts):
            for tok in _tokenize(text):
                digest = hashlib.sha1(tok.encode()).digest()
                idx = int.from_bytes(digest[:4], "big") % EMBEDDING_DIM
                sign = 1.0 if digest[4] % 2 else -1.0
                out[i, idx] += sign
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return {c: out[:, j] for j, c in enumerate(self.columns)}


class MiniLMEmbedder:
    """Sentence-transformers all-MiniLM-L6-v2 (384-dim); needs model files."""

    name = "all-MiniLM-L6-v2"
    columns = [f"emb_{i:03d}" for i in range(EMBEDDING_DIM)]

    def __init__(self, batch_size: int = 64):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer("sentence-transformers/all-MiniLM-L6-v2")
        self.version = getattr(self._model, "__version__", "unknown")
        self.batch_size = batch_size

    def score(self, texts: list[str]) -> dict[str, np.ndarray]:
        emb = self._model.encode(
            list(texts), batch_size=self.batch_size, show_progress_bar=False
        )
        emb = np.asarray(emb, dtype=float)
        if emb.shape[1] != EMBEDDING_DIM:
            raise ValueError(f"expected {EMBEDDING_DIM}-dim embeddings, got {emb.shape[1]}")
        return {c: emb[:, j] for j, c in enumerate(self.columns)}


TOXIC_WORDS = {
    "idiot", "stupid", "hate", "dumb", "trash", "garbage", "moron", "shut",
    "loser", "pathetic", "awful", "terrible", "worst", "ugly", "kill",
}
POSITIVE_WORDS = {
    "good", "great", "love", "happy", "awesome", "wonderful", "nice", "best",
    "thanks", "glad", "excellent", "amazing", "enjoy", "beautiful",
}
NEGATIVE_WORDS = {
    "bad", "sad", "hate", "awful", "terrible", "worst", "angry", "annoying",
    "horrible", "disappointing", "ugly", "broken", "wrong",
}
POLITE_MARKERS = {
    "please", "thanks", "thank", "sorry", "appreciate", "welcome", "kindly",
    "regards", "grateful",
}
SUPPORT_MARKERS = {
    "support", "help", "there", "hope", "hang", "proud", "encourage", "care",
    "stay", "strong",
}
AGREEMENT_MARKERS = {
    "agree", "agreed", "yes", "exactly", "right", "true", "correct", "indeed",
    "absolutely",
}


class LexiconToxicity:
    name = "lexicon-toxicity"
    version = "1"
    columns = ["toxicity"]

    def score(self, texts):
        values = np.zeros(len(texts))
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if tokens:
                hits = sum(1 for t in tokens if t in TOXIC_WORDS)
                values[i] = 1.0 - np.exp(-4.0 * hits / len(tokens))
        return {"toxicity": np.clip(values, 0.0, 1.0)}


class LexiconSentiment:
    """VADER-style normalized valence: (pos - neg) / sqrt(x^2 + 15)."""

    name = "lexicon-sentiment"
    version = "1"
    columns = ["sentiment"]

    def score(self, texts):
        values = np.zeros(len(texts))
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            raw = sum(1 for t in tokens if t in POSITIVE_WORDS) - sum(
                1 for t in tokens if t in NEGATIVE_WORDS
            )
            values[i] = raw / np.sqrt(raw * raw + 15.0)
        return {"sentiment": np.clip(values, -1.0, 1.0)}


class MarkerPoliteness:
    name = "marker-politeness"
    version = "1"
    columns = ["politeness"]

    def score(self, texts):
        values = np.zeros(len(texts))
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if tokens:
                hits = sum(1 for t in tokens if t in POLITE_MARKERS)
                values[i] = 1.0 - np.exp(-6.0 * hits / len(tokens))
        return {"politeness": np.clip(values, 0.0, 1.0)}


class MarkerProsociality:
    """Supportiveness, agreement, and politeness scores in [0, 1]."""

    name = "marker-prosociality"
    version = "1"
    columns = ["prosocial_support", "prosocial_agreement", "prosocial_politeness"]

    def score(self, texts):
        support = np.zeros(len(texts))
        agreement = np.zeros(len(texts))
        politeness = np.zeros(len(texts))
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if not tokens:
                continue
            n = len(tokens)
            support[i] = 1.0 - np.exp(-6.0 * sum(t in SUPPORT_MARKERS for t in tokens) / n)
            agreement[i] = 1.0 - np.exp(-6.0 * sum(t in AGREEMENT_MARKERS for t in tokens) / n)
            politeness[i] = 1.0 - np.exp(-6.0 * sum(t in POLITE_MARKERS for t in tokens) / n)
        return {
            "prosocial_support": np.clip(support, 0.0, 1.0),
            "prosocial_agreement": np.clip(agreement, 0.0, 1.0),
            "prosocial_politeness": np.clip(politeness, 0.0, 1.0),
        }


EMBEDDERS = {"hashed": HashedEmbedder, "minilm": MiniLMEmbedder}


def default_scorers(embedder: str = "hashed") -> list:
    """The standard scorer stack; `embedder` picks the embedding backend."""
    return [
        EMBEDDERS[embedder](),
        LexiconToxicity(),
        LexiconSentiment(),
        MarkerPoliteness(),
        MarkerProsociality(),
    ]
