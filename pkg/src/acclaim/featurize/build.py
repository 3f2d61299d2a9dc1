"""Assemble the raw pre-feedback feature table from a canonical frame.

Produces lexicon category percentages, surface markers (readability,
question ratio), neural score columns promoted into the linguistic family,
CLR-transformed topic mixtures, and semantic principal-component scores.
Umbrella residualization and z-scoring happen later, on the population
each consumer declares (the retained analysis set for estimation, the
training split for prediction).
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from .. import schema
from ..corpus import Z_COLUMNS, post_text
from ..table import FeatureTable
from .compositional import clr_transform
from .lexicon import LexiconHierarchy
from .semantic import SemanticStylePca
from .text import count_syllables, split_sentences, tokenize
from .topics import LatentTopicModel

log = logging.getLogger(__name__)

NEURAL_A_COLUMNS = ["sentiment", "politeness", "toxicity"]

META_COLUMNS = ["post_id", "subreddit", "author_id", "created_utc", "is_new", "text"]
OUTCOME_COLUMNS = ["score", "n_awards", "n_gold", "removed", "score_quartile",
                   "high_score", "awarded", "gilded", "month"]


def build_feature_table(
    df: pd.DataFrame,
    lexicon: LexiconHierarchy,
    n_topics: int = 10,
    lda_sweeps: int = 1000,
    lda_average: int = 100,
    clr_epsilon: float = 1e-6,
    n_components: int = 10,
    seed: int = 0,
    use_lda: bool = True,
    use_pca: bool = True,
) -> tuple[FeatureTable, dict]:
    """Compute all raw A features for the rows of `df` (candidate posts).

    Returns the feature table and a dict of fitted artifacts (topic model,
    PCA model, rows flagged for empty text).
    """
    texts = post_text(df).tolist()
    docs = [tokenize(t) for t in texts]
    empty_rows = [i for i, d in enumerate(docs) if not d]
    if empty_rows:
        log.warning("%d posts have no tokens; surface features set to 0", len(empty_rows))

    n = len(df)
    cat_names = lexicon.names
    cat_idx = {c: j for j, c in enumerate(cat_names)}
    lex = np.zeros((n, len(cat_names)))
    flesch = np.zeros(n)
    qratio = np.zeros(n)
    syllables: dict[str, int] = {}

    for i, (text, tokens) in enumerate(zip(texts, docs)):
        if not tokens:
            continue
        for tok in tokens:
            for cat in lexicon.match(tok):
                lex[i, cat_idx[cat]] += 1
        lex[i] *= 100.0 / len(tokens)
        sentences = split_sentences(text)
        n_sent = max(len(sentences), 1)
        n_syl = 0
        for tok in tokens:
            s = syllables.get(tok)
            if s is None:
                s = count_syllables(tok)
                syllables[tok] = s
            n_syl += s
        flesch[i] = 206.835 - 1.015 * (len(tokens) / n_sent) - 84.6 * (n_syl / len(tokens))
        qratio[i] = sum(1 for _, p in sentences if p == "?") / n_sent

    out = df.reset_index(drop=True).copy()
    out["text"] = texts
    table = FeatureTable(out)
    for c in META_COLUMNS:
        if c in out.columns:
            table.family[c] = "meta"
    for c in OUTCOME_COLUMNS:
        if c in out.columns:
            table.family[c] = "outcome"
    for c in Z_COLUMNS:
        if c in out.columns:
            table.family[c] = "Z"
            table.provenance[c] = "engineered"
    for c in schema.NEURAL_SCORE_NAMES:
        if c in out.columns:
            table.family[c] = "neural"

    for j, cat in enumerate(cat_names):
        table.set_column(f"lex_{cat}", lex[:, j], family="A", provenance="engineered")
    table.set_column("flesch", flesch, family="A", provenance="engineered")
    table.set_column("question_ratio", qratio, family="A", provenance="engineered")
    for c in NEURAL_A_COLUMNS:
        if c in out.columns:
            table.family[c] = "A"
            table.provenance[c] = "raw"

    artifacts: dict = {"empty_text_rows": empty_rows}

    if use_lda:
        lda = LatentTopicModel(
            n_topics=n_topics, n_sweeps=lda_sweeps, n_average=lda_average, seed=seed
        ).fit(docs)
        clr = clr_transform(lda.doc_topic_, clr_epsilon)
        # drop the last topic's coordinate: CLR rows sum to zero
        for k in range(n_topics - 1):
            table.set_column(
                f"topic_clr_{k + 1}", clr[:, k], family="A", provenance="engineered"
            )
        artifacts["lda"] = lda

    emb_cols = [c for c in schema.embedding_columns() if c in out.columns]
    if use_pca and len(emb_cols) == schema.EMBEDDING_DIM:
        X = out[emb_cols].to_numpy(dtype=float)
        pca = SemanticStylePca(n_components=n_components).fit(X)
        scores = pca.transform(X)
        for k in range(n_components):
            table.set_column(
                f"pc_{k + 1}", scores[:, k], family="A", provenance="engineered"
            )
        artifacts["pca"] = pca
    elif use_pca:
        log.warning("embedding block missing or incomplete; PC features skipped")

    for c in emb_cols:
        table.family[c] = "neural"
    return table, artifacts
