"""Rendering edge cases and table conventions."""

import numpy as np
import pandas as pd

from acclaim.report import render_tables


def _effects(rows):
    return pd.DataFrame(
        rows,
        columns=["outcome", "term", "family", "beta", "se_robust", "z", "p",
                 "q", "odds_ratio", "ci_low", "ci_high", "tier"],
    )


EMPTY_AUC = pd.DataFrame(
    columns=["outcome", "subreddit", "local_auc", "global_auc_on_slice", "delta"]
)
EMPTY_DISTINCT = pd.DataFrame(
    columns=["record_type", "subreddit", "distance", "n_sampled", "group",
             "t", "df", "p", "mean_gain", "mean_loss"]
)


def test_empty_report_renders_header_only():
    md = render_tables(_effects([]), EMPTY_AUC, EMPTY_DISTINCT)
    assert md.startswith("# Effect and evaluation report")
    assert "| Feature |" not in md


def test_significant_row_with_stars_and_arrow():
    effects = _effects(
        [{"outcome": "score", "term": "pc_1", "family": "main", "beta": np.log(1.43),
          "q": 0.0005, "odds_ratio": 1.43, "tier": "***"}]
    )
    md = render_tables(effects, EMPTY_AUC, EMPTY_DISTINCT)
    assert "| pc_1 | 1.43 | *** | ↑↑ |" in md


def test_non_significant_row_uses_dash():
    effects = _effects(
        [{"outcome": "score", "term": "lex_sad", "family": "main", "beta": 0.01,
          "q": 0.6, "odds_ratio": 1.01, "tier": "ns"}]
    )
    md = render_tables(effects, EMPTY_AUC, EMPTY_DISTINCT)
    assert "| lex_sad | 1.01 | - | — |" in md


def test_negative_effect_arrow_down():
    effects = _effects(
        [{"outcome": "score", "term": "question_ratio", "family": "main",
          "beta": np.log(0.71), "q": 0.0004, "odds_ratio": 0.71, "tier": "***"}]
    )
    md = render_tables(effects, EMPTY_AUC, EMPTY_DISTINCT)
    assert "| question_ratio | 0.71 | *** | ↓↓ |" in md


def test_newcomer_table_dashes_for_ns_main():
    effects = _effects(
        [{"outcome": "score", "term": "lex_netspeak", "family": "main",
          "beta": 0.0, "q": 0.7, "odds_ratio": 1.0, "tier": "ns"}]
    )
    newcomers = pd.DataFrame(
        [{"outcome": "score", "feature": "lex_netspeak", "or_interaction": 0.98,
          "q_interaction": 0.03, "tier_interaction": "*", "or_veteran": 1.0,
          "q_main": 0.7, "main_significant": False, "or_newcomer": 0.98}]
    )
    md = render_tables(effects, EMPTY_AUC, EMPTY_DISTINCT, newcomers)
    assert "| lex_netspeak | 0.98 | * | — | — |" in md
