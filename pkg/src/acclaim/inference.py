"""Multiple-testing control and effect reporting.

Benjamini-Hochberg runs separately within each term family (main language
effects, newcomer interactions, and the Z/NEW covariates), mirroring the
estimation model's structure. Effect tables carry odds ratios per 1-SD
feature increase, 95% CIs from robust SEs, and q-tier stars.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from scipy.stats import norm, t as t_dist

from .errors import InvalidPValue
from .glm import FitResult

log = logging.getLogger(__name__)

Z95 = 1.96
TIERS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))

#: families that receive q-values in the effect report
TESTED_FAMILIES = ("main", "interaction", "covariate")


def bh_fdr(pvalues) -> np.ndarray:
    """Step-up q-values: q_(i) = min_{j>=i} p_(j) * m / j, capped at 1."""
    p = np.asarray(pvalues, dtype=float)
    if p.size and (np.nanmin(p) < 0 or np.nanmax(p) > 1):
        raise InvalidPValue("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q = np.empty(m)
    q[order] = np.minimum(q_sorted, 1.0)
    return q


def significance_tier(q: float) -> str:
    for cut, stars in TIERS:
        if q < cut:
            return stars
    return "ns"


def effect_tables(fit: FitResult, robust_cov: np.ndarray) -> pd.DataFrame:
    """Per-term effect report with family-wise BH q-values.

    When the covariance is cluster-robust, p-values use a t reference with
    G-1 degrees of freedom (the standard few-cluster correction); CIs keep
    the 1.96 normal quantile. Terms in the `fe` and `intercept` families
    are reported with beta/SE only (no q; the fixed effects are nuisance
    absorbers).
    """
    if not fit.converged:
        raise ValueError("effect tables need a converged fit")
    se = np.sqrt(np.clip(np.diag(robust_cov), 0.0, None))
    beta = fit.coefficients
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.nan)
    if fit.robust_df is not None:
        p = 2.0 * t_dist.sf(np.abs(z), df=fit.robust_df)
    else:
        p = 2.0 * norm.sf(np.abs(z))

    rows = pd.DataFrame(
        {
            "term": fit.columns,
            "family": [fit.families.get(c, "other") for c in fit.columns],
            "beta": beta,
            "se_robust": se,
            "z": z,
            "p": p,
        }
    )
    rows["q"] = np.nan
    for family in TESTED_FAMILIES:
        mask = (rows["family"] == family) & np.isfinite(rows["p"])
        if mask.any():
            rows.loc[mask, "q"] = bh_fdr(rows.loc[mask, "p"].to_numpy())
    with np.errstate(over="ignore"):
        rows["odds_ratio"] = np.exp(rows["beta"])
        rows["ci_low"] = np.exp(rows["beta"] - Z95 * rows["se_robust"])
        rows["ci_high"] = np.exp(rows["beta"] + Z95 * rows["se_robust"])
    rows["tier"] = [
        significance_tier(q) if np.isfinite(q) else ""
        for q in rows["q"]
    ]
    return rows


def newcomer_composition(report: pd.DataFrame, alpha: float = 0.05,
                         only_significant: bool = True) -> pd.DataFrame:
    """Veteran/newcomer odds-ratio table: OR_new = OR_vet * OR_interaction.

    Rows are features with an interaction term; when `only_significant`,
    keeps interactions with q < alpha (the paper's table convention).
    Features whose main-effect counterpart was dropped are omitted with a
    log entry. `main_significant` lets the renderer dash out veteran and
    newcomer columns for non-significant main effects.
    """
    main = report[report["family"] == "main"].set_index("term")
    inter = report[report["family"] == "interaction"]
    rows = []
    for r in inter.itertuples():
        feature = r.term[: -len(":new")] if r.term.endswith(":new") else r.term
        if feature not in main.index:
            log.info("interaction %s has no main-effect counterpart; omitted", r.term)
            continue
        if only_significant and not (np.isfinite(r.q) and r.q < alpha):
            continue
        m = main.loc[feature]
        rows.append(
            {
                "feature": feature,
                "or_interaction": r.odds_ratio,
                "q_interaction": r.q,
                "tier_interaction": r.tier,
                "or_veteran": m["odds_ratio"],
                "q_main": m["q"],
                "main_significant": bool(np.isfinite(m["q"]) and m["q"] < alpha),
                "or_newcomer": m["odds_ratio"] * r.odds_ratio,
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "feature", "or_interaction", "q_interaction", "tier_interaction",
            "or_veteran", "q_main", "main_significant", "or_newcomer",
        ],
    )
