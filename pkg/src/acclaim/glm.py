"""Penalized logistic regression by IRLS, with cluster-robust covariance.

The log-likelihood carries a small ridge penalty on the designated
(non-FE, non-intercept) coefficients for stability under near-separation.
Newton steps use the exact Hessian with step-halving on likelihood
decrease; convergence is max-norm of the penalized gradient. Collinear
columns are pruned up front by pivoted QR on the column-normalized Gram
matrix (scale-free), with pruned names logged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import MaxIterExceeded, NumericError, SingleClusterError

log = logging.getLogger(__name__)


@dataclass
class FitResult:
    coefficients: np.ndarray
    columns: list[str]
    cov_model: np.ndarray
    converged: bool
    n_iter: int
    trace: list[dict]
    dropped_columns: list[str]
    fitted_p: np.ndarray
    X: sp.csr_matrix
    y: np.ndarray
    penalized: np.ndarray
    ridge: float
    separation_flag: bool = False
    cov_robust: np.ndarray | None = None
    robust_df: int | None = None
    families: dict[str, str] = field(default_factory=dict)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])

    def se(self, name: str, robust: bool = True) -> float:
        cov = self.cov_robust if (robust and self.cov_robust is not None) else self.cov_model
        return float(np.sqrt(cov[self.columns.index(name), self.columns.index(name)]))


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def log_likelihood(X, y, beta, penalized, ridge) -> float:
    eta = X @ beta
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    return ll - 0.5 * ridge * float(np.sum(beta[penalized] ** 2))


def gradient(X, y, beta, penalized, ridge) -> np.ndarray:
    p = _sigmoid(X @ beta)
    g = X.T @ (y - p)
    g = np.asarray(g).ravel()
    g[penalized] -= ridge * beta[penalized]
    return g


def prune_collinear(X: sp.spmatrix, columns: list[str], tol: float = 1e-10):
    """Indices of linearly independent columns via pivoted QR on the Gram."""
    gram = np.asarray((X.T @ X).todense())
    norms = np.sqrt(np.diag(gram))
    norms[norms == 0] = 1.0
    scaled = gram / norms[:, None] / norms[None, :]
    _, r, piv = sla.qr(scaled, pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    keep = sorted(int(piv[i]) for i in range(len(columns)) if diag[i] > tol * scale)
    dropped = [columns[i] for i in range(len(columns)) if i not in set(keep)]
    if dropped:
        log.info("pruned %d collinear columns: %s", len(dropped), dropped[:8])
    return keep, dropped


def _solve_spd(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    jitter = 0.0
    for _ in range(6):
        try:
            c, low = sla.cho_factor(H + jitter * np.eye(len(H)), lower=True)
            return sla.cho_solve((c, low), b)
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-12)
    return np.linalg.lstsq(H, b, rcond=None)[0]


def fit_logit(
    X: sp.spmatrix,
    y: np.ndarray,
    columns: list[str] | None = None,
    penalized: np.ndarray | None = None,
    ridge: float = 1e-8,
    tol: float = 1e-8,
    max_iter: int = 100,
    separation_flag: bool = False,
    families: dict[str, str] | None = None,
) -> FitResult:
    """IRLS fit; raises MaxIterExceeded (with trace attached) on failure."""
    X = sp.csr_matrix(X)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X.data)):
        raise NumericError("non-finite values in the design or response")
    if columns is None:
        columns = [f"x{i}" for i in range(X.shape[1])]
    if penalized is None:
        penalized = np.ones(X.shape[1], dtype=bool)

    keep, dropped = prune_collinear(X, columns)
    if dropped:
        X = X[:, keep]
        columns = [columns[i] for i in keep]
        penalized = penalized[keep]

    n, p = X.shape
    beta = np.zeros(p)
    trace: list[dict] = []
    ll = log_likelihood(X, y, beta, penalized, ridge)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = _sigmoid(X @ beta)
        g = np.asarray(X.T @ (y - prob)).ravel()
        g[penalized] -= ridge * beta[penalized]
        gnorm = float(np.max(np.abs(g))) if p else 0.0
        trace.append({"iter": it - 1, "loglik": ll, "grad_norm": gnorm})
        if gnorm < tol:
            converged = True
            break
        w = prob * (1.0 - prob)
        H = np.asarray((X.T @ X.multiply(w[:, None])).todense())
        H[np.diag_indices_from(H)] += ridge * penalized
        step = _solve_spd(H, g)
        if not np.all(np.isfinite(step)):
            raise NumericError("non-finite Newton step")
        # step-halving on likelihood decrease
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            ll_new = log_likelihood(X, y, candidate, penalized, ridge)
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
        ll = log_likelihood(X, y, beta, penalized, ridge)

    prob = _sigmoid(X @ beta)
    w = prob * (1.0 - prob)
    H = np.asarray((X.T @ X.multiply(w[:, None])).todense())
    Hp = H.copy()
    Hp[np.diag_indices_from(Hp)] += ridge * penalized
    cov_model = _invert_spd(Hp)

    result = FitResult(
        coefficients=beta,
        columns=columns,
        cov_model=cov_model,
        converged=converged,
        n_iter=it,
        trace=trace,
        dropped_columns=dropped,
        fitted_p=prob,
        X=X,
        y=y,
        penalized=penalized,
        ridge=ridge,
        separation_flag=separation_flag,
        families=dict(families or {}),
    )
    if not converged:
        raise MaxIterExceeded(
            f"IRLS did not converge in {max_iter} iterations "
            f"(grad max-norm {trace[-1]['grad_norm']:.3g})",
            trace=trace,
            result=result,
        )
    if separation_flag:
        log.warning("fit converged under a perfect-separation flag (penalized)")
    return result


def _invert_spd(H: np.ndarray) -> np.ndarray:
    try:
        c, low = sla.cho_factor(H, lower=True)
        return sla.cho_solve((c, low), np.eye(len(H)))
    except np.linalg.LinAlgError:
        return np.linalg.pinv(H)


def cluster_robust_cov(fit: FitResult, clusters) -> np.ndarray:
    """Sandwich (X'WX)^-1 (sum_g u_g u_g') (X'WX)^-1, u_g = X_g'(y_g - p_g),
    with the small-sample factor G/(G-1). The bread uses the unpenalized
    Hessian exactly as stated (the 1e-8 ridge is a fitting device only).
    """
    clusters = np.asarray(clusters)
    labels, codes = np.unique(clusters, return_inverse=True)
    G = len(labels)
    if G < 2:
        raise SingleClusterError("need >= 2 clusters")

    X, y, prob = fit.X, fit.y, fit.fitted_p
    resid = y - prob
    n = len(y)
    M = sp.csr_matrix(
        (np.ones(n), (codes, np.arange(n))), shape=(G, n)
    )
    U = np.asarray((M @ X.multiply(resid[:, None])).todense())  # G x p
    meat = U.T @ U

    w = prob * (1.0 - prob)
    H = np.asarray((X.T @ X.multiply(w[:, None])).todense())
    bread = _invert_spd(H)
    cov = bread @ meat @ bread
    cov *= G / (G - 1.0)
    cov = 0.5 * (cov + cov.T)
    fit.cov_robust = cov
    fit.robust_df = G - 1
    return cov
