"""Weighted linear and logistic regression.

Both fitters take a design matrix whose first column is the intercept and
optional strictly positive case weights. Linear fits solve the
``sqrt(w)``-scaled least-squares problem by QR; logistic fits run IRLS from
the zero vector with step halving.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import (
    DataError,
    DegenerateOutcomeError,
    SeparationError,
    ShapeError,
    SingularDesignError,
    WrongLinkError,
)

MAX_ITER = 100
TOL = 1e-8
MAX_HALVINGS = 10
SEPARATION_NORM = 1e4
PIN_EPS = 1e-10


class LinkFunction(enum.Enum):
    IDENTITY = "identity"
    LOGIT = "logit"


@dataclass
class GlmFit:
    coefficients: np.ndarray
    link: LinkFunction
    converged: bool
    iterations: int
    weights_used: bool
    std_errors: np.ndarray | None = None


def design_matrix(*columns):
    """Stack an intercept column with the given 1-D or 2-D blocks."""
    blocks = []
    n = None
    for col in columns:
        if col is None:
            continue
        a = np.asarray(col, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.shape[1] == 0:
            continue
        if n is not None and a.shape[0] != n:
            raise ShapeError("design blocks have inconsistent row counts")
        n = a.shape[0]
        blocks.append(a)
    if n is None:
        raise ShapeError("design matrix needs at least one block")
    return np.hstack([np.ones((n, 1))] + blocks)


def _check_inputs(X, y, w):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"design {X.shape} incompatible with response {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("design and response must be finite")
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != y.shape:
            raise ShapeError(f"weights {w.shape} do not match response {y.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DataError("case weights must be finite and strictly positive")
    return X, y, w


def _weighted_lstsq(X, y, w):
    """Solve ``min sum w (y - X b)^2`` by QR; returns (coef, R factor)."""
    n, k = X.shape
    if n <= k:
        raise SingularDesignError(f"need more rows than columns, got {n} x {k}")
    sw = np.sqrt(w)
    Q, R = np.linalg.qr(X * sw[:, None])
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise SingularDesignError("design matrix is rank deficient")
    coef = np.linalg.solve(R, Q.T @ (y * sw))
    return coef, R


def fit_ols(X, y, w=None):
    """Weighted least squares with the identity link.

    ``std_errors`` uses the weighted residual variance with ``n - k``
    degrees of freedom.
    """
    X, y, w_in = _check_inputs(X, y, w)
    w = np.ones_like(y) if w_in is None else w_in
    coef, R = _weighted_lstsq(X, y, w)
    n, k = X.shape
    resid = y - X @ coef
    sigma2 = float(np.sum(w * resid**2) / (n - k))
    R_inv = np.linalg.solve(R, np.eye(k))
    cov = sigma2 * (R_inv @ R_inv.T)
    return GlmFit(coef, LinkFunction.IDENTITY, True, 1, w_in is not None, np.sqrt(np.diag(cov)))


def logistic_loglik(beta, X, y, w=None):
    """Weighted Bernoulli log-likelihood ``sum w (y eta - log(1 + e^eta))``."""
    eta = X @ beta
    w = np.ones_like(y, dtype=float) if w is None else w
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def logistic_score(beta, X, y, w=None):
    w = np.ones_like(y, dtype=float) if w is None else w
    return X.T @ (w * (y - expit(X @ beta)))


def fit_logistic(X, y, w=None, max_iter=MAX_ITER, tol=TOL):
    """Weighted logistic regression by IRLS.

    Raises
    ------
    DegenerateOutcomeError
        ``y`` has a single class.
    SeparationError
        The coefficients diverge (norm above 1e4) or all fitted
        probabilities of one class pin to 0 or 1.
    SingularDesignError
        The weighted design is rank deficient.
    """
    X, y, w_in = _check_inputs(X, y, w)
    if not np.all((y == 0) | (y == 1)):
        raise DataError("logistic response must be coded 0/1")
    if y.min() == y.max():
        raise DegenerateOutcomeError("logistic response has a single class")
    w = np.ones_like(y) if w_in is None else w_in

    beta = np.zeros(X.shape[1])
    ll = logistic_loglik(beta, X, y, w)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(X @ beta)
        var = np.maximum(mu * (1.0 - mu), 1e-12)
        # Newton step as a weighted least-squares problem on the working response
        z = (y - mu) / var
        step, _ = _weighted_lstsq(X, z, w * var)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            candidate = beta + t * step
            ll_new = logistic_loglik(candidate, X, y, w)
            if ll_new >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        delta = np.max(np.abs(candidate - beta))
        beta, ll = candidate, ll_new
        if not np.all(np.isfinite(beta)) or np.linalg.norm(beta) > SEPARATION_NORM:
            raise SeparationError("logistic coefficients diverge; classes appear separable")
        if delta < tol * (1.0 + np.max(np.abs(beta))):
            converged = True
            break

    mu = expit(X @ beta)
    pinned = (mu < PIN_EPS) | (mu > 1.0 - PIN_EPS)
    if np.all(pinned[y == 1]) or np.all(pinned[y == 0]):
        raise SeparationError("fitted probabilities pinned to 0/1 for an entire class")
    if not converged:
        raise SeparationError(f"IRLS did not converge in {max_iter} iterations")
    return GlmFit(beta, LinkFunction.LOGIT, True, it, w_in is not None)


def predict_linear(fit: GlmFit, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != fit.coefficients.shape[0]:
        raise ShapeError(f"design has shape {X.shape}, fit has {fit.coefficients.shape[0]} coefficients")
    return X @ fit.coefficients


def predict_odds(fit: GlmFit, X):
    """Fitted odds ``exp(X beta)`` of a logistic fit."""
    if fit.link is not LinkFunction.LOGIT:
        raise WrongLinkError("odds are only defined for a logit-link fit")
    return np.exp(predict_linear(fit, X))
