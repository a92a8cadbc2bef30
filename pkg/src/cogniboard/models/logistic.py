"""L2-regularized logistic regression fit by damped Newton iteration.

The intercept is never penalized, so the intercept-only fit reproduces the
empirical prevalence exactly. Full-batch with step halving keeps the loss
curve non-increasing, which downstream tests rely on.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1pexp(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(z)) without overflow."""
    out = np.empty_like(z, dtype=np.float64)
    big = z > 30
    out[big] = z[big]
    out[~big] = np.log1p(np.exp(z[~big]))
    return out


def logistic_nll(beta: np.ndarray, x: sp.csr_matrix, y: np.ndarray, l2: float) -> float:
    """Negative log-likelihood plus (l2/2)*||beta[1:]||^2.

    `beta[0]` is the intercept; `x` must NOT carry an intercept column.
    """
    z = x @ beta[1:] + beta[0]
    nll = float(np.sum(_log1pexp(z) - y * z))
    return nll + 0.5 * l2 * float(beta[1:] @ beta[1:])


def logistic_grad(beta: np.ndarray, x: sp.csr_matrix, y: np.ndarray, l2: float) -> np.ndarray:
    z = x @ beta[1:] + beta[0]
    resid = sigmoid(z) - y
    g = np.empty_like(beta)
    g[0] = resid.sum()
    g[1:] = x.T @ resid + l2 * beta[1:]
    return g


def _hessian(beta: np.ndarray, x: sp.csr_matrix, l2: float) -> np.ndarray:
    z = x @ beta[1:] + beta[0]
    p = sigmoid(z)
    w = p * (1.0 - p)
    n, d = x.shape
    h = np.zeros((d + 1, d + 1))
    xw = x.multiply(w[:, None]).tocsr()
    h[0, 0] = w.sum()
    h[0, 1:] = np.asarray(xw.sum(axis=0)).ravel()
    h[1:, 0] = h[0, 1:]
    h[1:, 1:] = (x.T @ xw).toarray()
    h[1:, 1:] += l2 * np.eye(d)
    return h


def fit_logistic(
    x: sp.csr_matrix,
    y: np.ndarray,
    l2: float = 1e-2,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> tuple[np.ndarray, list[float], bool]:
    """Returns (beta with intercept at index 0, loss curve, converged).

    Converged means the gradient infinity-norm dropped to `tol` or below.
    """
    y = np.asarray(y, dtype=np.float64)
    n, d = x.shape
    beta = np.zeros(d + 1)
    # closed-form start for the intercept keeps early steps well scaled
    p0 = min(max(y.mean(), 1e-6), 1 - 1e-6)
    beta[0] = np.log(p0 / (1 - p0))
    loss = logistic_nll(beta, x, y, l2)
    curve = [loss]
    converged = False
    for _ in range(max_iter):
        g = logistic_grad(beta, x, y, l2)
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        h = _hessian(beta, x, l2)
        # ridge jitter guards near-singular Hessians on separable data
        try:
            step = np.linalg.solve(h + 1e-10 * np.eye(d + 1), g)
        except np.linalg.LinAlgError:
            step = g
        t = 1.0
        for _ in range(40):
            candidate = beta - t * step
            new_loss = logistic_nll(candidate, x, y, l2)
            if new_loss <= loss + 1e-14:
                break
            t *= 0.5
        else:
            converged = np.max(np.abs(g)) <= 1e-5
            break
        beta = beta - t * step
        loss = new_loss
        curve.append(loss)
    return beta, curve, converged
