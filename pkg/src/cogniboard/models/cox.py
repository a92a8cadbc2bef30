"""Cox proportional-hazards fitting via the partial likelihood.

Ties are handled with the Breslow approximation: every event occurring at
time t shares the same risk set {j : T_j >= t} and the same denominator.
Optimization is damped Newton. The sort order, tie-run boundaries, and
event masks are computed once per fit; the per-iteration quantities are
cumulative sums over that fixed order, so evaluations stay vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class CoxError(ValueError):
    pass


@dataclass
class _RiskSetCache:
    """Descending-time order plus tie-run structure.

    For position i in the sorted order, run_end[i] is the last position of
    i's tie run; the cumulative sum of weights up to run_end[i] is exactly
    the Breslow risk-set sum for i's event time.
    """

    order: np.ndarray  # descending time
    run_end: np.ndarray  # per position, last index of its tie run
    ends: np.ndarray  # last index of each run
    starts: np.ndarray  # first index of each run
    events_sorted: np.ndarray  # bool, aligned to `order`
    deaths_per_run: np.ndarray  # event count per run


def _build_cache(times: np.ndarray, events: np.ndarray) -> _RiskSetCache:
    order = np.argsort(-times, kind="mergesort")
    t_desc = times[order]
    n = len(t_desc)
    change = np.flatnonzero(t_desc[1:] != t_desc[:-1])
    ends = np.append(change, n - 1)
    starts = np.concatenate([[0], change + 1])
    counts = ends - starts + 1
    run_end = np.repeat(ends, counts)
    events_sorted = (events[order] == 1)
    deaths_per_run = np.add.reduceat(events_sorted.astype(np.int64), starts)
    return _RiskSetCache(order, run_end, ends, starts, events_sorted, deaths_per_run)


def _nll_from_cache(eta: np.ndarray, cache: _RiskSetCache) -> float:
    m = float(np.max(eta))
    eta_sorted = eta[cache.order]
    w = np.exp(eta_sorted - m)
    cw = np.cumsum(w)
    denom = cw[cache.run_end]
    ev = cache.events_sorted
    return float(np.sum(np.log(denom[ev]) + m) - np.sum(eta_sorted[ev]))


def _grad_eta_from_cache(eta: np.ndarray, cache: _RiskSetCache) -> np.ndarray:
    """d(nll)/d(eta): exp(eta_k) times the sum of d_t/S_t over event times
    t <= T_k, minus the event indicator."""
    m = float(np.max(eta))
    w = np.exp(eta[cache.order] - m)
    cw = np.cumsum(w)
    n = len(eta)
    term = np.zeros(n)
    run_sums = cw[cache.ends]
    with np.errstate(divide="ignore", invalid="ignore"):
        run_terms = np.where(cache.deaths_per_run > 0, cache.deaths_per_run / run_sums, 0.0)
    term[cache.ends] = run_terms
    suffix = np.cumsum(term[::-1])[::-1]  # events at or after position i (times <= T_i)
    grad_sorted = w * suffix - cache.events_sorted.astype(np.float64)
    grad = np.empty(n)
    grad[cache.order] = grad_sorted
    return grad


def _hessian_from_cache(
    eta: np.ndarray, xd: np.ndarray, cache: _RiskSetCache, l2: float
) -> np.ndarray:
    n, d = xd.shape
    m = float(np.max(eta))
    w = np.exp(eta[cache.order] - m)
    xs = xd[cache.order]
    cw = np.cumsum(w)
    cwx = np.cumsum(w[:, None] * xs, axis=0)
    h = np.zeros((d, d))
    sxx = np.zeros((d, d))
    for r in range(len(cache.ends)):
        start, end = cache.starts[r], cache.ends[r]
        block = xs[start : end + 1]
        wb = w[start : end + 1]
        sxx += (block * wb[:, None]).T @ block
        deaths = cache.deaths_per_run[r]
        if deaths:
            s = cw[end]
            mu = cwx[end] / s
            h += deaths * (sxx / s - np.outer(mu, mu))
    return h + l2 * np.eye(d)


def cox_nll_eta(eta: np.ndarray, times: np.ndarray, events: np.ndarray) -> float:
    """Negative partial log-likelihood as a function of the linear
    predictors eta = X @ beta (Breslow ties)."""
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.int64)
    return _nll_from_cache(np.asarray(eta, dtype=np.float64), _build_cache(times, events))


def cox_grad_eta(eta: np.ndarray, times: np.ndarray, events: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.int64)
    return _grad_eta_from_cache(np.asarray(eta, dtype=np.float64), _build_cache(times, events))


def cox_nll(beta: np.ndarray, x: sp.csr_matrix, times: np.ndarray, events: np.ndarray, l2: float) -> float:
    eta = x @ beta
    return cox_nll_eta(eta, times, events) + 0.5 * l2 * float(beta @ beta)


def cox_grad(beta: np.ndarray, x: sp.csr_matrix, times: np.ndarray, events: np.ndarray, l2: float) -> np.ndarray:
    eta = x @ beta
    return x.T @ cox_grad_eta(eta, times, events) + l2 * beta


def fit_cox(
    x: sp.csr_matrix,
    times: np.ndarray,
    events: np.ndarray,
    l2: float = 1e-2,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> tuple[np.ndarray, list[float], bool, list[int]]:
    """Returns (beta, loss curve, converged, frozen column indices).

    Zero-variance covariate columns cannot be identified by the partial
    likelihood; their coefficients are pinned to 0 and reported back.
    """
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.int64)
    if np.any(times <= 0):
        raise CoxError("event/censoring times must be positive")
    if int(events.sum()) == 0:
        raise CoxError("all observations censored")
    n, d = x.shape
    mean_sq = np.asarray(x.power(2).mean(axis=0)).ravel()
    var = mean_sq - np.asarray(x.mean(axis=0)).ravel() ** 2
    frozen = [int(j) for j in np.nonzero(var <= 1e-12 * np.maximum(1.0, mean_sq))[0]]
    active = [j for j in range(d) if j not in set(frozen)]
    xa = x[:, active].tocsr() if active else x[:, :0].tocsr()
    xa_dense = xa.toarray()
    cache = _build_cache(times, events)

    def nll(b: np.ndarray) -> float:
        return _nll_from_cache(xa @ b, cache) + 0.5 * l2 * float(b @ b)

    beta_a = np.zeros(len(active))
    loss = nll(beta_a)
    curve = [loss]
    converged = len(active) == 0
    for _ in range(max_iter):
        if not active:
            break
        eta = xa @ beta_a
        g = xa.T @ _grad_eta_from_cache(eta, cache) + l2 * beta_a
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        h = _hessian_from_cache(eta, xa_dense, cache, l2)
        try:
            step = np.linalg.solve(h + 1e-10 * np.eye(len(active)), g)
        except np.linalg.LinAlgError:
            step = g
        t = 1.0
        new_loss = loss
        for _ in range(40):
            candidate = beta_a - t * step
            new_loss = nll(candidate)
            if new_loss <= loss + 1e-14:
                break
            t *= 0.5
        else:
            converged = np.max(np.abs(g)) <= 1e-5
            break
        improvement = loss - new_loss
        beta_a = beta_a - t * step
        loss = new_loss
        curve.append(loss)
        if improvement <= 1e-13 * (1.0 + abs(loss)):
            converged = True  # at float resolution of the likelihood
            break
    beta = np.zeros(d)
    for pos, j in enumerate(active):
        beta[j] = beta_a[pos]
    return beta, curve, converged, frozen
