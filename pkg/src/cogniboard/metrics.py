"""Evaluation metrics for classification, survival, and report agreement.

Everything here is computed exactly (no trapezoid shortcuts, no library
calls) so results can be checked pair-for-pair against naive enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "AgreementReport",
    "BootstrapResult",
    "KaplanMeierCurve",
    "agreement",
    "auprc",
    "auroc",
    "bootstrap_ci",
    "c_index",
    "kaplan_meier",
    "log_rank",
    "time_dependent_auroc",
]


class MetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


def _as_float_array(x: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise MetricError("scores must be finite")
    return arr


def auroc(y: Sequence[int], scores: Sequence[float]) -> float:
    """Probability a random positive outranks a random negative.

    Tied scores get half credit, which is exactly the average-rank
    (Mann-Whitney) formulation.
    """
    y_arr = np.asarray(y, dtype=np.int64).ravel()
    s = _as_float_array(scores)
    if y_arr.shape != s.shape:
        raise MetricError("label/score length mismatch")
    n_pos = int((y_arr == 1).sum())
    n_neg = int((y_arr == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auroc needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_s = s[order]
    i = 0
    rank = 1.0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (rank + rank + (j - i)) / 2.0
        rank += j - i + 1
        i = j + 1
    rank_sum_pos = float(ranks[y_arr == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auprc(y: Sequence[int], scores: Sequence[float]) -> float:
    """Average precision: sum over descending distinct thresholds of
    (recall step) * (precision at that threshold).

    Score ties are resolved at the threshold level, so the result does not
    depend on input ordering.
    """
    y_arr = np.asarray(y, dtype=np.int64).ravel()
    s = _as_float_array(scores)
    if y_arr.shape != s.shape:
        raise MetricError("label/score length mismatch")
    n_pos = int((y_arr == 1).sum())
    if n_pos == 0:
        raise MetricError("auprc needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y_arr[order]
    s_sorted = s[order]
    ap = 0.0
    tp = 0
    fp = 0
    prev_recall = 0.0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        tp += int((y_sorted[i : j + 1] == 1).sum())
        fp += (j - i + 1) - int((y_sorted[i : j + 1] == 1).sum())
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


def c_index(times: Sequence[float], events: Sequence[int], scores: Sequence[float]) -> float:
    """Concordance over comparable pairs (T_i < T_j with the earlier
    observation an event); risk-score ties count half.
    """
    t = _as_float_array(times)
    d = np.asarray(events, dtype=np.int64).ravel()
    r = _as_float_array(scores)
    if not (t.shape == d.shape == r.shape):
        raise MetricError("times/events/scores length mismatch")
    if np.any(t < 0):
        raise MetricError("times must be non-negative")
    concordant = 0.0
    comparable = 0
    n = len(t)
    for i in range(n):
        if d[i] != 1:
            continue
        for j in range(n):
            if t[i] < t[j]:
                comparable += 1
                if r[i] > r[j]:
                    concordant += 1.0
                elif r[i] == r[j]:
                    concordant += 0.5
    if comparable == 0:
        raise MetricError("no comparable pairs")
    return concordant / comparable


@dataclass
class KaplanMeierCurve:
    """Product-limit estimate with its risk-set table."""

    times: list[float]
    survival: list[float]
    at_risk: list[int]
    observed_events: list[int]

    def at(self, t: float) -> float:
        """S(t): survival just after time t (right-continuous step)."""
        s = 1.0
        for tk, sk in zip(self.times, self.survival):
            if tk <= t:
                s = sk
            else:
                break
        return s


def kaplan_meier(times: Sequence[float], events: Sequence[int]) -> KaplanMeierCurve:
    t = _as_float_array(times)
    d = np.asarray(events, dtype=np.int64).ravel()
    if len(t) == 0:
        raise MetricError("kaplan_meier needs at least one observation")
    if t.shape != d.shape:
        raise MetricError("times/events length mismatch")
    event_times = sorted(set(t[d == 1].tolist()))
    out_t: list[float] = []
    out_s: list[float] = []
    out_n: list[int] = []
    out_d: list[int] = []
    s = 1.0
    for tk in event_times:
        n_at_risk = int((t >= tk).sum())
        n_events = int(((t == tk) & (d == 1)).sum())
        s *= 1.0 - n_events / n_at_risk
        out_t.append(tk)
        out_s.append(s)
        out_n.append(n_at_risk)
        out_d.append(n_events)
    return KaplanMeierCurve(out_t, out_s, out_n, out_d)


def log_rank(
    times_a: Sequence[float],
    events_a: Sequence[int],
    times_b: Sequence[float],
    events_b: Sequence[int],
) -> dict[str, float]:
    """Two-group log-rank test: observed-minus-expected events in group A
    with the hypergeometric variance at each distinct event time; p-value
    from a chi-square with one degree of freedom.
    """
    ta = _as_float_array(times_a)
    da = np.asarray(events_a, dtype=np.int64).ravel()
    tb = _as_float_array(times_b)
    db = np.asarray(events_b, dtype=np.int64).ravel()
    if len(ta) == 0 or len(tb) == 0:
        raise MetricError("both groups must be non-empty")
    if int(da.sum()) + int(db.sum()) == 0:
        raise MetricError("no events in either group")
    event_times = sorted(set(ta[da == 1].tolist()) | set(tb[db == 1].tolist()))
    observed_a = 0.0
    expected_a = 0.0
    variance = 0.0
    for tk in event_times:
        n_a = int((ta >= tk).sum())
        n_b = int((tb >= tk).sum())
        n = n_a + n_b
        d_k = int(((ta == tk) & (da == 1)).sum()) + int(((tb == tk) & (db == 1)).sum())
        if n == 0 or n_a == 0 and n_b == 0:
            continue
        observed_a += int(((ta == tk) & (da == 1)).sum())
        expected_a += d_k * n_a / n
        if n > 1:
            variance += d_k * (n_a / n) * (n_b / n) * (n - d_k) / (n - 1)
    if variance == 0.0:
        chi2 = 0.0
    else:
        chi2 = (observed_a - expected_a) ** 2 / variance
    # chi-square(1) survival function: erfc(sqrt(x/2))
    p = math.erfc(math.sqrt(chi2 / 2.0)) if chi2 > 0 else 1.0
    return {"chi2": chi2, "p": p}


def time_dependent_auroc(
    times: Sequence[float],
    events: Sequence[int],
    scores: Sequence[float],
    t: float,
) -> float:
    """Cumulative/dynamic AUROC at horizon t: cases are subjects with an
    observed event at or before t, controls are subjects still event-free
    past t (regardless of later censoring).
    """
    tt = _as_float_array(times)
    d = np.asarray(events, dtype=np.int64).ravel()
    r = _as_float_array(scores)
    cases = (d == 1) & (tt <= t)
    controls = tt > t
    if not cases.any():
        raise MetricError(f"no cases at or before t={t}")
    if not controls.any():
        raise MetricError(f"no controls after t={t}")
    mask = cases | controls
    y = cases[mask].astype(np.int64)
    return auroc(y.tolist(), r[mask].tolist())


@dataclass
class AgreementReport:
    """Raw and chance-corrected agreement between paired answer lists."""

    n: int
    p_o: float
    p_e: float
    kappa: float | None
    kappa_defined: bool
    pairs: list[tuple[str, str]] = field(default_factory=list)


def agreement(
    answers_ref: Sequence[str],
    answers_gen: Sequence[str],
    choices: Sequence[str],
) -> AgreementReport:
    if len(answers_ref) != len(answers_gen):
        raise MetricError("answer lists must have equal length")
    if len(answers_ref) == 0:
        raise MetricError("agreement needs at least one pair")
    n = len(answers_ref)
    choice_set = list(choices)
    for a in list(answers_ref) + list(answers_gen):
        if a not in choice_set:
            raise MetricError(f"answer {a!r} not among choices")
    p_o = sum(1 for a, b in zip(answers_ref, answers_gen) if a == b) / n
    p_e = 0.0
    for c in choice_set:
        p_ref = sum(1 for a in answers_ref if a == c) / n
        p_gen = sum(1 for b in answers_gen if b == c) / n
        p_e += p_ref * p_gen
    if p_e >= 1.0:
        return AgreementReport(n, p_o, p_e, None, False, list(zip(answers_ref, answers_gen)))
    kappa = (p_o - p_e) / (1.0 - p_e)
    return AgreementReport(n, p_o, p_e, kappa, True, list(zip(answers_ref, answers_gen)))


@dataclass
class BootstrapResult:
    point: float
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    n_rep: int
    n_failed: int


def bootstrap_ci(
    metric_fn: Callable[[np.ndarray], float],
    data: Sequence,
    n_rep: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
) -> BootstrapResult:
    """Percentile bootstrap over sample-level resampling with replacement.

    `metric_fn` receives an index-resampled view of `data`; resamples on
    which it raises are skipped and counted.
    """
    data_arr = np.asarray(data, dtype=object)
    n = len(data_arr)
    if n == 0:
        raise MetricError("empty data")
    point = metric_fn(data_arr)
    rng = np.random.default_rng(seed)
    values: list[float] = []
    failed = 0
    for _ in range(n_rep):
        idx = rng.integers(0, n, size=n)
        try:
            values.append(metric_fn(data_arr[idx]))
        except Exception:
            failed += 1
    if not values:
        raise MetricError("all bootstrap resamples failed")
    vals = np.asarray(values, dtype=np.float64)
    lo, hi = np.percentile(vals, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return BootstrapResult(
        point=float(point),
        mean=float(vals.mean()),
        sd=float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
        ci_low=float(lo),
        ci_high=float(hi),
        n_rep=n_rep,
        n_failed=failed,
    )
