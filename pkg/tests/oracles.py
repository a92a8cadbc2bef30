"""Naive reference implementations used to cross-check the metrics module.

These are deliberately slow, enumeration-style definitions with no shared
code with the package. Keep them dumb.
"""

from __future__ import annotations

import math


def auroc_oracle(y, s):
    num = 0.0
    den = 0
    for i in range(len(y)):
        for j in range(len(y)):
            if y[i] == 1 and y[j] == 0:
                den += 1
                if s[i] > s[j]:
                    num += 1.0
                elif s[i] == s[j]:
                    num += 0.5
    return num / den


def auprc_oracle(y, s):
    """Average precision by scanning every distinct threshold."""
    thresholds = sorted(set(s), reverse=True)
    n_pos = sum(1 for v in y if v == 1)
    ap = 0.0
    prev_recall = 0.0
    for th in thresholds:
        tp = sum(1 for yi, si in zip(y, s) if si >= th and yi == 1)
        fp = sum(1 for yi, si in zip(y, s) if si >= th and yi == 0)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def c_index_oracle(t, d, r):
    num = 0.0
    den = 0
    n = len(t)
    for i in range(n):
        for j in range(n):
            if d[i] == 1 and t[i] < t[j]:
                den += 1
                if r[i] > r[j]:
                    num += 1.0
                elif r[i] == r[j]:
                    num += 0.5
    return num / den


def kaplan_meier_oracle(t, d):
    """Returns (event_times, survival values) via direct products."""
    event_times = sorted({ti for ti, di in zip(t, d) if di == 1})
    surv = []
    s = 1.0
    for tk in event_times:
        at_risk = sum(1 for ti in t if ti >= tk)
        deaths = sum(1 for ti, di in zip(t, d) if ti == tk and di == 1)
        s = s * (1.0 - deaths / at_risk)
        surv.append(s)
    return event_times, surv


def log_rank_oracle(ta, da, tb, db):
    event_times = sorted({t for t, d in zip(ta, da) if d == 1} | {t for t, d in zip(tb, db) if d == 1})
    obs_a = 0.0
    exp_a = 0.0
    var = 0.0
    for tk in event_times:
        na = sum(1 for t in ta if t >= tk)
        nb = sum(1 for t in tb if t >= tk)
        n = na + nb
        dk = sum(1 for t, d in zip(ta, da) if t == tk and d == 1) + sum(
            1 for t, d in zip(tb, db) if t == tk and d == 1
        )
        obs_a += sum(1 for t, d in zip(ta, da) if t == tk and d == 1)
        exp_a += dk * na / n
        if n > 1:
            var += dk * (na / n) * (nb / n) * (n - dk) / (n - 1)
    chi2 = 0.0 if var == 0 else (obs_a - exp_a) ** 2 / var
    p = math.erfc(math.sqrt(chi2 / 2.0)) if chi2 > 0 else 1.0
    return chi2, p


def time_dependent_auroc_oracle(t, d, r, horizon):
    case_scores = [ri for ti, di, ri in zip(t, d, r) if di == 1 and ti <= horizon]
    control_scores = [ri for ti, di, ri in zip(t, d, r) if ti > horizon]
    num = 0.0
    for ci in case_scores:
        for cj in control_scores:
            if ci > cj:
                num += 1.0
            elif ci == cj:
                num += 0.5
    return num / (len(case_scores) * len(control_scores))


def agreement_oracle(a_ref, a_gen, choices):
    n = len(a_ref)
    p_o = sum(1 for x, y in zip(a_ref, a_gen) if x == y) / n
    p_e = 0.0
    for c in choices:
        p_e += (sum(1 for x in a_ref if x == c) / n) * (sum(1 for y in a_gen if y == c) / n)
    kappa = None if p_e >= 1.0 else (p_o - p_e) / (1.0 - p_e)
    return p_o, p_e, kappa
