"""Experiment runner: per-modality vs fused performance across horizons,
fusion-strategy comparison, missing-modality ablation, and survival
stratification, emitted as hashable report bundles.

Published clinical reference values ride along in every bundle purely for
orientation; synthetic cohorts are not expected to reproduce them.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from ..agents import ModalityAssessment, equal_discussion, fuse_heuristic, fuse_survival_ranks, run_discussion
from ..metrics import auprc, auroc, bootstrap_ci, c_index, kaplan_meier, log_rank
from ..notebook import NotebookStore, NotebookView
from ..pipeline import TrainedPipeline, train_pipeline
from ..store import CohortStore
from . import svg

# reported by the multi-site clinical study this system models; synthetic
# desk-scale runs are not expected to land anywhere near these
PUBLISHED_REFERENCE = {
    "prediction_auroc_by_horizon": {"1": 0.751, "2": 0.755, "3": 0.801},
    "diagnosis_auroc": 0.846,
    "survival_c_index": 0.812,
    "note": "published large-cohort clinical values; orientation only, not a synthetic target",
}

MODALITIES = ("ehr", "image", "note")


@dataclass
class ExperimentSpec:
    task: str = "prediction"
    horizons: list[int] = field(default_factory=lambda: [1, 2, 3])
    modalities: list[str] = field(default_factory=lambda: list(MODALITIES))
    fusion: str = "discussion"  # discussion | equal | min | max | mean
    seed: int = 0
    n_bootstrap: int = 200

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "horizons": self.horizons,
            "modalities": sorted(self.modalities),
            "fusion": self.fusion,
            "seed": self.seed,
            "n_bootstrap": self.n_bootstrap,
        }


def fused_scores(
    pipeline: TrainedPipeline,
    samples,
    backend,
    fusion: str = "discussion",
    notebook: NotebookView | None = None,
    subset: set[str] | None = None,
) -> tuple[list[int], list[float]]:
    """Fused risk per sample; `subset` restricts the modalities allowed to
    participate (missing-modality ablation)."""
    notebook = notebook or NotebookStore().view()
    kept, risks = [], []
    for i, s in enumerate(samples):
        assessments = pipeline.assess_sample(s, backend)
        if subset is not None:
            assessments = [a for a in assessments if a.modality in subset]
        if not assessments:
            continue
        if fusion == "discussion":
            risk = run_discussion(assessments, notebook, backend, horizon_years=pipeline.horizon_years or 3).risk
        elif fusion == "equal":
            risk = equal_discussion(assessments, notebook, backend, horizon_years=pipeline.horizon_years or 3).risk
        else:
            risk = fuse_heuristic(assessments, fusion)
        kept.append(i)
        risks.append(risk)
    return kept, risks


def _classification_metrics(y, scores, n_bootstrap: int, seed: int) -> dict:
    pairs = list(zip(y, scores))
    out = {
        "auroc": auroc(y, scores),
        "auprc": auprc(y, scores),
        "n": len(y),
        "n_positive": int(sum(y)),
    }
    if n_bootstrap > 0:
        boot = bootstrap_ci(
            lambda d: auroc([p[0] for p in d], [p[1] for p in d]), pairs, n_rep=n_bootstrap, seed=seed
        )
        out["auroc_sd"] = boot.sd
        out["auroc_ci"] = [boot.ci_low, boot.ci_high]
    return out


def _survival_metrics(times, events, scores, n_bootstrap: int, seed: int) -> dict:
    trips = list(zip(times, events, scores))
    out = {"c_index": c_index(times, events, scores), "n": len(times), "n_events": int(sum(events))}
    if n_bootstrap > 0:
        boot = bootstrap_ci(
            lambda d: c_index([t[0] for t in d], [t[1] for t in d], [t[2] for t in d]),
            trips,
            n_rep=n_bootstrap,
            seed=seed,
        )
        out["c_index_sd"] = boot.sd
        out["c_index_ci"] = [boot.ci_low, boot.ci_high]
    return out


def evaluate_classification(pipeline: TrainedPipeline, backend, spec: ExperimentSpec) -> dict:
    test = pipeline.samples["test"]
    result: dict = {"modalities": {}, "fused": None}
    for mod in spec.modalities:
        if not pipeline.bundle.modality_available(mod):
            continue
        kept, scores = pipeline.modality_scores(test, mod)
        y = [test[i].y for i in kept]
        if len(set(y)) < 2:
            continue
        result["modalities"][mod] = _classification_metrics(y, list(scores), spec.n_bootstrap, spec.seed)
    kept, risks = fused_scores(pipeline, test, backend, fusion=spec.fusion)
    y = [test[i].y for i in kept]
    result["fused"] = _classification_metrics(y, risks, spec.n_bootstrap, spec.seed)
    return result


def evaluate_survival(pipeline: TrainedPipeline, backend, spec: ExperimentSpec) -> dict:
    test = pipeline.samples["test"]
    result: dict = {"modalities": {}, "fused": None, "stratification": None}
    common: dict[str, np.ndarray] = {}
    kept_sets = {}
    for mod in spec.modalities:
        if not pipeline.bundle.modality_available(mod):
            continue
        kept, scores = pipeline.modality_scores(test, mod)
        if not kept:
            continue
        t = [test[i].time_days for i in kept]
        d = [test[i].event for i in kept]
        if sum(d) == 0:
            continue
        result["modalities"][mod] = _survival_metrics(t, d, list(scores), spec.n_bootstrap, spec.seed)
        kept_sets[mod] = (kept, scores)
    # rank-average fusion on the samples every available modality scored
    if kept_sets:
        shared = set.intersection(*(set(k) for k, _ in kept_sets.values()))
        shared = sorted(shared)
        if shared:
            per_mod = {}
            for mod, (kept, scores) in kept_sets.items():
                index = {i: float(s) for i, s in zip(kept, scores)}
                per_mod[mod] = [index[i] for i in shared]
            fused = fuse_survival_ranks(per_mod)
            t = [test[i].time_days for i in shared]
            d = [test[i].event for i in shared]
            result["fused"] = _survival_metrics(t, d, fused, spec.n_bootstrap, spec.seed)
            result["stratification"] = _stratify(t, d, fused)
    return result


def _stratify(times, events, scores) -> dict:
    """Top vs bottom predicted-risk quartile: KM curves and log-rank."""
    order = np.argsort(scores, kind="mergesort")
    n = len(scores)
    q = max(n // 4, 1)
    low_idx = order[:q]
    high_idx = order[-q:]
    lt = [times[i] for i in low_idx]
    ld = [events[i] for i in low_idx]
    ht = [times[i] for i in high_idx]
    hd = [events[i] for i in high_idx]
    out = {"quartile_size": q}
    km_low = kaplan_meier(lt, ld)
    km_high = kaplan_meier(ht, hd)
    out["km_low_risk"] = {"times": km_low.times, "survival": km_low.survival}
    out["km_high_risk"] = {"times": km_high.times, "survival": km_high.survival}
    try:
        out["log_rank"] = log_rank(ht, hd, lt, ld)
    except Exception as e:  # degenerate quartiles on tiny cohorts
        out["log_rank"] = {"error": str(e)}
    return out


def run_experiment(store: CohortStore, spec: ExperimentSpec, backend, out_dir: str | Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    horizons = spec.horizons if spec.task in ("prediction", "conversion") else [None]
    for horizon in horizons:
        pipeline = train_pipeline(store, task=spec.task, horizon_years=horizon, seed=spec.seed)
        if spec.task == "survival":
            results["all"] = evaluate_survival(pipeline, backend, spec)
        else:
            results[str(horizon)] = evaluate_classification(pipeline, backend, spec)
    bundle = {
        "spec": spec.to_json_dict(),
        "cohort_hash": store.content_hash(),
        "results": results,
        "published_reference": PUBLISHED_REFERENCE,
    }
    bundle["bundle_hash"] = bundle_hash(bundle)
    (out_dir / "bundle.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n")
    _write_tables(bundle, out_dir)
    _write_plots(bundle, out_dir)
    return bundle


def bundle_hash(bundle: dict) -> str:
    scrubbed = {k: v for k, v in bundle.items() if k != "bundle_hash"}
    return hashlib.sha256(json.dumps(scrubbed, sort_keys=True).encode()).hexdigest()


def _write_tables(bundle: dict, out_dir: Path) -> None:
    rows = []
    for horizon, res in sorted(bundle["results"].items()):
        for mod, metrics in sorted(res["modalities"].items()):
            rows.append({"horizon": horizon, "source": mod, **_flat(metrics)})
        if res.get("fused"):
            rows.append({"horizon": horizon, "source": "fused", **_flat(res["fused"])})
    if not rows:
        return
    headers = sorted({k for r in rows for k in r}, key=lambda k: (k not in ("horizon", "source"), k))
    with open(out_dir / "metrics.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=headers)
        writer.writeheader()
        writer.writerows(rows)


def _flat(metrics: dict) -> dict:
    out = {}
    for k, v in metrics.items():
        if isinstance(v, list):
            out[k] = ";".join(f"{x:.6f}" for x in v)
        elif isinstance(v, float):
            out[k] = f"{v:.6f}"
        else:
            out[k] = v
    return out


def _write_plots(bundle: dict, out_dir: Path) -> None:
    for horizon, res in sorted(bundle["results"].items()):
        labels, values = [], []
        metric_key = "c_index" if bundle["spec"]["task"] == "survival" else "auroc"
        for mod, metrics in sorted(res["modalities"].items()):
            labels.append(mod)
            values.append(metrics[metric_key])
        if res.get("fused"):
            labels.append("fused")
            values.append(res["fused"][metric_key])
        if labels:
            svg.bar_chart(
                labels,
                values,
                out_dir / f"{metric_key}_h{horizon}.svg",
                title=f"{bundle['spec']['task']} horizon={horizon}",
                y_label=metric_key.upper(),
            )
        strat = res.get("stratification")
        if strat and "km_low_risk" in strat:
            xs = sorted(set(strat["km_low_risk"]["times"]) | set(strat["km_high_risk"]["times"]))
            if xs:
                series = {}
                for name in ("km_low_risk", "km_high_risk"):
                    curve = strat[name]
                    ys = []
                    s = 1.0
                    j = 0
                    for x in xs:
                        while j < len(curve["times"]) and curve["times"][j] <= x:
                            s = curve["survival"][j]
                            j += 1
                        ys.append(s)
                    series[name.replace("km_", "")] = ys
                svg.line_chart(xs, series, out_dir / "km_stratification.svg", title="risk-quartile survival", y_label="S(t)", step=True)


def ablation_missing_modality(pipeline: TrainedPipeline, backend, spec: ExperimentSpec | None = None) -> list[dict]:
    """Fused metric for every nonempty modality subset (2^k - 1 rows).

    Assessments are computed once per sample and re-fused per subset, so
    withholding a modality costs nothing extra.
    """
    spec = spec or ExperimentSpec(task=pipeline.task, seed=pipeline.seed)
    available = [m for m in MODALITIES if pipeline.bundle.modality_available(m)]
    if len(available) < 2:
        raise ValueError("ablation needs at least two available modalities")
    test = pipeline.samples["test"]
    notebook = NotebookStore().view()
    cached = [pipeline.assess_sample(s, backend) for s in test]
    rows = []
    for r in range(1, len(available) + 1):
        for combo in combinations(available, r):
            kept, risks = [], []
            for i, assessments in enumerate(cached):
                subset = [a for a in assessments if a.modality in combo]
                if not subset:
                    continue
                if spec.fusion == "discussion":
                    risk = run_discussion(subset, notebook, backend, horizon_years=pipeline.horizon_years or 3).risk
                elif spec.fusion == "equal":
                    risk = equal_discussion(subset, notebook, backend, horizon_years=pipeline.horizon_years or 3).risk
                else:
                    risk = fuse_heuristic(subset, spec.fusion)
                kept.append(i)
                risks.append(risk)
            y = [test[i].y for i in kept]
            row = {"modalities": list(combo), "n": len(kept)}
            if len(set(y)) == 2:
                row["auroc"] = auroc(y, risks)
                row["auprc"] = auprc(y, risks)
            rows.append(row)
    rows.sort(key=lambda r: (len(r["modalities"]), r["modalities"]))
    return rows
