"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured values (run with -s to watch them live).

Pinned constants live at the top; nothing here is tuned at runtime.
"""

from __future__ import annotations

import time
from datetime import date, timedelta

import numpy as np
import pytest

from cogniboard.agents import EvidenceItem, ModalityAssessment, run_discussion
from cogniboard.cohort import (
    ConceptCriteria,
    build_conversion_dataset,
    build_prediction_dataset,
    scan_for_leakage,
)
from cogniboard.harness import (
    ExperimentSpec,
    ablation_missing_modality,
    collect_error_pool,
    fused_scores,
    notebook_scaling_curve,
    run_experiment,
)
from cogniboard.llm import ScriptedBackend, serialize_ehr_xml
from cogniboard.metrics import (
    agreement,
    auprc,
    auroc,
    c_index,
    kaplan_meier,
    log_rank,
    time_dependent_auroc,
)
from cogniboard.models import (
    ModelSpec,
    SparseMatrix,
    cox_grad,
    cox_nll,
    fit_cox,
    logistic_grad,
    logistic_nll,
)
from cogniboard.notebook import NotebookStore
from cogniboard.pipeline import train_pipeline
from cogniboard.store import CohortConfig, CohortStore, generate_cohort

from . import oracles
from .test_cohort import make_record, make_store, spaced_events
from .test_llm_gateway import GOLDEN_XML, fixture_record, fixture_window

CRITERIA = ConceptCriteria()
BACKEND = ScriptedBackend()

PINNED_SEEDS = (101, 202, 303)
PINNED_SPLIT = {"ehr": 0.4, "note": 0.3, "image": 0.3}
PINNED_PREVALENCE = 0.05
PINNED_N = 2000
SYNERGY_HORIZON = 3


def emit(name: str, passed: bool, detail: str) -> None:
    print(f"{'PASS' if passed else 'FAIL'} - {name}: {detail}")
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def pinned_cohort_101(tmp_path_factory):
    out = tmp_path_factory.mktemp("pinned101")
    generate_cohort(
        CohortConfig(
            n_patients=PINNED_N, seed=PINNED_SEEDS[0], prevalence=PINNED_PREVALENCE, signal_split=dict(PINNED_SPLIT)
        ),
        out,
    )
    return CohortStore.load(out)


@pytest.fixture(scope="module")
def pinned_pipeline_101(pinned_cohort_101):
    return train_pipeline(
        pinned_cohort_101, task="prediction", horizon_years=SYNERGY_HORIZON, seed=PINNED_SEEDS[0]
    )


class TestMetricOracleEquivalence:
    def test_all_metrics_match_bruteforce(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(4, 31))
            y = rng.integers(0, 2, size=n)
            y[0], y[1] = 0, 1
            s = (rng.integers(0, 7, size=n) / 6.0).tolist()
            y = y.tolist()
            worst = max(worst, abs(auroc(y, s) - oracles.auroc_oracle(y, s)))
            worst = max(worst, abs(auprc(y, s) - oracles.auprc_oracle(y, s)))

            t = rng.integers(1, 16, size=n).astype(float).tolist()
            d = rng.integers(0, 2, size=n).tolist()
            r = (rng.integers(0, 9, size=n) / 8.0).tolist()
            if any(di == 1 and ti < max(t) for ti, di in zip(t, d)):
                worst = max(worst, abs(c_index(t, d, r) - oracles.c_index_oracle(t, d, r)))
            if sum(d) > 0:
                km = kaplan_meier(t, d)
                ot, osur = oracles.kaplan_meier_oracle(t, d)
                worst = max(worst, max((abs(a - b) for a, b in zip(km.survival, osur)), default=0.0))
                assert km.times == ot
                horizon = float(np.median(t))
                has_case = any(di == 1 and ti <= horizon for ti, di in zip(t, d))
                has_ctrl = any(ti > horizon for ti in t)
                if has_case and has_ctrl:
                    worst = max(
                        worst,
                        abs(
                            time_dependent_auroc(t, d, r, horizon)
                            - oracles.time_dependent_auroc_oracle(t, d, r, horizon)
                        ),
                    )
            nb = int(rng.integers(3, 16))
            tb = rng.integers(1, 16, size=nb).astype(float).tolist()
            db = rng.integers(0, 2, size=nb).tolist()
            if sum(d) + sum(db) > 0:
                got = log_rank(t, d, tb, db)
                chi2, p = oracles.log_rank_oracle(t, d, tb, db)
                worst = max(worst, abs(got["chi2"] - chi2), abs(got["p"] - p))

            m = int(rng.integers(1, 25))
            choices = ["A", "B", "C", "D", "E"]
            ar = [choices[i] for i in rng.integers(0, 5, size=m)]
            ag = [choices[i] for i in rng.integers(0, 5, size=m)]
            rep = agreement(ar, ag, choices)
            p_o, p_e, kappa = oracles.agreement_oracle(ar, ag, choices)
            worst = max(worst, abs(rep.p_o - p_o), abs(rep.p_e - p_e))
            if kappa is not None:
                worst = max(worst, abs(rep.kappa - kappa))
        elapsed = time.perf_counter() - t0
        emit(
            "metric-oracle equivalence",
            worst <= 1e-12 and elapsed < 30.0,
            f"max |delta|={worst:.2e} over 200 instances in {elapsed:.1f}s (limits 1e-12, 30s)",
        )


class TestGradientChecks:
    def test_logistic_and_cox_gradients(self):
        worst = 0.0
        h = 1e-5
        for seed in range(50):
            rng = np.random.default_rng(seed)
            n, dim = 30, 4
            x = SparseMatrix.from_dense(rng.normal(size=(n, dim))).to_csr()
            y = (rng.random(n) < 0.5).astype(float)
            y[0], y[1] = 0, 1
            beta = rng.normal(scale=0.4, size=dim + 1)
            analytic = logistic_grad(beta, x, y, 0.05)
            numeric = np.zeros_like(beta)
            for j in range(len(beta)):
                e = np.zeros_like(beta)
                e[j] = h
                numeric[j] = (logistic_nll(beta + e, x, y, 0.05) - logistic_nll(beta - e, x, y, 0.05)) / (2 * h)
            denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-10)
            worst = max(worst, float(np.max(np.abs(analytic - numeric)) / denom))

            t = rng.exponential(5.0, size=n) + 0.1
            ev = rng.integers(0, 2, size=n)
            ev[0] = 1
            bc = rng.normal(scale=0.4, size=dim)
            analytic = cox_grad(bc, x, t, ev, 0.05)
            numeric = np.zeros_like(bc)
            for j in range(len(bc)):
                e = np.zeros_like(bc)
                e[j] = h
                numeric[j] = (cox_nll(bc + e, x, t, ev, 0.05) - cox_nll(bc - e, x, t, ev, 0.05)) / (2 * h)
            denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-10)
            worst = max(worst, float(np.max(np.abs(analytic - numeric)) / denom))
        emit(
            "gradient checks",
            worst < 1e-6,
            f"max relative error {worst:.2e} over 50 seeded logistic+cox problems (limit 1e-6)",
        )


class TestCoxRecovery:
    def test_planted_hazard_ratio(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(21)
        n = 5000
        x = rng.integers(0, 2, size=n).astype(float)
        hazard = 0.05 * np.exp(np.log(2.0) * x)
        event_time = rng.exponential(1.0 / hazard)
        censor_time = rng.uniform(5, 60, size=n)
        t = np.minimum(event_time, censor_time)
        ev = (event_time <= censor_time).astype(int)
        model = fit_cox(SparseMatrix.from_dense(x[:, None], ["arm"]), t, ev, ModelSpec(kind="cox", l2=0.0))
        elapsed = time.perf_counter() - t0
        beta = float(model.beta[0])
        target = float(np.log(2.0))
        emit(
            "cox planted-hazard recovery",
            abs(beta - target) < 0.1 * target and elapsed < 60.0,
            f"beta={beta:.4f} vs ln2={target:.4f} (|err|={abs(beta - target):.4f} <= {0.1 * target:.4f}), {elapsed:.1f}s",
        )


class TestLeakageSuite:
    def test_no_adrd_tokens_in_input_windows(self, pinned_cohort_101):
        t0 = time.perf_counter()
        store = pinned_cohort_101
        leaks = []
        n_samples = 0
        for h in (1, 2, 3):
            samples = build_prediction_dataset(store, CRITERIA, horizon_years=h)
            n_samples += len(samples)
            leaks += scan_for_leakage(store, CRITERIA, samples)
        for h in (1, 2, 3):
            samples = build_conversion_dataset(store, CRITERIA, horizon_years=h)
            n_samples += len(samples)
            leaks += scan_for_leakage(store, CRITERIA, samples)
        elapsed = time.perf_counter() - t0
        emit(
            "leakage suite",
            not leaks and elapsed < 60.0,
            f"0 expected, {len(leaks)} found across {n_samples} samples on a {PINNED_N}-patient cohort in {elapsed:.1f}s",
        )

    def test_conversion_right_endpoint_exact(self):
        mci = date(2017, 1, 1)
        horizon = 1
        boundary = mci + timedelta(days=365 * horizon)
        events_base = spaced_events(date(2015, 6, 1), date(2015, 6, 1) + timedelta(days=2400), 30)
        at_boundary = make_record("P1", events_base + [(mci, "diagnosis", "G31.84"), (boundary, "diagnosis", "G30.9")])
        past_boundary = make_record(
            "P2", events_base + [(mci, "diagnosis", "G31.84"), (boundary + timedelta(days=1), "diagnosis", "G30.9")]
        )
        store = make_store([at_boundary, past_boundary])
        samples = {s.patient_id: s for s in build_conversion_dataset(store, CRITERIA, horizon_years=horizon)}
        ok = samples["P1"].y == 1 and samples["P2"].y == 0
        emit(
            "conversion right-endpoint inclusion",
            ok,
            f"onset at index+{365 * horizon}d labeled {samples['P1'].y} (want 1); "
            f"one day later labeled {samples['P2'].y} (want 0)",
        )


class TestRollingWindowCount:
    def test_hand_enumerated_counts(self):
        start = date(2015, 6, 1)
        cases = [
            (1826, 1, 6),  # 60-month span, H=1: 182k+545 <= 1644 -> k<=6
            (1826, 3, 2),  # H=3: 182k+1275 <= 1644 -> k<=2
            (2557, 2, 8),  # 84-month span, H=2: 182k + 910 <= 2375 -> k <= 8
        ]
        results = []
        ok = True
        for span, horizon, expected in cases:
            rec = make_record("P1", spaced_events(start, start + timedelta(days=span), 14))
            store = make_store([rec], cutoff=start + timedelta(days=span))
            got = len(build_prediction_dataset(store, CRITERIA, horizon_years=horizon))
            manual = 0
            k = 1
            while True:
                index = 182 * k
                if index > span:
                    break
                if index + 180 + 365 * horizon > span - 182:
                    break
                manual += 1
                k += 1
            results.append(f"span={span}d H={horizon}: got {got}, hand count {manual}, expected {expected}")
            ok = ok and got == expected == manual
        emit("rolling-window count", ok, "; ".join(results))


class TestMultimodalSynergy:
    def test_fused_beats_best_single_three_seeds(self, pinned_cohort_101, pinned_pipeline_101, tmp_path_factory):
        t0 = time.perf_counter()
        details = []
        all_pass = True
        for seed in PINNED_SEEDS:
            if seed == PINNED_SEEDS[0]:
                pipeline = pinned_pipeline_101
            else:
                out = tmp_path_factory.mktemp(f"syn{seed}")
                generate_cohort(
                    CohortConfig(
                        n_patients=PINNED_N, seed=seed, prevalence=PINNED_PREVALENCE, signal_split=dict(PINNED_SPLIT)
                    ),
                    out,
                )
                pipeline = train_pipeline(
                    CohortStore.load(out), task="prediction", horizon_years=SYNERGY_HORIZON, seed=seed
                )
            test = pipeline.samples["test"]
            singles = {}
            for mod in ("ehr", "note", "image"):
                kept, scores = pipeline.modality_scores(test, mod)
                yk = [test[i].y for i in kept]
                if len(set(yk)) == 2:
                    singles[mod] = auroc(yk, list(scores))
            kept, risks = fused_scores(pipeline, test, BACKEND, fusion="discussion")
            y = [test[i].y for i in kept]
            fused = auroc(y, risks)
            best = max(singles.values())
            seed_ok = fused >= best + 0.02 and fused >= 0.75
            all_pass = all_pass and seed_ok
            details.append(f"seed {seed}: fused={fused:.3f} best={best:.3f} (+{fused - best:.3f})")
        elapsed = time.perf_counter() - t0
        emit(
            "multimodal synergy",
            all_pass and elapsed < 300.0,
            "; ".join(details) + f"; total {elapsed:.0f}s (limit 300s)",
        )


class TestFusionBoundFuzz:
    def test_thousand_random_score_sets(self):
        rng = np.random.default_rng(9)
        notebook = NotebookStore().view()
        violations = 0
        for _ in range(1000):
            k = int(rng.integers(1, 4))
            mods = ["ehr", "image", "note"][:k]
            assessments = []
            for m in mods:
                items = []
                for j in range(int(rng.integers(0, 4))):
                    token = ["memory loss", "knee pain", "cognitive decline", "refills", "confusion"][
                        int(rng.integers(0, 5))
                    ]
                    items.append(EvidenceItem(f"{token} marker {j}", float(rng.random()), "neutral"))
                assessments.append(ModalityAssessment(modality=m, risk=float(rng.random()), evidence=items))
            out = run_discussion(assessments, notebook, BACKEND, horizon_years=3)
            lo = min(a.risk for a in assessments)
            hi = max(a.risk for a in assessments)
            if not (lo - 1e-12 <= out.risk <= hi + 1e-12):
                violations += 1
        emit("fusion-bound fuzz", violations == 0, f"{violations} bound violations in 1000 fuzzed discussions")


class TestMissingModality:
    def test_all_subsets_and_full_set_dominates_pairs(self, pinned_pipeline_101):
        rows = ablation_missing_modality(pinned_pipeline_101, BACKEND)
        by_key = {tuple(r["modalities"]): r for r in rows}
        full = by_key[("ehr", "image", "note")]
        pairs = [r for r in rows if len(r["modalities"]) == 2]
        all_valid = len(rows) == 7 and all("auroc" in r for r in rows)
        dominates = all(full["auroc"] >= p["auroc"] for p in pairs)
        detail = (
            f"{len(rows)} subset rows; full-set AUROC {full['auroc']:.3f} vs pairs "
            + ", ".join(f"{'+'.join(p['modalities'])}={p['auroc']:.3f}" for p in pairs)
        )
        emit("missing-modality ablation", all_valid and dominates, detail)


class TestKmStratification:
    # survival-task cohorts are pinned separately: the scan-indexed design
    # needs enough events for quartile curves, so prevalence is 0.2 here
    KM_PREVALENCE = 0.2

    def test_quartile_log_rank(self, tmp_path_factory):
        details = []
        ok = True
        for seed in PINNED_SEEDS[:2]:
            out = tmp_path_factory.mktemp(f"km{seed}")
            generate_cohort(
                CohortConfig(
                    n_patients=PINNED_N, seed=seed, prevalence=self.KM_PREVALENCE, signal_split=dict(PINNED_SPLIT)
                ),
                out,
            )
            store = CohortStore.load(out)
            pipeline = train_pipeline(store, task="survival", horizon_years=None, seed=seed)
            spec = ExperimentSpec(task="survival", seed=seed, n_bootstrap=0)
            from cogniboard.harness.runner import evaluate_survival

            res = evaluate_survival(pipeline, BACKEND, spec)
            p_value = res["stratification"]["log_rank"]["p"]
            details.append(f"seed {seed}: log-rank p={p_value:.2e}")
            ok = ok and p_value < 0.01
        emit("KM risk stratification", ok, "; ".join(details) + " (limit p<0.01)")


class TestNotebookScaling:
    def test_six_entries_increase_auroc(self, pinned_pipeline_101):
        pipeline = pinned_pipeline_101
        pool, idx = collect_error_pool(pipeline, BACKEND, max_cases=16)
        curve = notebook_scaling_curve(pipeline, BACKEND, [0, 6], pool, idx)
        base, injected = curve.points[0], curve.points[1]
        increased = injected.auroc > base.auroc
        # duplicate ingestion leaves the version unchanged
        nb = NotebookStore(set(pipeline.store.patient_ids))
        nb.distill_from_errors(pool[:1], BACKEND)
        v_before = nb.version
        nb.distill_from_errors(pool[:1], BACKEND)
        version_stable = nb.version == v_before
        phi_clean = all(
            pid not in e.text and all(pid not in f for f in e.factors)
            for e in nb.view().entries
            for pid in pipeline.store.patient_ids
        )
        emit(
            "notebook scaling",
            increased and version_stable and phi_clean and injected.n_entries >= 6,
            f"AUROC {base.auroc:.3f} -> {injected.auroc:.3f} with {injected.n_entries} entries on "
            f"{curve.eval_n} planted-error-subset samples; duplicate re-ingestion kept version {v_before}; "
            f"phi-clean={phi_clean}",
        )


class TestDeterminism:
    def test_full_pipeline_hash_stable(self, tmp_path):
        def run(tag: str) -> str:
            cohort_dir = tmp_path / f"cohort_{tag}"
            generate_cohort(CohortConfig(n_patients=300, seed=11, prevalence=0.1), cohort_dir)
            store = CohortStore.load(cohort_dir)
            spec = ExperimentSpec(task="prediction", horizons=[2], seed=11, n_bootstrap=50)
            bundle = run_experiment(store, spec, ScriptedBackend(), tmp_path / f"reports_{tag}")
            return bundle["bundle_hash"]

        h1 = run("a")
        h2 = run("b")
        emit(
            "full-pipeline determinism",
            h1 == h2,
            f"bundle hashes {'match' if h1 == h2 else 'differ'}: {h1[:16]} vs {h2[:16]}",
        )


class TestBaselinePromptFidelity:
    def test_xml_golden_and_budget(self):
        xml = serialize_ehr_xml(fixture_record(), fixture_window(), day_budget=100)
        golden_ok = xml == GOLDEN_XML
        rec = make_record(
            "P1",
            [(date(2020, 1, 1) + timedelta(days=3 * i), "diagnosis", "I10") for i in range(150)],
        )
        from cogniboard.cohort import WindowSpec

        window = WindowSpec(date(2019, 12, 31), date(2021, 6, 1), 180, 365)
        budget_xml = serialize_ehr_xml(rec, window, day_budget=100)
        n_days = budget_xml.count("<day ") - 1  # one demographics block
        budget_ok = n_days == 100
        emit(
            "baseline prompt fidelity",
            golden_ok and budget_ok,
            f"golden XML byte-match={golden_ok}; 150-day history serialized to {n_days} day blocks (budget 100)",
        )
