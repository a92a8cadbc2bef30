from __future__ import annotations

import numpy as np
import pytest

from cogniboard.agents import (
    EvidenceItem,
    FusionError,
    ModalityAssessment,
    equal_discussion,
    fuse_heuristic,
    fuse_survival_ranks,
    run_discussion,
)
from cogniboard.llm import ScriptedBackend
from cogniboard.notebook import NotebookStore, NotebookView

BACKEND = ScriptedBackend()
EMPTY_NOTEBOOK = NotebookView(0, [])


def assessment(modality, risk, items=()):
    evidence = [EvidenceItem(item=t, weight=w, polarity=p) for t, w, p in items]
    return ModalityAssessment(modality=modality, risk=risk, evidence=evidence)


def strong_case():
    return [
        assessment("ehr", 0.9, [("Memory deficit and cognitive symptoms observed", 0.9, "positive")]),
        assessment("image", 0.5, [("hippocampus_left (z=-2.10) indicates elevated risk", 0.6, "positive")]),
        assessment("note", 0.2, [("Progressive memory loss reported", 0.5, "positive"), ("Gradual cognitive decline affecting daily tasks", 0.4, "positive")]),
    ]


def weak_case():
    return [
        assessment("ehr", 0.6, [("Osteoarthritis observed", 0.2, "neutral")]),
        assessment("image", 0.3, [("parietal_gray_matter (z=+0.30) near the training mean", 0.1, "neutral")]),
        assessment("note", 0.1, [("Routine wellness visit completed", 0.1, "negative")]),
    ]


class TestHeuristics:
    def test_min_max_mean(self):
        a = [assessment("ehr", 0.2), assessment("image", 0.5), assessment("note", 0.9)]
        assert fuse_heuristic(a, "min") == 0.2
        assert fuse_heuristic(a, "max") == 0.9
        assert fuse_heuristic(a, "mean") == pytest.approx(0.5333333333, abs=1e-9)

    def test_single_modality_all_ops_identical(self):
        a = [assessment("ehr", 0.42)]
        assert fuse_heuristic(a, "min") == fuse_heuristic(a, "max") == fuse_heuristic(a, "mean") == 0.42

    def test_permutation_invariance(self):
        a = [assessment("ehr", 0.2), assessment("image", 0.5), assessment("note", 0.9)]
        for op in ("min", "max", "mean"):
            assert fuse_heuristic(a, op) == fuse_heuristic(list(reversed(a)), op)

    def test_empty_rejected(self):
        with pytest.raises(FusionError):
            fuse_heuristic([], "mean")


class TestDiscussion:
    def test_clamped_into_bounds(self):
        out = run_discussion(strong_case(), EMPTY_NOTEBOOK, BACKEND, horizon_years=3)
        assert 0.2 <= out.risk <= 0.9
        assert out.min_modality_risk == 0.2
        assert out.max_modality_risk == 0.9

    def test_all_equal_degenerate(self):
        a = [assessment("ehr", 0.3), assessment("image", 0.3), assessment("note", 0.3)]
        out = run_discussion(a, EMPTY_NOTEBOOK, BACKEND)
        assert out.risk == pytest.approx(0.3, abs=1e-9)
        assert out.confidence == pytest.approx(1.0, abs=1e-9)

    def test_no_strong_evidence_lands_near_min(self):
        out = run_discussion(weak_case(), EMPTY_NOTEBOOK, BACKEND)
        lo, hi = out.min_modality_risk, out.max_modality_risk
        assert out.risk <= lo + 0.3 * (hi - lo)

    def test_strong_evidence_lands_near_max(self):
        out = run_discussion(strong_case(), EMPTY_NOTEBOOK, BACKEND)
        lo, hi = out.min_modality_risk, out.max_modality_risk
        assert out.risk >= lo + 0.6 * (hi - lo)

    def test_proposer_is_argmax_reviewers_rest(self):
        out = run_discussion(strong_case(), EMPTY_NOTEBOOK, BACKEND)
        assert out.transcript.proposer == "ehr"
        assert set(out.transcript.reviewers) == {"image", "note"}

    def test_single_assessment_passthrough(self):
        out = run_discussion([assessment("note", 0.77)], EMPTY_NOTEBOOK, BACKEND)
        assert out.risk == 0.77
        assert out.transcript.mode == "single"

    def test_backend_failure_falls_back_to_mean(self):
        class FailingBackend:
            kind = "scripted"

            def complete(self, prompt, template_id="", bindings=None, seed=0):
                raise RuntimeError("nope")

        from cogniboard.llm.backends import BackendError

        class Failing:
            kind = "http_chat"

            def complete(self, prompt, template_id="", bindings=None, seed=0):
                raise BackendError("transport down")

        a = strong_case()
        out = run_discussion(a, EMPTY_NOTEBOOK, Failing())
        assert out.fallback
        assert out.risk == pytest.approx(fuse_heuristic(a, "mean"), abs=1e-12)
        assert out.transcript.mode == "fallback_mean"

    def test_fuzz_bound_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            k = int(rng.integers(1, 4))
            mods = ["ehr", "image", "note"][:k]
            a = [
                assessment(m, float(rng.random()), [(f"finding {rng.integers(0, 100)} memory" if rng.random() < 0.3 else f"finding {rng.integers(0, 100)}", 0.5, "neutral")])
                for m in mods
            ]
            out = run_discussion(a, EMPTY_NOTEBOOK, BACKEND)
            lo = min(x.risk for x in a)
            hi = max(x.risk for x in a)
            assert lo - 1e-12 <= out.risk <= hi + 1e-12


class TestNotebookSteering:
    def _notebook_with(self, direction):
        store = NotebookStore()
        store.add_entry(
            f"Cases presenting memory loss should be scored in the {direction} range.",
            ["memory"],
            direction,
            "clinician_feedback",
        )
        return store.view()

    def test_monotone_shift_higher_never_decreases(self):
        base_cases = [strong_case(), weak_case()]
        # add a memory mention so the higher-direction entry matches
        for case in base_cases:
            case[0].evidence.append(EvidenceItem("memory complaint noted", 0.1, "positive"))
        for case in base_cases:
            before = run_discussion(case, EMPTY_NOTEBOOK, BACKEND).risk
            after = run_discussion(case, self._notebook_with("higher"), BACKEND).risk
            assert after >= before - 1e-12

    def test_lower_entry_pulls_to_min(self):
        case = strong_case()
        out = run_discussion(case, self._notebook_with("lower"), BACKEND)
        assert out.risk == pytest.approx(out.min_modality_risk, abs=1e-9)

    def test_unmatched_entry_changes_nothing(self):
        store = NotebookStore()
        store.add_entry("Cases presenting gout flare should score higher.", ["gout"], "higher", "clinician_feedback")
        case = weak_case()
        a = run_discussion(case, EMPTY_NOTEBOOK, BACKEND).risk
        b = run_discussion(case, store.view(), BACKEND).risk
        assert a == pytest.approx(b, abs=1e-12)


class TestEqualDiscussion:
    def test_alphabetical_order_and_determinism(self):
        a = strong_case()
        out1 = equal_discussion(a, EMPTY_NOTEBOOK, BACKEND)
        out2 = equal_discussion(list(reversed(a)), EMPTY_NOTEBOOK, BACKEND)
        assert out1.transcript.reviewers == ["ehr", "image", "note"]
        assert out1.risk == pytest.approx(out2.risk, abs=1e-12)

    def test_bound_holds_on_fuzzed_triples(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            a = [
                assessment("ehr", float(rng.random())),
                assessment("image", float(rng.random())),
                assessment("note", float(rng.random())),
            ]
            out = equal_discussion(a, EMPTY_NOTEBOOK, BACKEND)
            assert min(x.risk for x in a) - 1e-12 <= out.risk <= max(x.risk for x in a) + 1e-12


class TestSurvivalRankFusion:
    def test_rank_average(self):
        fused = fuse_survival_ranks({"ehr": [0.1, 0.9, 0.5], "image": [10.0, 30.0, 20.0]})
        assert fused == [0.0, 1.0, 0.5]

    def test_monotone_transform_per_modality_invariance(self):
        base = {"ehr": [0.1, 0.9, 0.5, 0.2], "note": [3.0, 1.0, 2.0, 4.0]}
        transformed = {"ehr": [np.exp(v) for v in base["ehr"]], "note": [v * 100 for v in base["note"]]}
        assert fuse_survival_ranks(base) == fuse_survival_ranks(transformed)

    def test_misaligned_rejected(self):
        with pytest.raises(FusionError):
            fuse_survival_ranks({"ehr": [0.1], "note": [0.1, 0.2]})
