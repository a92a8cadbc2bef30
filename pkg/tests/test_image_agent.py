from __future__ import annotations

from datetime import date, datetime, time, timedelta

import numpy as np
import pytest

from cogniboard.agents import ImageAgent, ImagingError, ImagingScaler, ModalityUnavailable, extract_features
from cogniboard.cohort import TaskSample, WindowSpec
from cogniboard.llm import ScriptedBackend
from cogniboard.store import ImagingStudy, PatientRecord
from cogniboard.store.generate import ATROPHY_PROFILE, BRAIN_VOLUME_BASE

BACKEND = ScriptedBackend()
WINDOW = WindowSpec(date(2016, 1, 1), date(2017, 1, 1), 180, 365)


def study(day=date(2016, 6, 1), shift=0.0, rng=None, trait=None):
    feats = {}
    for name, (mean, sd) in BRAIN_VOLUME_BASE.items():
        v = mean
        if trait is not None:
            v += trait[name] * sd
        coef = ATROPHY_PROFILE.get(name, 0.0)
        if shift:
            v *= 1.0 + coef * shift
        feats[name] = max(v, 1.0)
    return ImagingStudy(datetime.combine(day, time(8, 0)), "brain_volumes", feats)


def patient(pid, st):
    return PatientRecord(
        pid, {"age_at_cutoff": 75.0, "sex": "female", "race": "white"}, [], imaging=[st] if st else []
    )


class TestScaler:
    def test_training_mean_maps_to_zero(self):
        studies = [study()] * 5
        scaler = ImagingScaler("brain_volumes").fit(studies)
        # zero variance collapses to sd=1, so mean value -> z = 0 exactly
        z = scaler.transform(study())
        assert all(v == 0.0 for v in z.values())

    def test_two_sd_below_mean(self):
        rng = np.random.default_rng(0)
        traits = [{n: float(rng.normal()) for n in BRAIN_VOLUME_BASE} for _ in range(400)]
        studies = [study(trait=t) for t in traits]
        scaler = ImagingScaler("brain_volumes").fit(studies)
        mu = scaler.mean["hippocampus_left"]
        sd = scaler.sd["hippocampus_left"]
        feats = dict(studies[0].features)
        feats["hippocampus_left"] = mu - 2.0 * sd
        low = ImagingStudy(datetime(2016, 6, 1, 8, 0), "brain_volumes", feats)
        z = scaler.transform(low)
        assert z["hippocampus_left"] == pytest.approx(-2.0, abs=1e-9)

    def test_unfitted_scaler_rejected(self):
        with pytest.raises(ImagingError):
            ImagingScaler("brain_volumes").transform(study())

    def test_unknown_modality_mismatch(self):
        scaler = ImagingScaler("retinal_thickness")
        with pytest.raises(ImagingError):
            scaler.transform(study())


class TestTrainAssess:
    def _setup(self, n=160, seed=2):
        rng = np.random.default_rng(seed)
        records = {}
        samples = []
        for i in range(n):
            pid = f"P{i:06d}"
            y = int(rng.random() < 0.4)
            trait = {name: float(rng.normal(0, 1)) for name in BRAIN_VOLUME_BASE}
            st = study(shift=0.8 if y else 0.0, trait=trait)
            records[pid] = patient(pid, st)
            samples.append(TaskSample(pid, WINDOW, "prediction", y=y, horizon_years=1))
        return records, samples

    def test_planted_atrophy_ranked_first_with_positive_polarity(self):
        records, samples = self._setup()
        agent = ImageAgent()
        model = agent.train(records, samples)
        pos_pid = next(s.patient_id for s in samples if s.y == 1)
        from cogniboard.agents.imaging import study_in_window

        x, _ = agent._matrix(records, samples)
        out = agent.assess(records[pos_pid], WINDOW, model, BACKEND, background=x)
        assert isinstance(out.evidence, list) and out.evidence
        top_regions = [e.item.split()[0] for e in out.evidence[:4]]
        assert any("hippocampus" in r or "ventricles" in r or "white_matter" in r or "entorhinal" in r for r in top_regions)
        hippo = [e for e in out.evidence if "hippocamp" in e.item]
        assert hippo and all(e.polarity == "positive" for e in hippo)

    def test_no_imaging_in_window_unavailable(self):
        records, samples = self._setup(n=40)
        agent = ImageAgent()
        model = agent.train(records, samples)
        bare = patient("P999999", None)
        out = agent.assess(bare, WINDOW, model, BACKEND)
        assert isinstance(out, ModalityUnavailable)

    def test_normalization_stats_training_only_negative_control(self):
        records, samples = self._setup(n=100)
        agent = ImageAgent()
        agent.fit_scaler(records, samples[:70])
        clean_stats = dict(agent.scaler.mean)
        leaky = ImageAgent()
        leaky.fit_scaler(records, samples)  # includes the held-out rows
        assert clean_stats != leaky.scaler.mean

    def test_cox_spec_produces_survival_scores(self):
        rng = np.random.default_rng(5)
        records = {}
        samples = []
        for i in range(80):
            pid = f"P{i:06d}"
            sick = rng.random() < 0.5
            trait = {name: float(rng.normal(0, 1)) for name in BRAIN_VOLUME_BASE}
            st = study(shift=0.8 if sick else 0.0, trait=trait)
            records[pid] = patient(pid, st)
            t = int(rng.integers(60, 500)) if sick else int(rng.integers(400, 2500))
            samples.append(TaskSample(pid, WINDOW, "survival", time_days=t, event=int(sick)))
        agent = ImageAgent()
        model = agent.train(records, samples)
        assert model.kind == "cox"
        from cogniboard.metrics import c_index
        from cogniboard.models import predict_risk

        x, kept = agent._matrix(records, samples)
        scores = predict_risk(model, x)
        t = [samples[i].time_days for i in kept]
        d = [samples[i].event for i in kept]
        assert c_index(t, d, scores.tolist()) > 0.7

    def test_evidence_regions_subset_of_schema(self):
        from cogniboard.store.records import BRAIN_REGIONS

        records, samples = self._setup(n=60)
        agent = ImageAgent()
        model = agent.train(records, samples)
        pid = samples[0].patient_id
        out = agent.assess(records[pid], WINDOW, model, BACKEND)
        for e in out.evidence:
            region = e.item.split()[0]
            assert region in BRAIN_REGIONS
