"""Synthetic longitudinal cohort generator with a planted risk process.

Every positive patient carries one latent severity value that drives
signal in each modality through independent per-modality noise, so the
three data sources agree only partially: that is what makes fusion worth
anything. A slice of negatives receives a single-modality confounder
(benign memory complaints, vascular codes, borderline volumes) to cap
single-modality performance. The full ground truth goes to a separate
file that nothing downstream reads except test oracles.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from . import vocab
from .records import (
    BRAIN_REGIONS,
    RETINA_SECTORS,
    ClinicalNote,
    CodedEvent,
    ImagingStudy,
    PatientRecord,
    write_ndjson,
)

COHORT_FORMAT = 1

RISK_SENTENCES = [
    "Patient reports progressive memory loss over the past year.",
    "Spouse notes increasing forgetfulness and repeating questions.",
    "Difficulty managing finances and medications independently.",
    "Cognitive screening shows deficits in delayed recall and attention.",
    "Episodes of disorientation in familiar surroundings reported.",
    "Word-finding difficulty observed during the interview.",
    "Family describes gradual cognitive decline affecting daily tasks.",
]

BENIGN_SENTENCES = [
    "Patient feels well with no new complaints.",
    "Blood pressure controlled on current regimen.",
    "Annual wellness visit completed without concerns.",
    "Knee pain stable with activity modification.",
    "Medication refills provided at this visit.",
    "Follow-up scheduled in six months.",
    "Denies chest pain or shortness of breath.",
    "Sleep quality reported as adequate.",
    "Routine laboratory work reviewed and unremarkable.",
    "Encouraged regular exercise and balanced diet.",
]

CONFOUNDER_SENTENCES = [
    "Occasional forgetfulness attributed to normal aging.",
    "Mild memory complaints without functional impact.",
    "Transient word-finding pauses, cognition grossly intact.",
]

POST_ONSET_SENTENCES = [
    "Established dementia diagnosis discussed with family.",
    "Cognitive decline has progressed since the last visit.",
    "Caregiver support and safety planning reviewed.",
]

RADIOLOGY_NORMAL = [
    "MRI brain without acute intracranial abnormality.",
    "Age-appropriate ventricles and sulci.",
    "No evidence of mass effect or hemorrhage.",
]

RADIOLOGY_ATROPHY = [
    "Disproportionate bilateral hippocampal volume loss.",
    "Generalized atrophy with prominent ventricles.",
    "Scattered white matter hyperintensities consistent with microvascular change.",
]

# population means/sds for the simulated region volumes (mm^3)
BRAIN_VOLUME_BASE = {
    "hippocampus_left": (4200.0, 320.0),
    "hippocampus_right": (4300.0, 320.0),
    "entorhinal_cortex": (3800.0, 300.0),
    "amygdala": (3100.0, 260.0),
    "lateral_ventricles": (28000.0, 5200.0),
    "inferior_lateral_ventricles": (1500.0, 420.0),
    "temporal_gray_matter": (98000.0, 7400.0),
    "parietal_gray_matter": (88000.0, 6900.0),
    "frontal_gray_matter": (142000.0, 10500.0),
    "white_matter_hypointensities": (3200.0, 1500.0),
    "total_gray_matter": (590000.0, 34000.0),
    "intracranial_volume": (1450000.0, 92000.0),
}
# planted shift per region in units of that region's population sd
# (negative shrinks, positive grows); full-intensity cases move ~1.5 sd
ATROPHY_PROFILE = {
    "hippocampus_left": -1.8,
    "hippocampus_right": -1.7,
    "entorhinal_cortex": -1.4,
    "lateral_ventricles": 1.3,
    "inferior_lateral_ventricles": 1.5,
    "temporal_gray_matter": -0.6,
    "white_matter_hypointensities": 1.6,
}

RETINA_BASE = {name: (285.0 if "center" in name else 315.0, 16.0) for name in RETINA_SECTORS}
RETINA_THINNING = {name: -1.0 for name in RETINA_SECTORS}


class ConfigError(ValueError):
    pass


@dataclass
class CohortConfig:
    n_patients: int
    seed: int
    prevalence: float
    signal_split: dict[str, float] = field(
        default_factory=lambda: {"ehr": 0.4, "note": 0.3, "image": 0.3}
    )
    cohort_start: date = date(2015, 1, 1)
    cohort_cutoff: date = date(2023, 1, 1)
    imaging_modality: str = "brain_volumes"
    imaging_coverage: float = 0.85
    confounder_rate: float = 0.25

    def validate(self) -> None:
        if self.n_patients < 1:
            raise ConfigError("n_patients must be >= 1")
        if not (0.0 <= self.prevalence < 1.0):
            raise ConfigError("prevalence must be in [0, 1)")
        weights = list(self.signal_split.values())
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigError("signal_split weights must be non-negative and sum to 1")
        if set(self.signal_split) != {"ehr", "note", "image"}:
            raise ConfigError("signal_split must name exactly ehr, note, image")
        if self.cohort_cutoff <= self.cohort_start + timedelta(days=1200):
            raise ConfigError("cohort window too short for longitudinal histories")

    def to_json_dict(self) -> dict:
        return {
            "n_patients": self.n_patients,
            "seed": self.seed,
            "prevalence": self.prevalence,
            "signal_split": self.signal_split,
            "cohort_start": self.cohort_start.isoformat(),
            "cohort_cutoff": self.cohort_cutoff.isoformat(),
            "imaging_modality": self.imaging_modality,
            "imaging_coverage": self.imaging_coverage,
            "confounder_rate": self.confounder_rate,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CohortConfig":
        return cls(
            n_patients=d["n_patients"],
            seed=d["seed"],
            prevalence=d["prevalence"],
            signal_split=d["signal_split"],
            cohort_start=date.fromisoformat(d["cohort_start"]),
            cohort_cutoff=date.fromisoformat(d["cohort_cutoff"]),
            imaging_modality=d["imaging_modality"],
            imaging_coverage=d["imaging_coverage"],
            confounder_rate=d["confounder_rate"],
        )


@dataclass
class GroundTruth:
    patient_id: str
    positive: bool
    onset: date | None
    mci_onset: date | None
    severity: float
    intensity: dict[str, float]
    confounder_modality: str | None

    def to_json_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "positive": self.positive,
            "onset": self.onset.isoformat() if self.onset else None,
            "mci_onset": self.mci_onset.isoformat() if self.mci_onset else None,
            "severity": self.severity,
            "intensity": self.intensity,
            "confounder_modality": self.confounder_modality,
        }


def _norm_weights(split: dict[str, float]) -> dict[str, float]:
    top = max(split.values()) or 1.0
    return {k: v / top for k, v in split.items()}


def _pick(rng: np.random.Generator, items: list) -> object:
    return items[int(rng.integers(0, len(items)))]


def _sample_demographics(rng: np.random.Generator, positive: bool) -> dict:
    age = float(np.clip(rng.normal(79.0 if positive else 75.5, 7.4), 65.0, 97.0))
    sex = "male" if rng.random() < 0.42 else "female"
    race = str(
        rng.choice(
            ["white", "black", "asian", "pacific", "multirace", "unknown"],
            p=[0.63, 0.094, 0.043, 0.003, 0.1, 0.13],
        )
    )
    return {"age_at_cutoff": round(age, 1), "sex": sex, "race": race}


def _lab_value(rng: np.random.Generator, code: str) -> float:
    lo, hi = vocab.LAB_RANGES[code]
    return round(float(rng.uniform(lo, hi)), 1)


def _generate_patient(
    pid: str, positive: bool, cfg: CohortConfig, rng: np.random.Generator
) -> tuple[PatientRecord, GroundTruth]:
    start_offset = int(rng.integers(0, 365))
    record_start = cfg.cohort_start + timedelta(days=start_offset)
    span_days = (cfg.cohort_cutoff - record_start).days
    demographics = _sample_demographics(rng, positive)
    weights = _norm_weights(cfg.signal_split)

    severity = 0.0
    onset: date | None = None
    mci_onset: date | None = None
    intensity = {"ehr": 0.0, "note": 0.0, "image": 0.0}
    confounder: str | None = None

    if positive:
        severity = float(rng.uniform(0.45, 1.0))
        # severe cases convert earlier; keep onset inside the catchable band
        lo, hi = 820, span_days - 190
        frac = float(np.clip(1.0 - severity + rng.normal(0.0, 0.18), 0.02, 0.95))
        onset = record_start + timedelta(days=int(lo + frac * (hi - lo)))
        # complementary presentation: a spiky Dirichlet emphasis makes each
        # case read strongly in one or two modalities and faintly in the
        # rest, so only fusion sees every positive clearly
        active = [m for m in ("ehr", "note", "image") if cfg.signal_split[m] > 0]
        emphasis = rng.dirichlet([3.6 * cfg.signal_split[m] for m in active])
        for m, e_m in zip(active, emphasis):
            intensity[m] = float(np.clip(severity * (0.25 + 2.0 * e_m), 0.1, 1.0))
        if rng.random() < 0.6:
            mci_onset = onset - timedelta(days=int(rng.integers(150, 700)))
            if mci_onset <= record_start:
                mci_onset = record_start + timedelta(days=30)
    else:
        if rng.random() < cfg.confounder_rate:
            confounder = str(rng.choice(["ehr", "note", "image"]))
        if rng.random() < 0.08:
            mci_onset = record_start + timedelta(days=int(rng.integers(400, max(401, span_days - 400))))

    has_imaging = positive or rng.random() < cfg.imaging_coverage
    if weights["image"] == 0:
        has_imaging = False

    events: list[CodedEvent] = []
    notes: list[ClinicalNote] = []
    imaging: list[ImagingStudy] = []

    # --- visit scaffold with background burden ---
    day = 0
    visit_days: list[int] = []
    while day < span_days:
        visit_days.append(day)
        day += int(rng.integers(25, 75))
    chronic = [str(c) for c in rng.choice(vocab.BACKGROUND_DIAGNOSES, size=3, replace=False)]
    chronic_meds = [str(c) for c in rng.choice(vocab.BACKGROUND_MEDICATIONS, size=2, replace=False)]
    for vd in visit_days:
        d = record_start + timedelta(days=vd)
        if d > cfg.cohort_cutoff:
            break
        if rng.random() < 0.55:
            events.append(CodedEvent(d, "diagnosis", str(_pick(rng, chronic + vocab.BACKGROUND_DIAGNOSES[:10])), 1.0))
        if rng.random() < 0.4:
            events.append(CodedEvent(d, "medication", str(_pick(rng, chronic_meds)), 1.0))
        if rng.random() < 0.5:
            lab = str(_pick(rng, vocab.LAB_CODES))
            events.append(CodedEvent(d, "lab", lab, _lab_value(rng, lab)))
        if rng.random() < 0.3:
            n_sent = int(rng.integers(2, 5))
            text = " ".join(str(_pick(rng, BENIGN_SENTENCES)) for _ in range(n_sent))
            notes.append(ClinicalNote(datetime.combine(d, time(9, 0)) + timedelta(minutes=int(rng.integers(0, 420))), "progress", text))

    onset_day_idx = (onset - record_start).days if onset else None

    # --- planted pre-onset signals (positives) and background/confounder
    # cognitive complaints (negatives); the pools deliberately overlap so
    # no single modality separates the classes cleanly ---
    memory_pool = ["R41.3", "R41.0", "R41.81", "R41.840"]
    vascular_pool = ["I10", "E11.9", "F32.9", "G47.33", "I63.9", "H90.3", "R26.81"]

    def uniform_day(day_hi: int) -> int:
        return int(rng.integers(30, max(31, day_hi)))

    def prodromal_ramp(day_idx: int) -> float:
        # burden density grows over the five years before onset
        return float(np.clip(1.0 - (onset_day_idx - day_idx) / 1825.0, 0.2, 1.0))

    def plant_code(day_idx: int, p_memory: float) -> None:
        pool = memory_pool if rng.random() < p_memory else vascular_pool
        d = record_start + timedelta(days=day_idx)
        events.append(CodedEvent(d, "diagnosis", str(_pick(rng, pool)), 1.0))

    def plant_risk_note(day_idx: int) -> None:
        d = record_start + timedelta(days=day_idx)
        text = str(_pick(rng, RISK_SENTENCES)) + " " + str(_pick(rng, BENIGN_SENTENCES))
        notes.append(ClinicalNote(datetime.combine(d, time(10, 30)), "progress", text))

    if positive:
        pre_end = onset_day_idx - 20
        # grid-rate planting: every ~60 days an independent chance, scaled
        # by modality intensity and proximity to onset
        grid = range(30, max(31, pre_end), 60)
        if weights["ehr"] > 0:
            rate = 0.10 + 0.38 * intensity["ehr"]
            planted = 0
            for g in grid:
                if rng.random() < rate * prodromal_ramp(g):
                    plant_code(g + int(rng.integers(0, 30)), 0.25 + 0.5 * intensity["ehr"])
                    planted += 1
            if planted == 0:
                plant_code(uniform_day(pre_end), 0.6)
        if weights["note"] > 0:
            rate = 0.05 + 0.30 * intensity["note"]
            planted = 0
            for g in grid:
                if rng.random() < rate * prodromal_ramp(g):
                    plant_risk_note(g + int(rng.integers(0, 30)))
                    planted += 1
            if planted == 0:
                plant_risk_note(uniform_day(pre_end))
        if mci_onset is not None:
            events.append(CodedEvent(mci_onset, "diagnosis", "G31.84", 1.0))
    else:
        for _ in range(int(rng.poisson(0.4))):
            plant_code(uniform_day(span_days - 30), 0.25)
        if rng.random() < 0.15:
            plant_risk_note(uniform_day(span_days - 30))
        if confounder == "ehr":
            for _ in range(1 + int(rng.poisson(1.2))):
                plant_code(uniform_day(span_days - 30), 0.5)
        elif confounder == "note":
            for _ in range(1 + int(rng.poisson(0.8))):
                plant_risk_note(uniform_day(span_days - 30))
            d = record_start + timedelta(days=uniform_day(span_days - 30))
            text = str(_pick(rng, CONFOUNDER_SENTENCES)) + " " + str(_pick(rng, BENIGN_SENTENCES))
            notes.append(ClinicalNote(datetime.combine(d, time(11, 0)), "progress", text))
        if mci_onset is not None:
            events.append(CodedEvent(mci_onset, "diagnosis", "G31.84", 1.0))

    # --- post-onset disease course ---
    if positive:
        events.append(CodedEvent(onset, "diagnosis", str(_pick(rng, vocab.ONSET_DIAGNOSIS_CODES)), 1.0))
        med_day = onset + timedelta(days=int(rng.integers(5, 40)))
        if med_day <= cfg.cohort_cutoff:
            events.append(CodedEvent(med_day, "medication", str(_pick(rng, vocab.DEMENTIA_MEDICATIONS)), 1.0))
        follow = onset_day_idx + 60
        while follow < span_days:
            d = record_start + timedelta(days=follow)
            events.append(CodedEvent(d, "diagnosis", str(_pick(rng, vocab.ONSET_DIAGNOSIS_CODES)), 1.0))
            if rng.random() < 0.4:
                notes.append(ClinicalNote(datetime.combine(d, time(14, 0)), "progress", str(_pick(rng, POST_ONSET_SENTENCES))))
            follow += int(rng.integers(60, 160))

    # --- imaging studies ---
    if has_imaging:
        base = BRAIN_VOLUME_BASE if cfg.imaging_modality == "brain_volumes" else RETINA_BASE
        profile = ATROPHY_PROFILE if cfg.imaging_modality == "brain_volumes" else RETINA_THINNING
        trait = {name: float(rng.normal(0.0, 1.0)) for name in base}  # stable anatomy per patient
        confounder_shift = float(rng.uniform(0.3, 0.6)) if confounder == "image" else 0.0
        scan_day = int(rng.integers(60, 420))
        while scan_day < span_days - 30:
            d = datetime.combine(record_start + timedelta(days=scan_day), time(8, 15))
            if positive:
                # atrophy progresses toward onset but never vanishes
                ramp = float(np.clip(1.0 - (onset_day_idx - scan_day) / 2400.0, 0.35, 1.0))
                shift = intensity["image"] * ramp
            else:
                shift = confounder_shift
            feats = {}
            for name, (mean, sd) in base.items():
                v = mean + trait[name] * sd + float(rng.normal(0.0, 0.35 * sd))
                if shift > 0:
                    v += profile.get(name, 0.0) * sd * shift
                feats[name] = round(max(v, 1.0), 1)
            imaging.append(ImagingStudy(d, cfg.imaging_modality, feats))
            # radiology wording tracks the scan probabilistically: strong
            # shifts usually read as atrophy, borderline ones sometimes,
            # and normal scans occasionally get over-called
            p_atrophy = min(0.06 + 0.9 * shift, 0.9) if shift > 0 else 0.06
            rad_pool = RADIOLOGY_ATROPHY if rng.random() < p_atrophy else RADIOLOGY_NORMAL
            notes.append(
                ClinicalNote(d + timedelta(hours=3), "radiology", " ".join([str(_pick(rng, rad_pool)), str(_pick(rng, RADIOLOGY_NORMAL))]))
            )
            scan_day += int(rng.integers(320, 600))

    events.sort(key=lambda e: (e.date, e.system, e.code))
    notes.sort(key=lambda n: n.date)
    imaging.sort(key=lambda im: im.date)

    record = PatientRecord(pid, demographics, events, notes, imaging)
    truth = GroundTruth(pid, positive, onset, mci_onset, severity, intensity, confounder)
    return record, truth


def generate_cohort(cfg: CohortConfig, out_dir: str | Path) -> Path:
    """Generate and persist the cohort. Returns the cohort directory.

    Layout: manifest.json, patients.ndjson, ground_truth.ndjson. The
    ground-truth file is oracle-only and must never feed the agents.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_patients + 1)
    label_rng = np.random.default_rng(seeds[0])
    positives = label_rng.random(cfg.n_patients) < cfg.prevalence
    records = []
    truths = []
    for i in range(cfg.n_patients):
        pid = f"P{i + 1:06d}"
        rng = np.random.default_rng(seeds[i + 1])
        record, truth = _generate_patient(pid, bool(positives[i]), cfg, rng)
        record.validate(cfg.cohort_start, cfg.cohort_cutoff)
        records.append(record)
        truths.append(truth)

    patients_path = out / "patients.ndjson"
    write_ndjson(patients_path, (r.to_json_dict() for r in records))
    write_ndjson(out / "ground_truth.ndjson", (t.to_json_dict() for t in truths))
    content_hash = hashlib.sha256(patients_path.read_bytes()).hexdigest()
    manifest = {
        "format": COHORT_FORMAT,
        "config": cfg.to_json_dict(),
        "n_patients": cfg.n_patients,
        "n_positive": int(positives.sum()),
        "content_hash": content_hash,
        "vocabulary_size": vocab.vocabulary_size(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out
