"""Fixed synthetic code dictionary.

Small stand-in for hospital billing vocabularies: ICD-10-style diagnosis
codes grouped into families, ATC-level-3-style medication classes, and
LOINC-style lab codes with plausible value ranges. The dementia-defining
tokens (diagnoses and medication names) are carried verbatim so wildcard
family matching has real targets.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CodeInfo:
    code: str
    system: str  # diagnosis | medication | lab
    description: str
    family: str  # consolidated feature id


# Diagnosis families: (family feature id, description, [child codes]).
_DX_FAMILIES: list[tuple[str, str, list[str]]] = [
    ("DX_vascular_dementia", "Vascular dementia", ["F01.50", "F01.51"]),
    ("DX_dementia_other_disease", "Dementia in other diseases", ["F02.80", "F02.81"]),
    ("DX_dementia_unspecified", "Unspecified dementia", ["F03.90", "F03.91"]),
    ("DX_amnestic_disorder", "Amnestic disorder", ["F04"]),
    ("DX_psp", "Progressive supranuclear palsy", ["G23.1"]),
    ("DX_alzheimers", "Alzheimer's disease", ["G30.0", "G30.1", "G30.8", "G30.9"]),
    ("DX_frontotemporal", "Frontotemporal dementia", ["G31.01", "G31.09"]),
    ("DX_lewy_body", "Dementia with Lewy bodies", ["G31.83"]),
    ("DX_degeneration_nos", "Degenerative disease of nervous system", ["G31.9"]),
    ("DX_mci", "Mild cognitive impairment spectrum", ["G31.1", "G31.84", "G31.85"]),
    # prodromal / cognitive symptom codes (risk signals, not label tokens)
    ("DX_memory_symptoms", "Memory deficit and cognitive symptoms", ["R41.3", "R41.0", "R41.81", "R41.840"]),
    ("DX_gait_falls", "Gait abnormality and falls", ["R26.81", "R26.9", "W19"]),
    # vascular and metabolic risk factors
    ("DX_hypertension", "Essential hypertension", ["I10", "I11.9", "I12.9"]),
    ("DX_diabetes", "Type 2 diabetes", ["E11.9", "E11.65", "E11.40"]),
    ("DX_hyperlipidemia", "Hyperlipidemia", ["E78.5", "E78.00", "E78.2"]),
    ("DX_atrial_fibrillation", "Atrial fibrillation", ["I48.0", "I48.91"]),
    ("DX_stroke_tia", "Cerebrovascular disease", ["I63.9", "G45.9", "I67.82"]),
    ("DX_coronary", "Coronary artery disease", ["I25.10", "I25.119"]),
    ("DX_heart_failure", "Heart failure", ["I50.9", "I50.32"]),
    ("DX_depression", "Depressive disorders", ["F32.9", "F33.1", "F32.A"]),
    ("DX_anxiety", "Anxiety disorders", ["F41.1", "F41.9"]),
    ("DX_sleep_apnea", "Sleep disorders", ["G47.33", "G47.00"]),
    ("DX_hearing_loss", "Hearing loss", ["H90.3", "H91.90"]),
    ("DX_tobacco", "Nicotine dependence", ["F17.210", "Z87.891"]),
    ("DX_alcohol", "Alcohol-related disorders", ["F10.20", "F10.10"]),
    ("DX_ckd", "Chronic kidney disease", ["N18.3", "N18.9"]),
    ("DX_copd", "Chronic obstructive pulmonary disease", ["J44.9", "J44.1"]),
    ("DX_osteoarthritis", "Osteoarthritis", ["M17.11", "M16.11", "M19.90"]),
    ("DX_osteoporosis", "Osteoporosis", ["M81.0"]),
    ("DX_cataract", "Cataract", ["H25.9", "H25.13"]),
    ("DX_glaucoma", "Glaucoma", ["H40.11X0", "H40.9"]),
    ("DX_macular_degeneration", "Macular degeneration", ["H35.30", "H35.31"]),
    ("DX_gerd", "Gastro-esophageal reflux", ["K21.9", "K21.0"]),
    ("DX_uti", "Urinary tract infection", ["N39.0"]),
    ("DX_pneumonia", "Pneumonia", ["J18.9"]),
    ("DX_hypothyroid", "Hypothyroidism", ["E03.9"]),
    ("DX_b12_deficiency", "Vitamin B12 deficiency", ["E53.8", "D51.9"]),
    ("DX_obesity", "Obesity", ["E66.9", "E66.01"]),
    ("DX_back_pain", "Dorsalgia", ["M54.50", "M54.9"]),
    ("DX_skin_neoplasm", "Benign skin neoplasm", ["D23.9"]),
    ("DX_anemia", "Anemia", ["D64.9", "D62"]),
    ("DX_parkinsons", "Parkinson's disease", ["G20"]),
    ("DX_tbi", "Traumatic brain injury history", ["S06.0X0S", "Z87.820"]),
    ("DX_insomnia", "Insomnia", ["G47.00"]),
]

# Medication classes: (family id, description, [tokens]).
_RX_FAMILIES: list[tuple[str, str, list[str]]] = [
    ("RX_dementia_drugs", "Anti-dementia agents", ["DONEPEZIL", "GALANTAMINE", "MEMANTINE", "RIVASTIGMINE", "TACRINE"]),
    ("RX_statins", "Lipid modifying agents", ["ATC_C10A"]),
    ("RX_ace_inhibitors", "ACE inhibitors", ["ATC_C09A"]),
    ("RX_beta_blockers", "Beta blocking agents", ["ATC_C07A"]),
    ("RX_diuretics", "Diuretics", ["ATC_C03A"]),
    ("RX_calcium_blockers", "Calcium channel blockers", ["ATC_C08C"]),
    ("RX_antidiabetics", "Blood glucose lowering drugs", ["ATC_A10B"]),
    ("RX_insulins", "Insulins and analogues", ["ATC_A10A"]),
    ("RX_antidepressants", "Antidepressants", ["ATC_N06A"]),
    ("RX_anxiolytics", "Anxiolytics", ["ATC_N05B"]),
    ("RX_antipsychotics", "Antipsychotics", ["ATC_N05A"]),
    ("RX_hypnotics", "Hypnotics and sedatives", ["ATC_N05C"]),
    ("RX_antithrombotics", "Antithrombotic agents", ["ATC_B01A"]),
    ("RX_nsaids", "Antiinflammatory products", ["ATC_M01A"]),
    ("RX_opioids", "Opioids", ["ATC_N02A"]),
    ("RX_ppi", "Drugs for acid related disorders", ["ATC_A02B"]),
    ("RX_thyroid", "Thyroid therapy", ["ATC_H03A"]),
    ("RX_corticosteroids", "Corticosteroids systemic", ["ATC_H02A"]),
    ("RX_vitamins", "Vitamin supplements", ["ATC_A11D"]),
    ("RX_antiparkinson", "Dopaminergic agents", ["ATC_N04B"]),
]

# Labs: (token, description, (low, high) sampling range, unit).
_LABS: list[tuple[str, str, tuple[float, float], str]] = [
    ("LOINC_4548-4", "Hemoglobin A1c/Hemoglobin.total in Blood", (4.8, 9.5), "%"),
    ("LOINC_2085-9", "Cholesterol in HDL", (28, 85), "mg/dL"),
    ("LOINC_13457-7", "LDL Cholesterol by calculation", (55, 190), "mg/dL"),
    ("LOINC_2571-8", "Triglyceride", (60, 320), "mg/dL"),
    ("LOINC_8480-6", "Systolic blood pressure", (102, 178), "mmHg"),
    ("LOINC_8462-4", "Diastolic blood pressure", (58, 102), "mmHg"),
    ("LOINC_2160-0", "Creatinine in Serum or Plasma", (0.6, 2.4), "mg/dL"),
    ("LOINC_718-7", "Hemoglobin in Blood", (10.2, 16.8), "g/dL"),
    ("LOINC_2951-2", "Sodium in Serum or Plasma", (132, 146), "mmol/L"),
    ("LOINC_2823-3", "Potassium in Serum or Plasma", (3.4, 5.3), "mmol/L"),
    ("LOINC_2132-9", "Vitamin B12 in Serum", (160, 900), "pg/mL"),
    ("LOINC_3016-3", "Thyrotropin in Serum", (0.4, 6.8), "mIU/L"),
    ("LOINC_1742-6", "Alanine aminotransferase", (8, 62), "U/L"),
    ("LOINC_17861-6", "Calcium in Serum or Plasma", (8.4, 10.6), "mg/dL"),
    ("LOINC_2339-0", "Glucose in Blood", (72, 240), "mg/dL"),
]

# Label-defining concept patterns (wildcards follow family semantics:
# "X.*" matches X itself and any code starting with "X.").
ADRD_CODE_PATTERNS = [
    "F01.*",
    "F02.*",
    "F03.*",
    "F04.*",
    "G23.1",
    "G30.*",
    "G31.01",
    "G31.09",
    "G31.83",
    "G31.9",
]
MCI_CODE_PATTERNS = ["G31.1", "G31.84", "G31.85"]
DEMENTIA_MEDICATIONS = ["DONEPEZIL", "GALANTAMINE", "MEMANTINE", "RIVASTIGMINE", "TACRINE"]


def _build_index() -> dict[str, CodeInfo]:
    index: dict[str, CodeInfo] = {}
    for family, desc, codes in _DX_FAMILIES:
        for code in codes:
            index[code] = CodeInfo(code, "diagnosis", desc, family)
    for family, desc, codes in _RX_FAMILIES:
        for code in codes:
            index[code] = CodeInfo(code, "medication", desc, family)
    for token, desc, _, _ in _LABS:
        index[token] = CodeInfo(token, "lab", desc, "LAB_" + token.split("_", 1)[1])
    return index


CODE_INDEX: dict[str, CodeInfo] = _build_index()
LAB_RANGES: dict[str, tuple[float, float]] = {t: rng for t, _, rng, _ in _LABS}

DIAGNOSIS_CODES = [c for c, info in CODE_INDEX.items() if info.system == "diagnosis"]
MEDICATION_CODES = [c for c, info in CODE_INDEX.items() if info.system == "medication"]
LAB_CODES = [c for c, info in CODE_INDEX.items() if info.system == "lab"]

# Background pools exclude dementia-defining tokens so negatives stay clean.
_LABEL_TOKEN_FAMILIES = {
    "DX_vascular_dementia",
    "DX_dementia_other_disease",
    "DX_dementia_unspecified",
    "DX_amnestic_disorder",
    "DX_psp",
    "DX_alzheimers",
    "DX_frontotemporal",
    "DX_lewy_body",
    "DX_degeneration_nos",
    "DX_mci",
}
BACKGROUND_DIAGNOSES = [
    c for c in DIAGNOSIS_CODES if CODE_INDEX[c].family not in _LABEL_TOKEN_FAMILIES
]
BACKGROUND_MEDICATIONS = [c for c in MEDICATION_CODES if CODE_INDEX[c].family != "RX_dementia_drugs"]

# EHR risk signal repertoire planted in pre-onset histories.
EHR_RISK_CODES = [
    "R41.3",
    "R41.0",
    "R41.81",
    "R26.81",
    "I10",
    "E11.9",
    "F32.9",
    "G47.33",
    "I63.9",
    "H90.3",
]

ONSET_DIAGNOSIS_CODES = ["G30.9", "G30.1", "F03.90", "F01.51", "G31.83", "F02.80"]


def describe(code: str) -> str | None:
    info = CODE_INDEX.get(code)
    return info.description if info else None


def family_of(code: str) -> str | None:
    info = CODE_INDEX.get(code)
    return info.family if info else None


def vocabulary_size() -> int:
    return len(CODE_INDEX)
