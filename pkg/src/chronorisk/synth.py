"""Synthetic EHR cohort generator with a planted, recoverable disease signal.

Each patient gets multi-label disease status drawn at configurable
prevalences (diabetes and hypertension co-occur with odds ratio 2), a short
clinical note, a 20-analyte blood panel and demographics. The signal is split
across modalities: positives mention disease keywords in the note with
probability min(1, 2 * signal_strength * modality_split), and their marker
analytes are shifted by SHIFT_SCALE * signal_strength * (1 - modality_split)
standard deviations. signal_strength 0 removes the signal entirely.

Cohort files are line-delimited JSON with a version header; generation is a
pure function of the config, so same-seed runs are byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import CohortFormatError, ConfigurationError, VersionError
from .records import (
    ANALYTE_INDEX,
    ANALYTES,
    DISEASES,
    Demographics,
    DiseaseLabels,
    LabPanel,
    PatientRecord,
)

GENERATOR_VERSION = 1
COHORT_VERSION = 1

DEFAULT_PREVALENCE = {
    "diabetes": 0.204,
    "heart_disease": 0.2257,
    "hypertension": 0.033,
}

DIABETES_HYPERTENSION_ODDS_RATIO = 2.0
MASK_RATE = 0.15
ONSET_WINDOW_DAYS = 360

# marker analytes per disease, shifted upward (+1) or downward (-1) in units
# of that analyte's healthy standard deviation
DISEASE_MARKERS: dict[str, tuple[tuple[str, float], ...]] = {
    "diabetes": (("fasting_glucose", 1.0), ("hba1c", 1.0)),
    "heart_disease": (("troponin_t", 1.0), ("bnp", 1.0), ("ldl_cholesterol", 0.7)),
    "hypertension": (("creatinine", 0.8), ("uric_acid", 0.8), ("egfr", -0.8)),
}

DISEASE_KEYWORDS: dict[str, tuple[str, ...]] = {
    "diabetes": ("polyuria", "polydipsia", "thirst", "glycosuria"),
    "heart_disease": ("angina", "palpitations", "dyspnea", "orthopnea"),
    "hypertension": ("headaches", "dizziness", "epistaxis", "tinnitus"),
}

KEYWORD_TEMPLATES = (
    "Patient reports {kw} over the past weeks.",
    "Chief complaint today is {kw}.",
    "Notes persistent {kw} since last visit.",
    "Symptoms include {kw} and general discomfort.",
)

BENIGN_SENTENCES = (
    "Routine follow up visit, vitals recorded.",
    "Patient denies fever or chills.",
    "Sleep and appetite reported as normal.",
    "Advised to continue current exercise plan.",
    "No medication changes made at this visit.",
    "Reviewed immunization history, up to date.",
    "Patient works full time and commutes by bus.",
    "Mild seasonal allergies, managed with rest.",
    "Discussed diet and hydration habits.",
    "Annual screening scheduled for next quarter.",
)

# analyte shift size, in healthy standard deviations, at full lab signal
SHIFT_SCALE = 6.0


@dataclass(frozen=True)
class CohortConfig:
    n_patients: int = 1000
    prevalence: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PREVALENCE)
    )
    signal_strength: float = 0.9
    modality_split: float = 0.5   # fraction of signal carried by the note
    seed: int = 0

    def __post_init__(self):
        if self.n_patients < 10:
            raise ConfigurationError("n_patients must be >= 10")
        if set(self.prevalence) != set(DISEASES):
            raise ConfigurationError(
                f"prevalence must cover exactly {DISEASES}"
            )
        for name, rate in self.prevalence.items():
            if not (0.0 < rate < 1.0):
                raise ConfigurationError(
                    f"prevalence for {name} must be in (0,1), got {rate}"
                )
        if not (0.0 <= self.signal_strength <= 1.0):
            raise ConfigurationError("signal_strength must be in [0,1]")
        if not (0.0 <= self.modality_split <= 1.0):
            raise ConfigurationError("modality_split must be in [0,1]")

    def as_dict(self) -> dict:
        return {
            "n_patients": self.n_patients,
            "prevalence": dict(self.prevalence),
            "signal_strength": self.signal_strength,
            "modality_split": self.modality_split,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CohortConfig":
        return cls(
            n_patients=int(doc["n_patients"]),
            prevalence={k: float(v) for k, v in doc["prevalence"].items()},
            signal_strength=float(doc["signal_strength"]),
            modality_split=float(doc["modality_split"]),
            seed=int(doc["seed"]),
        )


@dataclass
class Cohort:
    records: list[PatientRecord]
    config: CohortConfig | None = None
    generator_version: int = GENERATOR_VERSION

    def __len__(self) -> int:
        return len(self.records)


def _joint_diabetes_hypertension(p_d: float, p_h: float, odds_ratio: float) -> float:
    """P(diabetes and hypertension) with the given marginals and odds ratio."""
    if odds_ratio == 1.0:
        return p_d * p_h
    a = odds_ratio - 1.0
    b = -((odds_ratio - 1.0) * (p_d + p_h) + 1.0)
    c = odds_ratio * p_d * p_h
    p11 = (-b - math.sqrt(b * b - 4 * a * c)) / (2 * a)
    assert 0.0 < p11 < min(p_d, p_h)
    return p11


def _healthy_stats() -> tuple[np.ndarray, np.ndarray]:
    """Healthy mean and standard deviation per analyte from reference ranges."""
    mean = np.array([(a.ref_low + a.ref_high) / 2.0 for a in ANALYTES])
    sd = np.array([(a.ref_high - a.ref_low) / 4.0 for a in ANALYTES])
    return mean, np.maximum(sd, 1e-6)


def _sample_labels(rng: np.random.Generator, prevalence: dict[str, float]
                   ) -> DiseaseLabels:
    p_d = prevalence["diabetes"]
    p_h = prevalence["hypertension"]
    p11 = _joint_diabetes_hypertension(p_d, p_h, DIABETES_HYPERTENSION_ODDS_RATIO)
    diabetes = rng.random() < p_d
    p_h_given = p11 / p_d if diabetes else (p_h - p11) / (1.0 - p_d)
    hypertension = rng.random() < p_h_given
    heart = rng.random() < prevalence["heart_disease"]
    return DiseaseLabels(diabetes, heart, hypertension)


def _compose_note(rng: np.random.Generator, labels: DiseaseLabels,
                  text_signal: float) -> str:
    sentences = list(rng.choice(BENIGN_SENTENCES, size=rng.integers(2, 5),
                                replace=False))
    for disease, positive in labels.as_dict().items():
        if positive and rng.random() < text_signal:
            keyword = str(rng.choice(DISEASE_KEYWORDS[disease]))
            template = str(rng.choice(KEYWORD_TEMPLATES))
            sentences.insert(int(rng.integers(0, len(sentences) + 1)),
                             template.format(kw=keyword))
    return " ".join(sentences)


def _sample_panel(rng: np.random.Generator, labels: DiseaseLabels,
                  lab_signal: float, mean: np.ndarray, sd: np.ndarray
                  ) -> LabPanel:
    values = rng.normal(mean, sd)
    for disease, positive in labels.as_dict().items():
        if not positive:
            continue
        for analyte, direction in DISEASE_MARKERS[disease]:
            i = ANALYTE_INDEX[analyte]
            values[i] += direction * SHIFT_SCALE * lab_signal * sd[i]
    lows = np.array([a.clip_low for a in ANALYTES])
    highs = np.array([a.clip_high for a in ANALYTES])
    values = np.clip(values, lows, highs)
    mask = rng.random(len(ANALYTES)) >= MASK_RATE
    values = np.where(mask, np.round(values, 2), 0.0)
    return LabPanel(values, mask)


def generate_cohort(config: CohortConfig) -> Cohort:
    """Deterministically generate a labeled cohort from the config."""
    rng = np.random.default_rng(config.seed)
    mean, sd = _healthy_stats()
    text_signal = min(1.0, 2.0 * config.signal_strength * config.modality_split)
    lab_signal = config.signal_strength * (1.0 - config.modality_split)

    records = []
    for i in range(config.n_patients):
        labels = _sample_labels(rng, config.prevalence)
        note = _compose_note(rng, labels, text_signal)
        labs = _sample_panel(rng, labels, lab_signal, mean, sd)
        demo = Demographics(
            age=int(rng.integers(25, 91)),
            sex=str(rng.choice(("female", "male"))),
        )
        onset_day = (
            int(rng.integers(1, ONSET_WINDOW_DAYS + 1)) if labels.diabetes else None
        )
        records.append(PatientRecord(
            patient_id=f"SYN-{i:06d}",
            note=note,
            labs=labs,
            demo=demo,
            labels=labels,
            onset_day=onset_day,
        ))
    return Cohort(records=records, config=config)


def _dump_line(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def write_cohort(cohort: Cohort, path: str) -> None:
    """One header line plus one JSON record per patient, UTF-8."""
    header = {
        "cohort_version": COHORT_VERSION,
        "generator_version": cohort.generator_version,
        "config": cohort.config.as_dict() if cohort.config else None,
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(_dump_line(header) + "\n")
        for record in cohort.records:
            fh.write(_dump_line(record.to_json_dict()) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _parse_header(line: str, path: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CohortFormatError(f"line 1: invalid header in {path}", 1) from exc
    if not isinstance(header, dict) or "cohort_version" not in header:
        raise CohortFormatError(f"line 1: missing cohort_version in {path}", 1)
    if header["cohort_version"] != COHORT_VERSION:
        raise VersionError(
            f"cohort version {header['cohort_version']} not supported "
            f"(expected {COHORT_VERSION})"
        )
    return header


def iter_cohort(path: str) -> Iterator[PatientRecord]:
    """Stream records without holding the whole cohort in memory."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise CohortFormatError(f"line 1: empty cohort file {path}", 1)
        _parse_header(header_line, path)
        for line_number, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                yield PatientRecord.from_json_dict(doc)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CohortFormatError(
                    f"line {line_number}: malformed record ({exc})", line_number
                ) from exc


def read_cohort(path: str) -> Cohort:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise CohortFormatError(f"line 1: empty cohort file {path}", 1)
        header = _parse_header(header_line, path)
    config = (
        CohortConfig.from_dict(header["config"]) if header.get("config") else None
    )
    records = list(iter_cohort(path))
    return Cohort(
        records=records,
        config=config,
        generator_version=int(header.get("generator_version", GENERATOR_VERSION)),
    )
