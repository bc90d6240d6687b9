"""Core domain types: lab panels, demographics, patient records, model outputs.

The analyte catalog is fixed at 20 blood-test analytes. Order matters: lab
panels are stored as fixed-order vectors indexed by catalog position, and a
trained model is only valid for the catalog it was trained with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class AnalyteSpec:
    name: str
    unit: str
    ref_low: float   # lower edge of the adult reference interval
    ref_high: float  # upper edge
    clip_low: float  # physiological floor used when generating values
    clip_high: float


# name, unit, reference interval, physiological clip bounds
ANALYTES: tuple[AnalyteSpec, ...] = (
    AnalyteSpec("fasting_glucose", "mg/dL", 70, 100, 40, 600),
    AnalyteSpec("hba1c", "%", 4.0, 5.6, 3.0, 18.0),
    AnalyteSpec("total_cholesterol", "mg/dL", 125, 200, 60, 500),
    AnalyteSpec("hdl_cholesterol", "mg/dL", 40, 90, 10, 150),
    AnalyteSpec("ldl_cholesterol", "mg/dL", 50, 130, 20, 400),
    AnalyteSpec("triglycerides", "mg/dL", 40, 150, 20, 1500),
    AnalyteSpec("creatinine", "mg/dL", 0.6, 1.3, 0.2, 12.0),
    AnalyteSpec("egfr", "mL/min/1.73m2", 60, 120, 5, 160),
    AnalyteSpec("alt", "U/L", 7, 40, 2, 800),
    AnalyteSpec("ast", "U/L", 8, 40, 2, 800),
    AnalyteSpec("hemoglobin", "g/dL", 12.0, 17.5, 4.0, 22.0),
    AnalyteSpec("hematocrit", "%", 36, 52, 15, 65),
    AnalyteSpec("wbc_count", "10^3/uL", 4.0, 11.0, 0.5, 60.0),
    AnalyteSpec("platelet_count", "10^3/uL", 150, 450, 10, 1200),
    AnalyteSpec("sodium", "mmol/L", 135, 145, 110, 175),
    AnalyteSpec("potassium", "mmol/L", 3.5, 5.1, 1.5, 9.0),
    AnalyteSpec("crp", "mg/L", 0.0, 5.0, 0.0, 300.0),
    AnalyteSpec("troponin_t", "ng/L", 0.0, 14.0, 0.0, 2000.0),
    AnalyteSpec("bnp", "pg/mL", 0.0, 100.0, 0.0, 5000.0),
    AnalyteSpec("uric_acid", "mg/dL", 2.5, 7.0, 0.5, 20.0),
)

N_ANALYTES = len(ANALYTES)
ANALYTE_NAMES = tuple(a.name for a in ANALYTES)
ANALYTE_INDEX = {a.name: i for i, a in enumerate(ANALYTES)}

DISEASES = ("diabetes", "heart_disease", "hypertension")
HORIZONS = (90, 180, 270, 360)

SEXES = ("female", "male", "unknown")


@dataclass
class LabPanel:
    """Fixed-order analyte vector with a measured/missing mask.

    The panel width is fixed per model instance; the 20-analyte catalog above
    is the domain default, smaller widths exist only for scaled-down models.
    """

    values: np.ndarray  # (K,) float64, 0.0 where not measured
    mask: np.ndarray    # (K,) bool, True = measured

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if (
            self.values.ndim != 1
            or self.values.shape != self.mask.shape
            or self.values.size == 0
        ):
            raise InvalidInputError("lab values and mask must be equal-length vectors")
        measured = self.values[self.mask]
        if measured.size and not np.all(np.isfinite(measured)):
            raise InvalidInputError("measured lab values must be finite")

    @classmethod
    def empty(cls, size: int = N_ANALYTES) -> "LabPanel":
        return cls(np.zeros(size), np.zeros(size, dtype=bool))

    @classmethod
    def from_measurements(cls, measurements: dict[str, float]) -> "LabPanel":
        """Build a panel from {analyte_name: value}; unknown names are rejected."""
        values = np.zeros(N_ANALYTES)
        mask = np.zeros(N_ANALYTES, dtype=bool)
        unknown = [n for n in measurements if n not in ANALYTE_INDEX]
        if unknown:
            raise InvalidInputError(f"unknown analyte name(s): {', '.join(sorted(unknown))}")
        bad = [n for n, v in measurements.items() if not math.isfinite(float(v))]
        if bad:
            raise InvalidInputError(f"non-finite value for analyte(s): {', '.join(sorted(bad))}")
        for name, value in measurements.items():
            i = ANALYTE_INDEX[name]
            values[i] = float(value)
            mask[i] = True
        return cls(values, mask)

    def to_measurements(self) -> dict[str, float]:
        if self.values.shape[0] != N_ANALYTES:
            raise InvalidInputError(
                "only catalog-width panels can be named by analyte"
            )
        return {
            ANALYTE_NAMES[i]: float(self.values[i])
            for i in range(N_ANALYTES)
            if self.mask[i]
        }

    def merged_with(self, other: "LabPanel") -> "LabPanel":
        """New panel where `other`'s measured entries override this one's."""
        values = self.values.copy()
        mask = self.mask.copy()
        values[other.mask] = other.values[other.mask]
        mask |= other.mask
        return LabPanel(values, mask)

    @property
    def n_measured(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class Demographics:
    age: int
    sex: str

    def __post_init__(self):
        if not (0 <= int(self.age) <= 120):
            raise InvalidInputError(f"age out of range: {self.age}")
        if self.sex not in SEXES:
            raise InvalidInputError(f"sex must be one of {SEXES}, got {self.sex!r}")


@dataclass(frozen=True)
class DiseaseLabels:
    diabetes: bool
    heart_disease: bool
    hypertension: bool

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.diabetes, self.heart_disease, self.hypertension], dtype=np.float64
        )

    def as_dict(self) -> dict[str, bool]:
        return {
            "diabetes": self.diabetes,
            "heart_disease": self.heart_disease,
            "hypertension": self.hypertension,
        }


@dataclass
class PatientRecord:
    patient_id: str
    note: str = ""
    labs: LabPanel = field(default_factory=LabPanel.empty)
    demo: Demographics = field(default_factory=lambda: Demographics(50, "unknown"))
    labels: DiseaseLabels | None = None
    onset_day: int | None = None  # days until diabetes onset, if known

    def __post_init__(self):
        if not self.patient_id:
            raise InvalidInputError("patient_id must be non-empty")
        if self.onset_day is not None and not (1 <= int(self.onset_day)):
            raise InvalidInputError(f"onset_day must be positive, got {self.onset_day}")

    def to_json_dict(self) -> dict:
        doc: dict = {
            "patient_id": self.patient_id,
            "note": self.note,
            "labs": self.labs.to_measurements(),
            "demo": {"age": int(self.demo.age), "sex": self.demo.sex},
        }
        if self.labels is not None:
            doc["labels"] = self.labels.as_dict()
        if self.onset_day is not None:
            doc["onset_day"] = int(self.onset_day)
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PatientRecord":
        labels = None
        if "labels" in doc and doc["labels"] is not None:
            lab = doc["labels"]
            labels = DiseaseLabels(
                bool(lab["diabetes"]),
                bool(lab["heart_disease"]),
                bool(lab["hypertension"]),
            )
        return cls(
            patient_id=doc["patient_id"],
            note=doc.get("note", ""),
            labs=LabPanel.from_measurements(doc.get("labs", {})),
            demo=Demographics(
                int(doc.get("demo", {}).get("age", 50)),
                doc.get("demo", {}).get("sex", "unknown"),
            ),
            labels=labels,
            onset_day=doc.get("onset_day"),
        )

    @property
    def has_content(self) -> bool:
        """True when there is something for the model to look at."""
        return bool(self.note.strip()) or self.labs.n_measured > 0


@dataclass(frozen=True)
class RiskScores:
    p_diabetes: float
    p_heart: float
    p_hypertension: float

    def __post_init__(self):
        for p in (self.p_diabetes, self.p_heart, self.p_hypertension):
            if not (0.0 <= p <= 1.0):
                raise InvalidInputError(f"probability out of [0,1]: {p}")

    def as_dict(self) -> dict[str, float]:
        return {
            "diabetes": self.p_diabetes,
            "heart_disease": self.p_heart,
            "hypertension": self.p_hypertension,
        }

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p_diabetes, self.p_heart, self.p_hypertension], dtype=np.float64
        )


@dataclass(frozen=True)
class HorizonRisks:
    """Cumulative onset-by-horizon probabilities, monotone in the horizon."""

    p_onset_by: dict[int, float]

    def __post_init__(self):
        if tuple(sorted(self.p_onset_by)) != HORIZONS:
            raise InvalidInputError(f"horizons must be exactly {HORIZONS}")
        prev = 0.0
        for h in HORIZONS:
            p = self.p_onset_by[h]
            if not (0.0 <= p <= 1.0):
                raise InvalidInputError(f"probability out of [0,1]: {p}")
            if p < prev - 1e-12:
                raise InvalidInputError("horizon risks must be non-decreasing")
            prev = p

    def as_dict(self) -> dict[str, float]:
        return {str(h): self.p_onset_by[h] for h in HORIZONS}

    def as_array(self) -> np.ndarray:
        return np.array([self.p_onset_by[h] for h in HORIZONS], dtype=np.float64)
