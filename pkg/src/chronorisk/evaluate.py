"""Held-out evaluation: per-disease precision/recall/F1, horizon metrics,
modality ablations, and fixed-width report rendering with CSV export.

Ablations mask a whole modality at inference: text_only hides the lab panel,
labs_only hides the note. Demographics stay visible in every ablation.
Zero-denominator precision/recall are reported as 0 and flagged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model.network import Model
from .records import DISEASES, HORIZONS, PatientRecord
from .model.loss import horizon_targets

ABLATIONS = ("fused", "text_only", "labs_only")

DISPLAY_NAMES = {
    "diabetes": "Diabetes",
    "heart_disease": "Heart disease",
    "hypertension": "Hypertension",
}


@dataclass(frozen=True)
class Metrics:
    n_positive: int
    n_total: int
    precision: float
    recall: float
    f1: float
    threshold: float
    zero_denominator: bool = False  # precision or recall hit a 0/0


@dataclass
class MetricsReport:
    ablation: str
    split: str
    threshold: float
    n_records: int
    diseases: dict[str, Metrics] = field(default_factory=dict)
    horizons: dict[int, Metrics] = field(default_factory=dict)


def confusion_metrics(y_true: np.ndarray, y_pred: np.ndarray,
                      threshold: float) -> Metrics:
    """Precision/recall/F1 from binary vectors, zero-denominator -> 0."""
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    tp = int(np.sum(y_true & y_pred))
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    zero = (tp + fp == 0) or (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        n_positive=int(y_true.sum()),
        n_total=int(y_true.size),
        precision=precision,
        recall=recall,
        f1=f1,
        threshold=threshold,
        zero_denominator=zero,
    )


def predict_cohort(model: Model, records: list[PatientRecord], ablation: str
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Disease probabilities (N,3) and horizon risks (N,4) under an ablation."""
    if ablation not in ABLATIONS:
        raise InvalidInputError(
            f"ablation must be one of {', '.join(ABLATIONS)}; got {ablation!r}"
        )
    mask_text = ablation == "labs_only"
    mask_labs = ablation == "text_only"
    dis = np.zeros((len(records), len(DISEASES)))
    hor = np.zeros((len(records), len(HORIZONS)))
    for i, record in enumerate(records):
        p = model.predict(record, mask_text=mask_text, mask_labs=mask_labs)
        dis[i] = p.risks.as_array()
        hor[i] = p.horizons.as_array()
    return dis, hor


def evaluate(model: Model, records: list[PatientRecord], threshold: float = 0.5,
             ablation: str = "fused", split: str = "eval") -> MetricsReport:
    """Classify the cohort at a fixed threshold and count the confusion."""
    if not records:
        raise InvalidInputError("cannot evaluate an empty cohort")
    unlabeled = [r.patient_id for r in records if r.labels is None]
    if unlabeled:
        raise InvalidInputError(
            f"{len(unlabeled)} record(s) missing labels (e.g. {unlabeled[0]})"
        )
    if not (0.0 < threshold < 1.0):
        raise InvalidInputError(f"threshold must be in (0,1), got {threshold}")

    dis_p, hor_p = predict_cohort(model, records, ablation)
    y = np.stack([r.labels.as_array() for r in records])

    report = MetricsReport(
        ablation=ablation, split=split, threshold=threshold,
        n_records=len(records),
    )
    for j, disease in enumerate(DISEASES):
        report.diseases[disease] = confusion_metrics(
            y[:, j] > 0.5, dis_p[:, j] >= threshold, threshold
        )

    # horizon ground truth exists for records with a known onset day and for
    # confirmed diabetes negatives; positives with unknown onset are skipped
    eligible_rows, targets = [], []
    for i, r in enumerate(records):
        t, eligible = horizon_targets(r.labels, r.onset_day)
        if eligible:
            eligible_rows.append(i)
            targets.append(t)
    if eligible_rows:
        t = np.stack(targets)
        p = hor_p[eligible_rows]
        for j, day in enumerate(HORIZONS):
            report.horizons[day] = confusion_metrics(
                t[:, j] > 0.5, p[:, j] >= threshold, threshold
            )
    return report


# ---------------------------------------------------------------------------
# rendering

def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ordered(reports: list[MetricsReport]) -> list[MetricsReport]:
    rank = {name: i for i, name in enumerate(ABLATIONS)}
    return sorted(reports, key=lambda r: rank.get(r.ablation, len(rank)))


def report_table(reports: list[MetricsReport]) -> str:
    """Fixed-width table: rows are disease x ablation, Table-1-style labels."""
    if not reports:
        raise InvalidInputError("need at least one report to render")
    ordered = _ordered(reports)

    rows: list[tuple[str, str, str, str, str]] = []
    flagged = False
    for disease in DISEASES:
        n_pos = ordered[0].diseases[disease].n_positive
        label = f"{DISPLAY_NAMES[disease]} (n={n_pos:,})"
        for report in ordered:
            m = report.diseases[disease]
            flagged |= m.zero_denominator
            rows.append((label, report.ablation, _fmt(m.precision),
                         _fmt(m.recall), _fmt(m.f1)))
            label = ""
    if any(r.horizons for r in ordered):
        for day in HORIZONS:
            first = next(r for r in ordered if r.horizons)
            label = f"Diabetes onset <= {day}d (n={first.horizons[day].n_positive:,})"
            for report in ordered:
                if day not in report.horizons:
                    continue
                m = report.horizons[day]
                flagged |= m.zero_denominator
                rows.append((label, report.ablation, _fmt(m.precision),
                             _fmt(m.recall), _fmt(m.f1)))
                label = ""

    headers = ("Disease type", "Model", "Precision", "Recall", "F1")
    widths = [max(len(headers[c]), *(len(r[c]) for r in rows))
              for c in range(len(headers))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    if flagged:
        lines.append("")
        lines.append("* zero-denominator precision/recall reported as 0")
    return "\n".join(lines)


def write_csv(reports: list[MetricsReport], path: str) -> None:
    """disease,ablation,n_pos,precision,recall,f1,threshold rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["disease", "ablation", "n_pos", "precision", "recall", "f1",
             "threshold"]
        )
        for report in _ordered(reports):
            for disease in DISEASES:
                m = report.diseases[disease]
                writer.writerow([
                    disease, report.ablation, m.n_positive,
                    f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}",
                    f"{m.threshold:g}",
                ])
            for day in HORIZONS:
                if day not in report.horizons:
                    continue
                m = report.horizons[day]
                writer.writerow([
                    f"horizon_{day}", report.ablation, m.n_positive,
                    f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}",
                    f"{m.threshold:g}",
                ])
