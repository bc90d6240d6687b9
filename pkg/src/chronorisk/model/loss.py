"""Training objective: weighted disease BCE plus cumulative-horizon BCE.

Probabilities are clamped to [EPS, 1-EPS] before the log; where the clamp is
active the gradient is zero, matching the implemented (clamped) loss exactly
so finite-difference checks stay honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..records import DISEASES, HORIZONS, DiseaseLabels, HorizonRisks, PatientRecord, RiskScores

EPS = 1e-7


@dataclass(frozen=True)
class ClassWeights:
    """Positive-class weights w_i = negatives/positives, per disease."""

    pos_weight: np.ndarray  # (3,)

    @classmethod
    def unit(cls) -> "ClassWeights":
        return cls(np.ones(len(DISEASES)))

    @classmethod
    def from_records(cls, records: list[PatientRecord]) -> "ClassWeights":
        y = np.stack([r.labels.as_array() for r in records])
        pos = y.sum(axis=0)
        neg = len(records) - pos
        w = np.where(pos > 0, neg / np.maximum(pos, 1), 1.0)
        return cls(w)


def horizon_targets(labels: DiseaseLabels, onset_day: int | None) -> tuple[np.ndarray, bool]:
    """Cumulative targets t_j = [onset <= horizon_j] and loss eligibility.

    A record contributes the horizon term when its onset day is known or it is
    a confirmed diabetes negative over the full 360-day window.
    """
    if onset_day is not None:
        t = np.array([1.0 if onset_day <= h else 0.0 for h in HORIZONS])
        return t, True
    if not labels.diabetes:
        return np.zeros(len(HORIZONS)), True
    return np.zeros(len(HORIZONS)), False


def _bce(p: np.ndarray, t: np.ndarray, w: np.ndarray) -> float:
    pc = np.clip(p, EPS, 1.0 - EPS)
    return float(-np.sum(w * t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)))


def loss(risks: RiskScores, horizons: HorizonRisks, labels: DiseaseLabels | None,
         onset_day: int | None, weights: ClassWeights) -> float:
    """Scalar training loss for one record."""
    if labels is None:
        raise InvalidInputError("loss requires labels")
    total = _bce(risks.as_array(), labels.as_array(), weights.pos_weight)
    t, eligible = horizon_targets(labels, onset_day)
    if eligible:
        total += _bce(horizons.as_array(), t, np.ones(len(HORIZONS)))
    return total


# ---------------------------------------------------------------------------
# batched array forms used by the trainer (gradients w.r.t. logits)

def disease_loss_batch(p: np.ndarray, y: np.ndarray, w: np.ndarray):
    """(per-record loss (B,), dL/dlogit (B,3)) for p = sigmoid(logit)."""
    pc = np.clip(p, EPS, 1.0 - EPS)
    losses = -np.sum(w * y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc), axis=1)
    active = (p > EPS) & (p < 1.0 - EPS)
    dlogit = (-w * y * (1.0 - p) + (1.0 - y) * p) * active
    return losses, dlogit


def horizon_loss_batch(hazards: np.ndarray, pcum: np.ndarray, t: np.ndarray,
                       eligible: np.ndarray):
    """(per-record loss (B,), dL/dlogit (B,4)) through the cumulative product.

    pcum_j = 1 - prod_{k<=j} (1 - h_k); rows with eligible=False contribute 0.
    """
    b, n = hazards.shape
    pc = np.clip(pcum, EPS, 1.0 - EPS)
    losses = -np.sum(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc), axis=1)
    losses = losses * eligible

    active = (pcum > EPS) & (pcum < 1.0 - EPS)
    dpcum = (-t / pc + (1.0 - t) / (1.0 - pc)) * active * eligible[:, None]
    q = 1.0 - hazards
    # dpcum_j / dh_k = prod_{i<=j, i!=k} q_i for k <= j, else 0
    m = np.zeros((b, n, n))
    for j in range(n):
        for k in range(j + 1):
            idx = [i for i in range(j + 1) if i != k]
            m[:, j, k] = np.prod(q[:, idx], axis=1) if idx else 1.0
    dh = np.einsum("bj,bjk->bk", dpcum, m)
    dlogit = dh * hazards * (1.0 - hazards)
    return losses, dlogit
