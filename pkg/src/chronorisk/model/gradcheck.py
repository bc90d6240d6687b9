"""Finite-difference verification of the analytic gradients.

Central differences at 64-bit precision, step 1e-4, on sampled coordinates of
every parameter tensor. Relative error uses |ga - gn| / max(|ga|, |gn|, 1e-8).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..records import PatientRecord
from ..errors import InvalidInputError
from . import network
from .loss import disease_loss_batch, horizon_loss_batch, horizon_targets
from .backprop import record_loss_and_grads
from .network import Model
from .params import Hyperparams, ModelParams

FD_STEP = 1e-4
MIN_COORDS = 20


@dataclass
class GradReport:
    tolerance: float
    max_rel_err: dict[str, float] = field(default_factory=dict)
    checked_coords: dict[str, int] = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.max_rel_err.values()) if self.max_rel_err else 0.0

    @property
    def flagged(self) -> list[str]:
        return sorted(t for t, e in self.max_rel_err.items() if e > self.tolerance)

    @property
    def passed(self) -> bool:
        return not self.flagged

    def summary(self) -> str:
        lines = [f"gradient check: {'ok' if self.passed else 'FAILED'} "
                 f"(worst rel err {self.worst:.3e}, tolerance {self.tolerance:.1e})"]
        for name in sorted(self.max_rel_err, key=self.max_rel_err.get, reverse=True):
            mark = " <-- exceeds tolerance" if name in self.flagged else ""
            lines.append(f"  {name:12s} {self.max_rel_err[name]:.3e} "
                         f"({self.checked_coords[name]} coords){mark}")
        return "\n".join(lines)


def _coords_for(name: str, tensor: np.ndarray, ids: list[int],
                rng: np.random.Generator, n: int) -> list[tuple[int, ...]]:
    flat = [tuple(np.unravel_index(i, tensor.shape))
            for i in rng.choice(tensor.size, size=min(n, tensor.size), replace=False)]
    if name == "embed":
        # make sure rows the record actually touches are represented
        used = sorted(set(ids))
        cols = rng.integers(0, tensor.shape[1], size=len(used) * 2)
        extra = [(used[i % len(used)], int(cols[i])) for i in range(len(used) * 2)]
        flat = list(dict.fromkeys(flat + extra))
    return flat


def grad_check(model: Model, record: PatientRecord, tolerance: float = 1e-4,
               seed: int = 0, n_coords: int = MIN_COORDS,
               corrupt: str | None = None) -> GradReport:
    """Compare analytic gradients against central finite differences.

    Every parameter tensor is checked on >= n_coords sampled coordinates.
    `corrupt` multiplies one tensor's analytic gradient by 2 — a self-test
    hook proving the checker can actually detect a wrong gradient.
    """
    if record.labels is None:
        raise InvalidInputError("gradient check needs a labeled record")
    if tolerance <= 0:
        raise InvalidInputError("tolerance must be positive")

    hp, params = model.hyper, model.params
    ids, lab_x, demo_x = model.record_inputs(record)
    y = record.labels.as_array()
    hor_t, hor_eligible = horizon_targets(record.labels, record.onset_day)
    pos_weight = np.ones(hp.n_diseases)

    def loss_at(p: ModelParams) -> float:
        fw = network.forward_batch(
            np.asarray([ids]), lab_x[None, :], demo_x[None, :], p, hp
        )
        dis, _ = disease_loss_batch(fw["dis_p"], y[None, :], pos_weight)
        hor, _ = horizon_loss_batch(
            fw["hazards"], fw["pcum"], hor_t[None, :],
            np.array([1.0 if hor_eligible else 0.0]),
        )
        return float(dis[0] + hor[0])

    _, analytic = record_loss_and_grads(
        ids, lab_x, demo_x, y, hor_t, hor_eligible, params, hp, pos_weight
    )
    if corrupt is not None:
        analytic[corrupt] = analytic[corrupt] * 2.0

    rng = np.random.default_rng(seed)
    report = GradReport(tolerance=tolerance)
    for name, tensor in params.items():
        worst = 0.0
        coords = _coords_for(name, tensor, ids, rng, n_coords)
        for idx in coords:
            orig = tensor[idx]
            tensor[idx] = orig + FD_STEP
            up = loss_at(params)
            tensor[idx] = orig - FD_STEP
            down = loss_at(params)
            tensor[idx] = orig
            gn = (up - down) / (2.0 * FD_STEP)
            ga = analytic[name][idx]
            rel = abs(ga - gn) / max(abs(ga), abs(gn), 1e-8)
            worst = max(worst, rel)
        report.max_rel_err[name] = worst
        report.checked_coords[name] = len(coords)
    return report
