"""Deterministic training loop: seeded init, fixed shuffling, Adam updates."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, InvalidInputError
from ..records import DISEASES, PatientRecord
from ..vocab import Vocabulary, tokenize
from . import network
from .backprop import backward_batch
from .loss import ClassWeights, disease_loss_batch, horizon_loss_batch, horizon_targets
from .network import Model, NormStats
from .params import Hyperparams, init_params, zeros_like_params

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 12
    batch_size: int = 16
    learning_rate: float = 1e-3
    val_fraction: float = 0.1
    vocab_min_freq: int = 2
    vocab_max_size: int = 20_000
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if not (0.0 <= self.val_fraction < 1.0):
            raise ConfigurationError("val_fraction must be in [0, 1)")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be >= 0")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float | None


@dataclass
class TrainLog:
    epochs: list[EpochStats]
    n_train: int
    n_val: int
    seed: int
    wall_seconds: float = 0.0

    def final_train_loss(self) -> float:
        return self.epochs[-1].train_loss if self.epochs else float("nan")


def validate_cohort_for_training(records: list[PatientRecord]) -> None:
    if not records:
        raise ConfigurationError("cohort is empty")
    unlabeled = [r.patient_id for r in records if r.labels is None]
    if unlabeled:
        raise InvalidInputError(
            f"{len(unlabeled)} record(s) missing labels (e.g. {unlabeled[0]})"
        )
    y = np.stack([r.labels.as_array() for r in records])
    for i, disease in enumerate(DISEASES):
        pos = int(y[:, i].sum())
        if pos == 0:
            raise ConfigurationError(f"degenerate cohort: no positive {disease} labels")
        if pos == len(records):
            raise ConfigurationError(f"degenerate cohort: no negative {disease} labels")


def _prepare(records, vocab, norm, l_max):
    prepared = []
    for r in records:
        ids = tokenize(r.note, vocab, l_max)
        t, eligible = horizon_targets(r.labels, r.onset_day)
        prepared.append((
            np.asarray([ids]),
            network.lab_input(r.labs, norm)[None, :],
            network.demo_input(r.demo)[None, :],
            r.labels.as_array()[None, :],
            t[None, :],
            np.array([1.0 if eligible else 0.0]),
        ))
    return prepared


def _batch_loss_and_grads(batch, params, hp, pos_weight):
    """Mean loss and mean gradients over a list of prepared records."""
    scale = 1.0 / len(batch)
    total = 0.0
    acc = zeros_like_params(params)
    for ids, lab_x, demo_x, y, hor_t, eligible in batch:
        fw = network.forward_batch(ids, lab_x, demo_x, params, hp)
        dis, dz_dis = disease_loss_batch(fw["dis_p"], y, pos_weight)
        hor, dz_hor = horizon_loss_batch(fw["hazards"], fw["pcum"], hor_t, eligible)
        total += float(dis[0] + hor[0])
        grads = backward_batch(fw, params, hp, dz_dis * scale, dz_hor * scale)
        for name in acc:
            acc[name] += grads[name]
    return total * scale, acc


def _forward_loss(prepared, params, hp, pos_weight):
    total = 0.0
    for ids, lab_x, demo_x, y, hor_t, eligible in prepared:
        fw = network.forward_batch(ids, lab_x, demo_x, params, hp)
        dis, _ = disease_loss_batch(fw["dis_p"], y, pos_weight)
        hor, _ = horizon_loss_batch(fw["hazards"], fw["pcum"], hor_t, eligible)
        total += float(dis[0] + hor[0])
    return total / max(len(prepared), 1)


def train(cohort: list[PatientRecord], config: TrainConfig, seed: int
          ) -> tuple[Model, TrainLog]:
    """Train on a labeled cohort. Deterministic given (cohort, config, seed)."""
    t_start = time.monotonic()
    validate_cohort_for_training(cohort)
    rng = np.random.default_rng(seed)

    order = rng.permutation(len(cohort))
    n_val = int(round(config.val_fraction * len(cohort)))
    val_records = [cohort[i] for i in order[:n_val]]
    train_records = [cohort[i] for i in order[n_val:]]
    if not train_records:
        raise ConfigurationError("validation split leaves no training records")

    vocab = Vocabulary.build(
        [r.note for r in train_records],
        min_freq=config.vocab_min_freq,
        max_size=config.vocab_max_size,
    )
    norm = NormStats.from_records(train_records)
    weights = ClassWeights.from_records(train_records)

    hp = Hyperparams(**{**config.hyper.as_dict(), "vocab_size": len(vocab)})
    params = init_params(hp, rng)
    model = Model(hyper=hp, params=params, vocab=vocab, norm=norm)

    prepared_train = _prepare(train_records, vocab, norm, hp.l_max)
    prepared_val = _prepare(val_records, vocab, norm, hp.l_max)

    adam_m = zeros_like_params(params)
    adam_v = zeros_like_params(params)
    step = 0

    log = TrainLog(epochs=[], n_train=len(train_records), n_val=len(val_records),
                   seed=seed)
    for epoch in range(config.epochs):
        epoch_order = rng.permutation(len(prepared_train))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(epoch_order), config.batch_size):
            batch = [prepared_train[i] for i in epoch_order[start:start + config.batch_size]]
            batch_loss, grads = _batch_loss_and_grads(batch, params, hp, weights.pos_weight)
            epoch_loss += batch_loss
            n_batches += 1
            step += 1
            bc1 = 1.0 - ADAM_BETA1 ** step
            bc2 = 1.0 - ADAM_BETA2 ** step
            for name, g in grads.items():
                adam_m[name] = ADAM_BETA1 * adam_m[name] + (1.0 - ADAM_BETA1) * g
                adam_v[name] = ADAM_BETA2 * adam_v[name] + (1.0 - ADAM_BETA2) * g * g
                params[name] -= config.learning_rate * (adam_m[name] / bc1) / (
                    np.sqrt(adam_v[name] / bc2) + ADAM_EPS
                )
        val_loss = (
            _forward_loss(prepared_val, params, hp, weights.pos_weight)
            if prepared_val else None
        )
        log.epochs.append(EpochStats(
            epoch=epoch,
            train_loss=epoch_loss / max(n_batches, 1),
            val_loss=val_loss,
        ))
    log.wall_seconds = time.monotonic() - t_start
    return model, log
