"""Forward passes of the fusion network plus the trained-model bundle.

The pipeline per record: tokenize -> encode_text, encode_labs -> fuse ->
disease / horizon heads. Batched internals carry a leading axis; sequences in
one batch must share a length, so record-level callers use batches of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..records import (
    HORIZONS,
    Demographics,
    HorizonRisks,
    LabPanel,
    PatientRecord,
    RiskScores,
    SEXES,
)
from ..vocab import Vocabulary, tokenize
from . import layers
from .params import Hyperparams, ModelParams

_POS_CACHE: dict[int, np.ndarray] = {}


def position_signal(length: int, dim: int) -> np.ndarray:
    """Sinusoidal position rows, cached and grown on demand."""
    table = _POS_CACHE.get(dim)
    if table is None or table.shape[0] < length:
        table = layers.sinusoidal_positions(max(length, 256), dim)
        table.flags.writeable = False
        _POS_CACHE[dim] = table
    return table[:length]


@dataclass
class NormStats:
    """Per-analyte standardization statistics frozen from the training cohort."""

    mean: np.ndarray        # (K,)
    std: np.ndarray         # (K,), 1.0 where the analyte is flagged constant
    constant: np.ndarray    # (K,) bool: no variance observed in training
    age_mean: float = 50.0

    @classmethod
    def from_records(cls, records: list[PatientRecord]) -> "NormStats":
        k = records[0].labs.values.shape[0] if records else 0
        values = np.stack([r.labs.values for r in records]) if records else np.zeros((0, k))
        masks = np.stack([r.labs.mask for r in records]) if records else np.zeros((0, k), bool)
        counts = masks.sum(axis=0)
        mean = np.zeros(k)
        std = np.ones(k)
        constant = np.zeros(k, dtype=bool)
        for i in range(k):
            measured = values[masks[:, i], i]
            if measured.size == 0:
                constant[i] = True
                continue
            mean[i] = measured.mean()
            s = measured.std()
            if s <= 0.0:
                constant[i] = True
            else:
                std[i] = s
        del counts
        ages = [r.demo.age for r in records]
        age_mean = float(np.mean(ages)) if ages else 50.0
        return cls(mean, std, constant, age_mean)

    def as_dict(self) -> dict:
        return {
            "mean": [float(x) for x in self.mean],
            "std": [float(x) for x in self.std],
            "constant": [bool(x) for x in self.constant],
            "age_mean": float(self.age_mean),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NormStats":
        return cls(
            np.array(doc["mean"], dtype=np.float64),
            np.array(doc["std"], dtype=np.float64),
            np.array(doc["constant"], dtype=bool),
            float(doc["age_mean"]),
        )


def lab_input(labs: LabPanel, norm: NormStats) -> np.ndarray:
    """Standardized values (0 where missing) concatenated with the mask bits: (2K,)."""
    z = np.where(labs.mask, (labs.values - norm.mean) / norm.std, 0.0)
    return np.concatenate([z, labs.mask.astype(np.float64)])


def demo_input(demo: Demographics) -> np.ndarray:
    """One-hot sex plus age/100: (4,)."""
    onehot = np.zeros(3)
    onehot[SEXES.index(demo.sex)] = 1.0
    return np.concatenate([onehot, [demo.age / 100.0]])


@dataclass
class FusedRepresentation:
    pooled: np.ndarray     # (d,)
    attention: np.ndarray  # (H, L+2, L+2), rows sum to 1


# ---------------------------------------------------------------------------
# batched internals (leading axis B; all sequences in a batch share L)

def encode_text_batch(ids: np.ndarray, params: ModelParams, hp: Hyperparams):
    ids = np.asarray(ids)
    b, length = ids.shape
    x0 = params["embed"][ids] + position_signal(length, hp.d)[None, :, :]
    x1, _, attn_cache = layers.mha_forward(
        x0, params["txt_wq"], params["txt_wk"], params["txt_wv"], params["txt_wo"],
        hp.n_heads,
    )
    x2, ff_cache = layers.ff_forward(
        x1, params["txt_ff_w1"], params["txt_ff_b1"],
        params["txt_ff_w2"], params["txt_ff_b2"],
    )
    return x2, (attn_cache, ff_cache)


def encode_labs_batch(lab_x: np.ndarray, params: ModelParams):
    return layers.mlp3_forward(
        lab_x,
        params["lab_w1"], params["lab_b1"],
        params["lab_w2"], params["lab_b2"],
        params["lab_w3"], params["lab_b3"],
    )


def encode_demo_batch(demo_x: np.ndarray, params: ModelParams):
    return demo_x @ params["demo_w"] + params["demo_b"]


def fuse_batch(text: np.ndarray, lab_tok: np.ndarray, demo_tok: np.ndarray,
               params: ModelParams, hp: Hyperparams):
    rows = np.concatenate([text, lab_tok[:, None, :], demo_tok[:, None, :]], axis=1)
    fused, att, cache = layers.mha_forward(
        rows, params["fus_wq"], params["fus_wk"], params["fus_wv"], params["fus_wo"],
        hp.n_heads,
    )
    pooled = fused.mean(axis=1)
    return pooled, att, cache


def heads_batch(pooled: np.ndarray, params: ModelParams):
    dis_logits = pooled @ params["dis_w"] + params["dis_b"]
    hor_logits = pooled @ params["hor_w"] + params["hor_b"]
    dis_p = layers.sigmoid(dis_logits)
    hazards = layers.sigmoid(hor_logits)
    pcum = 1.0 - np.cumprod(1.0 - hazards, axis=1)
    return dis_logits, dis_p, hor_logits, hazards, pcum


def forward_batch(ids: np.ndarray, lab_x: np.ndarray, demo_x: np.ndarray,
                  params: ModelParams, hp: Hyperparams) -> dict:
    """Full forward pass with every cache needed for the backward pass."""
    text, text_caches = encode_text_batch(ids, params, hp)
    lab_tok, lab_cache = encode_labs_batch(lab_x, params)
    demo_tok = encode_demo_batch(demo_x, params)
    pooled, att, fuse_cache = fuse_batch(text, lab_tok, demo_tok, params, hp)
    dis_logits, dis_p, hor_logits, hazards, pcum = heads_batch(pooled, params)
    return {
        "ids": ids, "lab_x": lab_x, "demo_x": demo_x,
        "text_caches": text_caches, "lab_cache": lab_cache,
        "fuse_cache": fuse_cache, "att": att, "pooled": pooled,
        "dis_logits": dis_logits, "dis_p": dis_p,
        "hor_logits": hor_logits, "hazards": hazards, "pcum": pcum,
    }


# ---------------------------------------------------------------------------
# record-level operations

def encode_text(token_ids, params: ModelParams, hp: Hyperparams) -> np.ndarray:
    """Embed + position signal + one attention block + feed-forward: (L, d)."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise InvalidInputError("token sequence must be a non-empty 1-d id list")
    if ids.min() < 0 or ids.max() >= hp.vocab_size:
        raise InvalidInputError(
            f"token id out of range for vocab of size {hp.vocab_size}"
        )
    out, _ = encode_text_batch(ids[None, :], params, hp)
    return out[0]


def encode_labs(labs: LabPanel, demo: Demographics, params: ModelParams,
                norm: NormStats) -> tuple[np.ndarray, np.ndarray]:
    """Lab token and demographic token, each (d,)."""
    lab_tok, _ = encode_labs_batch(lab_input(labs, norm)[None, :], params)
    demo_tok = encode_demo_batch(demo_input(demo)[None, :], params)
    return lab_tok[0], demo_tok[0]


def fuse(text: np.ndarray, lab_token: np.ndarray, demo_token: np.ndarray,
         params: ModelParams, hp: Hyperparams) -> FusedRepresentation:
    """Joint self-attention over [text rows | lab token | demo token], mean-pooled."""
    text = np.asarray(text, dtype=np.float64)
    if text.ndim != 2 or text.shape[1] != hp.d:
        raise InvalidInputError(f"text rows must be (L, {hp.d})")
    if lab_token.shape != (hp.d,) or demo_token.shape != (hp.d,):
        raise InvalidInputError(f"modality tokens must be ({hp.d},)")
    pooled, att, _ = fuse_batch(
        text[None, :, :], lab_token[None, :], demo_token[None, :], params, hp
    )
    return FusedRepresentation(pooled=pooled[0], attention=att[0])


def predict_risks(fused: FusedRepresentation, params: ModelParams) -> RiskScores:
    """Three independent sigmoid outputs (diseases co-occur; no softmax)."""
    logits = fused.pooled @ params["dis_w"] + params["dis_b"]
    p = layers.sigmoid(logits)
    return RiskScores(float(p[0]), float(p[1]), float(p[2]))


def predict_horizons(fused: FusedRepresentation, params: ModelParams) -> HorizonRisks:
    """Per-interval hazards composed into cumulative onset risk (monotone)."""
    logits = fused.pooled @ params["hor_w"] + params["hor_b"]
    hazards = layers.sigmoid(logits)
    pcum = 1.0 - np.cumprod(1.0 - hazards)
    return HorizonRisks({h: float(pcum[j]) for j, h in enumerate(HORIZONS)})


@dataclass
class Prediction:
    risks: RiskScores
    horizons: HorizonRisks
    fused: FusedRepresentation
    token_ids: list[int]


@dataclass
class Model:
    """Immutable trained-model bundle; safe to share across threads."""

    hyper: Hyperparams
    params: ModelParams
    vocab: Vocabulary
    norm: NormStats

    def record_inputs(self, record: PatientRecord, *, mask_text: bool = False,
                      mask_labs: bool = False):
        """(token ids, lab input vector, demo input vector) for one record."""
        note = "" if mask_text else record.note
        labs = LabPanel.empty(self.hyper.n_analytes) if mask_labs else record.labs
        if labs.values.shape[0] != self.hyper.n_analytes:
            raise InvalidInputError(
                f"record has a {labs.values.shape[0]}-analyte panel; "
                f"model expects {self.hyper.n_analytes}"
            )
        ids = tokenize(note, self.vocab, self.hyper.l_max)
        return ids, lab_input(labs, self.norm), demo_input(record.demo)

    def predict(self, record: PatientRecord, *, mask_text: bool = False,
                mask_labs: bool = False) -> Prediction:
        ids, lab_x, demo_x = self.record_inputs(
            record, mask_text=mask_text, mask_labs=mask_labs
        )
        fw = forward_batch(
            np.asarray([ids]), lab_x[None, :], demo_x[None, :], self.params, self.hyper
        )
        risks = RiskScores(*(float(p) for p in fw["dis_p"][0]))
        horizons = HorizonRisks(
            {h: float(fw["pcum"][0, j]) for j, h in enumerate(HORIZONS)}
        )
        fused = FusedRepresentation(pooled=fw["pooled"][0], attention=fw["att"][0])
        return Prediction(risks, horizons, fused, ids)

    def predict_proba_batch(self, ids_batch: np.ndarray, lab_x: np.ndarray,
                            demo_x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(disease probabilities (B,3), cumulative horizon risks (B,4)).

        All rows of ids_batch must share one sequence length; used by the
        explainer to evaluate many masked variants of one record at once.
        """
        fw = forward_batch(ids_batch, lab_x, demo_x, self.params, self.hyper)
        return fw["dis_p"], fw["pcum"]
