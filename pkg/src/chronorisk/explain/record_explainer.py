"""Per-record Shapley explanations for a trained model.

Feature groups: up to 12 individually-attributed note tokens (chosen by the
attention mass they receive in the fused representation), the remaining
tokens pooled as [OTHER-TEXT], one group per measured analyte, and one
demographics group. Masking replaces tokens with [UNK], flips analyte masks
to missing, and swaps demographics for unknown sex at the training mean age.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, InvalidInputError, StateError
from ..records import (
    ANALYTE_NAMES,
    DISEASES,
    HORIZONS,
    LabPanel,
    N_ANALYTES,
    PatientRecord,
)
from ..vocab import split_tokens_with_offsets
from ..model.network import Model, demo_input, lab_input
from .shapley import MAX_EXACT_GROUPS, exact_shapley, sampled_shapley

TOKEN_SPAN = "token_span"
LAB_ANALYTE = "lab_analyte"
DEMOGRAPHIC = "demographic"

OTHER_TEXT_NAME = "[OTHER-TEXT]"
MAX_TOKEN_GROUPS = 12

TARGETS = DISEASES + tuple(f"horizon_{h}" for h in HORIZONS)


@dataclass(frozen=True)
class FeatureGroup:
    name: str
    kind: str                           # token_span | lab_analyte | demographic
    indices: tuple[int, ...]            # token positions or analyte indices
    spans: tuple[tuple[int, int], ...] = ()  # char ranges into the note


@dataclass(frozen=True)
class Attribution:
    group: FeatureGroup
    phi: float
    stderr: float | None = None


@dataclass
class Explanation:
    target: str
    baseline_value: float
    prediction: float
    mode: str                           # exact | sampled
    attributions: list[Attribution]
    n_permutations: int | None = None

    def phi_total(self) -> float:
        return sum(a.phi for a in self.attributions)

    def to_json_dict(self) -> dict:
        out = {
            "target": self.target,
            "baseline": self.baseline_value,
            "prediction": self.prediction,
            "mode": self.mode,
            "attributions": [],
        }
        if self.n_permutations is not None:
            out["n_permutations"] = self.n_permutations
        for a in self.attributions:
            doc = {"group_name": a.group.name, "kind": a.group.kind, "phi": a.phi}
            if a.stderr is not None:
                doc["stderr"] = a.stderr
            if a.group.spans:
                doc["spans"] = [list(s) for s in a.group.spans]
            out["attributions"].append(doc)
        return out

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Explanation":
        # indices are model-internal and not persisted; groups rebuilt from a
        # serialized explanation carry names, kinds, and note spans only
        attributions = []
        for a in doc["attributions"]:
            group = FeatureGroup(
                name=a["group_name"], kind=a["kind"], indices=(),
                spans=tuple(tuple(s) for s in a.get("spans", ())),
            )
            attributions.append(
                Attribution(group=group, phi=a["phi"], stderr=a.get("stderr"))
            )
        return cls(
            target=doc["target"],
            baseline_value=doc["baseline"],
            prediction=doc["prediction"],
            mode=doc["mode"],
            attributions=attributions,
            n_permutations=doc.get("n_permutations"),
        )


def _received_attention(model: Model, record: PatientRecord,
                        n_tokens: int) -> np.ndarray:
    """Mean attention mass each text position receives in the fused block."""
    att = model.predict(record).fused.attention       # (H, N, N)
    return att[:, :, :n_tokens].mean(axis=(0, 1))


def build_groups(model: Model, record: PatientRecord,
                 max_token_groups: int = MAX_TOKEN_GROUPS) -> list[FeatureGroup]:
    groups: list[FeatureGroup] = []

    tokens = split_tokens_with_offsets(record.note)[: model.hyper.l_max]
    if tokens:
        if len(tokens) > max_token_groups:
            scores = _received_attention(model, record, len(tokens))
            keep = sorted(np.argsort(-scores)[:max_token_groups].tolist())
        else:
            keep = list(range(len(tokens)))
        seen: dict[str, int] = {}
        for pos in keep:
            word, start, end = tokens[pos]
            seen[word] = seen.get(word, 0) + 1
            name = word if seen[word] == 1 else f"{word}@{pos}"
            groups.append(FeatureGroup(name, TOKEN_SPAN, (pos,),
                                       ((start, end),)))
        rest = [p for p in range(len(tokens)) if p not in set(keep)]
        if rest:
            groups.append(FeatureGroup(
                OTHER_TEXT_NAME, TOKEN_SPAN, tuple(rest),
                tuple((tokens[p][1], tokens[p][2]) for p in rest),
            ))

    catalog = record.labs.values.shape[0] == N_ANALYTES
    for i in np.flatnonzero(record.labs.mask):
        name = ANALYTE_NAMES[int(i)] if catalog else f"analyte_{int(i)}"
        groups.append(FeatureGroup(name, LAB_ANALYTE, (int(i),)))

    groups.append(FeatureGroup("demographics", DEMOGRAPHIC, ()))
    return groups


class CoalitionEvaluator:
    """Model output for one target as a function of the unmasked-group set."""

    def __init__(self, model: Model, record: PatientRecord, target: str,
                 groups: list[FeatureGroup]):
        if target not in TARGETS:
            raise InvalidInputError(
                f"target must be one of {', '.join(TARGETS)}; got {target!r}"
            )
        self.model = model
        self.groups = groups
        self.target = target
        ids, lab_x, demo_x = model.record_inputs(record)
        del lab_x
        self.full_ids = np.asarray(ids)
        self.full_values = record.labs.values
        self.full_mask = record.labs.mask
        self.demo_x = demo_x
        self.baseline_demo = np.array([0.0, 0.0, 1.0, model.norm.age_mean / 100.0])
        self.unk_id = model.vocab.unk_id
        self.cache: dict[int, float] = {}

    def _inputs_for(self, coalition: int):
        ids = self.full_ids.copy()
        values = self.full_values.copy()
        mask = self.full_mask.copy()
        demo_x = self.demo_x
        for g, group in enumerate(self.groups):
            if coalition & (1 << g):
                continue
            if group.kind == TOKEN_SPAN:
                ids[list(group.indices)] = self.unk_id
            elif group.kind == LAB_ANALYTE:
                mask[list(group.indices)] = False
                values[list(group.indices)] = 0.0
            else:
                demo_x = self.baseline_demo
        lab_x = lab_input(LabPanel(values, mask), self.model.norm)
        return ids, lab_x, demo_x

    def _target_column(self, dis_p: np.ndarray, pcum: np.ndarray) -> np.ndarray:
        if self.target in DISEASES:
            return dis_p[:, DISEASES.index(self.target)]
        return pcum[:, HORIZONS.index(int(self.target.split("_")[1]))]

    def value(self, coalition: int) -> float:
        if coalition not in self.cache:
            self.prefill([coalition])
        return self.cache[coalition]

    def prefill(self, coalitions, chunk: int = 256) -> None:
        """Batch-evaluate uncached coalitions (all share one sequence length)."""
        todo = [c for c in dict.fromkeys(coalitions) if c not in self.cache]
        for start in range(0, len(todo), chunk):
            part = todo[start:start + chunk]
            rows = [self._inputs_for(c) for c in part]
            ids = np.stack([r[0] for r in rows])
            lab_x = np.stack([r[1] for r in rows])
            demo_x = np.stack([r[2] for r in rows])
            dis_p, pcum = self.model.predict_proba_batch(ids, lab_x, demo_x)
            for c, v in zip(part, self._target_column(dis_p, pcum)):
                self.cache[c] = float(v)


def explain_record(model: Model, record: PatientRecord, target: str,
                   mode: str = "auto", n_permutations: int = 2000,
                   seed: int = 0,
                   max_token_groups: int = MAX_TOKEN_GROUPS) -> Explanation:
    """Shapley attribution of one model output over the record's feature groups.

    mode "auto" picks exact enumeration when the group count allows it
    (<= 15) and permutation sampling otherwise.
    """
    if model is None or getattr(model, "params", None) is None:
        raise StateError("no trained model available to explain")
    if mode not in ("auto", "exact", "sampled"):
        raise InvalidInputError(f"mode must be auto, exact or sampled; got {mode!r}")

    groups = build_groups(model, record, max_token_groups)
    n = len(groups)
    evaluator = CoalitionEvaluator(model, record, target, groups)
    if mode == "auto":
        mode = "exact" if n <= MAX_EXACT_GROUPS else "sampled"

    stderr: np.ndarray | None = None
    if mode == "exact":
        if n > MAX_EXACT_GROUPS:
            raise CapacityError(
                f"{n} groups exceed the exact-mode cap of {MAX_EXACT_GROUPS}; "
                "use sampled mode"
            )
        evaluator.prefill(range(1 << n))
        phi = exact_shapley(evaluator.value, n)
        used_perms = None
    else:
        phi, stderr = sampled_shapley(evaluator.value, n, n_permutations, seed)
        used_perms = n_permutations

    attributions = [
        Attribution(group=groups[i], phi=float(phi[i]),
                    stderr=None if stderr is None else float(stderr[i]))
        for i in range(n)
    ]
    attributions.sort(key=lambda a: (-abs(a.phi), a.group.name))
    full = (1 << n) - 1
    return Explanation(
        target=target,
        baseline_value=evaluator.value(0),
        prediction=evaluator.value(full),
        mode=mode,
        attributions=attributions,
        n_permutations=used_perms,
    )
