"""Single-file model checkpoint.

Layout: one JSON header line (format tag, version, hyperparameters,
normalization stats, vocabulary, tensor manifest) followed by the raw tensor
bytes, float64 little-endian, in manifest order. The file's sha256 identifies
the model version.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from ..errors import VersionError
from ..vocab import Vocabulary
from .network import Model, NormStats
from .params import Hyperparams, validate_params

FORMAT_TAG = "chronorisk.checkpoint"
FORMAT_VERSION = 1


def save_model(model: Model, path: str) -> str:
    """Write the checkpoint atomically; returns the content hash (model version)."""
    manifest = []
    blobs = []
    offset = 0
    for name, tensor in model.params.items():
        data = np.ascontiguousarray(tensor, dtype="<f8").tobytes()
        manifest.append({
            "name": name,
            "shape": list(tensor.shape),
            "offset": offset,
            "nbytes": len(data),
        })
        blobs.append(data)
        offset += len(data)
    header = {
        "format": FORMAT_TAG,
        "format_version": FORMAT_VERSION,
        "dtype": "float64",
        "byte_order": "little",
        "hyper": model.hyper.as_dict(),
        "norm": model.norm.as_dict(),
        "vocab": model.vocab.tokens,
        "tensors": manifest,
        "data_bytes": offset,
    }
    payload = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + b"".join(blobs)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return hashlib.sha256(payload).hexdigest()


def load_model(path: str) -> Model:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise VersionError(f"not a checkpoint file: {path}") from exc
        if header.get("format") != FORMAT_TAG:
            raise VersionError(f"not a checkpoint file: {path}")
        if header.get("format_version") != FORMAT_VERSION:
            raise VersionError(
                f"checkpoint format version {header.get('format_version')} "
                f"not supported (expected {FORMAT_VERSION})"
            )
        blob = fh.read()
    if len(blob) != header["data_bytes"]:
        raise VersionError(
            f"checkpoint truncated: expected {header['data_bytes']} tensor bytes, "
            f"found {len(blob)}"
        )
    hp = Hyperparams.from_dict(header["hyper"])
    params = {}
    for entry in header["tensors"]:
        raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
        params[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()
    validate_params(params, hp)
    return Model(
        hyper=hp,
        params=params,
        vocab=Vocabulary(list(header["vocab"])),
        norm=NormStats.from_dict(header["norm"]),
    )


def checkpoint_hash(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def model_version(path: str) -> str:
    """Short content hash used to stamp stored predictions."""
    return checkpoint_hash(path)[:12]
