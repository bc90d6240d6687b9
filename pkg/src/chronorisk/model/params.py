"""Architecture hyperparameters and parameter initialization."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..errors import ConfigurationError
from ..records import N_ANALYTES

# ModelParams is a name -> float64 array mapping with stable insertion order;
# the optimizer, gradient checker and checkpoint writer all iterate it.
ModelParams = dict[str, np.ndarray]


@dataclass(frozen=True)
class Hyperparams:
    d: int = 64              # shared embedding width
    n_heads: int = 4
    ff_dim: int = 64         # text-encoder feed-forward width
    lab_hidden: int = 64     # width of both lab-encoder hidden layers
    n_analytes: int = N_ANALYTES
    l_max: int = 128
    vocab_size: int = 2      # set after the vocabulary is built
    n_diseases: int = 3
    n_horizons: int = 4

    def __post_init__(self):
        if self.d % self.n_heads != 0:
            raise ConfigurationError(
                f"n_heads={self.n_heads} must divide d={self.d}"
            )
        if self.d % 2 != 0:
            raise ConfigurationError("d must be even for the position signal")
        if self.vocab_size < 2:
            raise ConfigurationError("vocab must contain the two reserved tokens")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Hyperparams":
        return cls(**{k: int(v) for k, v in doc.items()})


def _param_shapes(hp: Hyperparams) -> list[tuple[str, tuple[int, ...]]]:
    d, ff, h = hp.d, hp.ff_dim, hp.lab_hidden
    return [
        ("embed", (hp.vocab_size, d)),
        ("txt_wq", (d, d)),
        ("txt_wk", (d, d)),
        ("txt_wv", (d, d)),
        ("txt_wo", (d, d)),
        ("txt_ff_w1", (d, ff)),
        ("txt_ff_b1", (ff,)),
        ("txt_ff_w2", (ff, d)),
        ("txt_ff_b2", (d,)),
        ("lab_w1", (2 * hp.n_analytes, h)),
        ("lab_b1", (h,)),
        ("lab_w2", (h, h)),
        ("lab_b2", (h,)),
        ("lab_w3", (h, d)),
        ("lab_b3", (d,)),
        ("demo_w", (4, d)),
        ("demo_b", (d,)),
        ("fus_wq", (d, d)),
        ("fus_wk", (d, d)),
        ("fus_wv", (d, d)),
        ("fus_wo", (d, d)),
        ("dis_w", (d, hp.n_diseases)),
        ("dis_b", (hp.n_diseases,)),
        ("hor_w", (d, hp.n_horizons)),
        ("hor_b", (hp.n_horizons,)),
    ]


def init_params(hp: Hyperparams, rng: np.random.Generator) -> ModelParams:
    """Scaled-uniform init: weights ~ U(-b, b) with b = sqrt(6/(fan_in+fan_out)),
    biases zero. Draw order is fixed, so a seeded generator gives identical params."""
    params: ModelParams = {}
    for name, shape in _param_shapes(hp):
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def zeros_like_params(params: ModelParams) -> ModelParams:
    return {name: np.zeros_like(t) for name, t in params.items()}


def validate_params(params: ModelParams, hp: Hyperparams) -> None:
    expected = dict(_param_shapes(hp))
    if set(params) != set(expected):
        missing = set(expected) - set(params)
        extra = set(params) - set(expected)
        raise ConfigurationError(f"parameter set mismatch: missing={missing} extra={extra}")
    for name, tensor in params.items():
        if tensor.shape != expected[name]:
            raise ConfigurationError(
                f"tensor {name} has shape {tensor.shape}, expected {expected[name]}"
            )
        if not np.all(np.isfinite(tensor)):
            raise ConfigurationError(f"tensor {name} contains non-finite values")
