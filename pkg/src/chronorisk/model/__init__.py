from .params import Hyperparams, ModelParams, init_params, zeros_like_params
from .network import (
    FusedRepresentation,
    Model,
    NormStats,
    Prediction,
    encode_labs,
    encode_text,
    fuse,
    position_signal,
    predict_horizons,
    predict_risks,
)
from .loss import ClassWeights, loss
from .train import EpochStats, TrainConfig, TrainLog, train
from .gradcheck import GradReport, grad_check
from .checkpoint import checkpoint_hash, load_model, model_version, save_model

__all__ = [
    "Hyperparams", "ModelParams", "init_params", "zeros_like_params",
    "FusedRepresentation", "Model", "NormStats", "Prediction",
    "encode_labs", "encode_text", "fuse", "position_signal",
    "predict_horizons", "predict_risks",
    "ClassWeights", "loss",
    "EpochStats", "TrainConfig", "TrainLog", "train",
    "GradReport", "grad_check",
    "checkpoint_hash", "load_model", "model_version", "save_model",
]
