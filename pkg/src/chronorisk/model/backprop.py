"""Explicit reverse-mode gradients through the full network.

`record_loss_and_grads` is the single entry point: one record in, scalar loss
and a gradient for every parameter tensor out. The trainer averages these
over a mini-batch; the gradient checker compares them against finite
differences.
"""

from __future__ import annotations

import numpy as np

from . import layers, network
from .loss import disease_loss_batch, horizon_loss_batch
from .params import Hyperparams, ModelParams, zeros_like_params


def backward_batch(fw: dict, params: ModelParams, hp: Hyperparams,
                   dz_dis: np.ndarray, dz_hor: np.ndarray) -> ModelParams:
    """Backward pass from head-logit gradients to all parameter gradients.

    fw is the cache dict from network.forward_batch; dz_dis (B,3) and
    dz_hor (B,4) already include any batch-mean scaling.
    """
    grads = zeros_like_params(params)
    pooled = fw["pooled"]

    grads["dis_w"] = pooled.T @ dz_dis
    grads["dis_b"] = dz_dis.sum(axis=0)
    grads["hor_w"] = pooled.T @ dz_hor
    grads["hor_b"] = dz_hor.sum(axis=0)
    dpooled = dz_dis @ params["dis_w"].T + dz_hor @ params["hor_w"].T

    # mean-pool over the fused rows
    b, length = fw["ids"].shape
    n_rows = length + 2
    dfused = np.repeat(dpooled[:, None, :] / n_rows, n_rows, axis=1)

    drows, dfq, dfk, dfv, dfo = layers.mha_backward(
        dfused, fw["fuse_cache"],
        params["fus_wq"], params["fus_wk"], params["fus_wv"], params["fus_wo"],
    )
    grads["fus_wq"], grads["fus_wk"], grads["fus_wv"], grads["fus_wo"] = dfq, dfk, dfv, dfo

    dtext = drows[:, :length, :]
    dlab_tok = drows[:, length, :]
    ddemo_tok = drows[:, length + 1, :]

    # lab encoder
    (grads["lab_w1"], grads["lab_b1"], grads["lab_w2"], grads["lab_b2"],
     grads["lab_w3"], grads["lab_b3"]) = layers.mlp3_backward(
        dlab_tok, fw["lab_cache"], params["lab_w2"], params["lab_w3"]
    )

    # demographic projection
    grads["demo_w"] = fw["demo_x"].T @ ddemo_tok
    grads["demo_b"] = ddemo_tok.sum(axis=0)

    # text encoder: feed-forward, then self-attention, then embedding rows
    attn_cache, ff_cache = fw["text_caches"]
    dx1, dw1, db1, dw2, db2 = layers.ff_backward(
        dtext, ff_cache, params["txt_ff_w1"], params["txt_ff_w2"]
    )
    grads["txt_ff_w1"], grads["txt_ff_b1"] = dw1, db1
    grads["txt_ff_w2"], grads["txt_ff_b2"] = dw2, db2

    dx0, dtq, dtk, dtv, dto = layers.mha_backward(
        dx1, attn_cache,
        params["txt_wq"], params["txt_wk"], params["txt_wv"], params["txt_wo"],
    )
    grads["txt_wq"], grads["txt_wk"], grads["txt_wv"], grads["txt_wo"] = dtq, dtk, dtv, dto

    np.add.at(grads["embed"], fw["ids"].ravel(), dx0.reshape(-1, hp.d))
    return grads


def record_loss_and_grads(ids: list[int], lab_x: np.ndarray, demo_x: np.ndarray,
                          y: np.ndarray, hor_t: np.ndarray, hor_eligible: bool,
                          params: ModelParams, hp: Hyperparams,
                          pos_weight: np.ndarray) -> tuple[float, ModelParams]:
    """Loss and parameter gradients for a single record."""
    fw = network.forward_batch(
        np.asarray([ids]), lab_x[None, :], demo_x[None, :], params, hp
    )
    dis_losses, dz_dis = disease_loss_batch(fw["dis_p"], y[None, :], pos_weight)
    hor_losses, dz_hor = horizon_loss_batch(
        fw["hazards"], fw["pcum"], hor_t[None, :],
        np.array([1.0 if hor_eligible else 0.0]),
    )
    total = float(dis_losses[0] + hor_losses[0])
    grads = backward_batch(fw, params, hp, dz_dis, dz_hor)
    return total, grads
