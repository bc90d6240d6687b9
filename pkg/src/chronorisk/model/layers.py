"""Numpy building blocks for the fusion network.

Everything is batched over a leading axis and runs at 64-bit precision.
Each forward returns a cache consumed by the matching backward; backward
passes are written out explicitly (reverse-mode, no autograd).
"""

from __future__ import annotations

import math

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Interleaved sin/cos position signal, shape (length, dim). dim must be even."""
    assert dim % 2 == 0
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * i / dim)
    out = np.zeros((length, dim))
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def _split_heads(m: np.ndarray, n_heads: int) -> np.ndarray:
    # (B, N, d) -> (B, H, N, d/H)
    b, n, d = m.shape
    return m.reshape(b, n, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(m: np.ndarray) -> np.ndarray:
    # (B, H, N, hd) -> (B, N, H*hd)
    b, h, n, hd = m.shape
    return m.transpose(0, 2, 1, 3).reshape(b, n, h * hd)


def mha_forward(x, wq, wk, wv, wo, n_heads):
    """Multi-head self-attention with residual: out = x + concat_heads(A V) Wo.

    x: (B, N, d). Returns (out, att, cache) with att shaped (B, H, N, N);
    softmax is applied per query row, so att rows sum to 1.
    """
    scale = 1.0 / math.sqrt(x.shape[-1] // n_heads)
    q = _split_heads(x @ wq, n_heads)
    k = _split_heads(x @ wk, n_heads)
    v = _split_heads(x @ wv, n_heads)
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    att = softmax(scores, axis=-1)
    ctx = _merge_heads(att @ v)
    out = x + ctx @ wo
    cache = (x, q, k, v, att, ctx, scale, n_heads)
    return out, att, cache


def mha_backward(dout, cache, wq, wk, wv, wo):
    """Gradients for mha_forward. Returns (dx, dwq, dwk, dwv, dwo)."""
    x, q, k, v, att, ctx, scale, n_heads = cache
    dx = dout.copy()
    dwo = np.einsum("bnd,bne->de", ctx, dout)
    dctx = _split_heads(dout @ wo.T, n_heads)
    datt = dctx @ v.transpose(0, 1, 3, 2)
    dv = att.transpose(0, 1, 3, 2) @ dctx
    # softmax jacobian applied row-wise
    dscores = att * (datt - np.sum(datt * att, axis=-1, keepdims=True))
    dscores *= scale
    dq = dscores @ k
    dk = dscores.transpose(0, 1, 3, 2) @ q
    dq_m, dk_m, dv_m = (_merge_heads(m) for m in (dq, dk, dv))
    dwq = np.einsum("bnd,bne->de", x, dq_m)
    dwk = np.einsum("bnd,bne->de", x, dk_m)
    dwv = np.einsum("bnd,bne->de", x, dv_m)
    dx += dq_m @ wq.T + dk_m @ wk.T + dv_m @ wv.T
    return dx, dwq, dwk, dwv, dwo


def ff_forward(x, w1, b1, w2, b2):
    """Position-wise feed-forward with residual: out = x + tanh(x W1 + b1) W2 + b2."""
    h = np.tanh(x @ w1 + b1)
    out = x + h @ w2 + b2
    return out, (x, h)


def ff_backward(dout, cache, w1, w2):
    x, h = cache
    dx = dout.copy()
    dw2 = np.einsum("bnf,bnd->fd", h, dout)
    db2 = dout.sum(axis=(0, 1))
    dh = (dout @ w2.T) * (1.0 - h * h)
    dw1 = np.einsum("bnd,bnf->df", x, dh)
    db1 = dh.sum(axis=(0, 1))
    dx += dh @ w1.T
    return dx, dw1, db1, dw2, db2


def mlp3_forward(x, w1, b1, w2, b2, w3, b3):
    """tanh-tanh-linear stack used by the lab encoder. x: (B, in)."""
    a1 = np.tanh(x @ w1 + b1)
    a2 = np.tanh(a1 @ w2 + b2)
    out = a2 @ w3 + b3
    return out, (x, a1, a2)


def mlp3_backward(dout, cache, w2, w3):
    x, a1, a2 = cache
    dw3 = a2.T @ dout
    db3 = dout.sum(axis=0)
    dz2 = (dout @ w3.T) * (1.0 - a2 * a2)
    dw2 = a1.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (1.0 - a1 * a1)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2, dw3, db3
