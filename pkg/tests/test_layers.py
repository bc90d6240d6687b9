import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from chronorisk.model import layers


def test_sigmoid_midpoint_and_saturation():
    assert layers.sigmoid(np.array([0.0]))[0] == 0.5
    assert abs(layers.sigmoid(np.array([1e4]))[0] - 1.0) < 1e-9
    assert abs(layers.sigmoid(np.array([-1e4]))[0] - 0.0) < 1e-9


def test_sigmoid_matches_naive_formula_in_safe_range():
    x = np.linspace(-30, 30, 101)
    naive = 1.0 / (1.0 + np.exp(-x))
    np.testing.assert_allclose(layers.sigmoid(x), naive, rtol=0, atol=1e-12)


def test_softmax_rows_sum_to_one_under_extreme_inputs():
    x = np.array([[1e8, 0.0, -1e8], [3.0, 3.0, 3.0]])
    s = layers.softmax(x)
    np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(np.isfinite(s))


def test_sinusoidal_position_values():
    pos = layers.sinusoidal_positions(3, 4)
    # row p: [sin(p), cos(p), sin(p/100), cos(p/100)] for dim 4
    for p in range(3):
        expected = [
            math.sin(p), math.cos(p),
            math.sin(p / 100.0), math.cos(p / 100.0),
        ]
        np.testing.assert_allclose(pos[p], expected, atol=1e-12)


def test_position_rows_are_distinct():
    pos = layers.sinusoidal_positions(64, 8)
    for p in range(1, 64):
        assert not np.allclose(pos[0], pos[p])


def test_attention_hand_computed_single_head_2x4():
    # identity projections, x = e1, e2: scores = x x^T / 2, so each row puts
    # weight a = e^0.5 / (e^0.5 + 1) on itself and 1-a on the other row
    x = np.array([[[1.0, 0, 0, 0], [0, 1.0, 0, 0]]])
    eye = np.eye(4)
    out, att, _ = layers.mha_forward(x, eye, eye, eye, eye, n_heads=1)
    a = math.exp(0.5) / (math.exp(0.5) + 1.0)
    expected_att = np.array([[a, 1 - a], [1 - a, a]])
    expected_out = np.array([
        [1 + a, 1 - a, 0, 0],
        [1 - a, 1 + a, 0, 0],
    ])
    np.testing.assert_allclose(att[0, 0], expected_att, atol=1e-12)
    np.testing.assert_allclose(out[0], expected_out, atol=1e-12)


def test_attention_identical_rows_give_uniform_weights():
    x = np.tile(np.array([0.3, -1.2, 0.7, 0.1]), (1, 5, 1))
    rng = np.random.default_rng(3)
    wq, wk, wv, wo = (rng.normal(size=(4, 4)) for _ in range(4))
    _, att, _ = layers.mha_forward(x, wq, wk, wv, wo, n_heads=2)
    np.testing.assert_allclose(att, 1.0 / 5.0, atol=1e-12)


def test_zero_projections_leave_residual_stream_unchanged():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 8))
    z = np.zeros((8, 8))
    out, _, _ = layers.mha_forward(x, z, z, z, z, n_heads=2)
    np.testing.assert_array_equal(out, x)
    out2, _ = layers.ff_forward(x, np.zeros((8, 4)), np.zeros(4),
                                np.zeros((4, 8)), np.zeros(8))
    np.testing.assert_array_equal(out2, x)


def test_merge_inverts_split():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(2, 6, 8))
    np.testing.assert_array_equal(
        layers._merge_heads(layers._split_heads(m, 4)), m
    )


@settings(max_examples=25, deadline=None)
@given(hnp.arrays(np.float64, (1, 4, 8),
                  elements=st.floats(-5, 5, allow_nan=False)))
def test_attention_rows_sum_to_one(x):
    rng = np.random.default_rng(7)
    wq, wk, wv, wo = (rng.normal(size=(8, 8)) for _ in range(4))
    _, att, _ = layers.mha_forward(x, wq, wk, wv, wo, n_heads=2)
    np.testing.assert_allclose(att.sum(axis=-1), 1.0, atol=1e-6)


def _central_diff(f, x, i, h=1e-6):
    xp = x.copy(); xp.flat[i] += h
    xm = x.copy(); xm.flat[i] -= h
    return (f(xp) - f(xm)) / (2 * h)


@pytest.mark.parametrize("n_heads", [1, 2])
def test_mha_backward_matches_finite_differences(n_heads):
    rng = np.random.default_rng(11)
    x = rng.normal(size=(2, 3, 4))
    ws = {n: rng.normal(size=(4, 4)) * 0.5 for n in ("wq", "wk", "wv", "wo")}
    dout = rng.normal(size=(2, 3, 4))

    def scalar(x_, wq, wk, wv, wo):
        out, _, _ = layers.mha_forward(x_, wq, wk, wv, wo, n_heads)
        return float(np.sum(out * dout))

    _, _, cache = layers.mha_forward(x, *ws.values(), n_heads)
    dx, dwq, dwk, dwv, dwo = layers.mha_backward(dout, cache, *ws.values())
    analytic = {"x": dx, "wq": dwq, "wk": dwk, "wv": dwv, "wo": dwo}
    tensors = {"x": x, **ws}

    for name, tensor in tensors.items():
        for i in range(0, tensor.size, max(1, tensor.size // 5)):
            def f(t, name=name):
                args = {**tensors, name: t}
                return scalar(args["x"], args["wq"], args["wk"],
                              args["wv"], args["wo"])
            num = _central_diff(f, tensor, i)
            ana = analytic[name].flat[i]
            assert abs(num - ana) < 1e-6 * max(1.0, abs(num)), name


def test_ff_backward_matches_finite_differences():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 3, 4))
    w1, b1 = rng.normal(size=(4, 6)), rng.normal(size=6)
    w2, b2 = rng.normal(size=(6, 4)), rng.normal(size=4)
    dout = rng.normal(size=(1, 3, 4))

    _, cache = layers.ff_forward(x, w1, b1, w2, b2)
    dx, dw1, db1, dw2, db2 = layers.ff_backward(dout, cache, w1, w2)
    analytic = {"x": dx, "w1": dw1, "b1": db1, "w2": dw2, "b2": db2}
    tensors = {"x": x, "w1": w1, "b1": b1, "w2": w2, "b2": b2}

    def scalar(**kw):
        out, _ = layers.ff_forward(kw["x"], kw["w1"], kw["b1"], kw["w2"], kw["b2"])
        return float(np.sum(out * dout))

    for name, tensor in tensors.items():
        for i in range(tensor.size):
            num = _central_diff(lambda t: scalar(**{**tensors, name: t}), tensor, i)
            assert abs(num - analytic[name].flat[i]) < 1e-6 * max(1.0, abs(num))


def test_mlp3_backward_matches_finite_differences():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(2, 5))
    w1, b1 = rng.normal(size=(5, 4)), rng.normal(size=4)
    w2, b2 = rng.normal(size=(4, 4)), rng.normal(size=4)
    w3, b3 = rng.normal(size=(4, 3)), rng.normal(size=3)
    dout = rng.normal(size=(2, 3))

    _, cache = layers.mlp3_forward(x, w1, b1, w2, b2, w3, b3)
    grads = layers.mlp3_backward(dout, cache, w2, w3)
    analytic = dict(zip(("w1", "b1", "w2", "b2", "w3", "b3"), grads))
    tensors = {"w1": w1, "b1": b1, "w2": w2, "b2": b2, "w3": w3, "b3": b3}

    def scalar(**kw):
        out, _ = layers.mlp3_forward(x, kw["w1"], kw["b1"], kw["w2"],
                                     kw["b2"], kw["w3"], kw["b3"])
        return float(np.sum(out * dout))

    for name, tensor in tensors.items():
        for i in range(tensor.size):
            num = _central_diff(lambda t: scalar(**{**tensors, name: t}), tensor, i)
            assert abs(num - analytic[name].flat[i]) < 1e-6 * max(1.0, abs(num))
