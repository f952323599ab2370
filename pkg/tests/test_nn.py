import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skysmooth import gradcheck, nn


def test_layout_views_share_memory():
    lay = nn.Layout({"W": (2, 3), "b": (2,)})
    flat = lay.zeros()
    p = lay.unpack(flat)
    p["W"][1, 2] = 5.0
    p["b"][0] = -1.0
    assert lay.size == 8 and flat[5] == 5.0 and flat[6] == -1.0
    with pytest.raises(ValueError):
        lay.unpack(np.zeros(7))


def test_xavier_bounds_and_seed():
    W = nn.init_xavier((40, 60), 3)
    assert np.abs(W).max() <= math.sqrt(6 / 100)
    np.testing.assert_array_equal(W, nn.init_xavier((40, 60), 3))


def test_dense_matches_loops(rng):
    W, b, x = rng.standard_normal((3, 4)), rng.standard_normal(3), rng.standard_normal((5, 4))
    y = nn.dense_forward(W, b, x)
    for n in range(5):
        for j in range(3):
            assert y[n, j] == pytest.approx(sum(W[j, k] * x[n, k] for k in range(4)) + b[j])


def test_dense_shape_error_names_shapes():
    with pytest.raises(ValueError, match=r"\(3, 4\).*\(5, 2\)"):
        nn.dense_forward(np.zeros((3, 4)), np.zeros(3), np.zeros((5, 2)))


def test_activations():
    x = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_array_equal(nn.relu_forward(x), [0, 0, 3])
    np.testing.assert_array_equal(nn.relu_backward(x, np.ones(3)), [0, 0, 1])
    y = nn.tanh_forward(x)
    np.testing.assert_allclose(nn.tanh_backward(y, np.ones(3)), 1 / np.cosh(x) ** 2)
    assert nn.sigmoid(np.array([0.0]))[0] == 0.5
    big = nn.sigmoid(np.array([-800.0, 800.0]))
    assert np.all(np.isfinite(big)) and big[0] == pytest.approx(0) and big[1] == pytest.approx(1)


def test_lstm_closed_form():
    """Zero weights: gates are 1/2 and the cell follows c_t = c_{t-1}/2 + tanh(b_g)/2."""
    H, n_in, K = 3, 2, 4
    W = np.zeros((4 * H, n_in + H))
    b = np.zeros(4 * H)
    b[3 * H:] = 0.8
    cell = nn.LstmCell(W, b)
    h, c, _ = nn.lstm_forward(cell, np.ones((2, K, n_in)))
    g = math.tanh(0.8)
    c_expect = g * (1 - 0.5 ** K)
    np.testing.assert_allclose(c, c_expect)
    np.testing.assert_allclose(h, 0.5 * math.tanh(c_expect))


def test_lstm_gate_order():
    H = 2
    W = np.arange(4 * H * 3, dtype=float).reshape(4 * H, 3)
    cell = nn.LstmCell(W, np.zeros(4 * H))
    np.testing.assert_array_equal(cell.gate("forget"), W[2:4])
    np.testing.assert_array_equal(cell.gate("candidate"), W[6:8])


def test_lstm_bad_shapes():
    with pytest.raises(ValueError):
        nn.LstmCell(np.zeros((6, 4)), np.zeros(6))
    cell = nn.LstmCell(np.zeros((8, 5)), np.zeros(8))
    with pytest.raises(ValueError, match="n_in=3"):
        nn.lstm_forward(cell, np.zeros((1, 4, 2)))


def test_encoder_output_range(rng):
    enc = nn.Encoder(n_in=8, hidden=6, embed=5)
    flat = enc.init(rng)
    z, _ = enc.forward(flat, 10 * rng.standard_normal((3, 4, 8)))
    assert z.shape == (3, 5) and np.all(np.abs(z) < 1)
    assert np.all(enc.layout.unpack(flat)["lstm_b"][6:12] == 1.0)


def test_mlp_input_only_backward(rng):
    mlp = nn.Mlp([4, 6, 2], hidden="relu", output="tanh")
    flat = mlp.init(rng)
    x = rng.standard_normal((3, 4))
    y, cache = mlp.forward(flat, x)
    dy = rng.standard_normal(y.shape)
    dx, grad = mlp.backward(flat, cache, dy)
    dx2, _ = mlp.backward(flat, cache, dy, input_only=True)
    np.testing.assert_allclose(dx, dx2)
    err = nn.grad_check(lambda th: float((mlp.forward(th, x)[0] * dy).sum()), flat, grad)
    assert err < 1e-6


def test_adam_first_step_oracle():
    p = np.array([1.0, -2.0, 3.0])
    g = np.array([0.5, -4.0, 1e-3])
    st = nn.AdamState.like(p, lr=0.1)
    out = nn.adam_update(p.copy(), g, st)
    # bias-corrected first step is lr * g / (|g| + eps)
    np.testing.assert_allclose(out, p - 0.1 * g / (np.abs(g) + 1e-8))


def test_adam_per_element_lr():
    p = np.zeros(2)
    st = nn.AdamState.like(p, lr=np.array([1e-1, 1e-3]))
    nn.adam_update(p, np.ones(2), st)
    np.testing.assert_allclose(p, [-0.1, -0.001], rtol=1e-6)


def test_adam_minimises_quadratic():
    p = np.array([3.0, -1.5])
    st = nn.AdamState.like(p, lr=0.05)
    for _ in range(2000):
        nn.adam_update(p, 2 * p, st)
    assert np.abs(p).max() < 1e-2


def test_adam_rejects_nonfinite():
    with pytest.raises(FloatingPointError, match="blow-up"):
        nn.adam_update(np.zeros(2), np.array([1.0, np.nan]), nn.AdamState.like(np.zeros(2)))


def test_grad_check_detects_wrong_gradient(rng):
    theta = rng.standard_normal(5)
    assert nn.grad_check(lambda t: float((t ** 2).sum()), theta, 2 * theta) < 1e-8
    assert nn.grad_check(lambda t: float((t ** 2).sum()), theta, 2.2 * theta) > 1e-2


@pytest.mark.parametrize("check", [
    gradcheck.check_dense,
    lambda seed: gradcheck.check_activation("relu", seed),
    lambda seed: gradcheck.check_activation("tanh", seed),
    gradcheck.check_lstm,
])
def test_component_gradients(check):
    assert check(seed=5) < 1e-4


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_lstm_gradient_any_seed(seed):
    assert gradcheck.check_lstm(seed=seed, n_in=3, hidden=2, K=4, batch=1) < 1e-4
