"""
Hand-written backward passes, checked against finite differences
================================================================
"""

# %%
import numpy as np

from skysmooth import gradcheck, nn

for name, err in gradcheck.run_suite(seed=0).items():
    print(f"{name:18s} worst relative error {err:.2e}")

# %%
# The same machinery on a custom function: an LSTM over four frames,
# reduced to a scalar by a fixed projection.
rng = np.random.default_rng(1)
H, n_in = 3, 4
layout = nn.Layout({"W": (4 * H, n_in + H), "b": (4 * H,)})
theta = 0.5 * rng.standard_normal(layout.size)
xs = rng.standard_normal((2, 4, n_in))
proj = rng.standard_normal((2, H))


def loss(th):
    p = layout.unpack(th)
    h, _, _ = nn.lstm_forward(nn.LstmCell(p["W"], p["b"]), xs)
    return float((h * proj).sum())


p = layout.unpack(theta)
cell = nn.LstmCell(p["W"], p["b"])
_, _, caches = nn.lstm_forward(cell, xs)
_, dW, db, _, _ = nn.lstm_backward(cell, caches, proj)
print("LSTM check:", nn.grad_check(loss, theta, np.concatenate([dW.ravel(), db])))
