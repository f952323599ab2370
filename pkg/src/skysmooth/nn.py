"""A small numpy neural-network kernel with hand-written backward passes.

Every network keeps its parameters in one flat float64 vector described by a
:class:`Layout`; the named arrays are views into it.  This keeps optimizer
updates, target-network blending and checkpointing to a few vector ops.
Batches are row-major: ``x`` has shape ``(batch, features)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


class Layout:
    """Named parameter shapes packed back to back in one flat vector."""

    def __init__(self, shapes: dict[str, tuple[int, ...]]):
        self.shapes = dict(shapes)
        self.slices = {}
        offset = 0
        for name, shape in self.shapes.items():
            n = int(np.prod(shape))
            self.slices[name] = slice(offset, offset + n)
            offset += n
        self.size = offset

    def unpack(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        _check(flat.shape == (self.size,), f"flat vector shape {flat.shape} != ({self.size},)")
        return {k: flat[s].reshape(self.shapes[k]) for k, s in self.slices.items()}

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)


def init_xavier(shape: tuple[int, int], seed) -> np.ndarray:
    """Glorot-uniform matrix; ``seed`` may be an int or a ``numpy`` Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    fan_out, fan_in = shape
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


# ------------------------------------------------------------------ primitives

def dense_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    _check(x.ndim == 2 and x.shape[1] == W.shape[1] and b.shape == (W.shape[0],),
           f"dense: W {W.shape}, b {b.shape} incompatible with x {x.shape}")
    return x @ W.T + b


def dense_backward(W: np.ndarray, x: np.ndarray, dy: np.ndarray):
    """Gradients ``(dx, dW, db)`` of a dense layer given upstream ``dy``."""
    _check(dy.shape == (x.shape[0], W.shape[0]),
           f"dense backward: dy {dy.shape} incompatible with x {x.shape}, W {W.shape}")
    return dy @ W, dy.T @ x, dy.sum(axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(x, dy):
    return dy * (x > 0)


def tanh_forward(x):
    return np.tanh(x)


def tanh_backward(y, dy):
    """Backward through tanh, given its *output* ``y``."""
    return dy * (1.0 - y * y)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


ACTIVATIONS = ("relu", "tanh", "linear")


# ------------------------------------------------------------------------- MLP

class Mlp:
    """Dense stack with a hidden activation and an optional output activation."""

    def __init__(self, sizes: list[int], hidden: str = "relu", output: str = "linear"):
        _check(len(sizes) >= 2, "an MLP needs at least input and output sizes")
        _check(hidden in ACTIVATIONS and output in ACTIVATIONS, "unknown activation")
        self.sizes = list(sizes)
        self.hidden = hidden
        self.output = output
        shapes = {}
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            shapes[f"W{i}"] = (n_out, n_in)
            shapes[f"b{i}"] = (n_out,)
        self.layout = Layout(shapes)
        self.n_layers = len(sizes) - 1

    def init(self, rng: np.random.Generator, out_scale: float = 1.0) -> np.ndarray:
        flat = self.layout.zeros()
        p = self.layout.unpack(flat)
        for i in range(self.n_layers):
            p[f"W{i}"][...] = init_xavier(p[f"W{i}"].shape, rng)
        p[f"W{self.n_layers - 1}"][...] *= out_scale
        return flat

    def _act(self, i: int) -> str:
        return self.output if i == self.n_layers - 1 else self.hidden

    def forward(self, flat: np.ndarray, x: np.ndarray):
        p = self.layout.unpack(flat)
        cache = [x]
        h = x
        for i in range(self.n_layers):
            z = dense_forward(p[f"W{i}"], p[f"b{i}"], h)
            act = self._act(i)
            if act == "relu":
                h = relu_forward(z)
                cache.append(z)
            elif act == "tanh":
                h = tanh_forward(z)
                cache.append(h)
            else:
                h = z
                cache.append(None)
            cache.append(h)
        return h, cache

    def backward(self, flat: np.ndarray, cache, dy: np.ndarray, input_only: bool = False):
        """Returns ``(dx, grad)`` where ``grad`` is laid out like ``flat``.

        With ``input_only`` the parameter gradient is skipped and ``grad`` is None.
        """
        p = self.layout.unpack(flat)
        grad = None if input_only else self.layout.zeros()
        g = None if input_only else self.layout.unpack(grad)
        d = dy
        for i in reversed(range(self.n_layers)):
            pre, inp = cache[2 * i + 1], cache[2 * i]
            act = self._act(i)
            if act == "relu":
                d = relu_backward(pre, d)
            elif act == "tanh":
                d = tanh_backward(pre, d)
            if input_only:
                d = d @ p[f"W{i}"]
                continue
            d, dW, db = dense_backward(p[f"W{i}"], inp, d)
            g[f"W{i}"][...] = dW
            g[f"b{i}"][...] = db
        return d, grad


# ------------------------------------------------------------------------ LSTM

@dataclass
class LstmCell:
    """Gate weights stacked as rows ``[input, forget, output, candidate]``.

    ``W`` has shape ``(4h, n_in + h)`` and acts on ``[x_t, h_prev]``.
    """

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        h4, cols = self.W.shape
        _check(h4 % 4 == 0 and self.b.shape == (h4,) and cols > h4 // 4,
               f"LSTM W {self.W.shape} / b {self.b.shape} inconsistent")

    @property
    def hidden(self) -> int:
        return self.W.shape[0] // 4

    @property
    def n_in(self) -> int:
        return self.W.shape[1] - self.hidden

    def gate(self, name: str) -> np.ndarray:
        k = ("input", "forget", "output", "candidate").index(name)
        h = self.hidden
        return self.W[k * h:(k + 1) * h]


def lstm_step(cell: LstmCell, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One recurrence step on a batch; returns ``(h, c, cache)``."""
    H = cell.hidden
    _check(x_t.ndim == 2 and x_t.shape[1] == cell.n_in,
           f"LSTM input {x_t.shape} does not match n_in={cell.n_in}")
    _check(h_prev.shape == (x_t.shape[0], H) and c_prev.shape == h_prev.shape,
           f"LSTM state {h_prev.shape}/{c_prev.shape} does not match batch {x_t.shape[0]}, h={H}")
    hx = np.concatenate([x_t, h_prev], axis=1)
    a = hx @ cell.W.T + cell.b
    s = sigmoid(a[:, :3 * H])
    i, f, o = s[:, :H], s[:, H:2 * H], s[:, 2 * H:]
    g = np.tanh(a[:, 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (hx, i, f, o, g, c_prev, tc)


def lstm_forward(cell: LstmCell, xs: np.ndarray, h0=None, c0=None):
    """Run the cell over ``xs`` of shape ``(batch, K, n_in)``; returns ``(h_K, c_K, caches)``."""
    _check(xs.ndim == 3, f"LSTM sequence must be (batch, K, n_in), got {xs.shape}")
    B = xs.shape[0]
    h = np.zeros((B, cell.hidden)) if h0 is None else h0
    c = np.zeros((B, cell.hidden)) if c0 is None else c0
    caches = []
    for t in range(xs.shape[1]):
        h, c, cache = lstm_step(cell, xs[:, t], h, c)
        caches.append(cache)
    return h, c, caches


def lstm_backward(cell: LstmCell, caches, dh: np.ndarray, dc: np.ndarray | None = None):
    """Backpropagation through time from the final hidden state.

    Returns ``(dxs, dW, db, dh0, dc0)``.
    """
    H = cell.hidden
    n_in = cell.n_in
    dW = np.zeros_like(cell.W)
    db = np.zeros_like(cell.b)
    dc = np.zeros_like(dh) if dc is None else dc
    dxs = np.empty((dh.shape[0], len(caches), n_in))
    for t in reversed(range(len(caches))):
        hx, i, f, o, g, c_prev, tc = caches[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            do * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ], axis=1)
        dW += da.T @ hx
        db += da.sum(axis=0)
        dhx = da @ cell.W
        dxs[:, t] = dhx[:, :n_in]
        dh = dhx[:, n_in:]
        dc = dc * f
    return dxs, dW, db, dh, dc


class Encoder:
    """LSTM over a frame sequence followed by a tanh projection of its last hidden state."""

    def __init__(self, n_in: int, hidden: int, embed: int):
        self.n_in, self.hidden, self.embed = n_in, hidden, embed
        self.layout = Layout({
            "lstm_W": (4 * hidden, n_in + hidden),
            "lstm_b": (4 * hidden,),
            "proj_W": (embed, hidden),
            "proj_b": (embed,),
        })

    def init(self, rng: np.random.Generator) -> np.ndarray:
        flat = self.layout.zeros()
        p = self.layout.unpack(flat)
        H = self.hidden
        for k in range(4):
            p["lstm_W"][k * H:(k + 1) * H] = init_xavier((H, self.n_in + H), rng)
        p["lstm_b"][H:2 * H] = 1.0  # forget-gate bias
        p["proj_W"][...] = init_xavier(p["proj_W"].shape, rng)
        return flat

    def forward(self, flat: np.ndarray, seq: np.ndarray):
        p = self.layout.unpack(flat)
        _check(seq.ndim == 3 and seq.shape[2] == self.n_in,
               f"encoder input {seq.shape} does not match (batch, K, {self.n_in})")
        cell = LstmCell(p["lstm_W"], p["lstm_b"])
        h, _, caches = lstm_forward(cell, seq)
        z = np.tanh(dense_forward(p["proj_W"], p["proj_b"], h))
        return z, (cell, caches, h, z)

    def backward(self, flat: np.ndarray, cache, dz: np.ndarray):
        p = self.layout.unpack(flat)
        cell, caches, h, z = cache
        grad = self.layout.zeros()
        g = self.layout.unpack(grad)
        da = tanh_backward(z, dz)
        dh, g["proj_W"][...], g["proj_b"][...] = dense_backward(p["proj_W"], h, da)
        dseq, g["lstm_W"][...], g["lstm_b"][...], _, _ = lstm_backward(cell, caches, dh)
        return dseq, grad


# ------------------------------------------------------------------------ Adam

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    lr: float | np.ndarray = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0

    @classmethod
    def like(cls, params: np.ndarray, **kw) -> "AdamState":
        return cls(m=np.zeros_like(params), v=np.zeros_like(params), **kw)


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """Bias-corrected Adam step, applied to ``params`` in place (also returned)."""
    _check(params.shape == grads.shape == state.m.shape,
           f"Adam shapes differ: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise FloatingPointError("gradient blow-up")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grads
    state.v *= b2
    state.v += (1.0 - b2) * grads * grads
    mhat = state.m / (1.0 - b1 ** state.t)
    vhat = state.v / (1.0 - b2 ** state.t)
    params -= state.lr * mhat / (np.sqrt(vhat) + state.epsilon)
    return params


# ------------------------------------------------------------- gradient check

def grad_check(loss: Callable[[np.ndarray], float], params: np.ndarray,
               analytic: np.ndarray, floor: float = 1e-6) -> float:
    """Worst relative error between ``analytic`` and central finite differences.

    Each parameter is perturbed by ``1e-5 * max(1, |theta|)``; the relative error
    of one entry is ``|a - n| / max(|a| + |n|, floor)``.
    """
    theta = params.copy()
    worst = 0.0
    for k in range(theta.size):
        h = 1e-5 * max(1.0, abs(theta[k]))
        old = theta[k]
        theta[k] = old + h
        lp = loss(theta)
        theta[k] = old - h
        lm = loss(theta)
        theta[k] = old
        num = (lp - lm) / (2.0 * h)
        err = abs(analytic[k] - num) / max(abs(analytic[k]) + abs(num), floor)
        worst = max(worst, err)
    return worst
