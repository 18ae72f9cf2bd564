"""Layers with hand-derived backward passes.

Shape conventions: dense layers take (B, n_in) and return (B, n_out);
the LSTM layer takes a whole window batch (B, L, F) and returns the final
hidden state (B, H). backward() consumes the gradient of the loss with
respect to a layer's output and returns the gradient with respect to its
input, stashing parameter gradients on the layer for the optimizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gridcast.errors import NoCachedForwardError, ShapeMismatchError


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (never exponentiates a
    positive argument)."""
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def glorot_uniform(rng: np.random.Generator | None, shape: tuple[int, ...],
                   fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform init on [-sqrt(6/(fan_in+fan_out)), +sqrt(...)]; zeros
    when no generator is supplied (handy for fixed-weight tests)."""
    if rng is None:
        return np.zeros(shape)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass(frozen=True)
class DropoutSpec:
    """Inverted-dropout parameters: drop probability and mode."""

    rate: float
    train: bool = True

    def __post_init__(self):
        if not (0.0 <= self.rate < 1.0):
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def apply_dropout(x: np.ndarray, spec: DropoutSpec,
                  rng: np.random.Generator | None) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: zero units with probability rate and scale the
    survivors by 1/(1-rate), so the expected activation is unchanged.

    Returns (output, mask). In eval mode (or rate 0) it is the identity
    with an all-ones mask.
    """
    if not spec.train or spec.rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("dropout in train mode requires a random generator")
    mask = (rng.random(x.shape) >= spec.rate).astype(np.float64)
    return x * mask / (1.0 - spec.rate), mask


class Dense:
    """Fully connected layer: activation(x @ W.T + b).

    W has shape (n_out, n_in). Supported activations: relu, identity.
    """

    def __init__(self, n_in: int, n_out: int, activation: str = "identity",
                 rng: np.random.Generator | None = None):
        if activation not in ("identity", "relu"):
            raise ValueError(f"unsupported dense activation: {activation}")
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        self.W = glorot_uniform(rng, (n_out, n_in), n_in, n_out)
        self.b = np.zeros(n_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._z = None

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeMismatchError(
                f"dense layer expects (B, {self.n_in}), got {x.shape}"
            )
        z = x @ self.W.T + self.b
        self._x, self._z = x, z
        return relu(z) if self.activation == "relu" else z

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise NoCachedForwardError("dense backward called before forward")
        dz = dout * (self._z > 0.0) if self.activation == "relu" else dout
        self.dW = dz.T @ self._x
        self.db = dz.sum(axis=0)
        return dz @ self.W

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def spec(self) -> dict:
        return {"kind": "dense", "n_in": self.n_in, "n_out": self.n_out,
                "activation": self.activation}


class Dropout:
    """Inverted-dropout layer; identity outside training."""

    def __init__(self, rate: float):
        self.rate = DropoutSpec(rate).rate
        self._mask = None
        self._train = False

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        self._train = train
        out, mask = apply_dropout(x, DropoutSpec(self.rate, train=train), rng)
        self._mask = mask
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise NoCachedForwardError("dropout backward called before forward")
        if not self._train or self.rate == 0.0:
            return dout
        return dout * self._mask / (1.0 - self.rate)

    def params(self):
        return []

    def grads(self):
        return []

    def spec(self) -> dict:
        return {"kind": "dropout", "rate": self.rate}


class LSTM:
    """Single LSTM layer over a window; emits the final hidden state.

    Gates read the concatenation [h_prev, x_t]:

        f = sigmoid(W_f [h, x] + b_f)        forget
        i = sigmoid(W_i [h, x] + b_i)        input
        g = act(W_c [h, x] + b_c)            cell candidate
        o = sigmoid(W_o [h, x] + b_o)        output
        c_t = f * c_prev + i * g
        h_t = o * act(c_t)

    ``activation`` selects act: the classic cell uses tanh; the relu
    variant swaps relu into the candidate and the hidden output while
    the gate sigmoids stay untouched.

    The four gate matrices live as row blocks of one (4H, H+F) array in
    the order f, i, c, o, so each step costs one matmul; W_f etc. are
    views into it.
    """

    GATE_ORDER = ("f", "i", "c", "o")

    def __init__(self, n_in: int, hidden: int, activation: str = "tanh",
                 rng: np.random.Generator | None = None):
        if activation not in ("tanh", "relu"):
            raise ValueError(f"unsupported cell activation: {activation}")
        self.n_in = n_in
        self.hidden = hidden
        self.activation = activation
        h = hidden
        # Each gate block is (H, H+F): fan_in = H+F, fan_out = H.
        self.W = np.vstack([
            glorot_uniform(rng, (h, h + n_in), h + n_in, h) for _ in self.GATE_ORDER
        ])
        self.b = np.zeros(4 * h)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._cache = None

    # Named views into the stacked parameter blocks; assigning through
    # them (e.g. cell.b_f[:] = 1) updates the real parameters.
    def _block(self, a, gate):
        k = self.GATE_ORDER.index(gate)
        return a[k * self.hidden:(k + 1) * self.hidden]

    @property
    def W_f(self): return self._block(self.W, "f")
    @property
    def W_i(self): return self._block(self.W, "i")
    @property
    def W_c(self): return self._block(self.W, "c")
    @property
    def W_o(self): return self._block(self.W, "o")
    @property
    def b_f(self): return self._block(self.b, "f")
    @property
    def b_i(self): return self._block(self.b, "i")
    @property
    def b_c(self): return self._block(self.b, "c")
    @property
    def b_o(self): return self._block(self.b, "o")

    def _act(self, z):
        return np.tanh(z) if self.activation == "tanh" else relu(z)

    def _act_grad_from(self, value, pre):
        # d act / d pre, expressed from whichever of (value, pre) is cheap.
        if self.activation == "tanh":
            return 1.0 - value * value
        return (pre > 0.0).astype(np.float64)

    def _step(self, x_t, h_prev, c_prev):
        """One batched cell update. Returns (h, c, cache)."""
        hx = np.concatenate([h_prev, x_t], axis=1)
        z = hx @ self.W.T + self.b
        h = self.hidden
        f = sigmoid(z[:, 0 * h:1 * h])
        i = sigmoid(z[:, 1 * h:2 * h])
        g = self._act(z[:, 2 * h:3 * h])
        o = sigmoid(z[:, 3 * h:4 * h])
        c = f * c_prev + i * g
        a = self._act(c)
        out = o * a
        cache = (hx, f, i, g, o, c_prev, c, a)
        return out, c, cache

    def step(self, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
        """Public single-step interface; accepts vectors or batches."""
        single = x_t.ndim == 1
        if single:
            x_t, h_prev, c_prev = x_t[None, :], h_prev[None, :], c_prev[None, :]
        if x_t.shape[1] != self.n_in or h_prev.shape[1] != self.hidden:
            raise ShapeMismatchError(
                f"step expects x ({self.n_in},) and state ({self.hidden},), "
                f"got {x_t.shape[1:]} and {h_prev.shape[1:]}"
            )
        h, c, _ = self._step(x_t, h_prev, c_prev)
        return (h[0], c[0]) if single else (h, c)

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ShapeMismatchError(
                f"lstm layer expects (B, L, {self.n_in}), got {x.shape}"
            )
        batch, length, _ = x.shape
        h = np.zeros((batch, self.hidden))
        c = np.zeros((batch, self.hidden))
        caches = []
        for t in range(length):
            h, c, cache = self._step(x[:, t, :], h, c)
            caches.append(cache)
        self._cache = (x.shape, caches)
        return h

    def forward_sequence(self, seq: np.ndarray) -> np.ndarray:
        """Run a single (L, F) sequence; returns the final hidden (H,)."""
        return self.forward(seq[None, :, :])[0]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        """Backpropagation through time from the final hidden state.

        Only h_L feeds the next layer, so the incoming gradient touches
        the last step directly and flows to earlier steps through the
        recurrent h and c paths.
        """
        if self._cache is None:
            raise NoCachedForwardError("lstm backward called before forward")
        (batch, length, _), caches = self._cache
        hsz = self.hidden
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        dx = np.zeros((batch, length, self.n_in))
        dh = dout
        dc = np.zeros((batch, hsz))
        for t in range(length - 1, -1, -1):
            hx, f, i, g, o, c_prev, c, a = caches[t]
            do = dh * a
            dc = dc + dh * o * self._act_grad_from(a, c)
            df = dc * c_prev
            di = dc * g
            dg = dc * i
            dc_prev = dc * f
            dz = np.concatenate([
                df * f * (1.0 - f),
                di * i * (1.0 - i),
                dg * self._act_grad_from(g, g),
                do * o * (1.0 - o),
            ], axis=1)
            self.dW += dz.T @ hx
            self.db += dz.sum(axis=0)
            dhx = dz @ self.W
            dh = dhx[:, :hsz]
            dx[:, t, :] = dhx[:, hsz:]
            dc = dc_prev
        return dx

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def spec(self) -> dict:
        return {"kind": "lstm", "n_in": self.n_in, "hidden": self.hidden,
                "activation": self.activation}


class Network:
    """A plain stack of layers sharing the forward/backward protocol."""

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def grads(self):
        return [g for layer in self.layers for g in layer.grads()]

    def get_weights(self):
        return [p.copy() for p in self.params()]

    def set_weights(self, weights):
        params = self.params()
        if len(weights) != len(params):
            raise ShapeMismatchError(
                f"expected {len(params)} parameter arrays, got {len(weights)}"
            )
        for p, w in zip(params, weights):
            if p.shape != w.shape:
                raise ShapeMismatchError(f"shape {w.shape} != parameter {p.shape}")
            np.copyto(p, w)

    def spec(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]


def count_params(model) -> int:
    """Total number of trainable scalars in a layer or network."""
    return int(sum(p.size for p in model.params()))
