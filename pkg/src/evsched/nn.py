"""Minimal float64 neural-network kernel: conv / batch-norm / relu /
max-pool / dense / dropout layers with hand-written backprop, a softmax
cross-entropy loss with class weights, and Adam.

Everything is deterministic given the seeds handed in: initialization draws
from one generator, dropout masks from the generator passed to forward().
Analytic gradients are validated against central finite differences in the
test suite, which is why the whole stack stays in float64.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np


class Layer:
    """Base layer: params/grads are parallel dicts of arrays."""

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict[str, np.ndarray]:
        """Non-trainable buffers (running statistics)."""
        return {}


class Dense(Layer):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, scale: float | None = None):
        super().__init__()
        if scale is None:
            scale = np.sqrt(2.0 / d_in)
        self.params = {
            "W": rng.normal(0.0, scale, size=(d_in, d_out)),
            "b": np.zeros(d_out),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, train, rng):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, gout):
        self.grads["W"] += self._x.T @ gout
        self.grads["b"] += gout.sum(axis=0)
        return gout @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, train, rng):
        self._mask = x > 0
        return x * self._mask

    def backward(self, gout):
        return gout * self._mask


class Flatten(Layer):
    def forward(self, x, train, rng):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gout):
        return gout.reshape(self._shape)


class Dropout(Layer):
    """Inverted dropout; identity when not training."""

    def __init__(self, p: float):
        super().__init__()
        if not (0 <= p < 1):
            raise ValueError(f"dropout rate must be in [0, 1), got {p}")
        self.p = p

    def forward(self, x, train, rng):
        if not train or self.p == 0:
            self._mask = None
            return x
        assert rng is not None, "training-mode dropout needs an RNG"
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, gout):
        if self._mask is None:
            return gout
        return gout * self._mask


class Conv2d(Layer):
    """3x3 (configurable) convolution, stride 1, zero padding to keep the
    spatial shape; implemented with im2col so the heavy work is one matmul."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, kernel: int = 3):
        super().__init__()
        self.c_in, self.c_out, self.k = c_in, c_out, kernel
        self.pad = kernel // 2
        scale = np.sqrt(2.0 / (c_in * kernel * kernel))
        self.params = {
            "W": rng.normal(0.0, scale, size=(c_in * kernel * kernel, c_out)),
            "b": np.zeros(c_out),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def _im2col(self, x: np.ndarray) -> np.ndarray:
        B, C, H, W = x.shape
        k, p = self.k, self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
        # (B, C, H, W, k, k) -> (B, H, W, C*k*k)
        return windows.transpose(0, 2, 3, 1, 4, 5).reshape(B, H, W, C * k * k)

    def forward(self, x, train, rng):
        self._xshape = x.shape
        B, C, H, W = x.shape
        cols = self._im2col(x)
        self._cols = cols
        out = cols @ self.params["W"] + self.params["b"]  # (B, H, W, c_out)
        return out.transpose(0, 3, 1, 2)

    def backward(self, gout):
        B, C, H, W = self._xshape
        k, p = self.k, self.pad
        g = gout.transpose(0, 2, 3, 1)  # (B, H, W, c_out)
        self.grads["W"] += self._cols.reshape(-1, C * k * k).T @ g.reshape(-1, self.c_out)
        self.grads["b"] += g.sum(axis=(0, 1, 2))
        gcols = g @ self.params["W"].T  # (B, H, W, C*k*k)
        gcols = gcols.reshape(B, H, W, C, k, k)
        gx = np.zeros((B, C, H + 2 * p, W + 2 * p))
        for di in range(k):
            for dj in range(k):
                gx[:, :, di : di + H, dj : dj + W] += gcols[:, :, :, :, di, dj].transpose(
                    0, 3, 1, 2
                )
        return gx[:, :, p : p + H, p : p + W]


class BatchNorm2d(Layer):
    """Per-channel batch normalization over (batch, height, width); running
    statistics follow train-mode batches and drive inference mode."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.momentum = momentum
        self.params = {"gamma": np.ones(channels), "beta": np.zeros(channels)}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def state(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, train, rng):
        axes = (0, 2, 3)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        m = mean.reshape(1, -1, 1, 1)
        v = var.reshape(1, -1, 1, 1)
        self._xhat = (x - m) / np.sqrt(v + self.eps)
        self._std = np.sqrt(v + self.eps)
        self._train = train
        return self.params["gamma"].reshape(1, -1, 1, 1) * self._xhat + self.params[
            "beta"
        ].reshape(1, -1, 1, 1)

    def backward(self, gout):
        axes = (0, 2, 3)
        self.grads["gamma"] += (gout * self._xhat).sum(axis=axes)
        self.grads["beta"] += gout.sum(axis=axes)
        g = gout * self.params["gamma"].reshape(1, -1, 1, 1)
        if not self._train:
            return g / self._std
        n = gout.shape[0] * gout.shape[2] * gout.shape[3]
        sum_g = g.sum(axis=axes, keepdims=True)
        sum_gx = (g * self._xhat).sum(axis=axes, keepdims=True)
        return (g - sum_g / n - self._xhat * sum_gx / n) / self._std


class MaxPool2d(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns dropped."""

    def __init__(self, size: int = 2):
        super().__init__()
        self.size = size

    def forward(self, x, train, rng):
        s = self.size
        B, C, H, W = x.shape
        Ho, Wo = H // s, W // s
        x_crop = x[:, :, : Ho * s, : Wo * s]
        self._xshape = x.shape
        blocks = x_crop.reshape(B, C, Ho, s, Wo, s)
        out = blocks.max(axis=(3, 5))
        self._mask = blocks == out[:, :, :, None, :, None]
        # break ties: keep only the first max in each block
        flat = self._mask.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, Ho, Wo, s * s)
        first = np.argmax(flat, axis=-1)
        only = np.zeros_like(flat)
        np.put_along_axis(only, first[..., None], 1, axis=-1)
        self._mask = only.reshape(B, C, Ho, Wo, s, s).transpose(0, 1, 2, 4, 3, 5)
        return out

    def backward(self, gout):
        s = self.size
        B, C, H, W = self._xshape
        Ho, Wo = H // s, W // s
        g = self._mask * gout[:, :, :, None, :, None]
        gx = np.zeros((B, C, H, W))
        gx[:, :, : Ho * s, : Wo * s] = g.reshape(B, C, Ho * s, Wo * s)
        return gx


class Network:
    """A plain layer stack ending in logits."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def backward(self, dlogits: np.ndarray) -> None:
        g = dlogits
        for layer in reversed(self.layers):
            g = layer.backward(g)

    def zero_grads(self) -> None:
        for layer in self.layers:
            for k in layer.grads:
                layer.grads[k][...] = 0.0

    def parameters(self) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        for i, layer in enumerate(self.layers):
            for k in layer.params:
                yield f"{i}.{k}", layer.params[k], layer.grads[k]

    def param_count(self) -> int:
        return sum(p.size for _, p, _ in self.parameters())

    def get_weights(self) -> dict[str, np.ndarray]:
        out = {}
        for name, p, _ in self.parameters():
            out[name] = p.copy()
        for i, layer in enumerate(self.layers):
            for k, v in layer.state().items():
                out[f"{i}.state.{k}"] = v.copy()
        return out

    def set_weights(self, weights: dict[str, np.ndarray]) -> None:
        for name, p, _ in self.parameters():
            p[...] = weights[name]
        for i, layer in enumerate(self.layers):
            for k in layer.state():
                setattr(layer, k, weights[f"{i}.state.{k}"].copy())


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def weighted_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, class_weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """Class-weighted softmax cross-entropy, normalized by the summed
    weights of the batch labels; returns (loss, dloss/dlogits)."""
    n = logits.shape[0]
    probs = softmax(logits)
    w = class_weights[labels]
    denom = w.sum()
    if denom <= 0:
        return 0.0, np.zeros_like(logits)
    logp = np.log(np.clip(probs[np.arange(n), labels], 1e-300, None))
    loss = float(-(w * logp).sum() / denom)
    grad = probs * w[:, None]
    grad[np.arange(n), labels] -= w
    return loss, grad / denom


class Adam:
    def __init__(self, network: Network, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.network = network
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p, _ in network.parameters()}
        self.v = {name: np.zeros_like(p) for name, p, _ in network.parameters()}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p, g in self.network.parameters():
            m = self.m[name] = b1 * self.m[name] + (1 - b1) * g
            v = self.v[name] = b2 * self.v[name] + (1 - b2) * (g * g)
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
