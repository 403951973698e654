"""Feed-forward layers with hand-written backward passes.

Tensors are batch-first numpy arrays. Each layer keeps whatever it needs
from the last forward call and overwrites ``grads`` on backward.
"""
from __future__ import annotations

import numpy as np


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def config(self) -> dict:
        return {}

    def astype(self, dtype):
        for store in (self.params, self.buffers):
            for k in store:
                store[k] = store[k].astype(dtype)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        return self

    @property
    def size(self) -> int:
        return sum(p.size for p in self.params.values())

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.config().items())
        return f"{type(self).__name__}({args})"


def _uniform(rng, bound, shape, dtype):
    return rng.uniform(-bound, bound, shape).astype(dtype)


class Dense(Layer):
    """y = W x + b with W of shape (out, in)."""

    kind = "dense"

    def __init__(self, n_in, n_out, rng=None, dtype=np.float32):
        super().__init__()
        if n_in < 1 or n_out < 1:
            raise ValueError("dense dimensions must be positive")
        self.n_in, self.n_out = n_in, n_out
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params["W"] = _uniform(rng, 1.0 / np.sqrt(n_in), (n_out, n_in), dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}

    def forward(self, x, train=False):
        if x.shape[-1] != self.n_in:
            raise ValueError(f"dense expects width {self.n_in}, got {x.shape[-1]}")
        self._x = x
        return x @ self.params["W"].T + self.params["b"]

    def backward(self, dy):
        x = self._x
        self.grads["W"] = dy.T @ x
        self.grads["b"] = dy.sum(axis=0)
        return dy @ self.params["W"]


class AffineNorm(Layer):
    """Per-feature batch normalisation followed by a learned scale and shift.

    Train mode normalises with the batch statistics and updates running
    estimates as ``running = momentum * running + (1 - momentum) * batch``.
    """

    kind = "affine_norm"

    def __init__(self, width, momentum=0.9, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.width, self.momentum, self.eps = width, momentum, eps
        self.params["gamma"] = np.ones(width, dtype=dtype)
        self.params["beta"] = np.zeros(width, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(width, dtype=dtype)
        self.buffers["running_var"] = np.ones(width, dtype=dtype)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def config(self):
        return {"width": self.width, "momentum": self.momentum, "eps": self.eps}

    def forward(self, x, train=False):
        if x.shape[-1] != self.width:
            raise ValueError(f"norm expects width {self.width}, got {x.shape[-1]}")
        if train:
            if x.shape[0] < 2:
                raise ValueError("batch statistics need at least two samples")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            mom = self.momentum
            self.buffers["running_mean"] = (mom * self.buffers["running_mean"]
                                            + (1 - mom) * mean).astype(x.dtype)
            self.buffers["running_var"] = (mom * self.buffers["running_var"]
                                           + (1 - mom) * var).astype(x.dtype)
        else:
            mean, var = self.buffers["running_mean"], self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, train)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, dy):
        xhat, inv_std, train = self._cache
        self.grads["gamma"] = (dy * xhat).sum(axis=0)
        self.grads["beta"] = dy.sum(axis=0)
        dxhat = dy * self.params["gamma"]
        if not train:
            return dxhat * inv_std
        B = dy.shape[0]
        return (inv_std / B) * (B * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, train=False):
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._y = out
        return out

    def backward(self, dy):
        y = self._y
        return dy * y * (1.0 - y)


class Conv1d(Layer):
    """Same-length 1-D cross-correlation on (batch, length, channels) tensors.

    Channels sit on the last axis so the im2col matrix is built without
    transposes. For kernel size k the input is padded with (k - 1) // 2
    zeros on the left and the rest on the right, so kernel 4 uses (1, 2).
    Weights are stored as (out_ch, in_ch, kernel).
    """

    kind = "conv1d"

    def __init__(self, in_ch, out_ch, kernel=4, rng=None, dtype=np.float32):
        super().__init__()
        if min(in_ch, out_ch, kernel) < 1:
            raise ValueError("conv dimensions must be positive")
        self.in_ch, self.out_ch, self.kernel = in_ch, out_ch, kernel
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel - 1 - self.pad_left
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_ch * kernel
        self.params["W"] = _uniform(rng, 1.0 / np.sqrt(fan_in), (out_ch, in_ch, kernel), dtype)
        self.params["b"] = np.zeros(out_ch, dtype=dtype)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def config(self):
        return {"in_ch": self.in_ch, "out_ch": self.out_ch, "kernel": self.kernel}

    def _wmat(self):
        # (kernel * in_ch, out_ch), row j * in_ch + c
        return self.params["W"].transpose(2, 1, 0).reshape(self.kernel * self.in_ch, self.out_ch)

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[2] != self.in_ch:
            raise ValueError(f"conv expects (B, L, {self.in_ch}), got {x.shape}")
        B, n, C = x.shape
        k = self.kernel
        xp = np.zeros((B, n + k - 1, C), dtype=x.dtype)
        xp[:, self.pad_left:self.pad_left + n] = x
        cols = np.empty((B, n, k * C), dtype=x.dtype)
        for j in range(k):
            cols[:, :, j * C:(j + 1) * C] = xp[:, j:j + n]
        self._cols, self._shape = cols, x.shape
        return cols @ self._wmat() + self.params["b"]

    def backward(self, dy):
        B, n, C = self._shape
        k = self.kernel
        dy2 = dy.reshape(B * n, self.out_ch)
        dWm = self._cols.reshape(B * n, k * C).T @ dy2
        self.grads["W"] = dWm.reshape(k, C, self.out_ch).transpose(2, 1, 0)
        self.grads["b"] = dy2.sum(axis=0)
        # route dy back through each kernel tap separately; cheaper than a
        # (B, n, k * C) column gradient followed by a scatter
        taps = np.ascontiguousarray(self.params["W"].transpose(2, 0, 1))   # (k, out, in)
        dxp = np.zeros((B, n + k - 1, C), dtype=dy.dtype)
        for j in range(k):
            dxp[:, j:j + n] += (dy2 @ taps[j]).reshape(B, n, C)
        return dxp[:, self.pad_left:self.pad_left + n]


class MaxPool1d(Layer):
    """Kernel 2, stride 2 along the length axis of (batch, length, channels).

    The first element of a pair wins ties.
    """

    kind = "maxpool1d"

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[1] % 2:
            raise ValueError(f"max-pool needs (B, even L, C), got {x.shape}")
        B, n, C = x.shape
        pairs = x.reshape(B, n // 2, 2, C)
        first, second = pairs[:, :, 0], pairs[:, :, 1]
        self._second = second > first
        self._shape = x.shape
        return np.maximum(first, second)

    def backward(self, dy):
        B, n, C = self._shape
        dx = np.empty((B, n // 2, 2, C), dtype=dy.dtype)
        np.multiply(dy, ~self._second, out=dx[:, :, 0])
        np.multiply(dy, self._second, out=dx[:, :, 1])
        return dx.reshape(self._shape)


class Reshape(Layer):
    """Reshape the non-batch axes, e.g. (B, N) -> (B, 1, N) or flatten."""

    kind = "reshape"

    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(int(s) for s in shape)

    def config(self):
        return {"shape": list(self.shape)}

    def forward(self, x, train=False):
        self._in = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dy):
        return dy.reshape(self._in)
