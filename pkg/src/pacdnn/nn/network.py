"""Layer stacks and the three decoder architectures (MLP, CNN, RNN)."""
from __future__ import annotations

import enum

import numpy as np

from .layers import AffineNorm, Conv1d, Dense, Layer, MaxPool1d, ReLU, Reshape, Sigmoid
from .lstm import LSTM

HIDDEN = 128
CONV_CHANNELS = (128, 64, 16)
CONV_KERNEL = 4
LSTM_HIDDEN = 90

LAYER_TYPES = {cls.kind: cls for cls in
               (Dense, AffineNorm, ReLU, Sigmoid, Conv1d, MaxPool1d, Reshape, LSTM)}


class Arch(str, enum.Enum):
    MLP = "mlp"
    CNN = "cnn"
    RNN = "rnn"

    @classmethod
    def parse(cls, value) -> "Arch":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unsupported architecture {value!r}") from None


class Network:
    def __init__(self, layers: list[Layer], arch=None, N=None, K=None):
        self.layers = list(layers)
        self.arch = Arch.parse(arch) if arch is not None else None
        self.N, self.K = N, K
        self.training = False

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    @property
    def dtype(self):
        for layer in self.layers:
            for p in layer.params.values():
                return p.dtype
        return np.dtype(np.float32)

    def forward(self, x):
        x = np.asarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x, train=self.training)
        return x

    __call__ = forward

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def parameters(self):
        return [p for layer in self.layers for p in layer.params.values()]

    def gradients(self):
        return [layer.grads[k] for layer in self.layers for k in layer.params]

    def named_parameters(self):
        for idx, layer in enumerate(self.layers):
            for name, p in layer.params.items():
                yield f"{idx}.{layer.kind}.{name}", p

    def named_buffers(self):
        for idx, layer in enumerate(self.layers):
            for name, b in layer.buffers.items():
                yield f"{idx}.{layer.kind}.{name}", b

    def astype(self, dtype):
        for layer in self.layers:
            layer.astype(dtype)
        return self

    def predict_bits(self, x):
        return (self.forward(x) > 0.5).astype(np.uint8)

    def __repr__(self):
        body = "\n".join(f"  {layer!r}" for layer in self.layers)
        return f"Network(arch={self.arch and self.arch.value}, N={self.N}, K={self.K})[\n{body}\n]"


def param_count(net: Network) -> int:
    return sum(p.size for p in net.parameters())


def build_decoder_network(arch, N: int, K: int, seed: int = 0, dtype=np.float32) -> Network:
    """Decoder network mapping a length-N input to K bit probabilities.

    mlp: three Dense(128) + norm + ReLU blocks; cnn: three Conv1d(k=4) +
    max-pool + ReLU blocks with 128/64/16 maps on a (length, channel)
    layout, flattened length-major before the head; rnn: one LSTM(90) fed the
    whole input at each of N steps. Every head is Dense(K) + Sigmoid.
    """
    arch = Arch.parse(arch)
    if N < 1 or K < 1:
        raise ValueError("N and K must be positive")
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    if arch is Arch.MLP:
        width = N
        for _ in range(3):
            layers += [Dense(width, HIDDEN, rng, dtype), AffineNorm(HIDDEN, dtype=dtype), ReLU()]
            width = HIDDEN
        layers.append(Dense(width, K, rng, dtype))
    elif arch is Arch.CNN:
        if N % 8:
            raise ValueError(f"cnn decoder needs N divisible by 8, got {N}")
        layers.append(Reshape((N, 1)))
        ch, length = 1, N
        for out_ch in CONV_CHANNELS:
            layers += [Conv1d(ch, out_ch, CONV_KERNEL, rng, dtype), MaxPool1d(), ReLU()]
            ch, length = out_ch, length // 2
        layers += [Reshape((ch * length,)), Dense(ch * length, K, rng, dtype)]
    else:
        layers += [LSTM(N, LSTM_HIDDEN, rng, dtype, steps=N), Dense(LSTM_HIDDEN, K, rng, dtype)]
    layers.append(Sigmoid())
    return Network(layers, arch, N, K)


def layer_from_config(kind: str, cfg: dict) -> Layer:
    cls = LAYER_TYPES[kind]
    if kind == "dense":
        return Dense(cfg["n_in"], cfg["n_out"])
    if kind == "affine_norm":
        return AffineNorm(cfg["width"], cfg["momentum"], cfg["eps"])
    if kind == "conv1d":
        return Conv1d(cfg["in_ch"], cfg["out_ch"], cfg["kernel"])
    if kind == "lstm":
        return LSTM(cfg["in_dim"], cfg["hidden"], steps=cfg.get("steps"))
    if kind == "reshape":
        return Reshape(cfg["shape"])
    return cls()
