"""BPSK over the binary-input AWGN channel and decoder-input construction."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

LLR_CLAMP = 50.0


class InputMode(str, enum.Enum):
    HARD = "hard"
    DIRECT = "direct"
    LLR = "llr"

    @classmethod
    def parse(cls, value) -> "InputMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def noise_variance(ebn0_db: float, rate: float) -> float:
    """sigma^2 = 1 / (2 R 10^(Eb/N0 / 10)), energy per information bit."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    rate: float

    @property
    def sigma2(self) -> float:
        return noise_variance(self.ebn0_db, self.rate)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox (counter-based) generator for substream ``stream`` of ``seed``.

    Distinct stream tuples give statistically independent generators, so a
    worker can own e.g. ``make_rng(seed, point, chunk)`` without coordination.
    Normal variates come from numpy's ziggurat sampler.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def bpsk_modulate(x) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def awgn(s, params: ChannelParams | float, rng: np.random.Generator) -> np.ndarray:
    """y = s + z with z ~ N(0, sigma^2) i.i.d.; ``params`` may be a bare sigma^2."""
    sigma2 = params.sigma2 if isinstance(params, ChannelParams) else float(params)
    s = np.asarray(s, dtype=np.float64)
    return s + np.sqrt(sigma2) * rng.standard_normal(s.shape)


def llr(y, sigma2: float) -> np.ndarray:
    """Channel LLR 2y/sigma^2 clamped to [-50, 50]; positive favours bit 0."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    return np.clip(2.0 * np.asarray(y, dtype=np.float64) / sigma2, -LLR_CLAMP, LLR_CLAMP)


def hard_demod(y) -> np.ndarray:
    # y == 0 maps to bit 0
    return (np.asarray(y) < 0).astype(np.uint8)


def make_decoder_input(y, params: ChannelParams | float, mode) -> np.ndarray:
    mode = InputMode.parse(mode)
    if mode is InputMode.DIRECT:
        return np.asarray(y, dtype=np.float64)
    if mode is InputMode.HARD:
        return hard_demod(y).astype(np.float64)
    sigma2 = params.sigma2 if isinstance(params, ChannelParams) else float(params)
    return llr(y, sigma2)
