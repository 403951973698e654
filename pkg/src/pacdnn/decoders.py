"""Classical PAC decoders: Fano sequential, list, and exhaustive ML.

All decoders take channel LLRs (positive favours bit 0) and return the
estimated message. The successive-cancellation recursion follows the
natural-order transform x = u F^{(x)n}: with u = [a | b] the first half of
x carries (a ^ b) F' and the second half b F'.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .code import PacCode, all_messages, codebook, polar_transform

ML_MAX_K = 16
_LN2 = math.log(2.0)


@dataclass
class DecodeResult:
    d_hat: np.ndarray
    metric: float
    node_visits: int
    elapsed: float
    capped: bool = False


@dataclass(frozen=True)
class FanoConfig:
    delta: float = 2.0
    bias_info: float = 1.0
    bias_frozen: float = 0.0
    max_node_visits: int | None = None  # defaults to 10^5 * N

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def visit_cap(self, N: int) -> int:
        cap = 100_000 * N if self.max_node_visits is None else int(self.max_node_visits)
        if cap < N:
            raise ValueError(f"max_node_visits must be >= N={N}")
        return cap


@dataclass(frozen=True)
class ListConfig:
    list_size: int = 32

    def __post_init__(self):
        L = self.list_size
        if L < 1 or (L & (L - 1)) != 0:
            raise ValueError(f"list size must be a power of two, got {L}")


def softplus(x):
    """ln(1 + e^x), overflow-safe."""
    return np.logaddexp(0.0, x)


def f_exact(a, b):
    """2 atanh(tanh(a/2) tanh(b/2)) in a form that is stable for large |a|, |b|."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sign = np.where((a < 0) ^ (b < 0), -1.0, 1.0)
    return (sign * np.minimum(np.abs(a), np.abs(b))
            + np.log1p(np.exp(-np.abs(a + b)))
            - np.log1p(np.exp(-np.abs(a - b))))


def g_combine(a, b, partial):
    """LLR of the lower branch given the upper partial-sum bit(s)."""
    return b + (1.0 - 2.0 * np.asarray(partial, dtype=np.float64)) * a


def sc_bit_llr(channel_llrs, u_prefix, i: int):
    """Decision LLR of u[i] given the channel LLRs and u[:i].

    Vectorised over leading axes: ``channel_llrs`` is (..., N) and
    ``u_prefix`` (..., i); the two are broadcast against each other.
    """
    L = np.asarray(channel_llrs, dtype=np.float64)
    u = np.asarray(u_prefix, dtype=np.uint8)
    N = L.shape[-1]
    if not 0 <= i < N:
        raise IndexError(f"bit index {i} out of range for N={N}")
    if u.shape[-1] != i:
        raise ValueError(f"prefix length {u.shape[-1]} != i={i}")
    while N > 1:
        half = N // 2
        upper, lower = L[..., :half], L[..., half:]
        if i < half:
            L = f_exact(upper, lower)
            u = u[..., :i]
        else:
            L = g_combine(upper, lower, polar_transform(u[..., :half]))
            u = u[..., half:]
            i -= half
        N = half
    return L[..., 0]


def _f_scalar(a: float, b: float) -> float:
    m = min(abs(a), abs(b))
    if (a < 0) != (b < 0):
        m = -m
    return m + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


def _polar_list(bits: list) -> list:
    x = list(bits)
    N = len(x)
    half = N // 2
    while half >= 1:
        for start in range(0, N, 2 * half):
            for k in range(start, start + half):
                x[k] ^= x[k + half]
        half //= 2
    return x


def _sc_llr_scalar(L: list, u: list, i: int) -> float:
    # same recursion as sc_bit_llr on plain floats; faster for one short frame
    N = len(L)
    while N > 1:
        half = N // 2
        if i < half:
            L = [_f_scalar(a, b) for a, b in zip(L[:half], L[half:])]
            u = u[:i]
        else:
            p = _polar_list(u[:half])
            L = [b - a if pb else b + a for a, b, pb in zip(L[:half], L[half:], p)]
            u = u[half:]
            i -= half
        N = half
    return L[0]


def _log2_prob(llr_value: float, bit: int) -> float:
    # log2 P(u = bit) from the LLR ln(P0/P1)
    x = llr_value if bit == 0 else -llr_value
    if x > 0:
        return -math.log1p(math.exp(-x)) / _LN2
    return (x - math.log1p(math.exp(x))) / _LN2


def _conv_bit(state: tuple, g: tuple) -> int:
    # state[0] is the newest v; u = XOR g[j] v[i-j]
    acc = 0
    for gj, sj in zip(g, state):
        acc ^= gj & sj
    return acc


def fano_decode(channel_llrs, code: PacCode, cfg: FanoConfig | None = None) -> DecodeResult:
    """Fano sequential decoding over the PAC code tree.

    Branch metric at depth i for the branch producing u[i] is
    log2 P(u[i] | y, u[:i]) + 1 - bias(i). Threshold moves in steps of
    ``cfg.delta``; node_visits counts forward moves. When the visit cap is
    hit the current path is completed greedily and ``capped`` is set.
    """
    cfg = cfg or FanoConfig()
    t0 = time.perf_counter()
    L = np.asarray(channel_llrs, dtype=np.float64)
    N, g, m = code.N, code.g, code.m
    if L.shape != (N,):
        raise ValueError(f"expected {N} channel LLRs, got shape {L.shape}")
    cap = cfg.visit_cap(N)
    info = code.info_mask
    delta = cfg.delta

    Lf = [float(x) for x in L]
    u = [0] * N
    v = [0] * N
    # per depth: candidate branches sorted best-first as (metric_increment, v_bit, u_bit)
    branches: list = [None] * N
    choice = np.zeros(N, dtype=np.int64)  # index into branches[i] taken at depth i
    path_metric = np.zeros(N + 1)
    states = [None] * (N + 1)
    states[0] = (0,) * m

    def expand(i):
        llr_i = _sc_llr_scalar(Lf, u[:i], i)
        bias = cfg.bias_info if info[i] else cfg.bias_frozen
        cands = []
        for vb in ((0, 1) if info[i] else (0,)):
            ub = _conv_bit((vb,) + states[i][:-1], g)
            cands.append((_log2_prob(llr_i, ub) + 1.0 - bias, vb, ub))
        cands.sort(key=lambda c: -c[0])
        branches[i] = cands

    T = 0.0
    i = 0
    visits = 0
    expand(0)
    choice[0] = 0
    capped = False
    while True:
        if visits >= cap:
            capped = True
            break
        # look forward
        gamma, vb, ub = branches[i][choice[i]]
        mu_next = path_metric[i] + gamma
        if mu_next >= T:
            v[i], u[i] = vb, ub
            states[i + 1] = (vb,) + states[i][:-1]
            path_metric[i + 1] = mu_next
            visits += 1
            # first visit: tighten the threshold
            if path_metric[i] < T + delta:
                while mu_next >= T + delta:
                    T += delta
            i += 1
            if i == N:
                break
            expand(i)
            choice[i] = 0
            continue
        # look back
        while True:
            if i == 0 or path_metric[i - 1] < T:
                T -= delta
                choice[i] = 0
                break
            i -= 1
            if choice[i] + 1 < len(branches[i]):
                choice[i] += 1
                break
            # came from the worst branch, keep moving back

    metric = float(path_metric[i])
    if capped:
        # greedy completion from the current depth
        for j in range(i, N):
            if branches[j] is None or j > i:
                expand(j)
            _, vb, ub = branches[j][0]
            v[j], u[j] = vb, ub
            states[j + 1] = (vb,) + states[j][:-1]
            metric += branches[j][0][0]
        visits = cap + 1
    d_hat = np.array([v[a] for a in code.A], dtype=np.uint8)
    return DecodeResult(d_hat, metric, visits, time.perf_counter() - t0, capped)


def list_decode_batch(channel_llrs, code: PacCode, cfg: ListConfig | int):
    """List decoding of a batch of frames.

    Returns (d_hat (B, K), metric (B,), extensions) where metric is the
    final path metric sum_i ln(1 + exp(-(1 - 2u_i) L_i)) of the chosen path
    and ``extensions`` counts path-node extensions per frame.
    """
    list_size = cfg.list_size if isinstance(cfg, ListConfig) else int(cfg)
    L = np.atleast_2d(np.asarray(channel_llrs, dtype=np.float64))
    B, N = L.shape
    if N != code.N:
        raise ValueError(f"expected {code.N} LLRs per frame, got {N}")
    g = code.g_array
    m = code.m
    info = code.info_mask

    u = np.zeros((B, 1, N), dtype=np.uint8)
    v = np.zeros((B, 1, N), dtype=np.uint8)
    reg = np.zeros((B, 1, m), dtype=np.uint8)  # reg[..., 0] newest
    pm = np.zeros((B, 1))
    extensions = 0
    Lb = L[:, None, :]
    for i in range(N):
        P = u.shape[1]
        llr_i = sc_bit_llr(Lb, u[..., :i], i)  # (B, P)
        shifted = reg[..., :-1]
        if info[i]:
            vb = np.array([0, 1], dtype=np.uint8)
            # children ordered (parent, v)
            new_reg = np.concatenate(
                [np.broadcast_to(vb[None, None, :, None], (B, P, 2, 1)),
                 np.broadcast_to(shifted[:, :, None, :], (B, P, 2, m - 1))], axis=-1)
            ub = (new_reg.astype(np.int64) @ g.astype(np.int64)) & 1  # (B, P, 2)
            new_pm = pm[..., None] + softplus(-(1.0 - 2.0 * ub) * llr_i[..., None])
            new_reg = new_reg.reshape(B, 2 * P, m)
            ub = ub.reshape(B, 2 * P).astype(np.uint8)
            new_pm = new_pm.reshape(B, 2 * P)
            parent = np.repeat(np.arange(P), 2)
            u = u[:, parent, :]
            v = v[:, parent, :]
            u[..., i] = ub
            v[..., i] = np.tile(vb, P)[None, :]
            reg, pm = new_reg, new_pm
            extensions += 2 * P
            if 2 * P > list_size:
                keep = np.argsort(pm, axis=1, kind="stable")[:, :list_size]
                rows = np.arange(B)[:, None]
                u, v, reg, pm = u[rows, keep], v[rows, keep], reg[rows, keep], pm[rows, keep]
        else:
            reg = np.concatenate([np.zeros((B, P, 1), dtype=np.uint8), shifted], axis=-1)
            ub = ((reg.astype(np.int64) @ g.astype(np.int64)) & 1).astype(np.uint8)
            u[..., i] = ub
            pm = pm + softplus(-(1.0 - 2.0 * ub) * llr_i)
            extensions += P
    best = np.argmin(pm, axis=1)
    rows = np.arange(B)
    d_hat = v[rows, best][:, list(code.A)]
    return d_hat, pm[rows, best], extensions // B if B else 0


def list_decode(channel_llrs, code: PacCode, cfg: ListConfig | int | None = None) -> DecodeResult:
    cfg = cfg if cfg is not None else ListConfig()
    t0 = time.perf_counter()
    d_hat, metric, ext = list_decode_batch(np.asarray(channel_llrs)[None, :], code, cfg)
    return DecodeResult(d_hat[0], float(metric[0]), int(ext), time.perf_counter() - t0)


def ml_decode_batch(channel_llrs, code: PacCode):
    """Exhaustive ML over all 2^K codewords; returns (d_hat (B, K), metric (B,)).

    metric is sum_i ln(1 + exp(-(1 - 2x_i) L_i)), which reduces to a constant
    plus sum_{x_i = 1} L_i, so the argmin is a single matrix product.
    """
    if code.K > ML_MAX_K:
        raise ValueError(f"exhaustive ML limited to K <= {ML_MAX_K}, got K={code.K}")
    L = np.atleast_2d(np.asarray(channel_llrs, dtype=np.float64))
    X = codebook(code).astype(np.float64)  # (2^K, N)
    scores = L @ X.T  # (B, 2^K)
    best = np.argmin(scores, axis=1)
    base = softplus(-L).sum(axis=1)
    msgs = all_messages(code.K)
    return msgs[best], base + scores[np.arange(len(best)), best]


def ml_decode_exhaustive(channel_llrs, code: PacCode) -> DecodeResult:
    t0 = time.perf_counter()
    d_hat, metric = ml_decode_batch(np.asarray(channel_llrs)[None, :], code)
    return DecodeResult(d_hat[0], float(metric[0]), 2 ** code.K, time.perf_counter() - t0)


def path_metric(channel_llrs, x) -> np.ndarray:
    """sum_i ln(1 + exp(-(1 - 2x_i) L_i)) over the last axis."""
    L = np.asarray(channel_llrs, dtype=np.float64)
    s = 1.0 - 2.0 * np.asarray(x, dtype=np.float64)
    return softplus(-s * L).sum(axis=-1)
