"""PAC code construction and encoding.

A PAC codeword is produced in three steps: the K message bits are placed on
the information positions of a length-N vector (rate profiling), the result
is passed through a rate-1 convolution, and the convolved vector is
multiplied by the n-th Kronecker power of F = [[1, 0], [1, 1]].

All indices are 0-based. Bit vectors are numpy ``uint8`` arrays; batched
functions accept a trailing axis of length N (or K).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_G = (1, 0, 1, 1, 0, 1, 1)


def _log2_exact(N: int) -> int:
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"code length must be a power of two, got {N}")
    return N.bit_length() - 1


def hamming_weight(i: int) -> int:
    return bin(i).count("1")


def bhattacharyya(N: int, z0: float = 0.5) -> np.ndarray:
    """Bhattacharyya parameters of the N synthetic channels of F^{(x)n}.

    Uses the erasure recursion z -> 2z - z^2 (upper branch, index bit 0) and
    z -> z^2 (lower branch, index bit 1), most significant index bit first.
    """
    n = _log2_exact(N)
    z = np.empty(N)
    for i in range(N):
        zi = z0
        for level in range(n - 1, -1, -1):
            if (i >> level) & 1:
                zi = zi * zi
            else:
                zi = 2 * zi - zi * zi
        z[i] = zi
    return z


def build_rate_profile(N: int, K: int) -> np.ndarray:
    """RM-polar information set: the K indices of largest binary weight.

    Indices at the cut-off weight are ranked by Bhattacharyya parameter
    (most reliable first, lower index on exact ties). Returned ascending.
    """
    _log2_exact(N)
    if not 1 <= K <= N:
        raise ValueError(f"K must be in [1, {N}], got {K}")
    z = bhattacharyya(N)
    # heavier rows first, then smaller z, then index
    order = sorted(range(N), key=lambda i: (-hamming_weight(i), z[i], i))
    return np.array(sorted(order[:K]), dtype=np.int64)


@dataclass(frozen=True)
class PacCode:
    """(N, K, A, g) description of a PAC code."""

    N: int
    K: int
    A: tuple[int, ...]
    g: tuple[int, ...] = DEFAULT_G
    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", _log2_exact(self.N))
        object.__setattr__(self, "A", tuple(int(a) for a in self.A))
        object.__setattr__(self, "g", tuple(int(b) for b in self.g))
        object.__setattr__(self, "m", len(self.g))
        if not 0 <= self.K <= self.N:
            raise ValueError(f"K must be in [0, N], got {self.K}")
        if len(self.A) != self.K or len(set(self.A)) != self.K:
            raise ValueError("information set must hold K distinct indices")
        if any(a < 0 or a >= self.N for a in self.A):
            raise ValueError("information index out of range")
        if list(self.A) != sorted(self.A):
            raise ValueError("information set must be sorted ascending")
        if self.m < 1 or any(b not in (0, 1) for b in self.g):
            raise ValueError("g must be a non-empty bit vector")
        if self.g[0] != 1 or self.g[-1] != 1:
            raise ValueError("g must start and end with 1")

    @classmethod
    def rm_polar(cls, N: int, K: int, g: Sequence[int] = DEFAULT_G) -> "PacCode":
        return cls(N, K, tuple(build_rate_profile(N, K)), tuple(g))

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def info_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        mask[list(self.A)] = True
        return mask

    @property
    def g_array(self) -> np.ndarray:
        return np.asarray(self.g, dtype=np.uint8)


def rate_profile_map(d, A) -> np.ndarray:
    """Place message bits ``d`` (..., K) on positions ``A`` of an all-zero (..., N) vector.

    N is taken as ``max(A) + 1`` unless ``A`` is a :class:`PacCode`.
    """
    if isinstance(A, PacCode):
        N, idx = A.N, np.asarray(A.A, dtype=np.int64)
    else:
        N, idx = None, np.asarray(A, dtype=np.int64)
    d = np.asarray(d, dtype=np.uint8)
    if d.shape[-1] != idx.size:
        raise ValueError(f"message length {d.shape[-1]} != |A| = {idx.size}")
    if N is None:
        N = int(idx.max()) + 1 if idx.size else 0
    v = np.zeros(d.shape[:-1] + (N,), dtype=np.uint8)
    v[..., idx] = d
    return v


def embed(d, code: PacCode) -> np.ndarray:
    return rate_profile_map(d, code)


def convolve(v, g) -> np.ndarray:
    """Rate-1 convolution u[i] = XOR_j g[j] v[i-j] as a shift register.

    Works on the last axis; any leading batch axes are processed together.
    """
    v = np.asarray(v, dtype=np.uint8)
    g = np.asarray(g, dtype=np.uint8)
    N = v.shape[-1]
    state = np.zeros(v.shape[:-1] + (len(g),), dtype=np.uint8)
    u = np.empty_like(v)
    for i in range(N):
        state = np.roll(state, 1, axis=-1)
        state[..., 0] = v[..., i]
        u[..., i] = (state @ g) & 1
    return u


def polar_transform(u) -> np.ndarray:
    """x = u F^{(x)n} over GF(2) via the butterfly, O(N log N)."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    _log2_exact(N)
    half = N // 2
    while half >= 1:
        # blocks of size 2*half: first half ^= second half
        blocks = x.reshape(x.shape[:-1] + (N // (2 * half), 2, half))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        half //= 2
    return x


def encode(d, code: PacCode) -> np.ndarray:
    """Encode message(s) ``d`` of shape (..., K) into codeword(s) (..., N)."""
    d = np.asarray(d, dtype=np.uint8)
    if d.shape[-1] != code.K:
        raise ValueError(f"message length {d.shape[-1]} != K = {code.K}")
    return polar_transform(convolve(rate_profile_map(d, code), code.g))


def all_messages(K: int) -> np.ndarray:
    """All 2^K messages as rows, message j holding the bits of j MSB-first."""
    j = np.arange(2 ** K, dtype=np.int64)[:, None]
    shifts = np.arange(K - 1, -1, -1, dtype=np.int64)[None, :]
    return ((j >> shifts) & 1).astype(np.uint8)


def codebook(code: PacCode) -> np.ndarray:
    return encode(all_messages(code.K), code)


def parse_bits(text: str) -> tuple[int, ...]:
    """'1011011' or '1,0,1,1' -> tuple of ints."""
    s = text.replace(",", "").replace(" ", "").strip()
    if not s or any(c not in "01" for c in s):
        raise ValueError(f"not a bit string: {text!r}")
    return tuple(int(c) for c in s)
