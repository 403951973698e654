"""Single-layer LSTM returning the final hidden state, trained by full BPTT."""
from __future__ import annotations

import numpy as np

from .layers import Layer, _uniform


class LSTM(Layer):
    """LSTM from a zero state; output h_T of shape (B, hidden).

    Input is either a sequence (B, T, in_dim), or, when the layer was built
    with ``steps=T``, a single (B, in_dim) vector presented at each of the T
    steps. The second form computes the input projection once.

    Gate rows are stacked as [input, forget, output, candidate]. Two bias
    vectors (input-side and recurrent-side) are kept, as in the common
    framework parameterisation, so the layer holds 4H(in + H) + 8H values.
    """

    kind = "lstm"

    def __init__(self, in_dim, hidden, rng=None, dtype=np.float32, forget_bias=1.0, steps=None):
        super().__init__()
        if in_dim < 1 or hidden < 1 or (steps is not None and steps < 1):
            raise ValueError("lstm dimensions must be positive")
        self.in_dim, self.hidden = in_dim, hidden
        self.steps = None if steps is None else int(steps)
        rng = rng if rng is not None else np.random.default_rng(0)
        H = hidden
        bound = 1.0 / np.sqrt(H)
        self.params["W_ih"] = _uniform(rng, bound, (4 * H, in_dim), dtype)
        self.params["W_hh"] = _uniform(rng, bound, (4 * H, H), dtype)
        self.params["b_ih"] = np.zeros(4 * H, dtype=dtype)
        self.params["b_hh"] = np.zeros(4 * H, dtype=dtype)
        self.params["b_ih"][H:2 * H] = forget_bias
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def config(self):
        cfg = {"in_dim": self.in_dim, "hidden": self.hidden}
        if self.steps is not None:
            cfg["steps"] = self.steps
        return cfg

    def _gates(self, W):
        """(4H, D) -> (4, D, H): gate k maps a D-vector to its H pre-activations."""
        H = self.hidden
        return W.reshape(4, H, -1).transpose(0, 2, 1)

    def forward(self, x, train=False):
        repeated = x.ndim == 2
        if repeated and self.steps is None:
            raise ValueError("2-D input needs an lstm built with steps")
        if x.ndim not in (2, 3) or x.shape[-1] != self.in_dim:
            raise ValueError(f"lstm expects (B, T, {self.in_dim}) or (B, {self.in_dim}), got {x.shape}")
        B = x.shape[0]
        T = self.steps if repeated else x.shape[1]
        H = self.hidden
        p = self.params
        # State is kept gate-major, (T, 4, B, H), so each elementwise op runs on
        # contiguous memory. Sigmoid gates are evaluated as 0.5 * tanh(z / 2) + 0.5
        # with the halving folded into the weights.
        scale = np.ones((4, 1, 1), dtype=x.dtype)
        scale[:3] = 0.5
        bias = (p["b_ih"] + p["b_hh"]).reshape(4, 1, H) * scale
        W_in = self._gates(p["W_ih"]) * scale
        W_rec = self._gates(p["W_hh"]) * scale
        if repeated:
            xw_fixed = np.matmul(x, W_in) + bias
        acts = np.empty((T, 4, B, H), dtype=x.dtype)
        hs = np.zeros((T + 1, B, H), dtype=x.dtype)
        cs = np.zeros((T + 1, B, H), dtype=x.dtype)
        tcs = np.empty((T, B, H), dtype=x.dtype)
        for t in range(T):
            a = acts[t]
            np.matmul(hs[t], W_rec, out=a)
            if repeated:
                a += xw_fixed
            else:
                a += np.matmul(x[:, t], W_in)
                a += bias
            np.tanh(a, out=a)
            sig = a[:3]
            sig *= 0.5
            sig += 0.5
            i, f, o, g = a
            np.multiply(f, cs[t], out=cs[t + 1])
            cs[t + 1] += i * g
            np.tanh(cs[t + 1], out=tcs[t])
            np.multiply(o, tcs[t], out=hs[t + 1])
        self._x, self._acts, self._hs, self._cs, self._tcs = x, acts, hs, cs, tcs
        return hs[T].copy()

    def backward(self, dh):
        x = self._x
        acts, hs, cs, tcs = self._acts, self._hs, self._cs, self._tcs
        T, _, B, H = acts.shape
        W_hh = self.params["W_hh"]
        dz_all = np.empty((T, B, 4 * H), dtype=dh.dtype)
        dz = np.empty((4, B, H), dtype=dh.dtype)
        dc = np.zeros((B, H), dtype=dh.dtype)
        for t in range(T - 1, -1, -1):
            i, f, o, g = acts[t]
            tc = tcs[t]
            dc += dh * o * (1.0 - tc * tc)
            np.multiply(dc, g, out=dz[0])
            np.multiply(dc, cs[t], out=dz[1])
            np.multiply(dh, tc, out=dz[2])
            np.multiply(dc, i, out=dz[3])
            sig = acts[t, :3]
            dz[:3] *= sig * (1.0 - sig)
            dz[3] *= 1.0 - g * g
            dz_all[t].reshape(B, 4, H)[...] = dz.transpose(1, 0, 2)
            dh = dz_all[t] @ W_hh
            dc *= f
        flat = dz_all.reshape(T * B, 4 * H)
        self.grads["W_hh"] = flat.T @ hs[:T].reshape(T * B, H)
        if x.ndim == 2:
            dz_sum = dz_all.sum(axis=0)
            self.grads["W_ih"] = dz_sum.T @ x
            dx = dz_sum @ self.params["W_ih"]
        else:
            xt = np.ascontiguousarray(x.transpose(1, 0, 2)).reshape(T * B, self.in_dim)
            self.grads["W_ih"] = flat.T @ xt
            dx = (flat @ self.params["W_ih"]).reshape(T, B, self.in_dim).transpose(1, 0, 2)
        db = flat.sum(axis=0)
        self.grads["b_ih"] = db
        self.grads["b_hh"] = db.copy()
        return dx
