"""Central-difference verification of analytic gradients."""
from __future__ import annotations

import numpy as np

from .layers import Layer
from .loss import bce_loss
from .network import Network


FLOOR = 1e-5


def relative_error(a, b, floor=FLOOR):
    """|a - b| / max(|a|, |b|, floor).

    A double-precision central difference with h = 1e-5 carries round-off
    of roughly eps * loss / h ~ 1e-11, so gradients much smaller than the
    floor (including structurally zero ones, e.g. a bias feeding a
    normalisation layer) are compared in absolute terms.
    """
    return abs(a - b) / max(abs(a), abs(b), floor)


def _kink_signature(layers):
    # activation patterns of the piecewise-linear layers
    parts = []
    for layer in layers:
        for attr in ("_mask", "_second"):
            state = getattr(layer, attr, None)
            if state is not None:
                parts.append(np.packbits(state).tobytes())
    return b"|".join(parts)


def _objective(target, x, head, train):
    """Scalar objective and its gradient w.r.t. the target output."""
    out = target.forward(x, train=train) if isinstance(target, Layer) else target.forward(x)
    if callable(head):
        return head(out)
    weights = head
    return float(np.sum(weights * out)), weights


def grad_check(target, x=None, probes=20, h=1e-5, seed=0, head=None, train=True,
               check_input=True) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``target`` is a Layer or a Network and is switched to float64 in place.
    The objective is sum(R * out) for a fixed random R unless ``head`` is a
    callable returning (loss, dloss/dout); for a Network with a sigmoid
    output a BCE head against random bits is used. Up to ``probes`` entries
    of every parameter array (and of the input) are perturbed; probes whose
    +h and -h evaluations switch a ReLU mask or pooling choice are skipped.
    """
    rng = np.random.default_rng(seed)
    target.astype(np.float64)
    is_net = isinstance(target, Network)
    if is_net:
        target.train() if train else target.eval()
    if x is None:
        if not is_net:
            raise ValueError("an input is required for a bare layer")
        x = rng.normal(0.0, 1.0, (8, target.N))
    x = np.array(x, dtype=np.float64)

    out = target.forward(x, train=train) if not is_net else target.forward(x)
    if head is None:
        if is_net:
            bits = rng.integers(0, 2, out.shape)
            head = lambda p: bce_loss(p, bits)  # noqa: E731
        else:
            head = rng.normal(0.0, 1.0, out.shape)

    layers = target.layers if is_net else [target]

    def loss_at():
        return _objective(target, x, head, train)[0], _kink_signature(layers)

    _, dout = _objective(target, x, head, train)
    dx = target.backward(dout)
    analytic = [(layer.params[k], layer.grads[k].copy()) for layer in layers for k in layer.params]
    if check_input:
        analytic.append((x, dx.copy()))

    worst = 0.0
    for arr, grad in analytic:
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        idx = rng.choice(flat.size, size=min(probes, flat.size), replace=False)
        for j in idx:
            orig = flat[j]
            flat[j] = orig + h
            lp, sig_p = loss_at()
            flat[j] = orig - h
            lm, sig_m = loss_at()
            flat[j] = orig
            if sig_p != sig_m:
                # the stencil straddles a ReLU / max-pool kink
                continue
            numeric = (lp - lm) / (2 * h)
            worst = max(worst, relative_error(gflat[j], numeric))
    return worst
