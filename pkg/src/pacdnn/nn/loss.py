"""Binary cross-entropy on sigmoid outputs."""
import numpy as np

P_CLAMP = 1e-7


def bce_loss(p, d):
    """Mean BCE over all entries of ``p`` against bit labels ``d``.

    ``p`` is clamped to [1e-7, 1 - 1e-7]. Returns (loss, dloss/dp), the
    gradient being (p - d) / (n p (1 - p)) with n the number of entries.
    """
    p = np.asarray(p)
    d = np.asarray(d, dtype=p.dtype)
    if p.shape != d.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {d.shape}")
    pc = np.clip(p.astype(np.float64), P_CLAMP, 1.0 - P_CLAMP)
    dd = d.astype(np.float64)
    n = p.size
    loss = -float(np.sum(dd * np.log(pc) + (1.0 - dd) * np.log1p(-pc))) / n
    grad = (pc - dd) / (n * pc * (1.0 - pc))
    return loss, grad.astype(p.dtype)
