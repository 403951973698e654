"""Dataset generation, the training loop and training-SNR selection by NVE."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .channel import ChannelParams, InputMode, awgn, bpsk_modulate, make_decoder_input, make_rng
from .code import PacCode, encode
from .evaluation import BerCurve, NeuralDecoder, monte_carlo_ber
from .nn import AdamState, Arch, Network, adam_step, bce_loss, build_decoder_network, save_checkpoint

log = logging.getLogger(__name__)

# substream tags under the master seed
_DATA, _SHUFFLE, _INIT, _EVAL = 0, 1, 2, 3


@dataclass
class TrainConfig:
    arch: Arch
    code: PacCode
    rho_t: float
    input_mode: InputMode = InputMode.LLR
    dataset_size: int = 2 ** 20
    batch_size: int = 512
    epochs: int = 1
    lr: float = 0.001
    seed: int = 0

    def __post_init__(self):
        self.arch = Arch.parse(self.arch)
        self.input_mode = InputMode.parse(self.input_mode)
        if self.batch_size < 1 or self.dataset_size % self.batch_size:
            raise ValueError("dataset_size must be a multiple of batch_size")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


@dataclass
class NveReport:
    rho_t: float
    test_points: list[tuple[float, float, float]]
    nve: float
    curve: BerCurve | None = field(default=None, repr=False)


def generate_dataset(code: PacCode, rho_t: float, input_mode, size: int, seed: int, chunk: int = 2 ** 16):
    """``size`` frames received at Eb/N0 ``rho_t``; returns (inputs float32 (size, N), labels uint8 (size, K))."""
    mode = InputMode.parse(input_mode)
    params = ChannelParams(rho_t, code.rate)
    inputs = np.empty((size, code.N), dtype=np.float32)
    labels = np.empty((size, code.K), dtype=np.uint8)
    for c, start in enumerate(range(0, size, chunk)):
        n = min(chunk, size - start)
        rng = make_rng(seed, _DATA, c)
        d = rng.integers(0, 2, (n, code.K), dtype=np.uint8)
        y = awgn(bpsk_modulate(encode(d, code)), params, rng)
        inputs[start:start + n] = make_decoder_input(y, params, mode)
        labels[start:start + n] = d
    return inputs, labels


def train(net: Network, cfg: TrainConfig, data, epoch_callback: Callable | None = None,
          checkpoint_every: int = 0, checkpoint_dir=None, adam: AdamState | None = None,
          start_epoch: int = 0):
    """Adam on mean BCE over shuffled mini-batches; returns (net, per-epoch mean loss).

    Epoch e shuffles with substream (seed, shuffle, e). ``epoch_callback(epoch,
    loss, net)`` runs after every epoch (1-based). With ``checkpoint_every``
    a checkpoint is written to ``checkpoint_dir`` every that many epochs.
    """
    inputs, labels = data
    if inputs.shape[1] != net.N or labels.shape[1] != net.K:
        raise ValueError(f"data ({inputs.shape[1]}->{labels.shape[1]}) does not match network "
                         f"({net.N}->{net.K})")
    size = len(inputs)
    if size % cfg.batch_size:
        raise ValueError("dataset size must be a multiple of the batch size")
    adam = adam or AdamState(lr=cfg.lr)
    history = []
    params = net.parameters()
    steps = size // cfg.batch_size
    net.train()
    for epoch in range(start_epoch, start_epoch + cfg.epochs):
        order = make_rng(cfg.seed, _SHUFFLE, epoch).permutation(size)
        total = 0.0
        for s in range(steps):
            idx = order[s * cfg.batch_size:(s + 1) * cfg.batch_size]
            out = net.forward(inputs[idx])
            loss, grad = bce_loss(out, labels[idx])
            if not math.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch + 1}, step {s}")
            net.backward(grad)
            adam_step(params, net.gradients(), adam)
            total += loss
        mean = total / steps if steps else float("nan")
        history.append(mean)
        log.debug("epoch %d bce %.6f", epoch + 1, mean)
        if epoch_callback:
            epoch_callback(epoch + 1, mean, net)
        if checkpoint_every and (epoch + 1) % checkpoint_every == 0 and checkpoint_dir:
            save_checkpoint(Path(checkpoint_dir) / f"epoch{epoch + 1:05d}.ckpt", net, adam, cfg.seed,
                            meta={"epoch": epoch + 1, "rho_t": cfg.rho_t, "input_mode": cfg.input_mode.value})
    net.eval()
    return net, history


def build_and_train(cfg: TrainConfig, data=None, **kw):
    net = build_decoder_network(cfg.arch, cfg.code.N, cfg.code.K, seed=int(make_rng(cfg.seed, _INIT).integers(2 ** 31)))
    if data is None:
        data = generate_dataset(cfg.code, cfg.rho_t, cfg.input_mode, cfg.dataset_size, cfg.seed)
    return train(net, cfg, data, **kw)


def _as_table(ber) -> dict[float, float]:
    if isinstance(ber, BerCurve):
        return ber.bers()
    return {float(k): float(v) for k, v in dict(ber).items()}


def compute_nve(ber_dnn, ber_fano) -> float:
    """Mean over the test grid of BER_DNN / BER_Fano."""
    dnn, fano = _as_table(ber_dnn), _as_table(ber_fano)
    if sorted(dnn) != sorted(fano):
        raise ValueError("DNN and Fano tables cover different Eb/N0 grids")
    if not dnn:
        raise ValueError("empty Eb/N0 grid")
    zero = [e for e, b in fano.items() if b <= 0]
    if zero:
        raise ValueError(f"Fano BER is zero at {zero} dB; simulate more frames")
    return sum(dnn[e] / fano[e] for e in dnn) / len(dnn)


@dataclass
class SweepBudget:
    dataset_size: int = 2 ** 16
    epochs: int = 32
    batch_size: int = 512
    min_errors: int = 100
    max_frames: int = 10 ** 6
    seed: int = 0


def nve_sweep(arch, code: PacCode, candidates, test_grid, fano_curve, budget: SweepBudget | None = None,
              input_mode=InputMode.LLR, progress: Callable | None = None, workers: int = 1):
    """Train one network per candidate training Eb/N0 and pick the lowest NVE.

    All candidates share the seed and budget. Ties go to the lower Eb/N0.
    Returns (best_rho_t, [NveReport]).
    """
    budget = budget or SweepBudget()
    fano = _as_table(fano_curve)
    reports = []
    for rho_t in candidates:
        cfg = TrainConfig(arch, code, float(rho_t), input_mode, budget.dataset_size, budget.batch_size,
                          budget.epochs, seed=budget.seed)
        net, _ = build_and_train(cfg)
        curve = monte_carlo_ber(NeuralDecoder(net, input_mode), code, list(test_grid), budget.min_errors,
                                budget.max_frames, seed=budget.seed + 1, workers=workers, chunk_frames=4096,
                                label=f"{cfg.arch.value}_rho{rho_t:g}")
        dnn = curve.bers()
        nve = compute_nve(dnn, {e: fano[e] for e in dnn})
        rep = NveReport(float(rho_t), [(e, dnn[e], fano[e]) for e in sorted(dnn)], nve, curve)
        reports.append(rep)
        if progress:
            progress(rep)
    best = min(reports, key=lambda r: (r.nve, r.rho_t))
    return best.rho_t, reports
