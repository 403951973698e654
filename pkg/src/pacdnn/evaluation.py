"""Monte-Carlo BER/FER measurement, latency benchmarks and result files."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, InputMode, awgn, bpsk_modulate, hard_demod, llr, make_decoder_input, make_rng
from .code import PacCode, encode
from .decoders import FanoConfig, ListConfig, fano_decode, list_decode_batch, ml_decode_batch

CSV_FIELDS = ["ebn0_db", "ber", "fer", "bit_errors", "bits_tested", "frames", "censored"]


@dataclass
class BerPoint:
    ebn0_db: float
    bit_errors: int
    frame_errors: int
    bits_tested: int
    frames_tested: int
    censored: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_tested if self.bits_tested else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames_tested if self.frames_tested else 0.0

    def ber_sigma(self) -> float:
        """Binomial standard error of the BER estimate."""
        if not self.bits_tested:
            return math.inf
        p = self.ber
        return math.sqrt(max(p * (1 - p), 0.0) / self.bits_tested)


@dataclass
class BerCurve:
    label: str
    points: list[BerPoint] = field(default_factory=list)

    def point(self, ebn0_db: float) -> BerPoint:
        for p in self.points:
            if abs(p.ebn0_db - ebn0_db) < 1e-9:
                return p
        raise KeyError(f"no point at {ebn0_db} dB in curve {self.label!r}")

    def bers(self) -> dict[float, float]:
        return {p.ebn0_db: p.ber for p in self.points}


@dataclass
class TimingRecord:
    decoder_tag: str
    frames: int
    mean_latency: float
    p50: float
    p99: float


# decoder closures: (y (B, N), ChannelParams) -> d_hat (B, K)

class FanoDecoder:
    tag = "fano"

    def __init__(self, code: PacCode, cfg: FanoConfig | None = None):
        self.code, self.cfg = code, cfg or FanoConfig()

    def __call__(self, y, params):
        L = llr(y, params.sigma2)
        out = np.empty((len(L), self.code.K), dtype=np.uint8)
        for b, frame in enumerate(L):
            out[b] = fano_decode(frame, self.code, self.cfg).d_hat
        return out


class ListDecoder:
    def __init__(self, code: PacCode, cfg: ListConfig | int = 32):
        self.code = code
        self.cfg = cfg if isinstance(cfg, ListConfig) else ListConfig(int(cfg))
        self.tag = f"list{self.cfg.list_size}"

    def __call__(self, y, params):
        return list_decode_batch(llr(y, params.sigma2), self.code, self.cfg)[0]


class MLDecoder:
    tag = "ml"

    def __init__(self, code: PacCode):
        self.code = code

    def __call__(self, y, params):
        return ml_decode_batch(llr(y, params.sigma2), self.code)[0]


class NeuralDecoder:
    def __init__(self, net, input_mode=InputMode.LLR, tag=None):
        self.net = net.eval()
        self.input_mode = InputMode.parse(input_mode)
        self.tag = tag or (net.arch.value if net.arch else "dnn")

    def __call__(self, y, params):
        return self.net.predict_bits(make_decoder_input(y, params, self.input_mode))


class HardDecisionDecoder:
    """Uncoded reference: per-symbol sign decision, no code."""

    tag = "uncoded"

    def __call__(self, y, params):
        return hard_demod(y)


class _Uncoded:
    """Identity 'code' for the uncoded BPSK reference (rate 1)."""

    def __init__(self, bits: int):
        self.N = self.K = bits
        self.rate = 1.0


def _simulate_chunk(decoder, code, ebn0_db, seed, point_idx, chunk_idx, frames):
    """Per-frame bit-error counts for one chunk; fully determined by its indices."""
    rng = make_rng(seed, point_idx, chunk_idx)
    d = rng.integers(0, 2, (frames, code.K), dtype=np.uint8)
    x = d if isinstance(code, _Uncoded) else encode(d, code)
    params = ChannelParams(ebn0_db, code.rate)
    y = awgn(bpsk_modulate(x), params, rng)
    d_hat = np.asarray(decoder(y, params), dtype=np.uint8)
    return (d_hat != d).sum(axis=1)


def _simulate_chunk_star(args):
    return _simulate_chunk(*args)


def monte_carlo_ber(decoder, code, ebn0_list, min_errors=500, max_frames=10 ** 8, seed=0,
                    workers=1, chunk_frames=1000, label=None, progress=None) -> BerCurve:
    """BER/FER per Eb/N0 point, stopping at ``min_errors`` bit errors.

    Frames are simulated in fixed chunks, chunk c of point p drawing from
    substream (seed, p, c). Tallies stop at the exact frame where the
    cumulative bit errors first reach ``min_errors`` (or at ``max_frames``,
    which marks the point censored), so the result does not depend on the
    chunk schedule or on the number of workers.
    """
    if max_frames <= 0:
        raise ValueError("max_frames must be positive")
    curve = BerCurve(label or getattr(decoder, "tag", "decoder"))
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for p_idx, ebn0 in enumerate(ebn0_list):
            bit_err = frame_err = frames = 0
            chunk = 0
            done = False
            while not done:
                batch = []
                for _ in range(workers):
                    start = chunk * chunk_frames
                    if start >= max_frames:
                        break
                    n = min(chunk_frames, max_frames - start)
                    batch.append((decoder, code, float(ebn0), seed, p_idx, chunk, n))
                    chunk += 1
                if not batch:
                    break
                results = list(pool.map(_simulate_chunk_star, batch)) if pool else \
                    [_simulate_chunk_star(a) for a in batch]
                for errs in results:
                    cum = bit_err + np.cumsum(errs)
                    hit = np.nonzero(cum >= min_errors)[0]
                    take = int(hit[0]) + 1 if hit.size else len(errs)
                    bit_err += int(errs[:take].sum())
                    frame_err += int((errs[:take] > 0).sum())
                    frames += take
                    if hit.size or frames >= max_frames:
                        done = True
                        break
            censored = bit_err < min_errors
            curve.points.append(BerPoint(float(ebn0), bit_err, frame_err, frames * code.K, frames, censored))
            if progress:
                progress(curve.points[-1])
    finally:
        if pool:
            pool.shutdown()
    return curve


def uncoded_ber(ebn0_list, min_errors=500, max_frames=10 ** 7, seed=0, frame_bits=64, **kw) -> BerCurve:
    """Hard-decision uncoded BPSK reference, rate 1."""
    return monte_carlo_ber(HardDecisionDecoder(), _Uncoded(frame_bits), ebn0_list, min_errors,
                           max_frames, seed, label="uncoded", **kw)


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def bench_latency(decoder, code: PacCode, frames: int = 1000, ebn0_db: float = 2.0, warmup: int = 100,
                  seed: int = 0, tag=None) -> TimingRecord:
    """Wall-clock latency of single-frame decodes on one worker."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    rng = make_rng(seed, 7)
    params = ChannelParams(ebn0_db, code.rate)
    total = warmup + frames
    d = rng.integers(0, 2, (total, code.K), dtype=np.uint8)
    y = awgn(bpsk_modulate(encode(d, code)), params, rng)
    samples = np.empty(frames)
    for i in range(total):
        frame = y[i:i + 1]
        t0 = time.perf_counter()
        decoder(frame, params)
        dt = time.perf_counter() - t0
        if i >= warmup:
            samples[i - warmup] = dt
    return TimingRecord(tag or getattr(decoder, "tag", "decoder"), frames, float(samples.mean()),
                        float(np.percentile(samples, 50)), float(np.percentile(samples, 99)))


# result files

def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_curve_csv(curve: BerCurve, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            for p in curve.points:
                w.writerow([repr(float(p.ebn0_db)), repr(p.ber), repr(p.fer), p.bit_errors,
                            p.bits_tested, p.frames_tested, int(p.censored)])
    except OSError as exc:
        raise OSError(f"cannot write curve {path}: {exc}") from exc
    return path


def read_curve_csv(path, label=None) -> BerCurve:
    path = Path(path)
    curve = BerCurve(label or path.stem)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            frames = int(row["frames"])
            curve.points.append(BerPoint(
                ebn0_db=float(row["ebn0_db"]),
                bit_errors=int(row["bit_errors"]),
                frame_errors=int(round(float(row["fer"]) * frames)),
                bits_tested=int(row["bits_tested"]),
                frames_tested=frames,
                censored=bool(int(row["censored"])),
            ))
    return curve


def write_timings_csv(timings, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["decoder", "frames", "mean_latency_s", "p50_s", "p99_s"])
        for t in timings:
            w.writerow([t.decoder_tag, t.frames, repr(t.mean_latency), repr(t.p50), repr(t.p99)])
    return path


def write_plot_data(curves, path) -> Path:
    """Wide CSV: ebn0_db then one BER column per curve label (blank where absent)."""
    path = Path(path)
    grid = sorted({p.ebn0_db for c in curves for p in c.points})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ebn0_db"] + [c.label for c in curves])
        for e in grid:
            row = [repr(e)]
            for c in curves:
                try:
                    row.append(repr(c.point(e).ber))
                except KeyError:
                    row.append("")
            w.writerow(row)
    return path


def write_manifest(path, config: dict, seeds, wall_time: float, extra=None) -> Path:
    path = Path(path)
    manifest = {
        "config_hash": config_hash(config),
        "config": config,
        "seeds": seeds,
        "git_describe": git_describe(),
        "wall_time_s": wall_time,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def write_results(curves, timings, path, config=None, seeds=None, wall_time=0.0) -> dict:
    """Write one CSV per curve, a timings CSV and a manifest under ``path``."""
    out = Path(path)
    files = {}
    for curve in curves:
        files[curve.label] = write_curve_csv(curve, out / f"{curve.label}.csv")
    if timings:
        files["timings"] = write_timings_csv(timings, out / "timings.csv")
    files["manifest"] = write_manifest(out / "manifest.json", config or {}, seeds, wall_time)
    return files


def point_as_dict(p: BerPoint) -> dict:
    d = asdict(p)
    d.update(ber=p.ber, fer=p.fer)
    return d
