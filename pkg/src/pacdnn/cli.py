"""Command-line driver: ``pacdnn <command> [options]``.

Commands are encode, decode, train, nve, ber and time. Settings come from
built-in defaults, then an optional run-config file (``--config``), then
flags; later sources win. A run-config is plain ``key = value`` text::

    schema_version = 1
    N = 16
    K = 8
    g = 1011011
    A = 7,9,10,11,12,13,14,15   # optional, overrides the RM-polar profile

Keys are the long flag names with ``-`` or ``_`` (``rho_t`` or ``rho-t``).
Unknown keys are rejected before any work starts. Artifacts go under
``--out`` in ``checkpoints/``, ``curves/``, ``timings/`` and ``manifests/``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .channel import ChannelParams, awgn, bpsk_modulate, make_rng
from .code import PacCode, encode, parse_bits
from .decoders import ML_MAX_K, FanoConfig, ListConfig
from .evaluation import (CSV_FIELDS, BerCurve, FanoDecoder, ListDecoder, MLDecoder, NeuralDecoder,
                         bench_latency, monte_carlo_ber, read_curve_csv, write_curve_csv, write_manifest,
                         write_plot_data, write_timings_csv)
from .nn import AdamState, build_decoder_network, load_checkpoint, param_count, save_checkpoint
from .nn.checkpoint import read_header
from .training import SweepBudget, TrainConfig, build_and_train, nve_sweep

SCHEMA_VERSION = 1
_ENCODE_STREAM, _DECODE_STREAM = 11, 12


class CliError(Exception):
    """Bad configuration or missing input; reported without a traceback."""


# value converters (shared by flags and config files)

def _positive(kind):
    def conv(text):
        value = kind(text)
        if value <= 0:
            raise ValueError(f"must be positive, got {text}")
        return value
    return conv


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise ValueError(f"must be >= 0, got {text}")
    return value


def _bits(text):
    return "".join(map(str, parse_bits(str(text))))


def _profile(text):
    text = str(text).strip()
    if text.lower() in ("rm-polar", "rm_polar", "rm"):
        return "rm-polar"
    idx = [int(t) for t in text.replace(" ", "").split(",") if t]
    if not idx:
        raise ValueError("empty information set")
    return ",".join(map(str, idx))


def _floats(text):
    values = [float(t) for t in str(text).replace(" ", "").split(",") if t]
    if not values:
        raise ValueError("empty list")
    return values


def _choice(*options):
    def conv(text):
        value = str(text).strip().lower()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return value
    return conv


def _names(*options):
    def conv(text):
        names = [t for t in str(text).replace(" ", "").lower().split(",") if t]
        bad = [n for n in names if n not in options]
        if bad or not names:
            raise ValueError(f"expected a comma list from {', '.join(options)}, got {text!r}")
        return names
    return conv


@dataclass(frozen=True)
class Opt:
    conv: Callable
    help: str


OPTIONS = {
    "N": Opt(_positive(int), "code length (power of two)"),
    "K": Opt(_nonneg_int, "message length"),
    "g": Opt(_bits, "convolution impulse response as a bit string"),
    "profile": Opt(_profile, "'rm-polar' or an explicit comma-separated information set"),
    "seed": Opt(_nonneg_int, "master seed"),
    "out": Opt(str, "output directory"),
    "workers": Opt(_positive(int), "Monte-Carlo worker processes"),
    "arch": Opt(_choice("mlp", "cnn", "rnn"), "network architecture"),
    "rho_t": Opt(float, "training Eb/N0 in dB"),
    "epochs": Opt(_nonneg_int, "training epochs"),
    "batch": Opt(_positive(int), "mini-batch size"),
    "dataset_size": Opt(_positive(int), "training corpus size"),
    "lr": Opt(_positive(float), "Adam learning rate"),
    "input_mode": Opt(_choice("hard", "direct", "llr"), "decoder input representation"),
    "decoder": Opt(_choice("fano", "list", "ml", "dnn"), "decoder"),
    "list_size": Opt(_positive(int), "list decoder size (power of two)"),
    "delta": Opt(_positive(float), "Fano threshold step"),
    "max_node_visits": Opt(_positive(int), "Fano node-visit cap per frame"),
    "min_errors": Opt(_positive(int), "bit errors per Eb/N0 point"),
    "max_frames": Opt(_positive(int), "frame cap per Eb/N0 point"),
    "grid": Opt(_floats, "comma-separated test Eb/N0 values in dB"),
    "checkpoint": Opt(str, "checkpoint path"),
    "checkpoint_dir": Opt(str, "directory holding <arch>_N<N>_K<K>.ckpt files"),
    "fano_curve": Opt(str, "Fano baseline curve CSV"),
    "frames": Opt(_positive(int), "frames to time"),
    "ebn0": Opt(float, "channel Eb/N0 in dB"),
    "messages": Opt(str, "message file, one K-bit string per line"),
    "random": Opt(_nonneg_int, "encode this many random messages"),
    "format": Opt(_choice("bin", "hex"), "codeword line format"),
    "input": Opt(str, "codeword file to decode"),
    "output": Opt(str, "output file"),
}

_CODE = ["N", "K", "g", "profile", "seed", "out"]
_MC = ["min_errors", "max_frames", "workers", "grid"]
_DEC = ["decoder", "list_size", "delta", "max_node_visits", "input_mode", "arch", "checkpoint"]

COMMANDS = {
    "encode": (_CODE + ["messages", "random", "format", "output"],
               {"format": "bin"}),
    "decode": (_CODE + _DEC + ["input", "output", "ebn0"],
               {"decoder": "ml", "ebn0": 10.0}),
    "train": (_CODE + ["arch", "rho_t", "epochs", "batch", "dataset_size", "lr", "input_mode", "checkpoint"],
              {"arch": "mlp", "rho_t": 0.0, "epochs": 32, "batch": 512, "dataset_size": 2 ** 16,
               "lr": 0.001, "input_mode": "llr"}),
    "nve": (_CODE + _MC + ["arch", "rho_t", "epochs", "batch", "dataset_size", "input_mode", "fano_curve",
                           "delta", "max_node_visits"],
            {"arch": "mlp", "rho_t": [float(r) for r in range(9)], "epochs": 32, "batch": 512,
             "dataset_size": 2 ** 16, "input_mode": "llr", "min_errors": 100, "max_frames": 10 ** 6}),
    "ber": (_CODE + _MC + _DEC, {"decoder": "fano", "min_errors": 500, "max_frames": 10 ** 7}),
    "time": (_CODE + ["decoder", "list_size", "delta", "max_node_visits", "checkpoint_dir", "frames", "ebn0"],
             {"decoder": ["fano", "list", "mlp", "cnn", "rnn"], "frames": 1000, "ebn0": 2.0}),
}

_BASE_DEFAULTS = {"N": 16, "K": 8, "g": "1011011", "profile": "rm-polar", "seed": 0, "out": "out",
                  "list_size": 32, "delta": 2.0, "input_mode": "llr",
                  "grid": [float(e) for e in range(7)]}

# per-command converters that differ from OPTIONS
_OVERRIDES = {
    ("nve", "rho_t"): Opt(_floats, "comma-separated candidate training Eb/N0 values in dB"),
    ("time", "decoder"): Opt(_names("fano", "list", "ml", "mlp", "cnn", "rnn"),
                             "comma-separated decoders to time"),
}


def _opt(command, key) -> Opt:
    return _OVERRIDES.get((command, key), OPTIONS[key])


def _workers_default() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def read_run_config(path, command: str) -> dict:
    """Parse and validate a ``key = value`` run-config for ``command``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise CliError(f"{path}: malformed config: {exc}") from None
    raw = {k.replace("-", "_"): v for k, v in parser["run"].items()}
    version = raw.pop("schema_version", None)
    if version is None:
        raise CliError(f"{path}: missing schema_version (expected {SCHEMA_VERSION})")
    if version.strip() != str(SCHEMA_VERSION):
        raise CliError(f"{path}: unsupported schema_version {version.strip()} (expected {SCHEMA_VERSION})")
    if "A" in raw:
        if "profile" in raw:
            raise CliError(f"{path}: give either A or profile, not both")
        raw["profile"] = raw.pop("A")
    allowed = COMMANDS[command][0]
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise CliError(f"{path}: unknown key(s) for '{command}': {', '.join(unknown)}")
    out = {}
    for key, value in raw.items():
        try:
            out[key] = _opt(command, key).conv(value)
        except ValueError as exc:
            raise CliError(f"{path}: bad value for {key}: {exc}") from None
    return out


def _flag_type(command, key):
    conv = _opt(command, key).conv

    def wrapped(text):
        try:
            return conv(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    wrapped.__name__ = key
    return wrapped


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pacdnn", description="PAC codes with classical and neural decoders.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "encode": "encode messages into PAC codewords",
        "decode": "send codewords over the channel and decode them",
        "train": "train a neural decoder",
        "nve": "select the training Eb/N0 by normalized validation error",
        "ber": "measure a BER curve",
        "time": "measure single-frame decoding latency",
    }
    for command, (keys, _) in COMMANDS.items():
        p = sub.add_parser(command, help=helps[command], description=helps[command].capitalize() + ".",
                           argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="run-config file (key = value lines)")
        for key in keys:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=_flag_type(command, key), help=_opt(command, key).help)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then flags."""
    command = args.command
    keys, defaults = COMMANDS[command]
    cfg = {k: v for k, v in _BASE_DEFAULTS.items() if k in keys}
    cfg.update(defaults)
    if "workers" in keys:
        cfg["workers"] = _workers_default()
    flags = dict(vars(args))
    flags.pop("command")
    path = flags.pop("config", None)
    if path:
        cfg.update(read_run_config(path, command))
    cfg.update(flags)
    return cfg


def build_code(cfg) -> PacCode:
    g = parse_bits(cfg["g"])
    try:
        if cfg["profile"] == "rm-polar":
            if cfg["K"] > cfg["N"]:
                raise ValueError(f"K={cfg['K']} exceeds N={cfg['N']}")
            return PacCode.rm_polar(cfg["N"], cfg["K"], g)
        A = [int(a) for a in cfg["profile"].split(",")]
        return PacCode(cfg["N"], cfg["K"], tuple(A), g)
    except ValueError as exc:
        raise CliError(f"invalid code: {exc}") from None


def _code_meta(code: PacCode) -> dict:
    return {"N": code.N, "K": code.K, "A": list(code.A), "g": "".join(map(str, code.g))}


def _tag(arch: str, code: PacCode) -> str:
    return f"{arch}_N{code.N}_K{code.K}"


def _out(cfg, *parts) -> Path:
    return Path(cfg["out"]).joinpath(*parts)


def _manifest(cfg, name, started, extra=None):
    config = {k: v for k, v in sorted(cfg.items()) if k != "workers"}
    return write_manifest(_out(cfg, "manifests", f"{name}.json"), config, [cfg["seed"]],
                          round(time.perf_counter() - started, 3), extra)


# bit-line files

def _format_bits(bits, fmt: str) -> str:
    s = "".join(str(int(b)) for b in bits)
    if fmt == "bin" or not s:
        return s
    return format(int(s, 2), f"0{(len(s) + 3) // 4}x")


def _parse_line(line: str, length: int, fmt: str, where: str) -> np.ndarray:
    try:
        if fmt == "hex":
            value = int(line, 16)
            if value >> length:
                raise ValueError("too many bits")
            bits = [(value >> (length - 1 - i)) & 1 for i in range(length)]
        else:
            bits = parse_bits(line) if line else ()
    except ValueError as exc:
        raise CliError(f"{where}: {exc}") from None
    if len(bits) != length:
        raise CliError(f"{where}: expected {length} bits, got {len(bits)}")
    return np.array(bits, dtype=np.uint8)


def _read_bit_lines(path, length: int, fmt: str = "bin"):
    """Rows of a bit file plus its '# key=value' header fields."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    header, rows = {}, []
    for no, line in enumerate(lines, 1):
        line = line.strip()
        if line.startswith("#"):
            for item in line[1:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    header[k] = v
            continue
        if not line:
            continue
        fmt = header.get("format", fmt)
        rows.append(_parse_line(line, length, fmt, f"{path}:{no}"))
    return np.array(rows, dtype=np.uint8).reshape(len(rows), length), header


def _write_bit_lines(path, rows, header: dict, fmt: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k, v in header.items():
            fh.write(f"# {k}={v}\n")
        for row in rows:
            fh.write(_format_bits(row, fmt) + "\n")
    return path


# commands

def cmd_encode(cfg) -> int:
    code = build_code(cfg)
    if ("messages" in cfg) == ("random" in cfg):
        raise CliError("give exactly one of --messages FILE or --random COUNT")
    if "messages" in cfg:
        d, _ = _read_bit_lines(cfg["messages"], code.K)
    else:
        d = make_rng(cfg["seed"], _ENCODE_STREAM).integers(0, 2, (cfg["random"], code.K), dtype=np.uint8)
    x = encode(d, code)
    meta = _code_meta(code)
    header = {"N": code.N, "K": code.K, "A": ",".join(map(str, meta["A"])) or "-", "g": meta["g"],
              "format": cfg["format"]}
    path = _write_bit_lines(cfg.get("output") or _out(cfg, "codewords.txt"), x, header, cfg["format"])
    print(f"wrote {len(x)} codewords to {path}")
    return 0


def _classical(cfg, code, name):
    if name == "fano":
        return FanoDecoder(code, FanoConfig(cfg["delta"], max_node_visits=cfg.get("max_node_visits")))
    if name == "list":
        return ListDecoder(code, ListConfig(cfg["list_size"]))
    if name == "ml":
        if code.K > ML_MAX_K:
            raise CliError(f"ML decoding is limited to K <= {ML_MAX_K}, got K={code.K}")
        return MLDecoder(code)
    raise CliError(f"unknown decoder {name!r}")


def _check_checkpoint(path, code, arch=None):
    path = Path(path)
    if not path.exists():
        raise CliError(f"missing checkpoint {path}")
    try:
        header = read_header(path)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc)) from None
    if arch is not None and header["arch"] != arch:
        raise CliError(f"{path}: checkpoint arch {header['arch']} does not match requested {arch}")
    if (header["N"], header["K"]) != (code.N, code.K):
        raise CliError(f"{path}: checkpoint is ({header['N']},{header['K']}), config is ({code.N},{code.K})")
    meta = header.get("meta", {})
    for key in ("A", "g"):
        if key in meta and meta[key] != _code_meta(code)[key]:
            raise CliError(f"{path}: checkpoint {key}={meta[key]} does not match config")
    return header


def _decoder(cfg, code):
    if cfg["decoder"] != "dnn":
        return _classical(cfg, code, cfg["decoder"])
    arch = cfg.get("arch")
    path = cfg.get("checkpoint")
    if path is None:
        if arch is None:
            raise CliError("--decoder dnn needs --checkpoint or --arch")
        path = _out(cfg, "checkpoints", _tag(arch, code) + ".ckpt")
    header = _check_checkpoint(path, code, arch)
    net, _, _ = load_checkpoint(path)
    tag = header["arch"] + ("" if cfg["input_mode"] == "llr" else "_" + cfg["input_mode"])
    return NeuralDecoder(net, cfg["input_mode"], tag=tag)


def cmd_decode(cfg) -> int:
    code = build_code(cfg)
    if "input" not in cfg:
        raise CliError("--input FILE is required")
    x, header = _read_bit_lines(cfg["input"], code.N)
    for key, want in (("N", str(code.N)), ("K", str(code.K)), ("g", _code_meta(code)["g"]),
                      ("A", ",".join(map(str, code.A)) or "-")):
        if key in header and header[key] != want:
            raise CliError(f"{cfg['input']}: header {key}={header[key]} does not match config ({want})")
    decoder = _decoder(cfg, code)
    params = ChannelParams(cfg["ebn0"], code.rate)
    y = awgn(bpsk_modulate(x), params, make_rng(cfg["seed"], _DECODE_STREAM))
    d = decoder(y, params) if len(y) else np.zeros((0, code.K), dtype=np.uint8)
    out = cfg.get("output") or _out(cfg, "messages.txt")
    path = _write_bit_lines(out, d, {"decoder": decoder.tag, "ebn0_db": repr(cfg["ebn0"]), "seed": cfg["seed"]},
                            "bin")
    print(f"decoded {len(d)} frames with {decoder.tag} at {cfg['ebn0']:g} dB to {path}")
    return 0


def cmd_train(cfg) -> int:
    started = time.perf_counter()
    code = build_code(cfg)
    try:
        tcfg = TrainConfig(cfg["arch"], code, cfg["rho_t"], cfg["input_mode"], cfg["dataset_size"], cfg["batch"],
                           cfg["epochs"], cfg["lr"], cfg["seed"])
    except ValueError as exc:
        raise CliError(str(exc)) from None
    tag = _tag(tcfg.arch.value, code)
    ckpt = Path(cfg.get("checkpoint") or _out(cfg, "checkpoints", tag + ".ckpt"))

    def banner(epoch, loss, net):
        print(f"epoch {epoch} bce {loss:.6f}", flush=True)

    params = param_count(build_decoder_network(tcfg.arch, code.N, code.K))
    print(f"train arch={tcfg.arch.value} N={code.N} K={code.K} params={params} rho_t={tcfg.rho_t:g} "
          f"input={tcfg.input_mode.value} dataset={tcfg.dataset_size} batch={tcfg.batch_size} "
          f"epochs={tcfg.epochs} seed={tcfg.seed}", flush=True)
    adam = AdamState(lr=tcfg.lr)
    net, history = build_and_train(tcfg, epoch_callback=banner, adam=adam)
    meta = {**_code_meta(code), "epoch": tcfg.epochs, "rho_t": tcfg.rho_t, "input_mode": tcfg.input_mode.value}
    save_checkpoint(ckpt, net, adam, tcfg.seed, meta)
    loss_path = _out(cfg, "curves", tag + "_loss.csv")
    loss_path.parent.mkdir(parents=True, exist_ok=True)
    with open(loss_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mean_bce"])
        for e, loss in enumerate(history, 1):
            w.writerow([e, repr(loss)])
    _manifest(cfg, "train_" + tag, started, {"checkpoint": str(ckpt), "loss_csv": str(loss_path),
                                              "param_count": params})
    print(f"checkpoint {ckpt}")
    return 0


def _report_curve(curve: BerCurve):
    for p in curve.points:
        flag = "  censored" if p.censored else ""
        print(f"  {p.ebn0_db:5.2f} dB  ber {p.ber:.4e}  fer {p.fer:.4e}  errors {p.bit_errors}  "
              f"frames {p.frames_tested}{flag}", flush=True)


def _fano_baseline(cfg, code, grid) -> tuple[BerCurve, str]:
    if "fano_curve" in cfg:
        path = Path(cfg["fano_curve"])
        if not path.exists():
            raise CliError(f"missing baseline {path}")
        curve = read_curve_csv(path, label="fano")
        have = {p.ebn0_db for p in curve.points}
        absent = [e for e in grid if e not in have]
        if absent:
            raise CliError(f"baseline {path} lacks Eb/N0 point(s) {', '.join(f'{e:g}' for e in absent)}")
        return curve, str(path)
    print("computing Fano baseline", flush=True)
    curve = monte_carlo_ber(_classical(cfg, code, "fano"), code, grid, cfg["min_errors"], cfg["max_frames"],
                            seed=cfg["seed"] + 1, workers=cfg["workers"], chunk_frames=256, label="fano")
    _report_curve(curve)
    path = write_curve_csv(curve, _out(cfg, "curves", f"nve_fano_baseline_N{code.N}_K{code.K}.csv"))
    return curve, str(path)


def cmd_nve(cfg) -> int:
    started = time.perf_counter()
    code = build_code(cfg)
    grid = cfg["grid"]
    fano, source = _fano_baseline(cfg, code, grid)
    budget = SweepBudget(cfg["dataset_size"], cfg["epochs"], cfg["batch"], cfg["min_errors"], cfg["max_frames"],
                         cfg["seed"])
    if budget.dataset_size % budget.batch_size:
        raise CliError("dataset_size must be a multiple of batch")

    def progress(rep):
        print(f"rho_t {rep.rho_t:g} dB  nve {rep.nve:.4f}", flush=True)

    best, reports = nve_sweep(cfg["arch"], code, cfg["rho_t"], grid, fano, budget, cfg["input_mode"],
                              progress=progress, workers=cfg["workers"])
    path = _out(cfg, "curves", f"nve_{_tag(cfg['arch'], code)}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho_t", "nve"] + [f"ber_{e:g}dB" for e in grid])
        for rep in reports:
            bers = {e: b for e, b, _ in rep.test_points}
            w.writerow([repr(rep.rho_t), repr(rep.nve)] + [repr(bers[e]) for e in grid])
    _manifest(cfg, f"nve_{_tag(cfg['arch'], code)}", started,
              {"baseline": source, "table": str(path), "best_rho_t": best})
    print(f"best_rho_t {best:g}")
    return 0


def cmd_ber(cfg) -> int:
    started = time.perf_counter()
    code = build_code(cfg)
    decoder = _decoder(cfg, code)
    label = decoder.tag
    print(f"ber decoder={label} N={code.N} K={code.K} grid={','.join(f'{e:g}' for e in cfg['grid'])}", flush=True)
    chunk = 256 if cfg["decoder"] == "fano" else 4096
    curve = monte_carlo_ber(decoder, code, cfg["grid"], cfg["min_errors"], cfg["max_frames"], seed=cfg["seed"],
                            workers=cfg["workers"], chunk_frames=chunk, label=label)
    _report_curve(curve)
    curves_dir = _out(cfg, "curves")
    path = write_curve_csv(curve, curves_dir / f"{label}_N{code.N}_K{code.K}.csv")
    # plot data gathers every BER curve of this code in the output tree
    suffix = f"_N{code.N}_K{code.K}.csv"
    curves = []
    for p in sorted(curves_dir.glob("*" + suffix)):
        with open(p, newline="") as fh:
            if next(csv.reader(fh), None) == CSV_FIELDS:
                curves.append(read_curve_csv(p, label=p.name[:-len(suffix)]))
    plot = write_plot_data(curves, curves_dir / f"plot_data_N{code.N}_K{code.K}.csv")
    censored = [p.ebn0_db for p in curve.points if p.censored]
    _manifest(cfg, f"ber_{label}_N{code.N}_K{code.K}", started,
              {"curve": str(path), "plot_data": str(plot), "censored_points": censored})
    if censored:
        print(f"note: censored at {', '.join(f'{e:g}' for e in censored)} dB (max_frames reached)")
    print(f"curve {path}")
    return 0


def cmd_time(cfg) -> int:
    started = time.perf_counter()
    code = build_code(cfg)
    ckpt_dir = Path(cfg.get("checkpoint_dir") or _out(cfg, "checkpoints"))
    archs = [n for n in cfg["decoder"] if n in ("mlp", "cnn", "rnn")]
    missing = [str(ckpt_dir / f"{_tag(a, code)}.ckpt") for a in archs
               if not (ckpt_dir / f"{_tag(a, code)}.ckpt").exists()]
    if missing:
        raise CliError("missing checkpoint(s): " + ", ".join(missing))
    decoders = []
    for name in cfg["decoder"]:
        if name in archs:
            path = ckpt_dir / f"{_tag(name, code)}.ckpt"
            _check_checkpoint(path, code, name)
            decoders.append(NeuralDecoder(load_checkpoint(path)[0], tag=name))
        else:
            decoders.append(_classical(cfg, code, name))
    records = []
    print(f"{'decoder':<10}{'frames':>8}{'mean_us':>12}{'p50_us':>12}{'p99_us':>12}")
    for dec in decoders:
        t = bench_latency(dec, code, frames=cfg["frames"], ebn0_db=cfg["ebn0"], seed=cfg["seed"])
        records.append(t)
        print(f"{t.decoder_tag:<10}{t.frames:>8}{t.mean_latency * 1e6:>12.1f}{t.p50 * 1e6:>12.1f}"
              f"{t.p99 * 1e6:>12.1f}", flush=True)
    path = write_timings_csv(records, _out(cfg, "timings", f"timings_N{code.N}_K{code.K}.csv"))
    _manifest(cfg, f"time_N{code.N}_K{code.K}", started, {"timings": str(path)})
    print(f"timings {path}")
    return 0


HANDLERS = {"encode": cmd_encode, "decode": cmd_decode, "train": cmd_train, "nve": cmd_nve, "ber": cmd_ber,
            "time": cmd_time}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors and --help
        return exc.code if isinstance(exc.code, int) else 1
    try:
        cfg = resolve(args)
        build_code(cfg)  # validate before any work
        return HANDLERS[args.command](cfg)
    except CliError as exc:
        print(f"pacdnn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"pacdnn {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
