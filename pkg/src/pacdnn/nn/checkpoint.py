"""Binary checkpoint container.

Layout (all integers little-endian):

    offset 0   uint8    format version (currently 1)
    offset 1   4 bytes  magic b"PACN"
    offset 5   uint32   header length H in bytes
    offset 9   H bytes  UTF-8 JSON header
    offset 9+H          payload: float32 little-endian arrays, back to back

The header holds ``arch``, ``N``, ``K``, ``layers`` (list of
{"kind", "config"}), ``tensors`` (list of {"name", "shape", "offset"} where
offset counts float32 elements into the payload), ``adam`` ({"t", "lr",
"beta1", "beta2", "eps"} or null), ``seed`` and free-form ``meta``.
Tensor order: every layer's parameters in layer order, then running
statistics, then Adam first moments ("adam.m.<i>") and second moments
("adam.v.<i>") in parameter order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import Network, layer_from_config
from .optim import AdamState

VERSION = 1
MAGIC = b"PACN"


def _arrays(net: Network, adam: AdamState | None):
    out = list(net.named_parameters()) + list(net.named_buffers())
    if adam is not None and adam.m:
        out += [(f"adam.m.{i}", m) for i, m in enumerate(adam.m)]
        out += [(f"adam.v.{i}", v) for i, v in enumerate(adam.v)]
    return out


def save_checkpoint(path, net: Network, adam: AdamState | None = None, seed=None, meta=None) -> Path:
    path = Path(path)
    tensors, chunks, offset = [], [], 0
    for name, arr in _arrays(net, adam):
        data = np.ascontiguousarray(arr, dtype="<f4")
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(data.tobytes())
        offset += data.size
    header = {
        "arch": net.arch.value if net.arch else None,
        "N": net.N,
        "K": net.K,
        "layers": [{"kind": layer.kind, "config": layer.config()} for layer in net.layers],
        "tensors": tensors,
        "adam": None if adam is None else {
            "t": adam.t, "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps},
        "seed": seed,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(struct.pack("<B4sI", VERSION, MAGIC, len(blob)))
            fh.write(blob)
            for chunk in chunks:
                fh.write(chunk)
    except OSError as exc:
        raise OSError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        version, magic, hlen = struct.unpack("<B4sI", fh.read(9))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        return json.loads(fh.read(hlen).decode("utf-8"))


def load_checkpoint(path):
    """Returns (network, adam_state_or_None, header)."""
    path = Path(path)
    header = read_header(path)
    raw = path.read_bytes()
    hlen = struct.unpack_from("<I", raw, 5)[0]
    payload = np.frombuffer(raw, dtype="<f4", offset=9 + hlen)
    arrays = {}
    for t in header["tensors"]:
        n = int(np.prod(t["shape"], dtype=np.int64))
        arrays[t["name"]] = payload[t["offset"]:t["offset"] + n].reshape(t["shape"]).astype(np.float32)

    layers = [layer_from_config(spec["kind"], spec["config"]) for spec in header["layers"]]
    net = Network(layers, header["arch"], header["N"], header["K"])
    for idx, layer in enumerate(layers):
        for name in layer.params:
            layer.params[name] = arrays[f"{idx}.{layer.kind}.{name}"].copy()
        for name in layer.buffers:
            layer.buffers[name] = arrays[f"{idx}.{layer.kind}.{name}"].copy()
        layer.grads = {k: np.zeros_like(v) for k, v in layer.params.items()}

    adam = None
    if header["adam"] is not None:
        a = header["adam"]
        adam = AdamState(t=a["t"], lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"])
        n_params = len(net.parameters())
        if "adam.m.0" in arrays:
            adam.m = [arrays[f"adam.m.{i}"].copy() for i in range(n_params)]
            adam.v = [arrays[f"adam.v.{i}"].copy() for i in range(n_params)]
    return net, adam, header
