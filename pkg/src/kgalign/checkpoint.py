"""Versioned binary checkpoints.

Layout: 8-byte magic, u32 format version, u32 header length, header JSON
(sorted keys), then each tensor as u16 name length + name, u8 rank, u32
dims, and little-endian float32 data in declared parameter order. The
format round-trips byte-identically: float64 -> float32 -> float64 ->
float32 is stable after the first save.
"""

import json
import os
import struct

import numpy as np

from kgalign.autograd import Tensor
from kgalign.errors import CheckpointError

MAGIC = b"KGALIGN\x00"
VERSION = 1


def save_checkpoint(path: str, header: dict, tensors: list[tuple[str, Tensor]]) -> None:
    header = dict(header, format_version=VERSION)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for name, t in tensors:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", t.data.ndim))
            fh.write(struct.pack(f"<{t.data.ndim}I", *t.data.shape))
            fh.write(t.data.astype("<f4").tobytes())


def load_checkpoint(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (header, tensors by name with float64 data)."""
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"not a checkpoint file: {path}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise CheckpointError(
                f"unsupported checkpoint version {version} in {path}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        while True:
            raw = fh.read(2)
            if not raw:
                break
            (name_len,) = struct.unpack("<H", raw)
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * count), dtype="<f4")
            if data.size != count:
                raise CheckpointError(f"truncated tensor {name!r} in {path}")
            tensors[name] = data.astype(np.float64).reshape(shape)
    return header, tensors


def restore_into(tensors: dict[str, np.ndarray],
                 named: list[tuple[str, Tensor]], path: str) -> None:
    """Copy loaded arrays into live parameter tensors, checking shapes."""
    for name, t in named:
        if name not in tensors:
            raise CheckpointError(f"checkpoint {path} is missing tensor {name!r}")
        if tensors[name].shape != t.data.shape:
            raise CheckpointError(
                f"checkpoint {path} tensor {name!r} has shape "
                f"{tensors[name].shape}, expected {t.data.shape}")
        t.data = tensors[name].copy()
