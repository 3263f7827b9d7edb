"""Binary checkpoint container.

Layout (all integers little-endian):

    magic   5 bytes  b"LGSEG"
    version 1 byte   0x01
    u32     config block length, then that many UTF-8 bytes of
            "key = value" lines (the plain-text config format)
    u64     training step index
    u32     parameter record count, then records of:
        u16   name length, name UTF-8 bytes
        u8    dtype code (1 = float32, 2 = float64)
        u8    rank, then rank x u32 extents
        raw   value bytes, then Adam m bytes, then Adam v bytes
    u32     buffer record count, then records of:
        u16   name length, name UTF-8 bytes
        u8    dtype code
        u8    rank, then rank x u32 extents
        raw   value bytes

Arrays are stored little-endian in C order; save -> load round-trips are
bit-exact.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .networks import (
    Discriminator,
    Generator,
    ModelConfig,
    build_models,
    config_to_dict,
)
from .tensor import UsageError

MAGIC = b"LGSEG"
VERSION = 1

_DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_CODE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}


def _config_text(cfg: ModelConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_dict(cfg).items())


def _parse_config_text(text: str) -> ModelConfig:
    from .config import parse_model_config_lines

    return parse_model_config_lines(text.splitlines())


def _write_array(buf: io.BytesIO, name: str, arr: np.ndarray) -> None:
    raw = np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<"), copy=False)
    nb = name.encode("utf-8")
    buf.write(struct.pack("<H", len(nb)))
    buf.write(nb)
    buf.write(struct.pack("<B", _DTYPE_CODES[np.dtype(arr.dtype).newbyteorder("<")]))
    buf.write(struct.pack("<B", arr.ndim))
    for d in arr.shape:
        buf.write(struct.pack("<I", d))
    buf.write(raw.tobytes(order="C"))


def _read_array(buf: io.BufferedReader) -> tuple[str, np.ndarray]:
    (nlen,) = struct.unpack("<H", buf.read(2))
    name = buf.read(nlen).decode("utf-8")
    (code,) = struct.unpack("<B", buf.read(1))
    (rank,) = struct.unpack("<B", buf.read(1))
    shape = tuple(struct.unpack("<I", buf.read(4))[0] for _ in range(rank))
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    arr = np.frombuffer(buf.read(count * dtype.itemsize), dtype=dtype).reshape(shape)
    return name, arr.astype(dtype.newbyteorder("="))


def save_checkpoint(path: str, gen: Generator, disc: Discriminator,
                    cfg: ModelConfig, step: int = 0) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<B", VERSION))
    ctext = _config_text(cfg).encode("utf-8")
    buf.write(struct.pack("<I", len(ctext)))
    buf.write(ctext)
    buf.write(struct.pack("<Q", step))

    params = list(gen.named_parameters("gen.")) + list(disc.named_parameters("disc."))
    buf.write(struct.pack("<I", len(params)))
    for name, p in params:
        sub = io.BytesIO()
        _write_array(sub, name, p.data)
        buf.write(sub.getvalue())
        buf.write(np.ascontiguousarray(p.m).tobytes(order="C"))
        buf.write(np.ascontiguousarray(p.v).tobytes(order="C"))

    buffers = list(gen.named_buffers("gen.")) + list(disc.named_buffers("disc."))
    buf.write(struct.pack("<I", len(buffers)))
    for name, arr in buffers:
        _write_array(buf, name, arr)

    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path: str, seed: int = 0) -> tuple[Generator, Discriminator, ModelConfig, int]:
    """Rebuild both networks from a checkpoint file."""
    with open(path, "rb") as fh:
        if fh.read(5) != MAGIC:
            raise UsageError(f"{path} is not a checkpoint file")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != VERSION:
            raise UsageError(f"unsupported checkpoint version {version}")
        (clen,) = struct.unpack("<I", fh.read(4))
        cfg = _parse_config_text(fh.read(clen).decode("utf-8"))
        (step,) = struct.unpack("<Q", fh.read(8))

        gen, disc, _ = build_models(cfg, seed=seed)
        by_name = dict(list(gen.named_parameters("gen."))
                       + list(disc.named_parameters("disc.")))
        (n_params,) = struct.unpack("<I", fh.read(4))
        for _ in range(n_params):
            name, arr = _read_array(fh)
            if name not in by_name:
                raise UsageError(f"checkpoint parameter {name!r} not in model")
            p = by_name[name]
            if p.data.shape != arr.shape:
                raise UsageError(
                    f"checkpoint parameter {name!r} has shape {arr.shape}, "
                    f"model expects {p.data.shape}")
            p.value.data = arr.copy()
            itemsize = arr.dtype.itemsize
            p.m = np.frombuffer(fh.read(arr.size * itemsize),
                                dtype=arr.dtype).reshape(arr.shape).copy()
            p.v = np.frombuffer(fh.read(arr.size * itemsize),
                                dtype=arr.dtype).reshape(arr.shape).copy()

        gen_buf = dict(gen.named_buffers("gen."))
        disc_buf = dict(disc.named_buffers("disc."))
        (n_buffers,) = struct.unpack("<I", fh.read(4))
        for _ in range(n_buffers):
            name, arr = _read_array(fh)
            target = gen if name.startswith("gen.") else disc
            table = gen_buf if name.startswith("gen.") else disc_buf
            if name not in table:
                raise UsageError(f"checkpoint buffer {name!r} not in model")
            _assign_buffer(target, name.split(".", 1)[1], arr.copy())
    return gen, disc, cfg, step


def _assign_buffer(root, dotted: str, arr: np.ndarray) -> None:
    parts = dotted.split(".")
    mod = root
    for key in parts[:-1]:
        mod = getattr(mod, key)
    mod.set_buffer(parts[-1], arr)
