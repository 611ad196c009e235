"""Binary checkpoint format.

Layout (all integers little-endian)::

    magic      8 bytes  b"CGSCKPT\\0"
    version    u32      FORMAT_VERSION
    header_len u32      length of the UTF-8 JSON header
    header     JSON     {"model_config": {...}, "meta": {...}}
    n_tensors  u32
    n_tensors times:
        name_len u16, name (UTF-8)
        dtype    4 bytes ASCII, numpy dtype string padded with spaces ("<f8 ", "<f4 ")
        ndim     u8
        shape    ndim x u64
        data     row-major raw bytes

Tensors are written in sorted name order so identical parameters give identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig

MAGIC = b"CGSCKPT\0"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, model: torch.nn.Module, cfg: ModelConfig, meta: dict | None = None) -> None:
    header = json.dumps({"model_config": cfg.to_dict(), "meta": meta or {}}, sort_keys=True, ensure_ascii=False).encode()
    state = model.state_dict()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(state)))
        for name in sorted(state):
            arr = state[name].detach().cpu().contiguous().numpy()
            arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(arr.dtype.str.ljust(4).encode("ascii"))
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def read_checkpoint(path: str | Path) -> tuple[ModelConfig, dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    try:
        version, header_len = struct.unpack_from("<II", data, 8)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        pos = 16
        header = json.loads(data[pos : pos + header_len].decode())
        pos += header_len
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + name_len].decode()
            pos += name_len
            dtype = np.dtype(data[pos : pos + 4].decode("ascii").strip())
            pos += 4
            (ndim,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}Q", data, pos)
            pos += 8 * ndim
            nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            tensors[name] = np.frombuffer(data, dtype=dtype, count=int(np.prod(shape, dtype=np.int64)), offset=pos).reshape(shape).copy()
            pos += nbytes
    except CheckpointError:
        raise
    except (struct.error, ValueError, UnicodeDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: corrupt or truncated checkpoint ({exc})") from None
    if pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - pos} trailing bytes")
    return ModelConfig.from_dict(header["model_config"]), header["meta"], tensors


def load_checkpoint(path: str | Path):
    """Rebuild the model; returns ``(model, config, meta)``."""
    from .network import ClueGraphSum

    cfg, meta, tensors = read_checkpoint(path)
    model = ClueGraphSum(cfg)
    dtype = next(iter(tensors.values())).dtype if tensors else np.float32
    model.to(torch.float64 if dtype == np.float64 else torch.float32)
    model.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
    model.eval()
    return model, cfg, meta
