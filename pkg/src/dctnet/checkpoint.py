"""Binary model checkpoints.

Layout (all integers little-endian)::

    magic      8 bytes   b"DCTNETCK"
    version    u32       format version, currently 1
    hlen       u32       length of the JSON header in bytes
    header     hlen      UTF-8 JSON: {"network": ..., "manifest": ..., "tensors": [names]}
    then, for each tensor named in the header, in order:
      nlen     u32       length of the name
      name     nlen      UTF-8
      dtype    u8        0 = float32, 1 = float64
      ndim     u32
      shape    ndim*u32
      data     little-endian values, C order
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn import ModelParams, NetworkConfig

MAGIC = b"DCTNETCK"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def dumps(params: ModelParams, manifest: dict | None = None) -> bytes:
    header = {
        "network": params.config.to_dict(),
        "manifest": manifest or {},
        "tensors": list(params.tensors),
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(hbytes)))
    buf.write(hbytes)
    for name, arr in params.tensors.items():
        code = _CODES[arr.dtype]
        nb = name.encode()
        buf.write(struct.pack("<I", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<BI", code, arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())
    return buf.getvalue()


def loads(data: bytes) -> tuple[ModelParams, dict]:
    """Parse checkpoint bytes into ``(params, manifest)``."""
    view = memoryview(data)
    try:
        if bytes(view[:8]) != MAGIC:
            raise DataError("not a checkpoint file (bad magic)")
        version, hlen = struct.unpack_from("<II", view, 8)
        if version != VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        pos = 16
        header = json.loads(bytes(view[pos:pos + hlen]))
        pos += hlen
        tensors = {}
        for expected in header["tensors"]:
            (nlen,) = struct.unpack_from("<I", view, pos)
            pos += 4
            name = bytes(view[pos:pos + nlen]).decode()
            pos += nlen
            if name != expected:
                raise DataError(f"tensor order mismatch: {name!r} vs {expected!r}")
            code, ndim = struct.unpack_from("<BI", view, pos)
            pos += 5
            shape = struct.unpack_from(f"<{ndim}I", view, pos)
            pos += 4 * ndim
            dt = _DTYPES[code]
            count = int(np.prod(shape, dtype=np.int64))
            arr = np.frombuffer(view, dtype=dt, count=count, offset=pos).reshape(shape)
            pos += count * dt.itemsize
            tensors[name] = arr.astype(dt.newbyteorder("="))
        if pos != len(view):
            raise DataError(f"{len(view) - pos} trailing bytes after last tensor")
        config = NetworkConfig.from_dict(header["network"])
    except (struct.error, KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"corrupt checkpoint: {exc}") from exc

    expected_shapes = config.shapes()
    for name, shape in expected_shapes.items():
        if name not in tensors or tensors[name].shape != shape:
            raise DataError(f"checkpoint tensor {name} missing or mis-shaped")
    return ModelParams(config, tensors, version=version), header["manifest"]


def save(path, params: ModelParams, manifest: dict | None = None) -> None:
    Path(path).write_bytes(dumps(params, manifest))


def load(path) -> tuple[ModelParams, dict]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads(data)
