"""Binary checkpoint container (little-endian).

Layout::

    b"DBRC" | version u32 | count u32
    count × ( name_len u32 | name utf-8 | rank u32 | dims u32×rank | values f32×prod(dims) )
    config_len u32 | config utf-8
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"DBRC"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode(params, config_text=""):
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for name, value in params.items():
        arr = np.asarray(getattr(value, "data", value), dtype="<f4")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr).tobytes())
    text = config_text.encode("utf-8")
    chunks.append(struct.pack("<I", len(text)))
    chunks.append(text)
    return b"".join(chunks)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise CheckpointError(
                f"truncated checkpoint: need {n} bytes for {what} at offset {self.pos}, only {len(self.buf) - self.pos} left"
            )
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def decode(buf):
    """Return ``(params, config_text)`` with params as float32 arrays."""
    r = _Reader(buf)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at offset 0 (expected {MAGIC!r})")
    version = r.u32("version")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    count = r.u32("entry count")
    params = {}
    for i in range(count):
        name = r.take(r.u32(f"entry {i} name length"), f"entry {i} name").decode("utf-8")
        rank = r.u32(f"{name} rank")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, f"{name} dims"))
        n = int(np.prod(dims, dtype=np.int64)) if rank else 1
        values = np.frombuffer(r.take(4 * n, f"{name} values"), dtype="<f4").reshape(dims)
        params[name] = values.astype(np.float32)
    text = r.take(r.u32("config length"), "config text").decode("utf-8")
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after offset {r.pos}")
    return params, text


def save_checkpoint(params, path, config_text=""):
    Path(path).write_bytes(encode(params, config_text))


def load_checkpoint(path):
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"no such checkpoint: {path}")
    return decode(path.read_bytes())
