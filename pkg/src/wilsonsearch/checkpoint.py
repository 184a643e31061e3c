"""On-disk checkpoints for interrupted searches.

Layout (all integers little-endian)::

    magic "WSCK" | version u16 | config hash (32 bytes) | e u32
    | lo | hi | marker | section count u32
    | per section: name, item count u32, items
    | sha256 of everything above

``lo``, ``hi`` and every item are big integers written as a u32 byte length
followed by that many base-256 digits, least significant first, with a
leading sign byte (0 or 1).  ``name`` and ``marker`` are u32-length-prefixed
UTF-8 strings.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

MAGIC = b"WSCK"
VERSION = 1
FILENAME = "search.ckpt"


class CheckpointError(RuntimeError):
    """Unreadable, corrupt or mismatched checkpoint."""


@dataclass
class Checkpoint:
    config_hash: bytes
    e: int
    lo: int
    hi: int
    marker: str
    sections: dict[str, list[int]] = field(default_factory=dict)
    version: int = VERSION


def config_hash(config: dict) -> bytes:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).digest()


def _put_int(buf: io.BytesIO, x: int) -> None:
    x = int(x)
    mag = abs(x)
    body = mag.to_bytes((mag.bit_length() + 7) // 8, "little")
    buf.write(struct.pack("<IB", len(body), 1 if x < 0 else 0))
    buf.write(body)


def _put_str(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def int(self) -> int:
        n, neg = struct.unpack("<IB", self.take(5))
        x = int.from_bytes(self.take(n), "little")
        return -x if neg else x

    def str(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def dumps(ck: Checkpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", ck.version))
    if len(ck.config_hash) != 32:
        raise ValueError("config hash must be 32 bytes")
    buf.write(ck.config_hash)
    buf.write(struct.pack("<I", ck.e))
    _put_int(buf, ck.lo)
    _put_int(buf, ck.hi)
    _put_str(buf, ck.marker)
    buf.write(struct.pack("<I", len(ck.sections)))
    for name, items in ck.sections.items():
        _put_str(buf, name)
        buf.write(struct.pack("<I", len(items)))
        for x in items:
            _put_int(buf, x)
    body = buf.getvalue()
    return body + hashlib.sha256(body).digest()


def loads(data: bytes, expect_hash: bytes | None = None) -> Checkpoint:
    if len(data) < len(MAGIC) + 2 + 32:
        raise CheckpointError("checksum failure: checkpoint is truncated")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum failure: checkpoint is corrupt or truncated")
    r = _Reader(body)
    if r.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint file")
    version = struct.unpack("<H", r.take(2))[0]
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    chash = r.take(32)
    if expect_hash is not None and chash != expect_hash:
        raise CheckpointError(
            "config hash mismatch: checkpoint was written by a different search configuration"
        )
    e = r.u32()
    lo, hi = r.int(), r.int()
    marker = r.str()
    sections = {}
    for _ in range(r.u32()):
        name = r.str()
        sections[name] = [r.int() for _ in range(r.u32())]
    if r.pos != len(body):
        raise CheckpointError("trailing bytes in checkpoint")
    return Checkpoint(chash, e, lo, hi, marker, sections, version)


def save(path: str | os.PathLike, ck: Checkpoint) -> None:
    """Write atomically: a temporary file renamed over the target."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dumps(ck))
    os.replace(tmp, path)


def load(path: str | os.PathLike, expect_hash: bytes | None = None) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads(data, expect_hash)
