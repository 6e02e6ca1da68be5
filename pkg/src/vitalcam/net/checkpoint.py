"""Checkpoint container: named float32 tensors plus the net config.

Layout (little-endian): magic "CPK1", u32 format version, 32-byte
SHA-256 of the serialized config vector, u32 tensor count, then per
tensor a u32 name length, the UTF-8 name, u32 rank, u32 dims, and the
float32 payload. The config rides along as the reserved tensor
"__config__", so a checkpoint is self-describing; the digest ties the
header to it.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .model import NetConfig

CPK_MAGIC = b"CPK1"
CPK_VERSION = 1
CONFIG_KEY = "__config__"


def _config_payload(config: NetConfig) -> bytes:
    return np.ascontiguousarray(config.to_vector(), dtype="<f4").tobytes()


def checkpoint_save(
    path: str | os.PathLike,
    config: NetConfig,
    tensors: dict[str, np.ndarray],
) -> None:
    if CONFIG_KEY in tensors:
        raise ValueError(f"checkpoint: tensor name {CONFIG_KEY} is reserved")
    cfg_payload = _config_payload(config)
    digest = hashlib.sha256(cfg_payload).digest()
    items: list[tuple[str, np.ndarray]] = [(CONFIG_KEY, config.to_vector())]
    items += [(name, np.asarray(arr)) for name, arr in tensors.items()]
    with open(path, "wb") as fh:
        fh.write(CPK_MAGIC)
        fh.write(struct.pack("<I", CPK_VERSION))
        fh.write(digest)
        fh.write(struct.pack("<I", len(items)))
        for name, arr in items:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ValueError("checkpoint: truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def checkpoint_load(
    path: str | os.PathLike,
    expected_config: NetConfig | None = None,
) -> tuple[NetConfig, dict[str, np.ndarray]]:
    """Read a checkpoint, verifying digest and (optionally) the config."""
    rd = _Reader(open(path, "rb").read())
    magic = rd.take(4)
    if magic != CPK_MAGIC:
        raise ValueError(f"checkpoint: bad magic {magic!r}")
    version = rd.u32()
    if version != CPK_VERSION:
        raise ValueError(f"checkpoint: version {version} unsupported (want {CPK_VERSION})")
    digest = rd.take(32)
    count = rd.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = rd.take(rd.u32()).decode("utf-8")
        rank = rd.u32()
        if rank > 8:
            raise ValueError(f"checkpoint: implausible rank {rank} for {name}")
        shape = struct.unpack(f"<{rank}I", rd.take(4 * rank)) if rank else ()
        numel = int(np.prod(shape, dtype=np.int64)) if rank else 1
        data = np.frombuffer(rd.take(numel * 4), dtype="<f4").reshape(shape)
        if name in tensors:
            raise ValueError(f"checkpoint: duplicate tensor {name}")
        tensors[name] = data.copy()
    if rd.pos != len(rd.buf):
        raise ValueError(f"checkpoint: trailing bytes ({len(rd.buf) - rd.pos})")
    if CONFIG_KEY not in tensors:
        raise ValueError("checkpoint: missing config tensor")
    cfg_vec = tensors.pop(CONFIG_KEY)
    cfg_payload = np.ascontiguousarray(cfg_vec, dtype="<f4").tobytes()
    if hashlib.sha256(cfg_payload).digest() != digest:
        raise ValueError("checkpoint: config digest mismatch")
    config = NetConfig.from_vector(cfg_vec)
    if expected_config is not None and config != expected_config:
        raise ValueError(f"checkpoint: config mismatch ({config} != {expected_config})")
    return config, tensors
