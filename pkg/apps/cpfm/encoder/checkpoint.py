"""Binary checkpoint format.

Layout, little-endian throughout::

    magic        8 bytes  b"CPFMCKPT"
    version      u16
    config       8 x u32  (series_len, channels, patch_len, model_dim, heads, layers, prompt_len, classes)
    mask_ratio   f64
    meta         u32 length + UTF-8 JSON object (sorted keys)
    params       u32 count, then per parameter:
                 u16 name length, name, u8 rank, rank x u32 dims, f64 values
    blobs        u32 count, then per blob: u16 name length, name, u64 length, bytes

Blobs carry opaque sections such as serialized teacher buffers.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.cpfm.encoder.config import HEADER_FIELDS, EncoderConfig
from apps.cpfm.exceptions import CPFMError, FormatError

MAGIC = b'CPFMCKPT'
VERSION = 1

KIND_SOURCE = 'source'
KIND_TARGET = 'target'

_HEAD = struct.Struct('<8sH' + 'I' * len(HEADER_FIELDS) + 'd')


@dataclass
class Checkpoint:
    config: EncoderConfig
    params: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)
    blobs: dict[str, bytes] = field(default_factory=dict)

    @property
    def kind(self) -> str | None:
        return self.meta.get('kind')


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if n < 0 or self.offset + n > len(self.data):
            raise FormatError(f'truncated {what}', self.offset)
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size, what))


def _name_bytes(name: str) -> bytes:
    raw = name.encode('utf-8')
    if len(raw) > 0xFFFF:
        raise FormatError(f'name {name[:32]!r}... too long', 0)
    return struct.pack('<H', len(raw)) + raw


def to_bytes(ckpt: Checkpoint) -> bytes:
    cfg = ckpt.config
    parts = [
        _HEAD.pack(MAGIC, VERSION, *(getattr(cfg, f) for f in HEADER_FIELDS), float(cfg.mask_ratio))
    ]
    meta = json.dumps(ckpt.meta, sort_keys=True).encode('utf-8')
    parts.append(struct.pack('<I', len(meta)) + meta)

    parts.append(struct.pack('<I', len(ckpt.params)))
    for name, array in ckpt.params.items():
        array = np.asarray(array, dtype='<f8')
        parts.append(_name_bytes(name))
        parts.append(struct.pack('<B', array.ndim))
        parts.append(struct.pack(f'<{array.ndim}I', *array.shape))
        parts.append(np.ascontiguousarray(array).tobytes())

    parts.append(struct.pack('<I', len(ckpt.blobs)))
    for name, blob in ckpt.blobs.items():
        parts.append(_name_bytes(name))
        parts.append(struct.pack('<Q', len(blob)) + bytes(blob))
    return b''.join(parts)


def from_bytes(data: bytes) -> Checkpoint:
    reader = _Reader(data)
    magic = reader.take(8, 'magic')
    if magic != MAGIC:
        raise FormatError(f'bad magic {magic!r}', 0)
    (version,) = reader.unpack('<H', 'version')
    if version != VERSION:
        raise FormatError(f'unsupported checkpoint version {version}', 8)
    start = reader.offset
    fields = reader.unpack('<' + 'I' * len(HEADER_FIELDS), 'config header')
    (mask_ratio,) = reader.unpack('<d', 'mask ratio')
    try:
        config = EncoderConfig(**dict(zip(HEADER_FIELDS, fields)), mask_ratio=mask_ratio)
    except CPFMError as exc:
        raise FormatError(f'invalid encoder config: {exc.message}', start) from exc

    (meta_len,) = reader.unpack('<I', 'meta length')
    meta_at = reader.offset
    try:
        meta = json.loads(reader.take(meta_len, 'meta').decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError('meta block is not valid JSON', meta_at) from exc

    params = {}
    (count,) = reader.unpack('<I', 'parameter count')
    for _ in range(count):
        name = _read_name(reader)
        (rank,) = reader.unpack('<B', 'rank')
        dims = reader.unpack(f'<{rank}I', 'dims') if rank else ()
        n = int(np.prod(dims)) if dims else 1
        raw = reader.take(8 * n, f'values of {name}')
        params[name] = np.frombuffer(raw, dtype='<f8').astype(np.float64).reshape(dims)

    blobs = {}
    (count,) = reader.unpack('<I', 'blob count')
    for _ in range(count):
        name = _read_name(reader)
        (length,) = reader.unpack('<Q', 'blob length')
        blobs[name] = reader.take(length, f'blob {name}')

    if reader.offset != len(data):
        raise FormatError('trailing bytes after checkpoint', reader.offset)
    return Checkpoint(config=config, params=params, meta=meta, blobs=blobs)


def _read_name(reader: _Reader) -> str:
    (length,) = reader.unpack('<H', 'name length')
    at = reader.offset
    try:
        return reader.take(length, 'name').decode('utf-8')
    except UnicodeDecodeError as exc:
        raise FormatError('name is not UTF-8', at) from exc


def write_checkpoint(path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(ckpt))
    return path


def read_checkpoint(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())
