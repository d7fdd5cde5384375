"""TSDS dataset files.

Little-endian layout: magic ``b"TSDS"``, version u16, flags u16 (bit 0: has
labels), n u32, T u32, D_in u32, K u32, then n*T*D_in f64 values sample-major,
then n u16 labels when labeled. Sample ids are positional on read.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from apps.cpfm.datasets.generate import Dataset
from apps.cpfm.exceptions import CPFMError, FormatError

MAGIC = b'TSDS'
VERSION = 1
FLAG_LABELS = 0x1

_HEADER = struct.Struct('<4sHHIIII')


def dataset_to_bytes(dataset: Dataset) -> bytes:
    n, T, channels = dataset.x.shape
    flags = FLAG_LABELS if dataset.labeled else 0
    parts = [
        _HEADER.pack(MAGIC, VERSION, flags, n, T, channels, dataset.classes),
        np.ascontiguousarray(dataset.x, dtype='<f8').tobytes(),
    ]
    if dataset.labeled:
        parts.append(dataset.labels.astype('<u2').tobytes())
    return b''.join(parts)


def dataset_from_bytes(data: bytes, name: str = '') -> Dataset:
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f'bad magic {bytes(data[:4])!r}', 0)
    if len(data) < _HEADER.size:
        raise FormatError('truncated header', len(data))
    _, version, flags, n, T, channels, classes = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise FormatError(f'unsupported dataset version {version}', 4)
    offset = _HEADER.size
    values = n * T * channels
    end = offset + 8 * values
    if len(data) < end:
        raise FormatError(f'truncated sample block, expected {8 * values} bytes', len(data))
    x = np.frombuffer(data, dtype='<f8', count=values, offset=offset).astype(np.float64).reshape(n, T, channels)
    labels = None
    if flags & FLAG_LABELS:
        if len(data) < end + 2 * n:
            raise FormatError(f'truncated label block, expected {2 * n} bytes', len(data))
        labels = np.frombuffer(data, dtype='<u2', count=n, offset=end).astype(np.int64)
        end += 2 * n
    if len(data) != end:
        raise FormatError('trailing bytes after dataset payload', end)
    try:
        return Dataset(x, labels, classes, name=name)
    except CPFMError as exc:
        raise FormatError(exc.message, end - 2 * n if labels is not None else offset) from exc


def write_dataset(dataset: Dataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dataset_to_bytes(dataset))
    return path


def read_dataset(path) -> Dataset:
    path = Path(path)
    return dataset_from_bytes(path.read_bytes(), name=path.stem)
