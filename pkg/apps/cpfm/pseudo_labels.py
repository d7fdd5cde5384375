"""Pseudo-label lifecycle: first-epoch smoothing, dual-branch fusion, EMA and the teacher buffer."""
from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

from apps.cpfm.exceptions import ContractError, FormatError

DEFAULT_GAMMA = 0.7
SIMPLEX_TOL = 1e-9


def smooth_first_epoch(y) -> np.ndarray:
    """Keep the top-1 probability and spread the rest evenly over the other classes.

    Works on one vector or on a batch (last axis = classes). Ties go to the
    lowest class index.
    """
    y = np.asarray(y, dtype=np.float64)
    classes = y.shape[-1]
    if classes < 2:
        raise ContractError(f'smoothing needs at least two classes, got {classes}')
    top = np.argmax(y, axis=-1)[..., None]
    top_p = np.take_along_axis(y, top, axis=-1)
    out = np.broadcast_to((1.0 - top_p) / (classes - 1), y.shape).copy()
    np.put_along_axis(out, top, top_p, axis=-1)
    return out


def branch_weights(o1, o2) -> tuple[np.ndarray, np.ndarray]:
    """Confidence weights alpha, beta from the per-branch maxima."""
    m1 = np.max(np.asarray(o1, dtype=np.float64), axis=-1)
    m2 = np.max(np.asarray(o2, dtype=np.float64), axis=-1)
    total = m1 + m2
    return m1 / total, m2 / total


def aggregate_branches(o1, o2) -> np.ndarray:
    o1 = np.asarray(o1, dtype=np.float64)
    o2 = np.asarray(o2, dtype=np.float64)
    if o1.shape != o2.shape:
        raise ContractError(f'branch outputs disagree in shape: {o1.shape} vs {o2.shape}')
    alpha, beta = branch_weights(o1, o2)
    return alpha[..., None] * o1 + beta[..., None] * o2


def ema_update(entry, target_pred, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    if not 0.0 <= gamma <= 1.0:
        raise ContractError(f'EMA gamma must lie in [0, 1], got {gamma}')
    return gamma * np.asarray(entry, dtype=np.float64) + (1.0 - gamma) * np.asarray(target_pred, dtype=np.float64)


def check_simplex(values, tol: float = SIMPLEX_TOL, what: str = 'labels') -> None:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values < -tol):
        raise ContractError(f'{what} contain negative or non-finite probabilities')
    worst = float(np.max(np.abs(values.sum(axis=-1) - 1.0))) if values.size else 0.0
    if worst > tol:
        raise ContractError(f'{what} are off the simplex by {worst:.3g}')


class TeacherBuffer:
    """Per-sample soft labels indexed by stable sample id."""

    def __init__(self, ids: Iterable[int], values: np.ndarray, gamma: float = DEFAULT_GAMMA):
        ids = np.asarray(list(ids), dtype=np.uint64)
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2 or len(values) != len(ids):
            raise ContractError(f'buffer needs one K-vector per id, got {values.shape} for {len(ids)} ids')
        if len(set(ids.tolist())) != len(ids):
            raise ContractError('buffer sample ids must be unique')
        if not 0.0 <= gamma <= 1.0:
            raise ContractError(f'EMA gamma must lie in [0, 1], got {gamma}')
        self.ids = ids
        self.values = values
        self.gamma = gamma
        self._index = {int(i): row for row, i in enumerate(ids.tolist())}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, sample_id) -> bool:
        return int(sample_id) in self._index

    @property
    def classes(self) -> int:
        return self.values.shape[1]

    def _rows(self, ids) -> np.ndarray:
        rows = []
        for i in np.asarray(ids).reshape(-1).tolist():
            try:
                rows.append(self._index[int(i)])
            except KeyError:
                raise ContractError(f'teacher buffer has no entry for sample {i}') from None
        return np.asarray(rows, dtype=np.int64)

    def lookup(self, ids) -> np.ndarray:
        return self.values[self._rows(ids)].copy()

    def update(self, ids, target_pred) -> None:
        """EMA-blend the stored entries for ``ids`` towards ``target_pred``."""
        rows = self._rows(ids)
        target_pred = np.asarray(target_pred, dtype=np.float64)
        if target_pred.shape != (len(rows), self.classes):
            raise ContractError(f'update shape {target_pred.shape} != ({len(rows)}, {self.classes})')
        self.values[rows] = ema_update(self.values[rows], target_pred, self.gamma)

    def entries(self) -> np.ndarray:
        return self.values.copy()

    def check_simplex(self, tol: float = SIMPLEX_TOL) -> None:
        check_simplex(self.values, tol, what='teacher buffer entries')

    def to_bytes(self) -> bytes:
        head = struct.pack('<IQ', self.classes, len(self))
        body = np.empty(len(self), dtype=[('id', '<u8'), ('p', '<f8', (self.classes,))])
        body['id'] = self.ids
        body['p'] = self.values
        return head + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, gamma: float = DEFAULT_GAMMA) -> 'TeacherBuffer':
        if len(data) < 12:
            raise FormatError('truncated buffer header', len(data))
        classes, count = struct.unpack_from('<IQ', data, 0)
        record = np.dtype([('id', '<u8'), ('p', '<f8', (classes,))])
        expected = 12 + record.itemsize * count
        if len(data) != expected:
            raise FormatError(f'buffer payload should be {expected} bytes', min(len(data), expected))
        body = np.frombuffer(data, dtype=record, offset=12, count=count)
        return cls(body['id'].astype(np.uint64), body['p'].astype(np.float64), gamma)


def buffer_init(ids, soft_labels, gamma: float = DEFAULT_GAMMA, expected_ids=None) -> TeacherBuffer:
    """Smooth the teacher's soft labels and store one entry per sample."""
    ids = np.asarray(ids).reshape(-1)
    soft_labels = np.asarray(soft_labels, dtype=np.float64)
    if soft_labels.ndim != 2 or len(soft_labels) != len(ids):
        raise ContractError(f'need one soft label per sample: {soft_labels.shape} for {len(ids)} ids')
    if expected_ids is not None:
        missing = set(np.asarray(expected_ids).reshape(-1).tolist()) - set(ids.tolist())
        if missing:
            raise ContractError(f'no teacher label for samples {sorted(missing)[:5]}')
    check_simplex(soft_labels, tol=1e-6, what='teacher soft labels')
    return TeacherBuffer(ids, smooth_first_epoch(soft_labels), gamma)
