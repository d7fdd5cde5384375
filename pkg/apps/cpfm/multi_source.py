"""Multi-teacher fusion with entropy-based transferability weights."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from apps.cpfm.exceptions import ContractError

logger = logging.getLogger(__name__)

ENTROPY_EPS = 1e-12
ENTROPY_FLOOR = 1e-6
DEFAULT_CONFIDENCE = 0.5


def mean_entropy(preds) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    if preds.ndim == 1:
        preds = preds[None, :]
    if len(preds) == 0:
        raise ContractError('entropy needs at least one prediction')
    return float(np.mean(-np.sum(preds * np.log(preds + ENTROPY_EPS), axis=-1)))


def entropy_weight(preds) -> float:
    """Inverse of the batch-mean Shannon entropy, floored for near one-hot teachers."""
    return 1.0 / max(mean_entropy(preds), ENTROPY_FLOOR)


def normalize_weights(eta: Sequence[float]) -> np.ndarray:
    eta = np.asarray(eta, dtype=np.float64)
    if eta.size == 0:
        raise ContractError('cannot normalize an empty weight list')
    if np.any(eta <= 0) or not np.all(np.isfinite(eta)):
        raise ContractError(f'transferability scores must be positive and finite, got {eta.tolist()}')
    return eta / eta.max()


def momentum_update_weights(lam_prev, lam_new, n_confident: int, n_total: int) -> np.ndarray:
    if n_total <= 0:
        raise ContractError(f'momentum update needs a positive sample count, got {n_total}')
    if not 0 <= n_confident <= n_total:
        raise ContractError(f'confident count {n_confident} outside [0, {n_total}]')
    alpha = n_confident / n_total
    return alpha * np.asarray(lam_prev, dtype=np.float64) + (1.0 - alpha) * np.asarray(lam_new, dtype=np.float64)


def combine_teachers(preds, lam) -> np.ndarray:
    """Weighted sum of the M teacher predictions, renormalized to the simplex.

    ``preds`` has shape (M, ..., K); ``lam`` has M entries.
    """
    preds = np.asarray(preds, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or len(lam) != len(preds):
        raise ContractError(f'{len(lam)} weights for {len(preds)} teachers')
    if np.any(lam < 0) or not np.any(lam > 0):
        raise ContractError('teacher weights must be non-negative and not all zero')
    fused = np.tensordot(lam, preds, axes=1)
    return fused / fused.sum(axis=-1, keepdims=True)


def confident_count(fused, threshold: float = DEFAULT_CONFIDENCE) -> int:
    fused = np.asarray(fused, dtype=np.float64)
    return int(np.count_nonzero(fused.max(axis=-1) > threshold))


@dataclass
class TransferWeights:
    eta: np.ndarray
    lam: np.ndarray
    epoch: int = 0
    confident: int = 0

    @classmethod
    def uniform(cls, teachers: int) -> 'TransferWeights':
        return cls(eta=np.ones(teachers), lam=np.full(teachers, 1.0 / teachers), epoch=0)


def refresh_weights(
    buffer_entries: Sequence[np.ndarray],
    previous: TransferWeights | None,
    epoch: int,
    threshold: float = DEFAULT_CONFIDENCE,
    naive: bool = False,
) -> TransferWeights:
    """Recompute the per-teacher weights from the current buffer contents.

    The first refresh takes the fresh weights as they are; later ones blend
    with the previous weights by the share of confident fused labels.
    Confident labels are counted on the fusion under the fresh weights,
    not the weights currently in effect.
    """
    teachers = len(buffer_entries)
    if teachers == 0:
        raise ContractError('need at least one teacher')
    eta = np.array([entropy_weight(entries) for entries in buffer_entries])
    if naive:
        lam = np.full(teachers, 1.0 / teachers)
        confident = confident_count(combine_teachers(buffer_entries, lam), threshold)
        return TransferWeights(eta, lam, epoch, confident)
    lam_new = normalize_weights(eta)
    confident = confident_count(combine_teachers(buffer_entries, lam_new), threshold)
    if previous is None:
        lam = lam_new
    else:
        lam = momentum_update_weights(previous.lam, lam_new, confident, len(buffer_entries[0]))
    logger.debug('epoch %d transfer weights %s (confident %d)', epoch, np.round(lam, 4).tolist(), confident)
    return TransferWeights(eta, lam, epoch, confident)
