from __future__ import annotations

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from apps.cpfm.exceptions import ContractError


def _validate(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(predictions) == 0:
        raise ContractError('macro F1 needs at least one prediction')
    if len(predictions) != len(labels):
        raise ContractError(f'{len(predictions)} predictions for {len(labels)} labels')
    return predictions, labels


def macro_f1(predictions, labels, classes: int) -> float:
    """Unweighted mean per-class F1 in [0, 100]; classes with no support and no predictions score 0."""
    predictions, labels = _validate(predictions, labels)
    score = f1_score(labels, predictions, labels=list(range(classes)), average='macro', zero_division=0)
    return 100.0 * float(score)


def confusion(predictions, labels, classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    predictions, labels = _validate(predictions, labels)
    return confusion_matrix(labels, predictions, labels=list(range(classes)))
