from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.cpfm.datasets.generate import Dataset
from apps.cpfm.encoder.checkpoint import KIND_SOURCE, read_checkpoint
from apps.cpfm.encoder.model import PromptedClassifier
from apps.cpfm.harness.cpfm import load_target_checkpoint
from apps.cpfm.harness.metrics import confusion, macro_f1


@dataclass
class Evaluation:
    kind: str
    mf1: float
    confusion: np.ndarray
    predictions: np.ndarray


def predict_checkpoint(path, dataset: Dataset) -> tuple[str, np.ndarray]:
    """Hard predictions of a source or adapted-target checkpoint."""
    ckpt = read_checkpoint(path)
    enc = ckpt.config
    dataset.check_shape(enc.series_len, enc.channels, enc.classes)
    if ckpt.kind == KIND_SOURCE:
        model = PromptedClassifier.create(enc, foundation_seed=0, seed=0)
        model.load_parameters(ckpt.params)
        return ckpt.kind, model.predict(dataset.x)
    result = load_target_checkpoint(path)
    use_prompt = not ckpt.meta.get('no_prompt', False)
    return ckpt.kind, result.model.predict(dataset.x, use_prompt)


def evaluate_checkpoint(path, dataset: Dataset) -> Evaluation:
    labels = dataset.require_labels()
    kind, predictions = predict_checkpoint(path, dataset)
    classes = dataset.classes
    return Evaluation(
        kind=kind,
        mf1=macro_f1(predictions, labels, classes),
        confusion=confusion(predictions, labels, classes),
        predictions=predictions,
    )
