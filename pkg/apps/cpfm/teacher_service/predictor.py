from __future__ import annotations

import numpy as np

from apps.cpfm.encoder.checkpoint import KIND_SOURCE, read_checkpoint
from apps.cpfm.encoder.model import PromptedClassifier
from apps.cpfm.exceptions import ContractError


class SourcePredictor:
    """The only holder of a source model's parameters; exposes predictions and shapes."""

    def __init__(self, model: PromptedClassifier):
        self._model = model

    @classmethod
    def from_checkpoint(cls, path) -> 'SourcePredictor':
        ckpt = read_checkpoint(path)
        if ckpt.kind != KIND_SOURCE:
            raise ContractError(f'{path} is a {ckpt.kind!r} checkpoint, expected a source model')
        model = PromptedClassifier.create(ckpt.config, foundation_seed=0, seed=0)
        model.load_parameters(ckpt.params)
        return cls(model)

    @property
    def series_len(self) -> int:
        return self._model.config.series_len

    @property
    def channels(self) -> int:
        return self._model.config.channels

    @property
    def classes(self) -> int:
        return self._model.config.classes

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self._model.predict_proba(x)
