"""Single-prompt classifier used for source (and upper-bound) models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.cpfm.encoder.config import EncoderConfig
from apps.cpfm.encoder.layers import classify_head, encode
from apps.cpfm.encoder.params import (
    Backbone,
    ClassifierHead,
    init_backbone,
    init_classifier_head,
    init_prompt,
    load_into,
)
from apps.cpfm.tensor import Tensor, no_grad, softmax

PREDICT_CHUNK = 256


def predict_in_chunks(forward, x: np.ndarray, width: int, chunk: int = PREDICT_CHUNK) -> np.ndarray:
    """Run ``forward`` (batch -> rows of ``width``) over ``x`` in fixed-size chunks."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        return np.zeros((0, width))
    with no_grad():
        parts = [forward(x[start:start + chunk]) for start in range(0, len(x), chunk)]
    return np.concatenate(parts, axis=0)


@dataclass
class PromptedClassifier:
    """Backbone + one prompt + one classification head.

    Source models train every parameter, starting from the shared foundation
    backbone. Their prompt is private to the source side.
    """

    config: EncoderConfig
    backbone: Backbone
    prompt: Tensor
    head: ClassifierHead

    @classmethod
    def create(cls, config: EncoderConfig, foundation_seed: int, seed: int) -> 'PromptedClassifier':
        return cls(
            config=config,
            backbone=init_backbone(config, foundation_seed, trainable=True),
            prompt=init_prompt(config, seed, 0, 0),
            head=init_classifier_head(config, seed, 0, 0),
        )

    def named_parameters(self) -> dict[str, Tensor]:
        named = self.backbone.named_parameters()
        named['source.prompt'] = self.prompt
        named.update(self.head.named_parameters('source.head'))
        return named

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        load_into(self.named_parameters(), values)

    def logits(self, x, mask=None) -> Tensor:
        tokens = encode(x, self.prompt, mask, self.backbone, self.config)
        return classify_head(tokens, self.head)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return predict_in_chunks(lambda b: softmax(self.logits(b), axis=-1).values, x, self.config.classes)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=-1)
