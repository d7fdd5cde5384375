"""Supervised training of prompted classifiers (source models and the labeled-target upper bound)."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.adaptation.losses import loss_ce_soft
from apps.cpfm.datasets.generate import Dataset
from apps.cpfm.encoder.checkpoint import KIND_SOURCE, Checkpoint
from apps.cpfm.encoder.model import PromptedClassifier
from apps.cpfm.harness.config import RunConfig
from apps.cpfm.harness.metrics import macro_f1
from apps.cpfm.tensor import Adam, backward, softmax

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: PromptedClassifier
    losses: list[float] = field(default_factory=list)
    train_mf1: list[float] = field(default_factory=list)
    seconds: float = 0.0


def batches(n: int, batch_size: int, seed: int, epoch: int):
    order = seeding.make_rng(seed, seeding.STREAM_SHUFFLE, epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_source(config: RunConfig, dataset: Dataset, seed: int, epochs: int | None = None) -> TrainResult:
    """Hard-label cross entropy over every model parameter, starting from the foundation backbone."""
    labels = dataset.require_labels()
    enc = config.encoder
    dataset.check_shape(enc.series_len, enc.channels, enc.classes)
    epochs = config.source_epochs if epochs is None else epochs

    model = PromptedClassifier.create(enc, config.foundation_seed, seed)
    optimizer = Adam(model.named_parameters(), lr=config.lr)
    onehot = np.eye(enc.classes)[labels]
    result = TrainResult(model)
    started = time.perf_counter()
    for epoch in range(1, epochs + 1):
        total, count = 0.0, 0
        for idx in batches(len(dataset), config.batch_size, seed, epoch):
            loss = loss_ce_soft(softmax(model.logits(dataset.x[idx]), axis=-1), onehot[idx])
            optimizer.zero_grad()
            backward(loss)
            optimizer.step()
            total += loss.item() * len(idx)
            count += len(idx)
        mf1 = macro_f1(model.predict(dataset.x), labels, enc.classes)
        result.losses.append(total / count)
        result.train_mf1.append(mf1)
        logger.info('%s epoch %d/%d: loss %.4f, train MF1 %.2f', dataset.name or 'source', epoch, epochs, total / count, mf1)
    result.seconds = time.perf_counter() - started
    return result


def source_checkpoint(model: PromptedClassifier, **meta) -> Checkpoint:
    params = {name: t.values.copy() for name, t in model.named_parameters().items()}
    return Checkpoint(config=model.config, params=params, meta={'kind': KIND_SOURCE, **meta})
