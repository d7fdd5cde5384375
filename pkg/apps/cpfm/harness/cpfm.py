"""End-to-end black-box adaptation of a prompted target model against M teachers."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from apps.cpfm.adaptation.losses import gen_mask
from apps.cpfm.adaptation.model import CPFMModel
from apps.cpfm.adaptation.step import adapt_batch
from apps.cpfm.datasets.generate import Dataset
from apps.cpfm.encoder.checkpoint import KIND_SOURCE, KIND_TARGET, Checkpoint, read_checkpoint
from apps.cpfm.exceptions import ContractError
from apps.cpfm.harness.config import RunConfig
from apps.cpfm.harness.training import batches
from apps.cpfm.multi_source import TransferWeights, refresh_weights
from apps.cpfm.pseudo_labels import TeacherBuffer, buffer_init
from apps.cpfm.teacher_service.client import BaseTeacherClient
from apps.cpfm.tensor import Adam

logger = logging.getLogger(__name__)

QUERY_CHUNK = 128


@dataclass
class EpochRecord:
    epoch: int
    ce: float
    pr: float
    ir: float
    seconds: float
    eta: list[float] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    confident: int = 0


@dataclass
class AdaptResult:
    model: CPFMModel
    buffers: list[TeacherBuffer]
    weights: TransferWeights | None
    epochs: list[EpochRecord] = field(default_factory=list)
    seed: int = 0


def check_teachers(teachers: Sequence[BaseTeacherClient], config: RunConfig) -> None:
    if not teachers:
        raise ContractError('adaptation needs at least one teacher')
    enc = config.encoder
    expected = (enc.series_len, enc.channels, enc.classes)
    for i, teacher in enumerate(teachers):
        if teacher.shape != expected:
            raise ContractError(f'teacher {i} serves shape {teacher.shape}, run expects {expected}')


def query_teachers(teachers: Sequence[BaseTeacherClient], x: np.ndarray) -> list[np.ndarray]:
    """Soft labels of every teacher for every sample, queried once."""
    soft = []
    for teacher in teachers:
        parts = [teacher.predict(x[start:start + QUERY_CHUNK], 'soft') for start in range(0, len(x), QUERY_CHUNK)]
        soft.append(np.concatenate(parts) if parts else np.zeros((0, 0)))
    return soft


def adapt(
    config: RunConfig,
    target: Dataset,
    teachers: Sequence[BaseTeacherClient],
    seed: int,
    init: 'AdaptResult | None' = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> AdaptResult:
    """Adapt a fresh (or warm-started) target model to ``target`` using only teacher predictions."""
    check_teachers(teachers, config)
    enc = config.encoder
    target.check_shape(enc.series_len, enc.channels, enc.classes)
    if len(target) == 0:
        raise ContractError('target dataset is empty')

    if init is None:
        model = CPFMModel.create(enc, len(teachers), config.foundation_seed, seed, config.clone_prompt_init)
        soft = query_teachers(teachers, target.x)
        buffers = [buffer_init(target.ids, labels, config.gamma_ema) for labels in soft]
    else:
        model, buffers = init.model, init.buffers
        if model.num_teachers != len(teachers):
            raise ContractError(f'warm start has {model.num_teachers} teachers, run has {len(teachers)}')
        for buffer in buffers:
            buffer.gamma = config.gamma_ema

    optimizer = Adam(model.trainable_parameters(), lr=config.lr)
    use_prompt = not config.flags.no_prompt
    weights = None
    records = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        weights = refresh_weights(
            [b.entries() for b in buffers], weights, epoch, config.confidence_threshold, config.flags.naive_avg
        )
        model.teacher_weights = weights.lam
        sums = np.zeros(3)
        steps = 0
        for idx in batches(len(target), config.batch_size, seed, epoch):
            x, ids = target.x[idx], target.ids[idx]
            masks = np.stack([gen_mask(enc.num_patches, enc.mask_ratio, seed, epoch, int(i)) for i in ids])
            fused = model.predict_batch(x, use_prompt)
            for teacher in range(model.num_teachers):
                for branch in (1, 2):
                    stats = adapt_batch(
                        model, optimizer, x, ids, buffers[teacher], teacher, branch,
                        config.weights, masks, config.flags,
                    )
                    sums += (stats.ce, stats.pr, stats.ir)
                    steps += 1
            for buffer in buffers:
                buffer.update(ids, fused)
        for buffer in buffers:
            buffer.check_simplex()
        mean = sums / max(steps, 1)
        record = EpochRecord(
            epoch=epoch,
            ce=float(mean[0]),
            pr=float(mean[1]),
            ir=float(mean[2]),
            seconds=time.perf_counter() - started,
            eta=[float(v) for v in weights.eta],
            lam=[float(v) for v in weights.lam],
            confident=weights.confident,
        )
        records.append(record)
        logger.info(
            'adapt epoch %d/%d: L_CE %.4f L_PR %.4f L_IR %.4f lambda %s',
            epoch, config.epochs, record.ce, record.pr, record.ir, np.round(weights.lam, 4).tolist(),
        )
        if on_epoch is not None:
            on_epoch(record)
    return AdaptResult(model=model, buffers=buffers, weights=weights, epochs=records, seed=seed)


def target_checkpoint(result: AdaptResult, **meta) -> Checkpoint:
    model = result.model
    params = {name: t.values.copy() for name, t in model.named_parameters().items()}
    blobs = {f'buffer.{i}': b.to_bytes() for i, b in enumerate(result.buffers)}
    meta = {
        'kind': KIND_TARGET,
        'teachers': model.num_teachers,
        'lambda': [float(v) for v in model.teacher_weights],
        'gamma_ema': result.buffers[0].gamma if result.buffers else None,
        'seed': result.seed,
        **meta,
    }
    return Checkpoint(config=model.config, params=params, meta=meta, blobs=blobs)


def load_target_checkpoint(path) -> AdaptResult:
    """Rebuild an adapted model; source checkpoints are private and refused."""
    ckpt = read_checkpoint(path)
    if ckpt.kind == KIND_SOURCE:
        raise ContractError(f'{path} is a source checkpoint; adaptation only talks to teachers')
    if ckpt.kind != KIND_TARGET:
        raise ContractError(f'{path} has unknown checkpoint kind {ckpt.kind!r}')
    teachers = int(ckpt.meta.get('teachers', 1))
    model = CPFMModel.create(ckpt.config, teachers, seed=int(ckpt.meta.get('seed', 0)))
    model.load_parameters(ckpt.params)
    model.teacher_weights = np.asarray(ckpt.meta.get('lambda', [1.0] * teachers), dtype=np.float64)
    gamma = ckpt.meta.get('gamma_ema') or 0.7
    buffers = [TeacherBuffer.from_bytes(ckpt.blobs[f'buffer.{i}'], gamma) for i in range(teachers) if f'buffer.{i}' in ckpt.blobs]
    return AdaptResult(model=model, buffers=buffers, weights=None, seed=int(ckpt.meta.get('seed', 0)))
