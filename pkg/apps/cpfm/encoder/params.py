"""Parameter containers for the patch encoder and its heads.

Every container exposes ``named_parameters(prefix)`` returning an ordered
``{dotted name: Tensor}`` mapping; checkpoints and the optimizer work off
those names.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.encoder.config import EncoderConfig
from apps.cpfm.exceptions import ContractError
from apps.cpfm.tensor import Tensor

EMBED_STD = 0.02


def _weight(rng: np.random.Generator, fan_in: int, fan_out: int, trainable: bool = True) -> Tensor:
    values = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
    return Tensor(values, requires_grad=trainable)


def _small(rng: np.random.Generator, shape, trainable: bool = True) -> Tensor:
    return Tensor(rng.normal(0.0, EMBED_STD, size=shape), requires_grad=trainable)


@dataclass
class LayerParams:
    ln1: Tensor
    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    ln2: Tensor
    w_ff1: Tensor
    w_ff2: Tensor

    FIELDS = ('ln1', 'w_q', 'w_k', 'w_v', 'w_o', 'ln2', 'w_ff1', 'w_ff2')

    def named_parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f'{prefix}.{name}': getattr(self, name) for name in self.FIELDS}


@dataclass
class Backbone:
    """The frozen foundation encoder: patch projection, mask token, positions, layers."""

    patch_proj: Tensor
    mask_emb: Tensor
    positions: Tensor
    layers: list[LayerParams] = field(default_factory=list)

    def named_parameters(self, prefix: str = 'backbone') -> dict[str, Tensor]:
        named = {
            f'{prefix}.patch_proj': self.patch_proj,
            f'{prefix}.mask_emb': self.mask_emb,
            f'{prefix}.positions': self.positions,
        }
        for k, layer in enumerate(self.layers):
            named.update(layer.named_parameters(f'{prefix}.layers.{k}'))
        return named

    def set_trainable(self, trainable: bool) -> None:
        for t in self.named_parameters().values():
            t.requires_grad = trainable
            t.grad = None


@dataclass
class ClassifierHead:
    weight: Tensor
    bias: Tensor

    def named_parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f'{prefix}.weight': self.weight, f'{prefix}.bias': self.bias}


@dataclass
class ReconstructionHead:
    weight: Tensor
    bias: Tensor

    def named_parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f'{prefix}.weight': self.weight, f'{prefix}.bias': self.bias}


@dataclass
class PromptPair:
    p1: Tensor
    p2: Tensor

    def branch(self, f: int) -> Tensor:
        if f == 1:
            return self.p1
        if f == 2:
            return self.p2
        raise ContractError(f'branch must be 1 or 2, got {f}')

    def named_parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f'{prefix}.branch1.prompt': self.p1, f'{prefix}.branch2.prompt': self.p2}


def init_backbone(config: EncoderConfig, foundation_seed: int, trainable: bool = False) -> Backbone:
    """Build the shared backbone; the same ``foundation_seed`` always yields the same weights."""
    rng = seeding.make_rng(foundation_seed, seeding.STREAM_BACKBONE)
    d = config.model_dim
    patch_proj = _weight(rng, config.patch_dim, d, trainable)
    mask_emb = _small(rng, (d,), trainable)
    positions = _small(rng, (config.num_patches, d), trainable)
    layers = []
    for _ in range(config.layers):
        layers.append(
            LayerParams(
                ln1=Tensor(np.ones(d), requires_grad=trainable),
                w_q=_weight(rng, d, d, trainable),
                w_k=_weight(rng, d, d, trainable),
                w_v=_weight(rng, d, d, trainable),
                w_o=_weight(rng, d, d, trainable),
                ln2=Tensor(np.ones(d), requires_grad=trainable),
                w_ff1=_weight(rng, d, config.ff_dim, trainable),
                w_ff2=_weight(rng, config.ff_dim, d, trainable),
            )
        )
    return Backbone(patch_proj, mask_emb, positions, layers)


def init_prompt(config: EncoderConfig, seed: int, *stream: int) -> Tensor:
    rng = seeding.make_rng(seed, seeding.STREAM_PROMPT, *stream)
    return _small(rng, (config.prompt_len, config.model_dim))


def init_prompt_pair(config: EncoderConfig, seed: int, teacher: int = 0, clone: bool = False) -> PromptPair:
    p1 = init_prompt(config, seed, teacher, 1)
    p2 = Tensor(p1.values.copy(), requires_grad=True) if clone else init_prompt(config, seed, teacher, 2)
    return PromptPair(p1, p2)


def init_classifier_head(config: EncoderConfig, seed: int, *stream: int) -> ClassifierHead:
    rng = seeding.make_rng(seed, seeding.STREAM_HEAD, *stream)
    return ClassifierHead(
        weight=_weight(rng, config.model_dim, config.classes),
        bias=Tensor(np.zeros(config.classes), requires_grad=True),
    )


def init_reconstruction_head(config: EncoderConfig, seed: int) -> ReconstructionHead:
    rng = seeding.make_rng(seed, seeding.STREAM_RECON)
    return ReconstructionHead(
        weight=_weight(rng, config.model_dim, config.patch_dim),
        bias=Tensor(np.zeros(config.patch_dim), requires_grad=True),
    )


def load_into(named: dict[str, Tensor], values: dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into live tensors, checking names and shapes."""
    missing = sorted(set(named) - set(values))
    if missing:
        raise ContractError(f'checkpoint is missing parameters {missing[:5]}')
    for name, tensor in named.items():
        array = np.asarray(values[name], dtype=np.float64)
        if array.shape != tensor.shape:
            raise ContractError(f'parameter {name} has shape {array.shape}, expected {tensor.shape}')
        tensor.values = array.copy()
        tensor.grad = None
