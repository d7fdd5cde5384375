"""Target-side model: frozen backbone, one dual-prompt branch pair per teacher."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from apps.cpfm.adaptation.autoencoder import PromptAutoencoder
from apps.cpfm.encoder.config import EncoderConfig
from apps.cpfm.encoder.layers import classify_head, encode, pooled_embedding
from apps.cpfm.encoder.model import predict_in_chunks
from apps.cpfm.encoder.params import (
    Backbone,
    ClassifierHead,
    PromptPair,
    ReconstructionHead,
    init_backbone,
    init_classifier_head,
    init_prompt_pair,
    init_reconstruction_head,
    load_into,
)
from apps.cpfm.exceptions import ContractError
from apps.cpfm.multi_source import combine_teachers
from apps.cpfm.pseudo_labels import aggregate_branches
from apps.cpfm.tensor import Tensor, no_grad, softmax

BRANCHES = (1, 2)


@dataclass
class BranchPair:
    prompts: PromptPair
    head1: ClassifierHead
    head2: ClassifierHead

    def head(self, f: int) -> ClassifierHead:
        if f not in BRANCHES:
            raise ContractError(f'branch must be 1 or 2, got {f}')
        return self.head1 if f == 1 else self.head2

    def named_parameters(self, prefix: str) -> dict[str, Tensor]:
        named = {}
        for f in BRANCHES:
            named[f'{prefix}.branch{f}.prompt'] = self.prompts.branch(f)
            named.update(self.head(f).named_parameters(f'{prefix}.branch{f}.head'))
        return named


@dataclass
class CPFMModel:
    config: EncoderConfig
    backbone: Backbone
    pairs: list[BranchPair]
    recon_head: ReconstructionHead
    autoencoder: PromptAutoencoder
    # target prediction weights over teachers
    teacher_weights: np.ndarray = field(default=None)

    @classmethod
    def create(
        cls,
        config: EncoderConfig,
        num_teachers: int = 1,
        foundation_seed: int = 0,
        seed: int = 0,
        clone_prompt_init: bool = False,
    ) -> 'CPFMModel':
        if num_teachers < 1:
            raise ContractError(f'need at least one teacher, got {num_teachers}')
        pairs = [
            BranchPair(
                prompts=init_prompt_pair(config, seed, teacher=i, clone=clone_prompt_init),
                head1=init_classifier_head(config, seed, i, 1),
                head2=init_classifier_head(config, seed, i, 2),
            )
            for i in range(num_teachers)
        ]
        return cls(
            config=config,
            backbone=init_backbone(config, foundation_seed, trainable=False),
            pairs=pairs,
            recon_head=init_reconstruction_head(config, seed),
            autoencoder=PromptAutoencoder.create(config.model_dim, seed),
            teacher_weights=np.ones(num_teachers),
        )

    @property
    def num_teachers(self) -> int:
        return len(self.pairs)

    def frozen_parameters(self) -> dict[str, Tensor]:
        return self.backbone.named_parameters()

    def trainable_parameters(self) -> dict[str, Tensor]:
        named = {}
        for i, pair in enumerate(self.pairs):
            named.update(pair.named_parameters(f'teacher.{i}'))
        named.update(self.recon_head.named_parameters('recon_head'))
        named.update(self.autoencoder.named_parameters('autoencoder'))
        return named

    def named_parameters(self) -> dict[str, Tensor]:
        return {**self.frozen_parameters(), **self.trainable_parameters()}

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        load_into(self.named_parameters(), values)

    def prompt(self, teacher: int, branch: int, use_prompt: bool = True) -> Tensor | None:
        if not use_prompt:
            return None
        return self.pairs[teacher].prompts.branch(branch)

    def branch_param_names(self, teacher: int, branch: int, use_prompt: bool = True) -> list[str]:
        prefix = f'teacher.{teacher}.branch{branch}'
        names = [f'{prefix}.head.weight', f'{prefix}.head.bias']
        if use_prompt:
            names.insert(0, f'{prefix}.prompt')
        return names

    def tokens(self, x, teacher: int, branch: int, mask=None, use_prompt: bool = True) -> Tensor:
        return encode(x, self.prompt(teacher, branch, use_prompt), mask, self.backbone, self.config)

    def branch_logits(self, x, teacher: int, branch: int, mask=None, use_prompt: bool = True) -> Tensor:
        tokens = self.tokens(x, teacher, branch, mask, use_prompt)
        return classify_head(tokens, self.pairs[teacher].head(branch))

    def branch_proba(self, x, teacher: int, branch: int, use_prompt: bool = True) -> np.ndarray:
        with no_grad():
            return softmax(self.branch_logits(x, teacher, branch, use_prompt=use_prompt), axis=-1).values

    def teacher_outputs(self, x, use_prompt: bool = True) -> np.ndarray:
        """Dual-branch aggregated prediction of every pair, shape (M, B, K)."""
        outs = []
        for i in range(self.num_teachers):
            o1 = self.branch_proba(x, i, 1, use_prompt)
            o2 = self.branch_proba(x, i, 2, use_prompt)
            outs.append(aggregate_branches(o1, o2))
        return np.stack(outs)

    def predict_batch(self, x, use_prompt: bool = True) -> np.ndarray:
        outs = self.teacher_outputs(x, use_prompt)
        if self.num_teachers == 1:
            return outs[0]
        return combine_teachers(outs, self.teacher_weights)

    def predict_proba(self, x: np.ndarray, use_prompt: bool = True) -> np.ndarray:
        return predict_in_chunks(lambda b: self.predict_batch(b, use_prompt), x, self.config.classes)

    def predict(self, x: np.ndarray, use_prompt: bool = True) -> np.ndarray:
        return np.argmax(self.predict_proba(x, use_prompt), axis=-1)

    def embeddings(self, x: np.ndarray, teacher: int, branch: int, use_prompt: bool = True) -> np.ndarray:
        """Mean-pooled encoder output per sample, shape (n, d)."""
        d = self.config.model_dim
        return predict_in_chunks(
            lambda b: pooled_embedding(self.tokens(b, teacher, branch, use_prompt=use_prompt)), x, d
        )
