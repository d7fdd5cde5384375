"""Prompt autoencoder: linear bottleneck followed by a tanh perceptron."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.exceptions import ConfigError, DimensionError
from apps.cpfm.tensor import Tensor, as_tensor


@dataclass
class PromptAutoencoder:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor

    FIELDS = ('w1', 'b1', 'w2', 'b2', 'w3', 'b3')

    @classmethod
    def create(cls, model_dim: int, seed: int, bottleneck: int | None = None, hidden: int | None = None):
        d_b = model_dim // 4 if bottleneck is None else bottleneck
        d_h = model_dim // 2 if hidden is None else hidden
        if not 0 < d_b < model_dim:
            raise ConfigError(f'bottleneck width {d_b} must lie in (0, {model_dim})')
        if d_h <= 0:
            raise ConfigError(f'hidden width {d_h} must be positive')
        rng = seeding.make_rng(seed, seeding.STREAM_AUTOENCODER)

        def weight(fan_in, fan_out):
            return Tensor(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)), requires_grad=True)

        return cls(
            w1=weight(model_dim, d_b),
            b1=Tensor(np.zeros(d_b), requires_grad=True),
            w2=weight(d_b, d_h),
            b2=Tensor(np.zeros(d_h), requires_grad=True),
            w3=weight(d_h, model_dim),
            b3=Tensor(np.zeros(model_dim), requires_grad=True),
        )

    @property
    def model_dim(self) -> int:
        return self.w1.shape[0]

    def named_parameters(self, prefix: str = 'autoencoder') -> dict[str, Tensor]:
        return {f'{prefix}.{name}': getattr(self, name) for name in self.FIELDS}


def prompt_autoencode(p, ae: PromptAutoencoder) -> Tensor:
    """Row-wise ``W3 tanh(W2 (W1 p + b1) + b2) + b3``."""
    p = as_tensor(p)
    if p.ndim != 2 or p.shape[-1] != ae.model_dim:
        raise DimensionError(f'prompt shape {p.shape} does not match autoencoder width {ae.model_dim}')
    code = p @ ae.w1 + ae.b1
    hidden = (code @ ae.w2 + ae.b2).tanh()
    return hidden @ ae.w3 + ae.b3
