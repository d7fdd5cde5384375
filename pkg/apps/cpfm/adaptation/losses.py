"""Adaptation objectives: soft-label CE, prompt reconstruction, masked input reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.exceptions import ConfigError, ContractError
from apps.cpfm.tensor import Tensor, as_tensor

CE_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    gamma1: float = 0.1
    gamma2: float = 1.0
    pi: float = 0.5

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ConfigError(f'loss weights must be non-negative, got {self.gamma1}, {self.gamma2}')
        if not 0.0 <= self.pi <= 1.0:
            raise ConfigError(f'pi must lie in [0, 1], got {self.pi}')


def loss_prompt_recon(pairs: Sequence[tuple[Tensor, Tensor]]) -> Tensor:
    """Mean over all (prompt, reconstruction) pairs of the squared Frobenius error."""
    if not pairs:
        raise ContractError('prompt reconstruction needs at least one prompt')
    total = None
    for p, p_hat in pairs:
        term = (as_tensor(p_hat) - as_tensor(p)).square().sum()
        total = term if total is None else total + term
    return total * (1.0 / len(pairs))


def mask_count(num_patches: int, ratio: float) -> int:
    return int(math.floor(ratio * num_patches + 0.5))


def gen_mask(num_patches: int, ratio: float, seed: int, *stream: int) -> np.ndarray:
    """Binary patch mask with exactly round(ratio * N) ones at seeded positions."""
    if not 0.0 <= ratio < 1.0:
        raise ConfigError(f'mask ratio must lie in [0, 1), got {ratio}')
    mask = np.zeros(num_patches, dtype=np.int8)
    count = mask_count(num_patches, ratio)
    if count:
        rng = seeding.make_rng(seed, seeding.STREAM_MASK, *stream)
        mask[rng.choice(num_patches, size=count, replace=False)] = 1
    return mask


def expand_mask(mask: np.ndarray, patch_len: int) -> np.ndarray:
    """Patch mask (..., N) to timestep mask (..., N*P)."""
    return np.repeat(np.asarray(mask, dtype=np.float64), patch_len, axis=-1)


def loss_input_recon(x, x_hat, mask, pi: float) -> Tensor:
    """``pi * L_masked + (1 - pi) * L_unmasked``; each term is an MSE over its positions.

    ``mask`` marks timesteps (shape ``x.shape[:-1]``); an empty group contributes 0.
    """
    x, x_hat = as_tensor(x), as_tensor(x_hat)
    if x.shape != x_hat.shape:
        raise ContractError(f'reconstruction shape {x_hat.shape} does not match input {x.shape}')
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != x.shape[:-1]:
        raise ContractError(f'mask shape {m.shape} does not match timesteps {x.shape[:-1]}')
    channels = x.shape[-1]
    sq = (x_hat - x).square()
    m = m[..., None]
    masked = float(m.sum()) * channels
    unmasked = float((1.0 - m).sum()) * channels
    zero = Tensor(0.0)
    l_m = (sq * m).sum() * (1.0 / masked) if masked else zero
    l_um = (sq * (1.0 - m)).sum() * (1.0 / unmasked) if unmasked else zero
    return l_m * pi + l_um * (1.0 - pi)


def loss_ce_soft(probs, targets) -> Tensor:
    """``-sum_c y_c log(o_c + eps)``, averaged over the batch when given one."""
    probs = as_tensor(probs)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != probs.shape:
        raise ContractError(f'soft targets {y.shape} do not match predictions {probs.shape}')
    per_sample = -((probs + CE_EPS).log() * y).sum(axis=-1)
    return per_sample.mean() if per_sample.ndim else per_sample


def total_loss(ce, pr, ir, weights: LossWeights) -> Tensor:
    return as_tensor(ce) + as_tensor(pr) * weights.gamma1 + as_tensor(ir) * weights.gamma2
