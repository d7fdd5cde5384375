"""Adam with bias correction."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from apps.cpfm.exceptions import DimensionError
from apps.cpfm.tensor.tensor import Tensor

logger = logging.getLogger(__name__)

DEFAULT_LR = 1e-3
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> 'AdamState':
        return cls(np.zeros_like(param, dtype=np.float64), np.zeros_like(param, dtype=np.float64), 0)


@dataclass
class AdamResult:
    params: np.ndarray
    state: AdamState
    applied: bool


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float = DEFAULT_LR,
    betas: tuple[float, float] = DEFAULT_BETAS,
    eps: float = DEFAULT_EPS,
) -> AdamResult:
    """One bias-corrected Adam update; non-finite gradients skip the update."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.first_moment.shape != params.shape:
        raise DimensionError(f'adam shapes disagree: params {params.shape}, grads {grads.shape}')
    if not np.all(np.isfinite(grads)):
        return AdamResult(params, state, applied=False)
    beta1, beta2 = betas
    step = state.step_count + 1
    m = beta1 * state.first_moment + (1.0 - beta1) * grads
    v = beta2 * state.second_moment + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    updated = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamResult(updated, AdamState(m, v, step), applied=True)


class Adam:
    """Adam over a named set of tensors; callers pick which names to step."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = DEFAULT_LR,
        betas: tuple[float, float] = DEFAULT_BETAS,
        eps: float = DEFAULT_EPS,
    ):
        self.params = dict(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.states = {name: AdamState.zeros_like(t.values) for name, t in self.params.items()}

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def step(self, names: Iterable[str] | None = None) -> bool:
        """Update the named tensors that hold a gradient.

        Returns False when any update was skipped for non-finite gradients.
        """
        all_applied = True
        for name in (self.params if names is None else names):
            tensor = self.params[name]
            if tensor.grad is None:
                continue
            result = adam_step(tensor.values, tensor.grad, self.states[name], self.lr, self.betas, self.eps)
            if not result.applied:
                logger.warning('skipped Adam update for %s: non-finite gradient', name)
                all_applied = False
                continue
            tensor.values = result.params
            self.states[name] = result.state
        return all_applied
