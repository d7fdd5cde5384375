"""Composite differentiable operations used by the encoder and the losses."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from apps.cpfm.exceptions import DimensionError
from apps.cpfm.tensor.tensor import Tensor, as_tensor

LAYERNORM_EPS = 1e-5


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    x = as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f'softmax axis {axis} out of range for {x.ndim}-d tensor')
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(s, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError('concat needs at least one tensor')
    ndim = tensors[0].ndim
    if not -ndim <= axis < ndim:
        raise DimensionError(f'concat axis {axis} out of range')
    try:
        values = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f'cannot concatenate shapes {[t.shape for t in tensors]}') from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._from_op(values, tensors, backward)


def concat_seq(prompt: Tensor, tokens: Tensor) -> Tensor:
    """Prepend ``prompt`` (Lp x d) to ``tokens`` (... x L x d) along the sequence axis.

    The prompt is shared over any leading batch dimensions of ``tokens``; its
    gradient is the sum over those dimensions.
    """
    prompt, tokens = as_tensor(prompt), as_tensor(tokens)
    if prompt.ndim != 2 or tokens.ndim < 2:
        raise DimensionError('concat_seq expects a 2-d prompt and tokens of rank >= 2')
    if prompt.shape[-1] != tokens.shape[-1]:
        raise DimensionError(
            f'prompt width {prompt.shape[-1]} does not match token width {tokens.shape[-1]}'
        )
    lead = tokens.shape[:-2]
    return concat([prompt.broadcast_to(lead + prompt.shape), tokens], axis=-2)


def layernorm_nobias(x: Tensor, gain: Tensor, eps: float = LAYERNORM_EPS) -> Tensor:
    """Layer norm over the last axis with a gain and no additive bias.

    ``eps`` floors the population variance, so constant rows map to zero and
    rows that are already standardized come back unchanged.
    """
    x, gain = as_tensor(x), as_tensor(gain)
    if x.shape[-1] != gain.shape[-1]:
        raise DimensionError(f'gain length {gain.shape[-1]} does not match width {x.shape[-1]}')
    v = x.values
    centered = v - v.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    active = var > eps
    inv = 1.0 / np.sqrt(np.maximum(var, eps))
    xhat = centered * inv
    w = gain.values
    out = xhat * w
    gain_shape = gain.shape

    def backward(g):
        gxhat = g * w
        mean_g = gxhat.mean(axis=-1, keepdims=True)
        mean_gx = (gxhat * xhat).mean(axis=-1, keepdims=True)
        gx = inv * (gxhat - mean_g - np.where(active, xhat * mean_gx, 0.0))
        gw = (g * xhat).reshape(-1, gain_shape[-1]).sum(axis=0).reshape(gain_shape)
        return gx, gw

    return Tensor._from_op(out, (x, gain), backward)


def mse(x: Tensor, target) -> Tensor:
    return (as_tensor(x) - as_tensor(target)).square().mean()
