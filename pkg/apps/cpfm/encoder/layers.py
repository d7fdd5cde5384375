"""Forward pass of the prompted patch encoder.

All operations accept a single series (T x D_in) or a batch (B x T x D_in);
leading dimensions are carried through unchanged.
"""
from __future__ import annotations

import numpy as np

from apps.cpfm.encoder.config import EncoderConfig
from apps.cpfm.encoder.params import Backbone, ClassifierHead, LayerParams, ReconstructionHead
from apps.cpfm.exceptions import ConfigError, DimensionError
from apps.cpfm.tensor import Tensor, as_tensor, concat_seq, layernorm_nobias, softmax


def patchify(x, patch_len: int) -> Tensor:
    """Cut ``(..., T, D_in)`` into ``(..., N, P*D_in)`` time-major patches."""
    x = as_tensor(x)
    if x.ndim < 2:
        raise DimensionError(f'patchify expects (..., T, D_in), got shape {x.shape}')
    T, channels = x.shape[-2:]
    if patch_len <= 0 or T % patch_len:
        raise ConfigError(f'series length {T} is not a multiple of patch length {patch_len}')
    return x.reshape(x.shape[:-2] + (T // patch_len, patch_len * channels))


def unpatchify(patches, patch_len: int, channels: int) -> Tensor:
    patches = as_tensor(patches)
    n, width = patches.shape[-2:]
    if width != patch_len * channels:
        raise DimensionError(f'patch width {width} != {patch_len} x {channels}')
    return patches.reshape(patches.shape[:-2] + (n * patch_len, channels))


def embed_patches(patches, mask, backbone: Backbone) -> Tensor:
    """Project patches to tokens; masked positions take the mask embedding instead."""
    proj = as_tensor(patches) @ backbone.patch_proj
    if mask is None:
        return proj
    m = np.asarray(mask, dtype=np.float64)
    if m.shape[-1] != proj.shape[-2]:
        raise DimensionError(f'mask length {m.shape[-1]} does not match {proj.shape[-2]} patches')
    m = m[..., None]
    return proj * (1.0 - m) + backbone.mask_emb * m


def _split_heads(t: Tensor, heads: int) -> Tensor:
    s, d = t.shape[-2:]
    return t.reshape(t.shape[:-2] + (s, heads, d // heads)).swapaxes(-2, -3)


def _merge_heads(t: Tensor) -> Tensor:
    heads, s, dh = t.shape[-3:]
    return t.swapaxes(-2, -3).reshape(t.shape[:-3] + (s, heads * dh))


def prompted_msa(tokens, prompt: Tensor | None, layer: LayerParams, heads: int, return_attention: bool = False):
    """Multi-head self-attention over ``[prompt; tokens]``.

    The attention output carries Lp + L rows; the Lp prompt rows are dropped so
    the result has the same length as ``tokens``.
    """
    tokens = as_tensor(tokens)
    d = tokens.shape[-1]
    if heads <= 0 or d % heads:
        raise ConfigError(f'model width {d} cannot be split into {heads} heads')
    length = tokens.shape[-2]
    if prompt is not None and prompt.shape[0] > 0:
        seq = concat_seq(prompt, tokens)
    else:
        seq = tokens
    lp = seq.shape[-2] - length

    q = _split_heads(seq @ layer.w_q, heads)
    k = _split_heads(seq @ layer.w_k, heads)
    v = _split_heads(seq @ layer.w_v, heads)
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(d // heads))
    attn = softmax(scores, axis=-1)
    out = _merge_heads(attn @ v) @ layer.w_o
    if lp:
        out = out[..., lp:, :]
    if return_attention:
        return out, attn
    return out


def feed_forward(h: Tensor, layer: LayerParams) -> Tensor:
    return (h @ layer.w_ff1).gelu() @ layer.w_ff2


def encode(x, prompt: Tensor | None, mask, backbone: Backbone, config: EncoderConfig) -> Tensor:
    """patchify, embed, then the pre-norm prompted layer stack."""
    h = embed_patches(patchify(x, config.patch_len), mask, backbone)
    if not backbone.layers:
        return h
    h = h + backbone.positions
    for layer in backbone.layers:
        h = h + prompted_msa(layernorm_nobias(h, layer.ln1), prompt, layer, config.heads)
        h = h + feed_forward(layernorm_nobias(h, layer.ln2), layer)
    return h


def classify_head(tokens, head: ClassifierHead) -> Tensor:
    """Mean-pool the token rows, then map to K logits."""
    tokens = as_tensor(tokens)
    pooled = tokens.mean(axis=-2, keepdims=True)
    logits = pooled @ head.weight + head.bias
    return logits.reshape(logits.shape[:-2] + (logits.shape[-1],))


def reconstruct_head(tokens, head: ReconstructionHead, config: EncoderConfig) -> Tensor:
    rows = as_tensor(tokens) @ head.weight + head.bias
    return unpatchify(rows, config.patch_len, config.channels)


def pooled_embedding(tokens) -> np.ndarray:
    return as_tensor(tokens).values.mean(axis=-2)
