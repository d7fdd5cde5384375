"""Shared fixtures: a tiny encoder so model-level tests stay fast."""
import numpy as np

from apps.cpfm.datasets import gen_domain, synth_spec
from apps.cpfm.encoder import EncoderConfig
from apps.cpfm.harness.config import RunConfig

TINY = EncoderConfig(
    series_len=16,
    channels=2,
    patch_len=4,
    model_dim=8,
    heads=2,
    layers=1,
    prompt_len=2,
    classes=3,
    mask_ratio=0.25,
)


def tiny_run(**changes) -> RunConfig:
    flat = dict(
        preset='default',
        series_len=TINY.series_len,
        channels=TINY.channels,
        patch_len=TINY.patch_len,
        model_dim=TINY.model_dim,
        heads=TINY.heads,
        layers=TINY.layers,
        prompt_len=TINY.prompt_len,
        classes=TINY.classes,
        mask_ratio=TINY.mask_ratio,
        epochs=2,
        source_epochs=2,
        batch_size=8,
        lr=1e-2,
        seeds=(0,),
        samples_per_class=6,
        output_dir='unused',
    )
    flat.update(changes)
    return RunConfig.from_flat(flat)


def tiny_domain(name: str = 'd0', per_class: int = 6, seed: int = 0):
    return gen_domain(synth_spec(name, seed, per_class, TINY.series_len, TINY.channels, TINY.classes))


def random_series(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, TINY.series_len, TINY.channels))


def random_simplex(rng, shape) -> np.ndarray:
    raw = rng.random(shape) + 1e-3
    return raw / raw.sum(axis=-1, keepdims=True)
