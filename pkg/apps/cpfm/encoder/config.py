"""Encoder architecture configuration and shape presets."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from apps.cpfm.exceptions import ConfigError

# u32 fields written to the checkpoint header, in order
HEADER_FIELDS = (
    'series_len',
    'channels',
    'patch_len',
    'model_dim',
    'heads',
    'layers',
    'prompt_len',
    'classes',
)


@dataclass(frozen=True)
class EncoderConfig:
    series_len: int = 128
    channels: int = 3
    patch_len: int = 16
    model_dim: int = 64
    heads: int = 4
    layers: int = 2
    prompt_len: int = 4
    classes: int = 5
    mask_ratio: float = 0.3

    def __post_init__(self):
        for name in ('series_len', 'channels', 'patch_len', 'model_dim', 'heads'):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f'{name} must be positive, got {getattr(self, name)}')
        if self.layers < 0:
            raise ConfigError(f'layers must be non-negative, got {self.layers}')
        if self.prompt_len < 0:
            raise ConfigError(f'prompt_len must be non-negative, got {self.prompt_len}')
        if self.classes < 2:
            raise ConfigError(f'classes must be >= 2, got {self.classes}')
        if not 0.0 <= self.mask_ratio < 1.0:
            raise ConfigError(f'mask_ratio must lie in [0, 1), got {self.mask_ratio}')
        if self.series_len % self.patch_len:
            raise ConfigError(
                f'series_len {self.series_len} is not a multiple of patch_len {self.patch_len}'
            )
        if self.model_dim % self.heads:
            raise ConfigError(f'model_dim {self.model_dim} is not divisible by heads {self.heads}')

    @property
    def num_patches(self) -> int:
        return self.series_len // self.patch_len

    @property
    def patch_dim(self) -> int:
        return self.patch_len * self.channels

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads

    @property
    def ff_dim(self) -> int:
        return 2 * self.model_dim

    def replace(self, **changes) -> 'EncoderConfig':
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


PRESETS = {
    'default': EncoderConfig(),
    # Shape presets mirroring the public benchmark corpora; real data is not loaded.
    'ucihar': EncoderConfig(series_len=128, channels=9, patch_len=16, classes=6),
    'ssc': EncoderConfig(series_len=3000, channels=1, patch_len=100, classes=5),
    'mfd': EncoderConfig(series_len=5120, channels=1, patch_len=256, classes=3),
}


def preset(name: str) -> EncoderConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f'unknown encoder preset {name!r}; choose from {sorted(PRESETS)}') from None
