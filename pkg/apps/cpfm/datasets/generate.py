"""Synthetic domain-shifted multichannel sinusoids.

Each class owns a base frequency (cycles per window); a domain shifts every
class by the same frequency offset, amplitude scale, phase offset and noise
level. Noise for sample ``i`` comes from its own Philox stream, so generation
does not depend on the order samples are produced in.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.exceptions import ConfigError, ContractError, DataError

BASE_FREQUENCIES = (2.0, 3.5, 5.0, 6.5, 8.0)

# name: (frequency offset, amplitude, phase offset, noise std)
SYNTH_SHIFTS = {
    'd0': (0.0, 1.0, 0.0, 0.3),
    'd1': (0.8, 0.8, 0.6, 0.6),
    'd2': (-0.7, 1.2, 1.2, 0.45),
    'd3': (0.5, 0.7, -0.9, 0.5),
    'd4': (-0.4, 1.1, 2.1, 0.7),
    'd5': (0.3, 0.9, -1.7, 0.4),
    'd6': (-0.8, 1.3, 0.3, 0.55),
    'd7': (0.6, 0.75, 2.6, 0.35),
}
DOMAINS = tuple(SYNTH_SHIFTS)
SYNTH_TARGETS = DOMAINS[:5]


@dataclass(frozen=True)
class DomainSpec:
    classes: int = 5
    series_len: int = 128
    channels: int = 3
    base_freqs: tuple[float, ...] = BASE_FREQUENCIES
    freq_shift: float = 0.0
    amplitude: float = 1.0
    phase: float = 0.0
    noise: float = 0.0
    samples_per_class: int = 40
    seed: int = 0
    name: str = 'domain'

    def __post_init__(self):
        if self.classes < 2:
            raise ConfigError(f'a domain needs at least two classes, got {self.classes}')
        if self.samples_per_class < 1:
            raise ConfigError('samples_per_class must be at least 1')
        if self.noise < 0:
            raise ConfigError(f'noise std must be non-negative, got {self.noise}')
        if self.series_len < 1 or self.channels < 1:
            raise ConfigError('series_len and channels must be positive')
        if len(self.base_freqs) != self.classes:
            raise ConfigError(f'{len(self.base_freqs)} base frequencies for {self.classes} classes')
        if len(set(self.base_freqs)) != len(self.base_freqs):
            raise ConfigError('base frequencies must be distinct per class')


@dataclass(eq=False)
class Dataset:
    x: np.ndarray
    labels: np.ndarray | None
    classes: int
    ids: np.ndarray = field(default=None)
    name: str = ''

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 3:
            raise DataError(f'dataset samples must be (n, T, D_in), got {self.x.shape}')
        if self.ids is None:
            self.ids = np.arange(len(self.x), dtype=np.uint64)
        self.ids = np.asarray(self.ids, dtype=np.uint64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.x),):
                raise DataError(f'{len(self.labels)} labels for {len(self.x)} samples')
            if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.classes):
                raise DataError(f'labels must lie in [0, {self.classes})')

    def __len__(self) -> int:
        return len(self.x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.labels is None) != (other.labels is None):
            return False
        return (
            self.classes == other.classes
            and np.array_equal(self.x, other.x)
            and (self.labels is None or np.array_equal(self.labels, other.labels))
        )

    @property
    def series_len(self) -> int:
        return self.x.shape[1]

    @property
    def channels(self) -> int:
        return self.x.shape[2]

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise DataError(f'dataset {self.name or "<unnamed>"} has no labels')
        return self.labels

    def unlabeled(self) -> 'Dataset':
        return Dataset(self.x, None, self.classes, self.ids, self.name)

    def subset(self, index) -> 'Dataset':
        index = np.asarray(index, dtype=np.int64)
        labels = None if self.labels is None else self.labels[index]
        return Dataset(self.x[index], labels, self.classes, self.ids[index], self.name)

    def check_shape(self, series_len: int, channels: int, classes: int) -> None:
        if (self.series_len, self.channels) != (series_len, channels):
            raise ContractError(
                f'dataset samples are {self.series_len}x{self.channels}, model expects {series_len}x{channels}'
            )
        if self.classes != classes:
            raise DataError(f'dataset has {self.classes} classes, model expects {classes}')


def gen_sample(spec: DomainSpec, index: int, label: int) -> np.ndarray:
    t = np.arange(spec.series_len, dtype=np.float64)[:, None]
    ch = np.arange(spec.channels, dtype=np.float64)[None, :]
    freq = spec.base_freqs[label] + spec.freq_shift
    clean = spec.amplitude * np.sin(2.0 * np.pi * freq * t / spec.series_len + spec.phase + ch * np.pi / 4.0)
    if spec.noise == 0:
        return clean
    rng = seeding.make_rng(spec.seed, seeding.STREAM_SAMPLE, index)
    return clean + rng.normal(0.0, spec.noise, size=clean.shape)


def gen_domain(spec: DomainSpec) -> Dataset:
    """Class-balanced labeled dataset; samples ordered class by class."""
    n = spec.samples_per_class
    labels = np.repeat(np.arange(spec.classes), n)
    x = np.stack([gen_sample(spec, i, int(c)) for i, c in enumerate(labels)])
    return Dataset(x, labels, spec.classes, name=spec.name)


def synth_spec(
    name: str,
    seed: int = 0,
    samples_per_class: int = 40,
    series_len: int = 128,
    channels: int = 3,
    classes: int = 5,
) -> DomainSpec:
    """Spec for one domain of the synthetic family."""
    try:
        shift, amplitude, phase, noise = SYNTH_SHIFTS[name]
    except KeyError:
        raise ConfigError(f'unknown synthetic domain {name!r}; choose from {list(DOMAINS)}') from None
    if classes > len(BASE_FREQUENCIES):
        base = tuple(2.0 + 1.5 * c for c in range(classes))
    else:
        base = BASE_FREQUENCIES[:classes]
    return DomainSpec(
        classes=classes,
        series_len=series_len,
        channels=channels,
        base_freqs=base,
        freq_shift=shift,
        amplitude=amplitude,
        phase=phase,
        noise=noise,
        samples_per_class=samples_per_class,
        seed=seeding.derive_seed(seed, seeding.STREAM_DOMAIN, DOMAINS.index(name)),
        name=name,
    )


def scenario_sources(target: str, sources: int = 1) -> list[str]:
    """The ``sources`` domains that follow ``target`` cyclically."""
    if target not in SYNTH_SHIFTS:
        raise ConfigError(f'unknown synthetic domain {target!r}')
    if not 1 <= sources < len(DOMAINS):
        raise ConfigError(f'source count must lie in [1, {len(DOMAINS) - 1}], got {sources}')
    j = DOMAINS.index(target)
    return [DOMAINS[(j + s) % len(DOMAINS)] for s in range(1, sources + 1)]


def synth_scenarios(sources: int = 1, targets=SYNTH_TARGETS) -> list[tuple[list[str], str]]:
    return [(scenario_sources(target, sources), target) for target in targets]
