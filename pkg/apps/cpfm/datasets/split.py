from __future__ import annotations

import math

import numpy as np

from apps.cpfm import seeding
from apps.cpfm.datasets.generate import Dataset
from apps.cpfm.exceptions import ConfigError


def split(dataset: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded stratified train/test split; each class is cut at round(fraction * count)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f'train fraction must lie in (0, 1), got {train_fraction}')
    groups = [np.arange(len(dataset))] if dataset.labels is None else [
        np.flatnonzero(dataset.labels == c) for c in range(dataset.classes)
    ]
    train, test = [], []
    for c, members in enumerate(groups):
        rng = seeding.make_rng(seed, seeding.STREAM_SPLIT, c)
        shuffled = members[rng.permutation(len(members))]
        cut = int(math.floor(train_fraction * len(members) + 0.5))
        train.append(shuffled[:cut])
        test.append(shuffled[cut:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return dataset.subset(train_idx), dataset.subset(test_idx)
