"""Seeded random streams.

All randomness goes through numpy's Philox counter-based generator keyed by a
``SeedSequence`` built from the run seed plus stream tags, so every stream is
reproducible and independent of the order in which streams are created.
"""
from __future__ import annotations

import numpy as np

# Stream tags mixed into the seed sequence.
STREAM_BACKBONE = 1
STREAM_PROMPT = 2
STREAM_HEAD = 3
STREAM_RECON = 4
STREAM_AUTOENCODER = 5
STREAM_SHUFFLE = 6
STREAM_MASK = 7
STREAM_SAMPLE = 8
STREAM_SPLIT = 9
STREAM_DOMAIN = 10


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def derive_seed(seed: int, *stream: int) -> int:
    """Collapse a seed and stream tags into a single 32-bit seed."""
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1)[0])
