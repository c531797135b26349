"""Splittable seed derivation: every random draw is keyed by its position in the sweep."""

from __future__ import annotations

import numpy as np

# stream tags keep parameter draws, input draws and bootstrap draws disjoint
STREAM_INIT = 0
STREAM_INPUT = 1
STREAM_BOOTSTRAP = 2
STREAM_DATA = 3


def derive_seed(master: int, *key: int) -> int:
    """A 64-bit seed that depends only on ``master`` and ``key``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_seed(master: int, cell: int, sample: int) -> int:
    return derive_seed(master, STREAM_INIT, cell, sample)


def input_seed(master: int, cell: int) -> int:
    return derive_seed(master, STREAM_INPUT, cell)


def bootstrap_seed(master: int, cell: int) -> int:
    return derive_seed(master, STREAM_BOOTSTRAP, cell)
