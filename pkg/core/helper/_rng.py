"""
Deterministic random streams.

Every stream is addressed by ``(master_seed, tag, index)`` through a numpy
``SeedSequence`` spawn key, so no generator state is shared between paths,
blocks or threads.
"""

import numpy as np

# Stream tags keep different consumers of the same master seed apart
TAG_PATH = 0
TAG_VAR_BLOCK = 1
TAG_FAN_BLOCK = 2
TAG_COIN_BLOCK = 3

SEED_MASK = (1 << 64) - 1


def stream(master_seed, tag, index):
    """Return an independent generator for one (tag, index) cell of a seed family."""
    seq = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=(int(tag), int(index)))
    return np.random.default_rng(seq)


def block_sizes(total, block_size):
    """Split ``total`` draws into fixed blocks; the layout never depends on worker count."""
    full, rest = divmod(int(total), int(block_size))
    sizes = [int(block_size)] * full
    if rest:
        sizes.append(rest)
    return sizes
