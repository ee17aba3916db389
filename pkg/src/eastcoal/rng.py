"""Reproducible stream splitting.

One root seed; per-trajectory streams come from SeedSequence spawn keys
indexed by trajectory number. The mapping (root, index) -> stream is a
pure function, so results do not depend on how trajectories are farmed
out to workers.
"""
import numpy as np


def child_seed(root_seed: int, index: int) -> int:
    """64-bit seed for trajectory `index` under `root_seed`."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def child_generator(root_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(root_seed, spawn_key=(index,)))


def batch_seeds(root_seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Seeds for trajectories offset..offset+n-1, as uint64 array.

    generate_state is prefix-stable, so chunked calls with different
    offsets tile the same global sequence.
    """
    words = np.random.SeedSequence(root_seed).generate_state(
        offset + n, dtype=np.uint64)
    return words[offset:]
