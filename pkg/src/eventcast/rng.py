"""Seeded random substreams.

All randomness in a run descends from one integer seed. A substream is
identified by a sequence of labels (strings or ints), so the stream a
component receives does not depend on how many other streams were drawn
before it or on worker scheduling.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK32 = 0xFFFFFFFF


def _label_words(label: str | int) -> list[int]:
    if isinstance(label, (int, np.integer)):
        v = int(label)
        if v < 0:
            raise ValueError("integer labels must be nonnegative")
        words = [0x5EED_0001]
        while True:
            words.append(v & _MASK32)
            v >>= 32
            if not v:
                return words
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return [0x5EED_0002] + [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def seed_sequence(seed: int, *labels: str | int) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    entropy = [seed & _MASK32, (seed >> 32) & _MASK32]
    for label in labels:
        entropy.extend(_label_words(label))
    return np.random.SeedSequence(entropy)


def substream(seed: int, *labels: str | int) -> np.random.Generator:
    """Independent generator for ``(seed, *labels)``; identical inputs give identical streams."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *labels)))


def derive_seed(seed: int, *labels: str | int) -> int:
    """A 63-bit child seed, for handing to components that take an integer seed."""
    state = seed_sequence(seed, *labels).generate_state(2, dtype=np.uint32)
    return (int(state[0]) | (int(state[1]) << 32)) & ((1 << 63) - 1)
