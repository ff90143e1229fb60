"""Deterministic random-stream derivation.

Every stochastic routine in this package takes an explicit numpy Generator.
Experiment drivers derive one independent sub-stream per task from a single
master seed, so grid cells are reproducible regardless of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return a Generator keyed by (seed, label, index).

    The label/index pair is hashed (blake2b) into extra entropy words so that
    streams for different tasks are statistically independent and stable
    across platforms and runs.
    """
    digest = hashlib.blake2b(f"{label}:{index}".encode(), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, *words]))


def child_seed(seed: int, label: str, index: int = 0) -> int:
    """Stable 64-bit integer seed for a named child task."""
    digest = hashlib.blake2b(
        f"{seed & _MASK64}:{label}:{index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")
