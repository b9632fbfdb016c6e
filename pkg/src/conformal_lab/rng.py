"""Named, counter-based random streams.

Every random quantity in the package is drawn from a Philox generator keyed by
the top-level seed plus a tuple of names (``"trial", 17`` and so on), so the
value of a draw never depends on the order in which trials are executed.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(name) -> int:
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError("stream keys must be nonnegative")
        return int(name)
    return zlib.crc32(str(name).encode("utf8"))


def _sequence(seed: int, names) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_key(n) for n in names))


def derive_rng(seed: int, *names) -> np.random.Generator:
    """Return an independent generator for the stream ``(seed, *names)``."""
    return np.random.Generator(np.random.Philox(_sequence(seed, names)))


def derive_seed(seed: int, *names) -> int:
    """Return a 63-bit integer seed for the stream ``(seed, *names)``."""
    state = _sequence(seed, names).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & (2**63 - 1)
