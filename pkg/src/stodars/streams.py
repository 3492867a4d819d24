"""Named, seedable random streams.

Every random consumer in the package (matrix draws, direction-set draws,
objective noise) gets its own stream, derived from a root seed plus a path
of labels.  Streams with distinct paths are statistically independent, and
a given (seed, path) always yields the same stream, so whole solver runs
and benchmark plans replay bit-for-bit regardless of scheduling.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "spawn_key"]


def _as_word(part) -> int:
    # SeedSequence spawn keys must be uint32 words; label strings are
    # folded through crc32 so the mapping is stable across processes.
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path entries must be nonnegative, got {part}")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"stream path entries must be int or str, got {type(part)!r}")


def spawn_key(*path) -> tuple[int, ...]:
    """Stable uint32 tuple identifying a named substream."""
    return tuple(_as_word(p) for p in path)


def stream(seed: int, *path) -> np.random.Generator:
    """Return the generator for substream `path` of root `seed`.

    Calling twice with identical arguments gives generators that produce
    identical output; distinct paths give independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key(*path))
    return np.random.Generator(np.random.PCG64(ss))
