"""Counter-based random draws keyed by ``(seed, sample index)``.

Each sample gets its own Philox stream with the index in the high counter
word, so a draw never depends on how samples are split across workers.
"""

from __future__ import annotations

import numpy as np

from betalab.dyadic import Dyadic


def sample_stream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    bitgen = np.random.Philox(key=seed, counter=[0, index, 0, 0])
    return np.random.Generator(bitgen)


def uniform_bits(seed: int, index: int, count: int = 1) -> list:
    """``count`` independent 64-bit integers for sample ``index``."""
    gen = sample_stream(seed, index)
    return [int(v) for v in gen.integers(0, 1 << 64, size=count, dtype=np.uint64, endpoint=False)]


def uniform_dyadic(seed: int, index: int, lo: Dyadic, hi: Dyadic, bits: int = 64) -> Dyadic:
    """A dyadic in ``[lo, hi)`` on the ``2**-bits`` grid, uniform up to grid rounding."""
    if bits != 64:
        raise ValueError("only 64 fractional bits are supported")
    (u,) = uniform_bits(seed, index)
    a, b = lo.scaled(bits), hi.scaled(bits)
    return Dyadic(a + ((u * (b - a)) >> 64), -bits)
