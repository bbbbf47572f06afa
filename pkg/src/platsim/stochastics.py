"""Seeded random streams and the few samplers the model needs.

Every run owns one root seed. Independent purposes (agent traits, message
traits, activation order, per-step decisions, graph construction) draw from
child streams keyed by a stable CRC32 tag of the purpose name, so adding a
new consumer never shifts the numbers an existing one sees.

The bit generator is numpy's PCG64 fed through ``SeedSequence``. Changing it
changes every output, so it is pinned.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def purpose_tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def triangular_inverse_cdf(u, lo: float, mode: float, hi: float):
    """Map uniform draw(s) ``u`` in [0, 1] to Triangular(lo, mode, hi)."""
    _check_triangular(lo, mode, hi)
    u = np.asarray(u, dtype=float)
    span = hi - lo
    cut = (mode - lo) / span
    left = lo + np.sqrt(u * span * (mode - lo))
    right = hi - np.sqrt((1.0 - u) * span * (hi - mode))
    out = np.where(u < cut, left, right)
    return out if out.ndim else float(out)


def _check_triangular(lo: float, mode: float, hi: float) -> None:
    if not (lo <= mode <= hi) or not lo < hi:
        raise ValueError(f"triangular needs lo <= mode <= hi and lo < hi, got ({lo}, {mode}, {hi})")


class RandomSource:
    """A deterministic stream of uniforms plus derived samplers.

    ``RandomSource(seed)`` is the root stream of a run;
    ``src.derive("messages")`` gives the child stream for one purpose.
    """

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.key = tuple(_key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.key))
        )

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, key={self.key})"

    def derive(self, purpose: str) -> RandomSource:
        return RandomSource(self.seed, self.key + (purpose_tag(purpose),))

    def random(self, size=None):
        """Uniform(s) on [0, 1)."""
        return self._gen.random(size)

    def uniform(self, lo: float, hi: float, size=None):
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got [{lo}, {hi})")
        x = lo + (hi - lo) * self._gen.random(size)
        # lo + span*u can round up to hi for some spans
        ceiling = np.nextafter(hi, lo)
        if size is None:
            return min(float(x), ceiling)
        return np.minimum(x, ceiling)

    def triangular(self, lo: float, mode: float, hi: float, size=None):
        """Inverse-CDF triangular sampler: exactly one uniform per sample."""
        _check_triangular(lo, mode, hi)
        return triangular_inverse_cdf(self._gen.random(size), lo, mode, hi)

    def pick_uniform(self, n: int) -> int:
        """Index in [0, n), from a single uniform."""
        if n < 1:
            raise ValueError("pick_uniform needs n >= 1")
        return scale_index(self._gen.random(), n)

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability outside [0, 1]: {p}")
        return bool(self._gen.random() < p)


def scale_index(u: float, n: int) -> int:
    """Turn a uniform on [0, 1) into an index in [0, n)."""
    return min(int(u * n), n - 1)
