"""Seedable, splittable random streams used everywhere in this package.

All randomness (code construction, data bits, channel noise, weight init,
shuffling) flows through one documented generator so that every experiment
is reproducible from a single integer seed, independently of library
version or platform:

* Core generator: SplitMix64. Output ``i`` (1-based) for seed ``s`` is
  ``mix64((s + i * 0x9E3779B97F4A7C15) mod 2**64)`` where ``mix64`` is the
  Stafford variant-13 finalizer. Being counter-based, the stream can be
  produced in vectorized blocks.
* Uniforms in [0, 1) take the top 53 bits: ``(w >> 11) * 2**-53``.
* Gaussians use the Box-Muller transform. A request for ``n`` values
  consumes ``2 * ceil(n / 2)`` words: the first half becomes radii via
  ``u1 = ((w >> 11) + 1) * 2**-53`` (in (0, 1]), the second half becomes
  angles, and the outputs are ``r*cos``, ``r*sin`` interleaved.
* Random bits are the MSB-first bit expansion of consecutive words.
* Permutations sort ``n`` fresh words with a stable argsort.
* Child streams: ``derive(label)`` seeds a new generator with
  ``mix64(seed XOR fnv1a64(label))``, a pure function of the parent seed
  and the label, so derivation order never matters.

Derivation labels used by the package are plain strings/ints (e.g.
``"dataset"``, ``("val-noise", epoch)``); the per-sweep-point seed rule
lives in :mod:`linkforge.harness.sweep`.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """Stafford variant-13 finalizer of SplitMix64 (scalar, exact)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def fnv1a64(data) -> int:
    """FNV-1a 64-bit hash of a str, bytes, int, or tuple of those.

    Ints hash as their 8-byte little-endian representation (mod 2**64);
    tuples hash the concatenation of their members' 8-byte hashes.
    """
    if isinstance(data, tuple):
        payload = b"".join((fnv1a64(item)).to_bytes(8, "little") for item in data)
    elif isinstance(data, str):
        payload = data.encode("utf-8")
    elif isinstance(data, (int, np.integer)):
        payload = (int(data) & MASK64).to_bytes(8, "little")
    elif isinstance(data, bytes):
        payload = data
    else:
        raise TypeError(f"unhashable rng label type: {type(data)!r}")
    h = _FNV_OFFSET
    for byte in payload:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def _mix64_block(state: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64, which is exactly what we want
    with np.errstate(over="ignore"):
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class Rng:
    """One SplitMix64 stream plus its consumption counter."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._count = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed:#018x}, consumed={self._count})"

    def derive(self, label) -> "Rng":
        """Child stream keyed by ``label``; independent of stream position."""
        return Rng(mix64(self.seed ^ fnv1a64(label)))

    def words(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError("n must be >= 0")
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            state = np.uint64(self.seed) + idx * np.uint64(GOLDEN_GAMMA)
        return _mix64_block(state)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float64 uniforms in [0, 1)."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, shape, sigma: float = 1.0) -> np.ndarray:
        """Standard-normal float64 draws scaled by ``sigma``."""
        shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        pairs = (n + 1) // 2
        w = self.words(2 * pairs)
        u1 = ((w[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (w[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        out = z[:n] if sigma == 1.0 else sigma * z[:n]
        return out.reshape(shape)

    def bits(self, n: int) -> np.ndarray:
        """``n`` uniform bits as a uint8 array of 0/1."""
        if n == 0:
            return np.zeros(0, dtype=np.uint8)
        nwords = (n + 63) // 64
        raw = self.words(nwords).astype(">u8").view(np.uint8)
        return np.unpackbits(raw)[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n) (argsort of fresh words)."""
        return np.argsort(self.words(n), kind="stable")
