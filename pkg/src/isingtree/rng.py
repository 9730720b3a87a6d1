"""Counter-based random streams keyed by (seed, purpose, replica, vertex, step).

Draws are pure functions of their key: adding vertices, replicas, or steps
never perturbs any other stream, which is exactly what shared-noise
coupling across nested and re-rooted trees requires.  The generator is a
chain of murmur3 64-bit finalizer rounds folding the key words together,
applied vectorized on uint64 arrays; uniforms come from the top 53 bits and
normals from a Box-Muller pair of hashes.
"""

from __future__ import annotations

import hashlib

import numpy as np

_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _fmix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(33))
    x = x * _M1
    x = x ^ (x >> np.uint64(33))
    x = x * _M2
    return x ^ (x >> np.uint64(33))


def _hash_words(*words) -> np.ndarray:
    """Fold uint64 words (arrays broadcast together) into one hash."""
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        h = _fmix64(np.uint64(words[0]) + _GOLDEN)
        for w in words[1:]:
            h = _fmix64(h ^ (np.uint64(w) + _GOLDEN))
    return h


def tag_id(tag: str) -> int:
    """Stable 64-bit id of a purpose tag."""
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def _to_uniform(h: np.ndarray) -> np.ndarray:
    """Map a hash to a double in the open interval (0, 1)."""
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


class CounterRng:
    """Deterministic draws addressed by (replica, vertex-id, counter).

    All index arguments broadcast; repeated calls with equal keys are
    bit-identical.
    """

    def __init__(self, seed: int, tag: str):
        self.seed = int(seed)
        self.tag = tag
        self._base = np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)
        self._tag = np.uint64(tag_id(tag))

    def _hash(self, replica, vid, counter, salt: int) -> np.ndarray:
        return _hash_words(self._base, self._tag, replica, vid, counter,
                           np.uint64(salt))

    def uniform(self, replica, vid, counter) -> np.ndarray:
        return _to_uniform(self._hash(replica, vid, counter, 0))

    def normal(self, replica, vid, counter) -> np.ndarray:
        u1 = _to_uniform(self._hash(replica, vid, counter, 1))
        u2 = _to_uniform(self._hash(replica, vid, counter, 2))
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def exponential(self, replica, vid, counter) -> np.ndarray:
        return -np.log(self.uniform(replica, vid, counter))


class RngStream:
    """Hierarchically keyed randomness: a (seed, tag) pair from which
    purpose-specific counter streams are derived."""

    def __init__(self, seed: int, tag: str = "root"):
        self.seed = int(seed)
        self.tag = tag

    def substream(self, purpose: str) -> CounterRng:
        return CounterRng(self.seed, f"{self.tag}/{purpose}")

    def child(self, purpose: str) -> "RngStream":
        return RngStream(self.seed, f"{self.tag}/{purpose}")


class NoiseSource:
    """Brownian increments shared across every tree that contains a vertex.

    The increment for (vertex label, step) depends only on the base seed,
    the replica index, the label's stable id, and the step index, never on
    which topology requested it; increments are N(0, dt) and independent
    across keys.
    """

    def __init__(self, seed: int, tag: str = "brownian"):
        self.seed = int(seed)
        self._rng = CounterRng(seed, tag)

    def increments(self, vertex_ids: np.ndarray, step: int, dt: float,
                   n_replicas: int = 1) -> np.ndarray:
        """N(0, dt) increments of shape (n_replicas, len(vertex_ids))."""
        replicas = np.arange(n_replicas, dtype=np.uint64)[:, None]
        z = self._rng.normal(replicas, vertex_ids[None, :], np.uint64(step))
        return z * np.sqrt(dt)
