"""Seedable counter-based random number generation.

The generator produces each 64-bit output as a pure function of
``(key, draw index)`` via the splitmix64 finalizer, so streams are
reproducible across platforms and independent of how draws are batched.
Poisson variates use inversion by sequential search for means below 30
and exact mean-splitting into chunks of at most 30 above, so the counts
are exactly Poisson distributed for any finite mean.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SPAWN_SALT = np.uint64(0xD6E8FEB86659FD93)
_U53_SCALE = 2.0 ** -53

# Splitting threshold for the exact Poisson sampler.
_POISSON_CHUNK = 30.0
# Hard cap on the sequential-search loop: P[N > mean + 30*sqrt(mean) + 60]
# is far below 1e-100 for mean <= 30, so the cap never binds in practice
# but guards against a float64 cdf that saturates just below a uniform.
_SEARCH_CAP = 260


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays (modular arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class Rng:
    """Counter-based pseudo-random generator with a 64-bit key.

    Two instances constructed with the same seed produce identical
    streams. A single instance is not thread-safe; concurrent workers
    should each own a generator obtained via :meth:`spawn`.
    """

    def __init__(self, seed: int):
        self._key = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _GOLDEN)
        self._counter = np.uint64(0)

    @property
    def counter(self) -> int:
        """Number of raw 64-bit words consumed so far."""
        return int(self._counter)

    def spawn(self, index: int) -> "Rng":
        """Derive an independent child generator from (key, index)."""
        child = Rng.__new__(Rng)
        with np.errstate(over="ignore"):
            child._key = _mix64(
                (self._key ^ _SPAWN_SALT) + _mix64(np.uint64(index) * _GOLDEN + np.uint64(1))
            )
        child._counter = np.uint64(0)
        return child

    def _raw(self, count: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            idx = self._counter + np.arange(1, count + 1, dtype=np.uint64)
            self._counter = self._counter + np.uint64(count)
            return _mix64(self._key + idx * _GOLDEN)

    def uniforms(self, count: int) -> np.ndarray:
        """``count`` uniforms on [0, 1), 53-bit resolution."""
        return (self._raw(count) >> np.uint64(11)).astype(np.float64) * _U53_SCALE

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller, two raw words per variate."""
        raw = self._raw(2 * count).reshape(2, count)
        # shift into (0, 1] so the log argument never vanishes
        u1 = ((raw[0] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53_SCALE
        u2 = (raw[1] >> np.uint64(11)).astype(np.float64) * _U53_SCALE
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def normal_grid(self, n: int) -> np.ndarray:
        return self.normals(n * n).reshape(n, n)

    def subset(self, pool_size: int, take: int) -> np.ndarray:
        """Uniform random subset of size ``take`` from ``range(pool_size)``.

        Sampling is without replacement; the result is sorted ascending.
        """
        if not 0 <= take <= pool_size:
            raise ValueError(f"cannot take {take} items from a pool of {pool_size}")
        keys = self.uniforms(pool_size)
        picked = np.argpartition(keys, take - 1)[:take] if take else np.empty(0, dtype=int)
        return np.sort(picked)

    def poissons(self, means: np.ndarray) -> np.ndarray:
        """Exact Poisson samples, one per entry of ``means``.

        Consumes a single counter tick of the parent stream; per-entry
        uniforms come from a derived key so the draw count of one entry
        never shifts another entry's stream.
        """
        means = np.asarray(means, dtype=np.float64)
        if means.size == 0:
            return np.zeros(means.shape, dtype=np.int64)
        if not np.all(np.isfinite(means)) or np.any(means < 0.0):
            raise ValueError("Poisson means must be finite and nonnegative")

        shape = means.shape
        flat = means.ravel()
        with np.errstate(over="ignore"):
            batch_key = _mix64(self._key + (self._counter + np.uint64(1)) * _GOLDEN)
            self._counter = self._counter + np.uint64(1)
            lane_keys = _mix64(batch_key + np.arange(1, flat.size + 1, dtype=np.uint64) * _GOLDEN)

        n_full = np.floor(flat / _POISSON_CHUNK).astype(np.int64)
        remainder = flat - _POISSON_CHUNK * n_full
        counts = np.zeros(flat.size, dtype=np.int64)
        max_chunk = int(n_full.max()) + 1
        for chunk in range(max_chunk):
            active = n_full >= chunk
            lam = np.where(n_full > chunk, _POISSON_CHUNK, remainder)[active]
            with np.errstate(over="ignore"):
                u_raw = _mix64(lane_keys[active] + np.uint64(chunk + 1) * _GOLDEN)
            u = (u_raw >> np.uint64(11)).astype(np.float64) * _U53_SCALE
            counts[active] += _poisson_search(lam, u)
        return counts.reshape(shape)


def _poisson_search(lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inversion by sequential search: smallest k with cdf(k) >= u."""
    p = np.exp(-lam)
    cdf = p.copy()
    k = np.zeros(lam.shape, dtype=np.int64)
    active = u > cdf
    steps = 0
    while active.any() and steps < _SEARCH_CAP:
        steps += 1
        k[active] += 1
        p[active] *= lam[active] / k[active]
        cdf[active] += p[active]
        active &= u > cdf
    return k


def sample_poisson(rng: Rng, mean: float) -> int:
    """One exact Poisson variate with the given nonnegative mean."""
    if not np.isfinite(mean) or mean < 0.0:
        raise ValueError(f"Poisson mean must be finite and nonnegative, got {mean}")
    return int(rng.poissons(np.array([mean]))[0])
