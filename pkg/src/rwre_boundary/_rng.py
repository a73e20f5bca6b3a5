"""Counter-based random number streams keyed by (seed, lattice site, stream).

Every variate produced here is a pure function of its integer key, so any
computation can regenerate the randomness attached to a lattice site on the
fly instead of storing it, and replicas keyed by different seeds are
independent by construction.  The generator is a splitmix64-style finalizer
chain applied to the key words; it is not cryptographic, but its output
passes the mean/covariance checks this package needs and is bit-stable for a
fixed build, which is the contract we promise.

Streams (third key word) keep different consumers of the same site apart:

  STREAM_ETA   -- per-site disorder draw (environment realization)
  STREAM_WALK  -- per-(replica, step) jump draws in trajectory simulation
  STREAM_TASK  -- derivation of per-task seeds from a master seed
"""

from __future__ import annotations

import numpy as np

STREAM_ETA = 0
STREAM_WALK = 1
STREAM_TASK = 2

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_INV_2_64 = float(2.0**-64)


def mix64(z: np.ndarray | int) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z + _GAMMA) & _U64
        z = ((z ^ (z >> np.uint64(30))) * _M1) & _U64
        z = ((z ^ (z >> np.uint64(27))) * _M2) & _U64
        return z ^ (z >> np.uint64(31))


def key_for_sites(seed: int, coords: np.ndarray, stream: int) -> np.ndarray:
    """Hash (seed, site coordinates, stream) into one uint64 key per site.

    coords is an integer array of shape (..., d); coordinates may be negative.
    """
    coords = np.asarray(coords, dtype=np.int64)
    h = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    h = np.broadcast_to(h, coords.shape[:-1]).copy()
    with np.errstate(over="ignore"):
        for axis in range(coords.shape[-1]):
            c = coords[..., axis].astype(np.int64).view(np.uint64)
            h = mix64(h ^ mix64(c))
        h = mix64(h ^ mix64(np.uint64(stream)))
    return h


def key_for_seed_batch(seeds: np.ndarray, coords: np.ndarray, stream: int) -> np.ndarray:
    """Vectorized over a batch of seeds: returns keys of shape (n_seeds, n_sites)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    coords = np.asarray(coords, dtype=np.int64)
    with np.errstate(over="ignore"):
        h = np.repeat(mix64(seeds)[:, None], coords.shape[0], axis=1)
        for axis in range(coords.shape[-1]):
            c = coords[:, axis].astype(np.int64).view(np.uint64)
            h = mix64(h ^ mix64(c)[None, :])
        h = mix64(h ^ mix64(np.uint64(stream)))
    return h


def uniforms_from_keys(keys: np.ndarray, draw: int = 0) -> np.ndarray:
    """Uniform(0,1) variate number `draw` of each key's stream."""
    with np.errstate(over="ignore"):
        z = mix64(keys + np.uint64(draw) * _GAMMA)
    # map to (0,1); +0.5 keeps the value strictly inside the open interval
    return (z.astype(np.float64) + 0.5) * _INV_2_64


def site_uniforms(seed: int, coords: np.ndarray, stream: int, draw: int = 0) -> np.ndarray:
    return uniforms_from_keys(key_for_sites(seed, coords, stream), draw)


def categorical_from_uniforms(u: np.ndarray, cum_weights: np.ndarray) -> np.ndarray:
    """Map uniforms to category indices given cumulative weights (last = 1)."""
    return np.searchsorted(cum_weights, u, side="right").clip(0, len(cum_weights) - 1)


def task_seed(master_seed: int, task_index: int) -> int:
    """Documented master-seed split: task k gets mix64(mix64(master)^mix64(k))^stream."""
    k = key_for_sites(master_seed, np.array([[task_index]], dtype=np.int64), STREAM_TASK)
    return int(k[0])
