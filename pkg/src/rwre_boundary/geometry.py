"""Lattice and boundary combinatorics for face-restricted walks.

A face of the l1 unit sphere is selected by a sign vector s in {-1,+1}^d.
Points of the face decompose as x = sum_i delta_i s_i e_i with nonnegative
barycentric weights delta summing to one; the affine projection `project`
identifies the face's supporting hyperplane with R^{d-1}, which is what makes
the face-restricted walk an effectively (d-1)-dimensional object.

Everything here is pure and deterministic; dimension d is a runtime
parameter with 2 <= d <= 8 (low d is cheap to brute-force, which the test
suite exploits).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ValidationError

MAX_DIMENSION = 8
_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Face:
    """One face of the l1 unit sphere, indexed by coordinate signs."""

    signs: tuple[int, ...]

    def __post_init__(self):
        d = len(self.signs)
        if not 2 <= d <= MAX_DIMENSION:
            raise ValidationError(f"dimension {d} outside supported range [2, {MAX_DIMENSION}]")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValidationError("face signs must be +1 or -1")

    @property
    def d(self) -> int:
        return len(self.signs)

    @classmethod
    def positive(cls, d: int) -> "Face":
        return cls(tuple([1] * d))

    def sign_array(self) -> np.ndarray:
        return np.array(self.signs, dtype=np.int64)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of a face: weights delta_i = |x_i| with sum(delta) = 1."""

    face: Face
    delta: tuple[float, ...]

    def __post_init__(self):
        if len(self.delta) != self.face.d:
            raise ValidationError("delta length must match face dimension")
        arr = np.asarray(self.delta, dtype=float)
        if np.any(arr < -_WEIGHT_TOL):
            raise ValidationError("delta entries must be nonnegative")
        if abs(arr.sum() - 1.0) > _WEIGHT_TOL:
            raise ValidationError(f"delta must sum to 1, got {arr.sum()!r}")

    @property
    def on_facet(self) -> bool:
        """True iff the point lies on a lower-dimensional facet (some delta_i = 0)."""
        return bool(np.any(np.asarray(self.delta) == 0.0))

    def delta_array(self) -> np.ndarray:
        return np.asarray(self.delta, dtype=float)

    def coords(self) -> np.ndarray:
        """Cartesian coordinates x = sum_i delta_i s_i e_i."""
        return self.delta_array() * self.face.sign_array()

    def projected(self) -> np.ndarray:
        """Image under the face projection: (delta_i - delta_d) for i < d."""
        delta = self.delta_array()
        return delta[:-1] - delta[-1]


def face_jump_set(face: Face) -> np.ndarray:
    """The d allowed jumps {s_i e_i}, one per row."""
    return np.diag(face.sign_array())


def project(face: Face, jump) -> np.ndarray:
    """Affine projection of an allowed jump onto R^{d-1}.

    s_i e_i maps to e_i for i < d and to -(e_1 + ... + e_{d-1}) for i = d.
    `jump` is either the axis index i (0-based) or the lattice vector s_i e_i.
    """
    d = face.d
    if np.ndim(jump) == 0:
        axis = int(jump)
        if not 0 <= axis < d:
            raise ValidationError(f"axis {axis} outside 0..{d - 1}")
    else:
        vec = np.asarray(jump, dtype=np.int64)
        nz = np.nonzero(vec)[0]
        if len(nz) != 1 or vec[nz[0]] != face.signs[nz[0]]:
            raise ValidationError(f"{vec.tolist()} is not an allowed jump of this face")
        axis = int(nz[0])
    out = np.zeros(d - 1)
    if axis < d - 1:
        out[axis] = 1.0
    else:
        out[:] = -1.0
    return out


def projected_jumps(face: Face) -> np.ndarray:
    """All d projected jumps, stacked as rows of a (d, d-1) array."""
    return np.stack([project(face, i) for i in range(face.d)])


def admissible_counts(x: BoundaryPoint, n: int) -> np.ndarray:
    """Integer step counts (n_1..n_d) targeting x at scale n.

    Largest-remainder apportionment of n*delta, ties broken by lowest index.
    Guarantees sum(n_i) = n, n_i = 0 wherever delta_i = 0, and
    max_i |n_i/n - delta_i| < 1/n  (well inside the d/n contract).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    quota = n * x.delta_array()
    counts = np.floor(quota).astype(np.int64)
    remainder = quota - counts
    seats = n - int(counts.sum())
    if seats:
        order = np.argsort(-remainder, kind="stable")
        counts[order[:seats]] += 1
    return counts


def compositions(n: int, d: int) -> np.ndarray:
    """All weak compositions of n into d parts, one per row.

    Rows are sorted lexicographically on the first d-1 parts (the last part
    is determined); this is the canonical within-level site order used by
    the DP sweeps, so it must stay stable.  Built by vectorized prefix
    extension: O(d * output) with no per-row Python work, which matters for
    the collision-sum levels (hundreds of thousands of rows).
    """
    if n < 0:
        raise ValidationError("n must be >= 0")
    if d == 1:
        return np.array([[n]], dtype=np.int64)
    rows = np.zeros((1, 0), dtype=np.int64)
    budget = np.array([n], dtype=np.int64)
    for _ in range(d - 1):
        lengths = budget + 1
        total = int(lengths.sum())
        parent = np.repeat(np.arange(len(rows)), lengths)
        offsets = np.repeat(np.cumsum(lengths) - lengths, lengths)
        new_val = np.arange(total, dtype=np.int64) - offsets
        rows = np.hstack([rows[parent], new_val[:, None]])
        budget = budget[parent] - new_val
    return np.hstack([rows, budget[:, None]])


def boundary_sites(face: Face, n: int) -> np.ndarray:
    """Lattice sites at l1 distance n reachable with the face's jumps.

    Cardinality is C(n+d-1, d-1); ordering follows `compositions`.
    """
    return compositions(n, face.d) * face.sign_array()


def boundary_site_count(d: int, n: int) -> int:
    return comb(n + d - 1, d - 1)


@dataclass
class _LevelIndex:
    """Composition -> row-index lookup for one DP level."""

    counts: np.ndarray
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {tuple(row): i for i, row in enumerate(self.counts.tolist())}


def level_predecessors(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """For each current composition and jump axis, the row in `prev` one step back.

    Entry (k, i) is the index of cur[k] - e_i in prev, or -1 when cur[k, i] = 0.
    """
    lookup = _LevelIndex(prev).index
    k, d = cur.shape
    out = np.full((k, d), -1, dtype=np.int64)
    for row in range(k):
        m = cur[row]
        for i in range(d):
            if m[i] > 0:
                key = tuple(m[axis] - (1 if axis == i else 0) for axis in range(d))
                out[row, i] = lookup[key]
    return out


def box_compositions(level: int, counts: np.ndarray) -> np.ndarray:
    """Compositions of `level` dominated componentwise by `counts`."""
    counts = np.asarray(counts, dtype=np.int64)
    full = compositions(level, len(counts))
    keep = np.all(full <= counts, axis=1)
    return full[keep]
