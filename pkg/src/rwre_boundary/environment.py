"""Environment laws and realizations.

The mean kernel alpha is a probability vector over the 2d lattice directions;
the disorder family perturbs it multiplicatively,

    omega_eps(x, e) = alpha(e) * (1 + eps * eta(x, e)),

where eta(x) is drawn i.i.d. across sites from a finite-support law whose
atoms r satisfy sum_e alpha(e) r(e) = 0 and sup_e |r(e)| = 1 (so each
omega_eps(x) stays on the simplex with ellipticity (1-eps) * min alpha), and
whose mixture mean is zero.  Finite support keeps pair moments and tiny-n
expectations exact.

Direction indexing is fixed once and for all: index i in [0, d) is +e_{i+1},
index d+i is -e_{i+1}.

Site randomness is counter-based (see _rng): the atom drawn at a site is a
pure function of (seed, coordinates), independent of eps.  Windows generated
at different eps but one seed are therefore coupled realizations, which the
phase scans exploit as common random numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import ResourceBudgetError, ValidationError
from .geometry import Face

_SIMPLEX_TOL = 1e-12


def direction_index(face: Face, axis: int) -> int:
    """Index of the face jump s_axis e_axis in the 2d direction layout."""
    return axis if face.signs[axis] == 1 else face.d + axis


def face_direction_indices(face: Face) -> np.ndarray:
    return np.array([direction_index(face, i) for i in range(face.d)], dtype=np.int64)


@dataclass(frozen=True)
class JumpLaw:
    """Mean jump kernel alpha over the 2d unit directions."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=float)
        if len(arr) % 2 or len(arr) < 4:
            raise ValidationError("alpha must have 2d entries with d >= 2")
        if np.any(arr <= 0):
            raise ValidationError("alpha entries must be strictly positive (uniform ellipticity)")
        if abs(arr.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValidationError(f"alpha must sum to 1, got {arr.sum()!r}")

    @property
    def d(self) -> int:
        return len(self.alpha) // 2

    @classmethod
    def uniform(cls, d: int) -> "JumpLaw":
        return cls(tuple([1.0 / (2 * d)] * (2 * d)))

    def array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def face_weights(self, face: Face) -> np.ndarray:
        """alpha(s_i e_i), i = 1..d."""
        return self.array()[face_direction_indices(face)]

    def min_weight(self) -> float:
        return float(min(self.alpha))


@dataclass(frozen=True)
class EtaLaw:
    """Finite-support law of the per-site fluctuation vector eta(x)."""

    support: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if sup.ndim != 2 or len(w) != len(sup):
            raise ValidationError("support must be (n_atoms, 2d) with one weight per atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValidationError("weights must be a probability vector")

    @property
    def n_atoms(self) -> int:
        return len(self.support)

    def support_array(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def mean(self) -> np.ndarray:
        return self.weight_array() @ self.support_array()

    def covariance(self, e: int, e2: int) -> float:
        """E[eta(x,e) eta(x,e')] over the atoms (mean-zero law: this is the covariance)."""
        sup = self.support_array()
        return float(np.sum(self.weight_array() * sup[:, e] * sup[:, e2]))

    @classmethod
    def two_point(cls, alpha: JumpLaw, pattern: np.ndarray | None = None) -> "EtaLaw":
        """Symmetric two-point law {r, -r} with equal weights.

        The default pattern puts +1 on the positive axes and a compensating
        constant on the negative axes so that sum_e alpha(e) r(e) = 0; the
        result is rescaled to sup|r| = 1.
        """
        a = alpha.array()
        d = alpha.d
        if pattern is None:
            pattern = np.concatenate([np.ones(d), np.full(d, -a[:d].sum() / a[d:].sum())])
        r = np.asarray(pattern, dtype=float)
        if abs(float(a @ r)) > 1e-9:
            raise ValidationError("two-point pattern must be alpha-orthogonal (sum alpha*r = 0)")
        r = r / np.max(np.abs(r))
        return cls((tuple(r), tuple(-r)), (0.5, 0.5))

    @classmethod
    def uniform_discrete(cls, vectors: np.ndarray) -> "EtaLaw":
        vecs = np.asarray(vectors, dtype=float)
        n = len(vecs)
        return cls(tuple(tuple(v) for v in vecs), tuple([1.0 / n] * n))


@dataclass(frozen=True)
class DisorderSpec:
    """A parametrized environment law (alpha, eta, eps)."""

    alpha: JumpLaw
    eta: EtaLaw
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise ValidationError("eps must lie in [0, 1)")
        if self.eta.support_array().shape[1] != 2 * self.alpha.d:
            raise ValidationError("eta support dimension must be 2d")
        table = self.alpha.array() * (1.0 + self.eps * self.eta.support_array())
        if np.any(table <= 0.0):
            raise ValidationError("omega_eps leaves the simplex: some atom has eps*r <= -1")
        if np.max(np.abs(table.sum(axis=1) - 1.0)) > 1e-9:
            raise ValidationError(
                "omega_eps rows must sum to 1: every atom needs sum_e alpha(e) r(e) = 0")

    @property
    def d(self) -> int:
        return self.alpha.d

    @property
    def ellipticity(self) -> float:
        """kappa = (1 - eps) * min alpha(e)."""
        return (1.0 - self.eps) * self.alpha.min_weight()

    def omega_table(self) -> np.ndarray:
        """Per-atom environment vectors, shape (n_atoms, 2d)."""
        return self.alpha.array() * (1.0 + self.eps * self.eta.support_array())

    def to_json(self) -> str:
        doc = {
            "alpha": list(self.alpha.alpha),
            "eta": {
                "support": [list(v) for v in self.eta.support],
                "weights": list(self.eta.weights),
            },
            "eps": self.eps,
            "kappa": self.ellipticity,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DisorderSpec":
        doc = json.loads(text)
        return cls(
            alpha=JumpLaw(tuple(doc["alpha"])),
            eta=EtaLaw(
                tuple(tuple(v) for v in doc["eta"]["support"]),
                tuple(doc["eta"]["weights"]),
            ),
            eps=float(doc["eps"]),
        )


def eta_atoms(spec: DisorderSpec, seed: int, coords: np.ndarray) -> np.ndarray:
    """Atom index drawn at each site, shape coords.shape[:-1].

    Pure function of (seed, coordinates); eps plays no role, so realizations
    at different eps with one seed are coupled.
    """
    u = _rng.site_uniforms(seed, coords, _rng.STREAM_ETA)
    cum = np.cumsum(spec.eta.weight_array())
    return _rng.categorical_from_uniforms(u, cum)


def eta_atoms_batch(spec: DisorderSpec, seeds: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Atom indices for a batch of seeds at once, shape (n_seeds, n_sites)."""
    keys = _rng.key_for_seed_batch(seeds, coords, _rng.STREAM_ETA)
    cum = np.cumsum(spec.eta.weight_array())
    return _rng.categorical_from_uniforms(_rng.uniforms_from_keys(keys), cum)


def omega_at(spec: DisorderSpec, seed: int, coords: np.ndarray) -> np.ndarray:
    """Environment vectors omega(x, .) at the given sites, shape (..., 2d)."""
    atoms = eta_atoms(spec, seed, coords)
    return spec.omega_table()[atoms]


@dataclass(frozen=True)
class EnvironmentWindow:
    """A realized environment on a finite set of sites."""

    spec: DisorderSpec
    seed: int
    sites: np.ndarray  # (k, d) int lattice coordinates
    omega: np.ndarray  # (k, 2d) probability vectors

    def __len__(self) -> int:
        return len(self.sites)


def sample_window(spec: DisorderSpec, seed: int, sites: np.ndarray,
                  budget_mb: float = 512.0) -> EnvironmentWindow:
    """Realize the environment on `sites` (deterministic in (seed, site))."""
    sites = np.asarray(sites, dtype=np.int64)
    if sites.ndim != 2 or sites.shape[1] != spec.d:
        raise ValidationError("sites must be a (k, d) integer array")
    need_mb = sites.shape[0] * 2 * spec.d * 8 / 1e6
    if need_mb > budget_mb:
        raise ResourceBudgetError(
            f"window needs ~{need_mb:.0f} MB, budget is {budget_mb:.0f} MB")
    return EnvironmentWindow(spec=spec, seed=seed, sites=sites,
                             omega=omega_at(spec, seed, sites))


def disorder(window: EnvironmentWindow) -> float:
    """Empirical disorder: sup over stored sites/directions of |omega/alpha - 1|.

    The law-level value is eps (an essential supremum); a finite window can
    only report at most eps.
    """
    if len(window) == 0:
        raise ValidationError("window is empty")
    ratio = window.omega / window.spec.alpha.array()
    return float(np.max(np.abs(ratio - 1.0)))


def imbalance(window: EnvironmentWindow, face: Face) -> float:
    """Empirical face imbalance: sup over sites of |zeta_s(x) - 1|,
    zeta_s(x) = sum_i omega(x, s_i e_i) / sum_i alpha(s_i e_i)."""
    if len(window) == 0:
        raise ValidationError("window is empty")
    idx = face_direction_indices(face)
    zeta = window.omega[:, idx].sum(axis=1) / window.spec.alpha.face_weights(face).sum()
    return float(np.max(np.abs(zeta - 1.0)))


def imbalance_exact(spec: DisorderSpec, face: Face) -> float:
    """Law-level imbalance from the finite support (no sampling)."""
    idx = face_direction_indices(face)
    a = spec.alpha.face_weights(face)
    vals = spec.eps * np.abs(spec.eta.support_array()[:, idx] @ a) / a.sum()
    return float(vals.max())


def pair_moment(spec: DisorderSpec, e: int, e2: int) -> float:
    """E[omega(0,e) omega(0,e')] = alpha(e) alpha(e') (1 + eps^2 C_eta(e,e')), exact."""
    a = spec.alpha.array()
    return float(a[e] * a[e2] * (1.0 + spec.eps**2 * spec.eta.covariance(e, e2)))


@dataclass(frozen=True)
class EtaLawReport:
    """Outcome of the environment-law checks, one flag per condition."""

    support_not_singleton: bool
    mean_zero: bool
    envelope_member: bool  # every atom: sum alpha*r = 0, sup|r| = 1, |r| <= 1
    messages: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.support_not_singleton and self.mean_zero and self.envelope_member


def validate_eta_law(eta: EtaLaw, alpha: JumpLaw, tol: float = 1e-9) -> EtaLawReport:
    """Check the disorder-law requirements: non-degenerate support, zero mean,
    and atom-wise envelope membership.  (Sites are i.i.d. by construction of
    the counter-based sampler, so independence needs no runtime check.)"""
    msgs = []
    sup = eta.support_array()
    distinct = np.unique(sup[eta.weight_array() > 0], axis=0)
    not_singleton = len(distinct) >= 2
    if not not_singleton:
        msgs.append("support (with positive weight) is a single atom")
    mean_zero = bool(np.max(np.abs(eta.mean())) <= tol)
    if not mean_zero:
        msgs.append(f"mixture mean is not zero (max |mean| = {np.max(np.abs(eta.mean())):.3g})")
    a = alpha.array()
    member = True
    for i, r in enumerate(sup):
        if np.max(np.abs(r)) > 1.0 + tol:
            member = False
            msgs.append(f"atom {i} leaves [-1,1]")
        if abs(np.max(np.abs(r)) - 1.0) > tol:
            member = False
            msgs.append(f"atom {i} has sup|r| = {np.max(np.abs(r)):.6g}, expected 1")
        if abs(float(a @ r)) > tol:
            member = False
            msgs.append(f"atom {i} violates sum alpha*r = 0 (got {float(a @ r):.3g})")
    return EtaLawReport(not_singleton, mean_zero, member, tuple(msgs))


def window_to_csv(window: EnvironmentWindow, path) -> None:
    """Debug export: one row per site, coordinates then the 2d weights."""
    d = window.spec.d
    header = [f"x{i + 1}" for i in range(d)]
    header += [f"w_plus_e{i + 1}" for i in range(d)] + [f"w_minus_e{i + 1}" for i in range(d)]
    data = np.hstack([window.sites.astype(float), window.omega])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            cells = [str(int(v)) for v in row[:d]] + [repr(float(v)) for v in row[d:]]
            fh.write(",".join(cells) + "\n")
