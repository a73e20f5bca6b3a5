"""Tilted auxiliary walks, collision Green functions, and trajectory simulation.

The second-moment analysis of the partition function reduces to the return
probabilities of the difference Z_j = X_j - Y_j of two independent copies of
the tilted face walk.  Because the two copies are i.i.d., Z has mean zero for
every tilt and its one-step characteristic function chi is real and
nonnegative; in projected dimension d-1 >= 3 the difference walk is
transient, the expected collision count eta = sum_j P(Z_j = 0) is finite, and
Khas'minskii's lemma turns eta into the exponential-moment bound
1 / (1 - C eta).  A Fourier-side bound provides a rigorous cap on the full
collision sum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import gamma as gamma_fn
from math import pi

import numpy as np

from . import _rng
from .environment import DisorderSpec, JumpLaw, omega_at, pair_moment
from .errors import ResourceBudgetError, ValidationError
from .exact_kernel import pair_walk_expectation, tilted_face_weights
from .geometry import Face, compositions, projected_jumps
from .rate_functions import face_tilts

DEFAULT_TERM_BUDGET_MB = 512.0


@dataclass(frozen=True)
class TiltedLaw:
    """Jump law of the projected walk after exponential tilting:
    weight(pi(s_i e_i)) = alpha(s_i e_i) e^{<theta, pi(s_i e_i)>} / psi(theta)."""

    face: Face
    theta: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def d(self) -> int:
        return self.face.d

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def jump_array(self) -> np.ndarray:
        """Projected jumps, one per row, shape (d, d-1)."""
        return projected_jumps(self.face)


def tilted_law(alpha: JumpLaw, face: Face, theta) -> TiltedLaw:
    theta = np.asarray(theta, dtype=float)
    spec_free = alpha.face_weights(face) * np.exp(face_tilts(face, theta))
    w = spec_free / spec_free.sum()
    return TiltedLaw(face=face, theta=tuple(theta), weights=tuple(w))


def tilted_law_from_spec(spec: DisorderSpec, face: Face, theta) -> TiltedLaw:
    theta = np.asarray(theta, dtype=float)
    return TiltedLaw(face=face, theta=tuple(theta),
                     weights=tuple(tilted_face_weights(spec, face, theta)))


@dataclass(frozen=True)
class GreenResult:
    """Partial collision sums of the difference walk.

    terms[j] = P(Z_j = 0), exactly; partial_sum is their sum up to the
    truncation level.  tail_estimate extrapolates the remainder geometrically
    from the last term ratio -- a heuristic, not a bound (the rigorous cap is
    fourier_bound).  divergence_warning marks projected dimension < 3, where
    the difference walk is recurrent and the full sum diverges.
    """

    terms: tuple[float, ...]
    partial_sum: float
    truncated_at: int
    tail_estimate: float
    divergence_warning: bool


def green_function(law: TiltedLaw, terms_limit: int,
                   increment_tol: float = 0.0,
                   budget_mb: float = DEFAULT_TERM_BUDGET_MB) -> GreenResult:
    """Exact return probabilities P(Z_j = 0), j = 0..terms_limit.

    Collision of the two replicas at level j means equal step-count vectors,
    so P(Z_j = 0) = sum over compositions m of j of pmf(m)^2 with pmf the
    multinomial law of the tilted walk -- an exact reformulation of the
    difference-lattice convolution, evaluated level by level.

    Stops early once a term drops below increment_tol (the terms are
    provably non-increasing, so later terms cannot bounce back).
    """
    if terms_limit < 1:
        raise ValidationError("terms_limit must be >= 1")
    d = law.d
    if d - 1 < 3:
        warnings.warn(
            f"projected dimension {d - 1} < 3: difference walk is recurrent, "
            "collision sum diverges", RuntimeWarning, stacklevel=2)
    q = law.weight_array()
    log_q = np.log(q)
    fact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, terms_limit + 2)))])
    terms = [1.0]
    for j in range(1, terms_limit + 1):
        level_mb = _level_count(j, d) * (d + 2) * 8 / 1e6
        if level_mb > budget_mb:
            raise ResourceBudgetError(
                f"green level {j} needs ~{level_mb:.0f} MB, budget {budget_mb:.0f} MB")
        m = compositions(j, d)
        log_pmf = fact[j] - fact[m].sum(axis=1) + m @ log_q
        terms.append(float(np.exp(2.0 * log_pmf).sum()))
        if increment_tol and terms[-1] < increment_tol:
            break
    terms_arr = np.array(terms)
    ratio = terms_arr[-1] / terms_arr[-2] if len(terms_arr) > 1 else 0.0
    tail = float(terms_arr[-1] * ratio / (1.0 - ratio)) if 0 < ratio < 1 else float("inf")
    return GreenResult(
        terms=tuple(terms_arr),
        partial_sum=float(terms_arr.sum()),
        truncated_at=len(terms_arr) - 1,
        tail_estimate=tail,
        divergence_warning=d - 1 < 3,
    )


def _level_count(j: int, d: int) -> int:
    from math import comb

    return comb(j + d - 1, d - 1)


def green_term_lower_bound(law: TiltedLaw, j: int) -> float:
    """Rigorous lower bound on P(Z_j = 0), no enumeration.

    Cauchy-Schwarz on a Chebyshev box S around the multinomial mean:
    P(Z_j = 0) >= P(S)^2 / |S| with P(S) >= 1 - (d-1)/t^2.  Used to certify
    that terms cannot be below a threshold at a given level.
    """
    if j == 0:
        return 1.0
    q = law.weight_array()
    d = law.d
    sigma = np.sqrt(j * q[:-1] * (1.0 - q[:-1]))
    best = 0.0
    for t in (1.5, 2.0, 2.5, 3.0, 4.0):
        mass = 1.0 - (d - 1) / t**2
        if mass <= 0:
            continue
        box = np.prod(2.0 * t * sigma + 1.0)
        best = max(best, mass**2 / box)
    return float(best)


def collision_potential(spec: DisorderSpec, e: int, e2: int) -> float:
    """V = log( E[omega(0,e) omega(0,e')] / (alpha(e) alpha(e')) );
    bounded by log(1 + dis) <= dis for the parametrized family."""
    a = spec.alpha.array()
    return float(np.log(pair_moment(spec, e, e2) / (a[e] * a[e2])))


def max_collision_potential(spec: DisorderSpec, face: Face) -> float:
    from .environment import face_direction_indices

    idx = face_direction_indices(face)
    return max(collision_potential(spec, int(e), int(e2)) for e in idx for e2 in idx)


def khasminskii_bound(c: float, eta_green: float) -> float:
    """Exponential-moment bound 1 / (1 - C eta); only applicable when
    C eta < 1 (otherwise the L^2 argument gives nothing at this disorder)."""
    if c < 0 or eta_green < 0:
        raise ValidationError("C and eta must be nonnegative")
    if c * eta_green >= 1.0:
        raise ValidationError(
            f"bound inapplicable: C*eta = {c * eta_green:.6g} >= 1")
    return 1.0 / (1.0 - c * eta_green)


def occupation_exponential(law: TiltedLaw, v: float, n: int) -> float:
    """Exact E[exp(v * #{j <= n-1 : Z_j = 0})] by the two-replica DP."""
    d = law.d
    return pair_walk_expectation(law.weight_array(), np.full((d, d), np.exp(v)), n)


def difference_step_covariance(law: TiltedLaw) -> np.ndarray:
    """Covariance of Z_1 = one tilted jump minus an independent copy."""
    jumps = law.jump_array()
    q = law.weight_array()
    mean = q @ jumps
    centered = jumps - mean
    return 2.0 * (centered.T * q) @ centered


def chi(law: TiltedLaw, xi: np.ndarray) -> np.ndarray:
    """Characteristic function of Z_1: |sum_i q_i e^{i <xi, pi_i>}|^2,
    real and nonnegative for every xi."""
    xi = np.asarray(xi, dtype=float)
    phases = xi @ law.jump_array().T  # (..., d)
    q = law.weight_array()
    re = np.cos(phases) @ q
    im = np.sin(phases) @ q
    return re**2 + im**2


def quadratic_minorant_coefficient(law: TiltedLaw) -> tuple[float, float]:
    """(c0, radius) with 1 - chi(xi) >= c0 |xi|^2 for |xi| <= radius.

    From 1 - cos t >= (2/pi^2) t^2 on |t| <= pi: c0 = (2/pi^2) * lambda_min of
    the covariance of Z_1, valid while |<xi, Z_1>| <= pi for every support
    point of Z_1.
    """
    jumps = law.jump_array()
    diffs = jumps[:, None, :] - jumps[None, :, :]
    max_norm = float(np.sqrt((diffs**2).sum(axis=-1)).max())
    lam_min = float(np.linalg.eigvalsh(difference_step_covariance(law)).min())
    return (2.0 / pi**2) * lam_min, pi / max_norm


def fourier_bound(law: TiltedLaw, r: float, grid: int = 24,
                  c0: float | None = None, refine_levels: int = 12) -> float:
    """Upper bound on the full collision sum sum_j P(Z_j = 0):

        m^{m/2} r^{-m} integral_{B_r} d xi / (1 - chi(xi)),   m = d - 1,

    the constant m^{m/2} coming from the triangular-kernel test function
    (its Fourier transform is nonnegative, equals 1 at the origin, and is
    supported in the box of side 2/r contained in B_{sqrt(m)/r}).

    The ball integral uses midpoint rules on dyadically refined radial
    shells; an inner ball around the chi = 1 singularity is bounded
    analytically with the quadratic minorant 1 - chi >= c0 |xi|^2.
    """
    m = law.d - 1
    if m < 3:
        raise ValidationError("collision sum diverges in projected dimension < 3")
    if r <= 0:
        raise ValidationError("r must be positive")
    c0_auto, c0_radius = quadratic_minorant_coefficient(law)
    if c0 is None:
        c0 = c0_auto
    if c0 <= 0:
        raise ValidationError("quadratic minorant coefficient must be positive")

    # dyadic shells r_k = r 2^{-k}; stop once the inner radius is safely
    # inside the minorant's validity region
    integral = 0.0
    outer = r
    for _ in range(refine_levels):
        inner = outer / 2.0
        integral += _shell_midpoint_integral(law, inner, outer, grid, m)
        outer = inner
        if outer <= 0.5 * c0_radius:
            break
    a = outer
    surface = 2.0 * pi ** (m / 2.0) / gamma_fn(m / 2.0)
    integral += surface * a ** (m - 2) / ((m - 2) * c0)
    return float(m ** (m / 2.0) * r ** (-m) * integral)


def _shell_midpoint_integral(law: TiltedLaw, inner: float, outer: float,
                             grid: int, m: int) -> float:
    h = 2.0 * outer / grid
    axes = [(-outer + h * (np.arange(grid) + 0.5)) for _ in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    radius = np.sqrt((pts**2).sum(axis=1))
    keep = (radius > inner) & (radius <= outer)
    vals = 1.0 - chi(law, pts[keep])
    vals = np.maximum(vals, 1e-300)
    return float(np.sum(h**m / vals))


# ---------------------------------------------------------------------------
# trajectory simulation


@dataclass(frozen=True)
class WalkResult:
    """Simulated quenched trajectories.

    s_final: sum of projected jumps, shape (replicas, d-1); valid as the
    face-projected walk exactly on the rows with stayed_on_face True.
    off_face_steps counts jumps outside the face's allowed set.
    """

    stayed_on_face: np.ndarray  # (replicas,) bool
    s_final: np.ndarray  # (replicas, d-1)
    off_face_steps: np.ndarray  # (replicas,) int
    paths: np.ndarray | None  # (replicas, n+1, d) when recorded


def simulate_walk(spec: DisorderSpec, seed: int, face: Face, n: int,
                  walk_seed: int = 0, replicas: int = 1,
                  record_paths: bool = False) -> WalkResult:
    """Run `replicas` independent walks of length n in the environment drawn
    from (spec, seed), using counter-based jump randomness keyed by
    (walk_seed, replica, step)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    d = spec.d
    proj = projected_jumps(face)  # (d, d-1)
    sgn = face.sign_array()
    sites = np.zeros((replicas, d), dtype=np.int64)
    s_final = np.zeros((replicas, d - 1))
    off_face = np.zeros(replicas, dtype=np.int64)
    paths = np.zeros((replicas, n + 1, d), dtype=np.int64) if record_paths else None
    rep_ids = np.arange(replicas, dtype=np.int64)
    for step in range(n):
        omega = omega_at(spec, seed, sites)  # (replicas, 2d)
        key_coords = np.stack([rep_ids, np.full(replicas, step, dtype=np.int64)], axis=1)
        u = _rng.site_uniforms(walk_seed, key_coords, _rng.STREAM_WALK)
        cum = np.cumsum(omega, axis=1)
        choice = (cum < u[:, None]).sum(axis=1).clip(0, 2 * d - 1)
        axis = choice % d
        sign = np.where(choice < d, 1, -1)
        on_face = sign == sgn[axis]
        off_face += ~on_face
        # pi extends affinely off the face: opposite jumps map to minus the
        # projected jump (their hyperplane drift is tracked by off_face_steps)
        s_final += np.where(on_face[:, None], proj[axis], -proj[axis])
        sites[rep_ids, axis] += sign
        if record_paths:
            paths[:, step + 1] = sites
    return WalkResult(stayed_on_face=off_face == 0, s_final=s_final,
                      off_face_steps=off_face, paths=paths)
