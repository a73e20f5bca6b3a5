"""Exact log-domain dynamic programming over face-restricted paths.

All path sums run level by level over the face's lattice slabs (the sites at
l1 distance j), keeping two levels in memory and accumulating in the log
domain with log-sum-exp so that nothing underflows at desk scale.  Sweeps
are batched over a leading axis, which serves both Monte Carlo seed batches
and exhaustive enumerations of the per-site disorder assignments; the order
of summation is fixed by the canonical composition order, so results are
bit-stable for a fixed build.

Quantities computed here:

  * annealed point log-probabilities (multinomial closed form),
  * quenched point log-probabilities (per-environment path sums),
  * the normalized tilted partition function log Z_{n,theta},
  * its exact second moment via the two-replica difference walk,
  * the quenched/annealed gap D_n(eps) and its eps-derivative, in exact
    (small n, finite-support enumeration) and Monte Carlo modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log

import numpy as np

from . import _rng
from .environment import (DisorderSpec, JumpLaw, eta_atoms_batch,
                          face_direction_indices, pair_moment)
from .errors import ResourceBudgetError, ValidationError
from .geometry import Face, box_compositions, compositions, level_predecessors
from .rate_functions import face_tilts, log_psi

DEFAULT_ENUM_BUDGET = 1 << 16
DEFAULT_STATE_BUDGET = 20_000_000
_NEG_INF = -np.inf


@dataclass(frozen=True)
class DpResult:
    """One computed path-sum value, as emitted by the CLI."""

    kind: str  # annealed_prob | quenched_prob | partition | second_moment | derivative_pair
    n: int
    log_value: float
    theta: tuple[float, ...] | None = None
    eps: float | None = None
    seed: int | None = None
    stderr: float | None = None
    mode: str | None = None


@dataclass(frozen=True)
class DnEstimate:
    """Estimate of the quenched/annealed gap D_n(eps) with its uncertainty."""

    value: float
    stderr: float
    mode: str  # exact | mc
    n: int
    eps: float
    samples: int


# ---------------------------------------------------------------------------
# level plans


class FacePlan:
    """Precomputed level structure for DP sweeps on one face geometry.

    levels[j] holds the compositions (step counts) reachable at level j,
    preds[j][k, i] the row of levels[j-1] one i-step before levels[j][k]
    (-1 when there is none).  `counts` restricts the sweep to the box of a
    single endpoint; None means full slabs (all endpoints).
    """

    def __init__(self, d: int, n: int, counts: tuple[int, ...] | None):
        self.d, self.n, self.counts = d, n, counts
        if counts is None:
            self.levels = [compositions(j, d) for j in range(n + 1)]
        else:
            box = np.asarray(counts, dtype=np.int64)
            self.levels = [box_compositions(j, box) for j in range(n + 1)]
        self.preds = [None] + [
            level_predecessors(self.levels[j - 1], self.levels[j]) for j in range(1, n + 1)
        ]

    def site_coords(self, j: int, face: Face, origin=None) -> np.ndarray:
        coords = self.levels[j] * face.sign_array()
        if origin is not None:
            coords = coords + np.asarray(origin, dtype=np.int64)
        return coords

    @property
    def state_total(self) -> int:
        return int(sum(len(lv) for lv in self.levels))


_PLAN_CACHE: dict = {}


def _plan(d: int, n: int, counts=None) -> FacePlan:
    key = (d, n, None if counts is None else tuple(int(c) for c in counts))
    if key not in _PLAN_CACHE:
        if len(_PLAN_CACHE) > 256:
            _PLAN_CACHE.clear()
        _PLAN_CACHE[key] = FacePlan(d, n, key[2])
    return _PLAN_CACHE[key]


def _check_counts(face: Face, counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (face.d,) or np.any(counts < 0) or counts.sum() < 1:
        raise ValidationError("counts must be d nonnegative integers summing to n >= 1")
    return counts


# ---------------------------------------------------------------------------
# batched sweeps


def _log_sweep(plan: FacePlan, logw_levels) -> np.ndarray:
    """Forward log-domain sweep; returns the level-n log masses, shape (B, k_n).

    logw_levels[j] has shape (B, k_j, d): log step weight from site k of
    level j in direction i (tilts already folded in).
    """
    batch = logw_levels[0].shape[0] if plan.n > 0 else 1
    state = np.zeros((batch, 1))
    axis_idx = np.arange(plan.d)
    with np.errstate(invalid="ignore"):
        for j in range(1, plan.n + 1):
            pred = plan.preds[j]
            safe = np.where(pred < 0, 0, pred)
            terms = state[:, safe] + logw_levels[j - 1][:, safe, axis_idx]
            terms = np.where(pred[None, :, :] < 0, _NEG_INF, terms)
            state = np.logaddexp.reduce(terms, axis=-1)
    return state


def _value_derivative_sweep(plan: FacePlan, w_levels, dw_levels):
    """Linear-domain sweep carrying (V, dV/deps); returns (logV_n, dV_n/V_n).

    Per-level rescaling keeps V in range; the returned ratio is unaffected.
    """
    batch = w_levels[0].shape[0] if plan.n > 0 else 1
    value = np.ones((batch, 1))
    deriv = np.zeros((batch, 1))
    log_scale = np.zeros(batch)
    axis_idx = np.arange(plan.d)
    for j in range(1, plan.n + 1):
        pred = plan.preds[j]
        safe = np.where(pred < 0, 0, pred)
        valid = pred[None, :, :] >= 0
        w = np.where(valid, w_levels[j - 1][:, safe, axis_idx], 0.0)
        dw = np.where(valid, dw_levels[j - 1][:, safe, axis_idx], 0.0)
        vp = value[:, safe]
        dp = deriv[:, safe]
        value = np.sum(vp * w, axis=-1)
        deriv = np.sum(dp * w + vp * dw, axis=-1)
        scale = value.max(axis=-1, keepdims=True)
        scale = np.where(scale <= 0, 1.0, scale)
        value = value / scale
        deriv = deriv / scale
        log_scale += np.log(scale[:, 0])
    return np.log(value[:, -1]) + log_scale, deriv[:, -1] / value[:, -1]


def _log_omega_face_table(spec: DisorderSpec, face: Face) -> np.ndarray:
    """log omega(., s_i e_i) per eta atom, shape (n_atoms, d)."""
    return np.log(spec.omega_table()[:, face_direction_indices(face)])


def _seed_logw_levels(spec, seeds, face, plan, origin, tilt=None):
    table = _log_omega_face_table(spec, face)
    if tilt is not None:
        table = table + tilt
    out = []
    for j in range(plan.n):
        atoms = eta_atoms_batch(spec, seeds, plan.site_coords(j, face, origin))
        out.append(table[atoms])
    return out


# ---------------------------------------------------------------------------
# point probabilities and the partition function


def annealed_point_log_prob(alpha: JumpLaw, face: Face, counts) -> float:
    """log P_0(X_n = x_n) for the endpoint with the given step counts:
    the multinomial coefficient times prod alpha(s_i e_i)^{n_i}, via log-gamma."""
    counts = _check_counts(face, counts)
    n = int(counts.sum())
    value = lgamma(n + 1) - sum(lgamma(int(c) + 1) for c in counts)
    value += float(counts @ np.log(alpha.face_weights(face)))
    return value


def quenched_point_log_prob(spec: DisorderSpec, seed: int, face: Face, counts,
                            origin=None) -> float:
    """log P_{0,omega}(X_n = x_n): log-sum over face paths to the endpoint of
    the product of environment weights, by a boxed level sweep."""
    return float(quenched_point_log_prob_batch(spec, np.array([seed]), face, counts,
                                               origin=origin)[0])


def quenched_point_log_prob_batch(spec: DisorderSpec, seeds, face: Face, counts,
                                  origin=None) -> np.ndarray:
    counts = _check_counts(face, counts)
    plan = _plan(face.d, int(counts.sum()), counts)
    seeds = np.asarray(seeds, dtype=np.uint64)
    logw = _seed_logw_levels(spec, seeds, face, plan, origin)
    return _log_sweep(plan, logw)[:, 0]


def partition_function(spec: DisorderSpec, seed: int, face: Face, theta,
                       n: int, origin=None) -> float:
    """log Z_{n,theta}: the psi(theta)^{-n}-normalized tilted path sum over
    all face paths of length n (a mean-one martingale in n)."""
    return float(partition_function_batch(spec, np.array([seed]), face, theta, n,
                                          origin=origin)[0])


def partition_function_batch(spec: DisorderSpec, seeds, face: Face, theta,
                             n: int, origin=None) -> np.ndarray:
    if n < 0:
        raise ValidationError("n must be >= 0")
    seeds = np.asarray(seeds, dtype=np.uint64)
    if n == 0:
        return np.zeros(len(seeds))
    tilt = face_tilts(face, theta)
    plan = _plan(face.d, n, None)
    logw = _seed_logw_levels(spec, seeds, face, plan, origin, tilt=tilt)
    level_n = _log_sweep(plan, logw)
    return np.logaddexp.reduce(level_n, axis=-1) - n * log_psi(spec.alpha, face, theta)


# ---------------------------------------------------------------------------
# exact second moment via the two-replica difference walk


def tilted_face_weights(spec: DisorderSpec, face: Face, theta) -> np.ndarray:
    """The tilted jump law alpha(s_i e_i) e^{<theta, pi(s_i e_i)>} / psi(theta)."""
    w = spec.alpha.face_weights(face) * np.exp(face_tilts(face, theta))
    return w / w.sum()


def collision_factor_matrix(spec: DisorderSpec, face: Face) -> np.ndarray:
    """F[i, k] = E[omega(0, s_i e_i) omega(0, s_k e_k)] / (alpha_i alpha_k),
    the per-collision inflation of the two-replica weight."""
    idx = face_direction_indices(face)
    a = spec.alpha.array()
    out = np.empty((face.d, face.d))
    for i, ei in enumerate(idx):
        for k, ek in enumerate(idx):
            out[i, k] = pair_moment(spec, int(ei), int(ek)) / (a[ei] * a[ek])
    return out


def pair_walk_expectation(q: np.ndarray, collision_factor: np.ndarray, n: int,
                          state_budget: int = DEFAULT_STATE_BUDGET) -> float:
    """E[prod over collision steps of F(jump, jump')] for two independent
    q-walks on the face, by exact DP on the count-difference vector.

    The state is the difference of the two walks' step-count vectors (a
    d-vector summing to zero, sup-norm at most the level); the pair collides
    exactly when it is zero.  With F = 1 this returns 1; with
    F = exp(V) * ones it is the occupation exponential of the difference walk.
    """
    d = len(q)
    pair_w = np.outer(q, q).ravel()
    pair_w0 = (np.outer(q, q) * collision_factor).ravel()
    jump_diff = (np.eye(d, dtype=np.int64)[:, None, :]
                 - np.eye(d, dtype=np.int64)[None, :, :]).reshape(-1, d)
    states = np.zeros((1, d), dtype=np.int64)
    values = np.ones(1)
    log_scale = 0.0
    for _ in range(n):
        at_zero = np.all(states == 0, axis=1)
        w = np.where(at_zero[:, None], pair_w0[None, :], pair_w[None, :])
        cand = (states[:, None, :] + jump_diff[None, :, :]).reshape(-1, d)
        mass = (values[:, None] * w).ravel()
        states, inverse = np.unique(cand, axis=0, return_inverse=True)
        values = np.zeros(len(states))
        np.add.at(values, inverse, mass)
        if len(states) * d * d > state_budget:
            raise ResourceBudgetError(
                f"pair DP state space ({len(states)} states) exceeds budget")
        top = values.max()
        if top > 1e250 or (0 < top < 1e-250):
            values = values / top
            log_scale += log(top)
    return float(values.sum() * np.exp(log_scale))


def second_moment_exact(spec: DisorderSpec, face: Face, theta, n: int,
                        state_budget: int = DEFAULT_STATE_BUDGET) -> float:
    """Exact E[Z_{n,theta}^2], using the exact pair moments of the finite-
    support environment law: collisions of the two tilted replicas pick up
    the factor pair_moment / (alpha alpha'), off-collision steps factorize."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return 1.0
    q = tilted_face_weights(spec, face, theta)
    factors = collision_factor_matrix(spec, face)
    return pair_walk_expectation(q, factors, n, state_budget=state_budget)


# ---------------------------------------------------------------------------
# exhaustive enumeration over the finite disorder support


def relevant_sites(face: Face, counts) -> tuple[np.ndarray, list]:
    """Sites whose environment can influence paths to the endpoint `counts`:
    the box below `counts` at levels 0..n-1.  Returns (coords, level slices)."""
    counts = _check_counts(face, counts)
    n = int(counts.sum())
    plan = _plan(face.d, n, counts)
    return _plan_sites(plan, face)


def slab_sites(face: Face, n: int) -> tuple[np.ndarray, list]:
    """All sites touched by any face path of length n (levels 0..n-1)."""
    plan = _plan(face.d, n, None)
    return _plan_sites(plan, face)


def _plan_sites(plan: FacePlan, face: Face):
    coords, slices, base = [], [], 0
    for j in range(plan.n):
        c = plan.site_coords(j, face)
        coords.append(c)
        slices.append(slice(base, base + len(c)))
        base += len(c)
    return np.vstack(coords), slices


def eta_assignment_table(spec: DisorderSpec, n_sites: int,
                         budget: int = DEFAULT_ENUM_BUDGET):
    """All |support|^{n_sites} disorder assignments with their probabilities.

    Returns (atoms, probs) with atoms of shape (n_assignments, n_sites), or
    None when the enumeration exceeds `budget` (callers then fall back to
    Monte Carlo)."""
    m = spec.eta.n_atoms
    total = m**n_sites
    if total > budget:
        return None
    idx = np.arange(total)
    atoms = np.empty((total, n_sites), dtype=np.int64)
    for s in range(n_sites):
        atoms[:, s] = (idx // (m**s)) % m
    probs = np.prod(spec.eta.weight_array()[atoms], axis=1)
    return atoms, probs


def _assignment_logw_levels(spec, face, plan, atoms, slices, tilt=None):
    table = _log_omega_face_table(spec, face)
    if tilt is not None:
        table = table + tilt
    return [table[atoms[:, slices[j]]] for j in range(plan.n)]


def exact_partition_moment(spec: DisorderSpec, face: Face, theta, n: int,
                           power: int = 1, budget: int = DEFAULT_ENUM_BUDGET) -> float:
    """Exact E[Z_{n,theta}^power] by exhaustive enumeration of the disorder
    assignments on all relevant sites (the independent oracle for both the
    mean-one martingale identity and the pair-walk second moment)."""
    plan = _plan(face.d, n, None)
    _, slices = _plan_sites(plan, face)
    n_sites = slices[-1].stop if slices else 0
    enum = eta_assignment_table(spec, n_sites, budget=budget)
    if enum is None:
        raise ResourceBudgetError(f"enumeration over {n_sites} sites exceeds budget")
    atoms, probs = enum
    tilt = face_tilts(face, theta)
    logw = _assignment_logw_levels(spec, face, plan, atoms, slices, tilt=tilt)
    log_z = (np.logaddexp.reduce(_log_sweep(plan, logw), axis=-1)
             - n * log_psi(spec.alpha, face, theta))
    return float(probs @ np.exp(power * log_z))


# ---------------------------------------------------------------------------
# the quenched/annealed gap D_n and its disorder derivative


def _mc_seeds(seed: int, samples: int) -> np.ndarray:
    return np.array([_rng.task_seed(seed, i) for i in range(samples)], dtype=np.uint64)


def dn_value(spec: DisorderSpec, face: Face, counts, samples: int = 1000,
             seed: int = 0, mode: str = "auto",
             budget: int = DEFAULT_ENUM_BUDGET) -> DnEstimate:
    """D_n(eps) = (1/n) [E log P_{0,omega}(X_n = x_n) - log P_0(X_n = x_n)].

    Exact mode enumerates the disorder assignments on the endpoint's box
    (auto-selected when that enumeration fits the budget); Monte Carlo mode
    averages over seeds and reports the standard error.  Jensen forces
    D_n <= 0 either way.
    """
    counts = _check_counts(face, counts)
    n = int(counts.sum())
    if mode not in ("auto", "exact", "mc"):
        raise ValidationError(f"unknown mode {mode!r}")
    if spec.eps == 0.0:
        return DnEstimate(0.0, 0.0, "exact", n, 0.0, 0)
    log_p0 = annealed_point_log_prob(spec.alpha, face, counts)
    plan = _plan(face.d, n, counts)
    _, slices = _plan_sites(plan, face)
    n_sites = slices[-1].stop
    enum = None
    if mode in ("auto", "exact"):
        enum = eta_assignment_table(spec, n_sites, budget=budget)
        if enum is None and mode == "exact":
            raise ResourceBudgetError(
                f"exact mode needs {spec.eta.n_atoms}^{n_sites} assignments")
    if enum is not None:
        atoms, probs = enum
        logw = _assignment_logw_levels(spec, face, plan, atoms, slices)
        log_pw = _log_sweep(plan, logw)[:, 0]
        return DnEstimate(float(probs @ log_pw - log_p0) / n, 0.0, "exact", n,
                          spec.eps, len(probs))
    seeds = _mc_seeds(seed, samples)
    gaps = (quenched_point_log_prob_batch(spec, seeds, face, counts) - log_p0) / n
    return DnEstimate(float(gaps.mean()), float(gaps.std(ddof=1) / np.sqrt(samples)),
                      "mc", n, spec.eps, samples)


def _derivative_w_levels(spec, face, plan, eta_rows_by_level):
    """Step weights and their eps-derivatives from per-level eta rows."""
    a_face = spec.alpha.face_weights(face)
    w_levels, dw_levels = [], []
    for rows in eta_rows_by_level:
        w_levels.append(a_face * (1.0 + spec.eps * rows))
        dw_levels.append(a_face * rows)
    return w_levels, dw_levels


def _eta_face_rows(spec, face, atoms):
    return spec.eta.support_array()[:, face_direction_indices(face)][atoms]


def quenched_log_prob_and_derivative(spec: DisorderSpec, seed: int, face: Face,
                                     counts) -> tuple[float, float]:
    """Per-environment (log P_{0,omega}, d log P_{0,omega} / d eps), computed
    by one paired value/derivative sweep (same disorder realization for both)."""
    counts = _check_counts(face, counts)
    plan = _plan(face.d, int(counts.sum()), counts)
    seeds = np.array([seed], dtype=np.uint64)
    rows = [
        _eta_face_rows(spec, face, eta_atoms_batch(spec, seeds, plan.site_coords(j, face)))
        for j in range(plan.n)
    ]
    w_levels, dw_levels = _derivative_w_levels(spec, face, plan, rows)
    log_v, ratio = _value_derivative_sweep(plan, w_levels, dw_levels)
    return float(log_v[0]), float(ratio[0])


def dn_derivative(spec: DisorderSpec, face: Face, counts, mode: str = "auto",
                  samples: int = 1000, seed: int = 0,
                  budget: int = DEFAULT_ENUM_BUDGET) -> DnEstimate:
    """dD_n/deps = (1/n) E[ d/deps log P_{0,omega}(X_n = x_n) ].

    In exact mode (enumerated disorder) the value is exactly nonpositive;
    association of the per-path weights pushes the averaged derivative below
    zero for every eps in (0,1).
    """
    if not 0.0 < spec.eps < 1.0:
        raise ValidationError("derivative requires eps in (0, 1)")
    counts = _check_counts(face, counts)
    n = int(counts.sum())
    if mode not in ("auto", "exact", "mc"):
        raise ValidationError(f"unknown mode {mode!r}")
    plan = _plan(face.d, n, counts)
    _, slices = _plan_sites(plan, face)
    n_sites = slices[-1].stop
    enum = None
    if mode in ("auto", "exact"):
        enum = eta_assignment_table(spec, n_sites, budget=budget)
        if enum is None and mode == "exact":
            raise ResourceBudgetError(
                f"exact mode needs {spec.eta.n_atoms}^{n_sites} assignments")
    if enum is not None:
        atoms, probs = enum
        rows = [_eta_face_rows(spec, face, atoms[:, slices[j]]) for j in range(plan.n)]
        w_levels, dw_levels = _derivative_w_levels(spec, face, plan, rows)
        _, ratios = _value_derivative_sweep(plan, w_levels, dw_levels)
        return DnEstimate(float(probs @ ratios) / n, 0.0, "exact", n, spec.eps, len(probs))
    seeds = _mc_seeds(seed, samples)
    rows = [
        _eta_face_rows(spec, face, eta_atoms_batch(spec, seeds, plan.site_coords(j, face)))
        for j in range(plan.n)
    ]
    w_levels, dw_levels = _derivative_w_levels(spec, face, plan, rows)
    _, ratios = _value_derivative_sweep(plan, w_levels, dw_levels)
    ratios = ratios / n
    return DnEstimate(float(ratios.mean()), float(ratios.std(ddof=1) / np.sqrt(samples)),
                      "mc", n, spec.eps, samples)


# ---------------------------------------------------------------------------
# brute-force path enumeration (the oracle route, also behind the CLI
# --cross-check flag); deliberately a different algorithm from the sweeps.


_BRUTE_LIMIT = 6_000_000


def _iter_face_paths(spec: DisorderSpec, seed: int, face: Face, n: int, origin):
    """Yield (counts, tilt-free log weight contributions) for every jump
    sequence; checks the non-crossing property |z_j|_1 = j along the way."""
    from itertools import product as iproduct

    d = face.d
    if d**n > _BRUTE_LIMIT:
        raise ResourceBudgetError(f"brute force over {d}^{n} paths exceeds limit")
    sgn = face.sign_array()
    origin = np.zeros(d, dtype=np.int64) if origin is None else np.asarray(origin)
    table = np.log(spec.omega_table()[:, face_direction_indices(face)])
    cache: dict = {}

    def site_row(site):
        if site not in cache:
            coords = origin + np.array(site) * sgn
            atoms = eta_atoms_batch(spec, np.array([seed], dtype=np.uint64),
                                    coords[None, :])
            cache[site] = table[int(atoms[0, 0])]
        return cache[site]

    for seq in iproduct(range(d), repeat=n):
        m = [0] * d
        logw = 0.0
        for step, axis in enumerate(seq):
            assert sum(m) == step  # |z_j|_1 = j: face paths cannot backtrack
            logw += site_row(tuple(m))[axis]
            m[axis] += 1
        yield tuple(m), seq, logw


def brute_force_quenched_point_log_prob(spec: DisorderSpec, seed: int, face: Face,
                                        counts, origin=None) -> float:
    from math import fsum

    counts = _check_counts(face, counts)
    n = int(counts.sum())
    target = tuple(int(c) for c in counts)
    vals = [np.exp(logw) for m, _, logw in _iter_face_paths(spec, seed, face, n, origin)
            if m == target]
    if not vals:
        raise ValidationError("endpoint unreachable")
    return log(fsum(vals))


def brute_force_partition_function(spec: DisorderSpec, seed: int, face: Face,
                                   theta, n: int, origin=None) -> float:
    from math import fsum

    tilt = face_tilts(face, theta)
    vals = []
    for m, seq, logw in _iter_face_paths(spec, seed, face, n, origin):
        vals.append(np.exp(logw + sum(tilt[axis] for axis in seq)))
    return log(fsum(vals)) - n * log_psi(spec.alpha, face, theta)
