"""Rate functions on the boundary faces and their convex duality.

For a face with weights a_i = alpha(s_i e_i) the annealed log-moment
generating function of the projected one-step distribution is

    log psi(theta),   psi(theta) = sum_{i<d} a_i e^{theta_i} + a_d e^{-sum theta},

a smooth strictly convex function of theta in R^{d-1}.  Its Legendre
transform evaluated at a boundary point x with weights delta has the closed
form sum_i delta_i log(delta_i / a_i) (with 0 log 0 = 0), the supremum being
attained at the explicit tilt theta(x) whenever all delta_i > 0.  On facets
(some delta_i = 0) the supremum is a limit and is reported as not attained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import DisorderSpec, JumpLaw
from .errors import ConvergenceError, ValidationError
from .geometry import BoundaryPoint, Face

NEWTON_GRAD_TOL = 1e-12
NEWTON_MAX_ITER = 100
BISECTION_STEPS = 200


def face_tilts(face: Face, theta: np.ndarray) -> np.ndarray:
    """Per-jump exponents t_i = <theta, pi(s_i e_i)>: (theta_1..theta_{d-1}, -sum theta)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (face.d - 1,):
        raise ValidationError(f"theta must have shape ({face.d - 1},)")
    return np.append(theta, -theta.sum())


def psi(alpha: JumpLaw, face: Face, theta: np.ndarray) -> float:
    return float(alpha.face_weights(face) @ np.exp(face_tilts(face, theta)))


def log_psi(alpha: JumpLaw, face: Face, theta: np.ndarray) -> float:
    return float(np.log(psi(alpha, face, theta)))


def grad_log_psi(alpha: JumpLaw, face: Face, theta: np.ndarray) -> np.ndarray:
    """Gradient: component i is (a_i e^{theta_i} - a_d e^{-sum theta}) / psi."""
    u = alpha.face_weights(face) * np.exp(face_tilts(face, theta))
    return (u[:-1] - u[-1]) / u.sum()


def hess_log_psi(alpha: JumpLaw, face: Face, theta: np.ndarray) -> np.ndarray:
    """Hessian of log psi: the covariance of the projected jump under the
    tilted law, hence symmetric positive definite."""
    u = alpha.face_weights(face) * np.exp(face_tilts(face, theta))
    p = u / u.sum()
    g = p[:-1] - p[-1]
    return np.diag(p[:-1]) + p[-1] - np.outer(g, g)


def lambda_mgf(alpha: JumpLaw, theta_full: np.ndarray) -> float:
    """Unrestricted moment generating function sum_e alpha(e) e^{<theta, e>},
    theta in R^d over all 2d directions."""
    theta_full = np.asarray(theta_full, dtype=float)
    d = alpha.d
    if theta_full.shape != (d,):
        raise ValidationError(f"theta must have shape ({d},)")
    a = alpha.array()
    return float(a[:d] @ np.exp(theta_full) + a[d:] @ np.exp(-theta_full))


def annealed_rate_boundary(alpha: JumpLaw, x: BoundaryPoint) -> float:
    """Closed-form annealed rate at a boundary point:
    sum_i delta_i log(delta_i / alpha(s_i e_i)), zero terms dropped."""
    delta = x.delta_array()
    a = alpha.face_weights(x.face)
    pos = delta > 0
    return float(np.sum(delta[pos] * np.log(delta[pos] / a[pos])))


def exposing_tilt(alpha: JumpLaw, face: Face, x: BoundaryPoint) -> np.ndarray:
    """The tilt where the Legendre supremum for x is attained:
    theta_i = log(delta_i C / a_i) with C = (prod_i a_i/delta_i)^{1/d}.
    Requires all delta_i > 0 (off-facet)."""
    delta = x.delta_array()
    if np.any(delta <= 0):
        raise ValidationError("exposing tilt is defined only off the facets (all delta_i > 0)")
    a = alpha.face_weights(face)
    log_c = float(np.mean(np.log(a / delta)))
    return (np.log(delta / a) + log_c)[:-1]


@dataclass(frozen=True)
class TiltResult:
    """Outcome of the Legendre supremum for one boundary point."""

    theta: np.ndarray | None
    value: float
    attained: bool
    iterations: int = 0


@dataclass(frozen=True)
class FaceSummary:
    """Minimum of the rate function over one face."""

    face: Face
    min_value: float
    minimizer: BoundaryPoint


def face_minimizer(alpha: JumpLaw, face: Face) -> FaceSummary:
    """Both rate functions share the face minimum -log sum_i a_i, attained at
    delta_i = a_i / sum_j a_j."""
    a = alpha.face_weights(face)
    return FaceSummary(
        face=face,
        min_value=float(-np.log(a.sum())),
        minimizer=BoundaryPoint(face, tuple(a / a.sum())),
    )


def legendre_sup(alpha: JumpLaw, face: Face, x: BoundaryPoint,
                 grad_tol: float = NEWTON_GRAD_TOL,
                 max_iter: int = NEWTON_MAX_ITER) -> TiltResult:
    """Maximize <theta, pi(x)> - log psi(theta) over theta in R^{d-1}.

    Off the facets, Newton started from the closed-form exposing tilt
    converges in one step up to round-off; a backtracking line search and a
    bisection fallback along the exposing direction guard the generic path.
    On a facet the supremum is not attained; the limiting value (the same
    closed form, zero terms dropped) is returned with attained=False.
    """
    if x.face != face:
        raise ValidationError("x must lie on the given face")
    target = x.projected()
    if x.on_facet:
        return TiltResult(theta=None, value=annealed_rate_boundary(alpha, x), attained=False)

    theta = exposing_tilt(alpha, face, x)

    def objective(t):
        return float(t @ target) - log_psi(alpha, face, t)

    for it in range(max_iter):
        grad = target - grad_log_psi(alpha, face, theta)
        if np.max(np.abs(grad)) <= grad_tol:
            return TiltResult(theta=theta, value=objective(theta), attained=True, iterations=it)
        step = np.linalg.solve(hess_log_psi(alpha, face, theta), grad)
        base = objective(theta)
        scale = 1.0
        for _ in range(60):
            cand = theta + scale * step
            if objective(cand) >= base - 1e-30:
                theta = cand
                break
            scale *= 0.5
        else:
            break  # Newton stalled, try bisection fallback

    # Bisection on the monotone directional derivative along t * theta_hat.
    direction = exposing_tilt(alpha, face, x)
    norm = np.linalg.norm(direction)
    if norm == 0:
        return TiltResult(theta=direction, value=objective(direction), attained=True,
                          iterations=max_iter)
    direction = direction / norm

    def dslope(t):
        p = t * direction
        return float(direction @ (target - grad_log_psi(alpha, face, p)))

    lo, hi = 0.0, max(1.0, 2 * norm)
    while dslope(hi) > 0 and hi < 1e8:
        hi *= 2
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if dslope(mid) > 0:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi) * direction
    grad = target - grad_log_psi(alpha, face, theta)
    if np.max(np.abs(grad)) <= max(grad_tol, 1e-9):
        return TiltResult(theta=theta, value=objective(theta), attained=True,
                          iterations=max_iter + BISECTION_STEPS)
    raise ConvergenceError(
        f"Legendre supremum did not converge (|grad| = {np.max(np.abs(grad)):.3g})")


def finite_log_mgf(spec: DisorderSpec, seed: int, face: Face,
                   theta: np.ndarray, n: int) -> float:
    """Finite-n quenched log-moment generating surrogate:
    (1/n) log E_omega[e^{<theta, S_n>} 1_{face event}] = log psi + (1/n) log Z_{n,theta}."""
    from .exact_kernel import partition_function  # deferred: avoids import cycle

    if n < 1:
        raise ValidationError("n must be >= 1")
    log_z = partition_function(spec, seed, face, theta, n)
    return log_psi(spec.alpha, face, theta) + log_z / n
