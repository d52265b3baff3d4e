"""Deterministic prediction of the prior-aided AMP dynamics.

The recursion tracks two scalars: q2, the per-entry MSE of the thresholded
estimate, and u, the weight that blends the prior estimate with the
measurement-side estimate.  Their composition defines the effective noise
level ("noise-plus-interference") seen by the scalar denoiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import ThreePointPrior, normal_cdf, normal_pdf
from .shrinkage import expected_derivative, mse_three_point


def npi(q2: float, u: float, delta: float, sigma2: float, sigma_s2: float) -> float:
    """Effective variance of the un-thresholded estimate for weight u.

    (u/(1+u))^2 sigma_s2 + (1/(1+u))^2 (sigma2 + q2/delta); u = 0 recovers
    the no-prior value sigma2 + q2/delta, u -> inf recovers sigma_s2.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if math.isinf(u):
        return sigma_s2
    w = u / (1.0 + u)
    prior_term = w * w * sigma_s2 if math.isfinite(sigma_s2) else 0.0 if u == 0 else math.inf
    return prior_term + (sigma2 + q2 / delta) / (1.0 + u) ** 2


def optimal_u(q2: float, delta: float, sigma2: float, sigma_s2: float) -> float:
    """Weight minimizing npi over u: the variance ratio (sigma2 + q2/delta)/sigma_s2."""
    if sigma_s2 == 0.0:
        return math.inf
    if math.isinf(sigma_s2):
        return 0.0
    return (sigma2 + q2 / delta) / sigma_s2


def npi_optimal(q2: float, delta: float, sigma2: float, sigma_s2: float) -> float:
    """npi at the optimal weight: harmonic-mean combination of the two variances."""
    v = sigma2 + q2 / delta
    if math.isinf(sigma_s2):
        return v
    if sigma_s2 == 0.0:
        return 0.0
    if math.isinf(v):
        return sigma_s2
    return sigma_s2 * v / (sigma_s2 + v)


def mse_at_noise(noise_var: float, prior: ThreePointPrior, alpha: float) -> float:
    """Soft-threshold risk at noise variance noise_var via scale invariance."""
    if noise_var == 0.0:
        return 0.0
    scale = math.sqrt(noise_var)
    mu = prior.mu / scale if math.isfinite(prior.mu) else math.inf
    return noise_var * mse_three_point(prior.eps, mu, alpha)


def mse_map_psi(
    q2: float,
    u: float,
    delta: float,
    sigma2: float,
    sigma_s2: float,
    alpha: float,
    prior: ThreePointPrior,
) -> float:
    """One application of the MSE map: risk at the npi implied by (q2, u)."""
    return mse_at_noise(npi(q2, u, delta, sigma2, sigma_s2), prior, alpha)


@dataclass(frozen=True)
class SePoint:
    q2: float
    u: float
    xi2: float


@dataclass
class SePrediction:
    xi_star2: float
    q_star2: float
    u_star: float
    lam: float
    tau_s: float
    trajectory: list[SePoint] = field(default_factory=list)
    converged: bool = True


def se_iterate(
    prior: ThreePointPrior,
    alpha: float,
    delta: float,
    sigma2: float,
    sigma_s2: float,
    q0: float | None = None,
    max_iters: int = 1000,
    tol: float = 1e-12,
) -> SePrediction:
    """Run the two-variable recursion from q0 (default: the prior second
    moment, matching a zero-initialized solver) to its fixed point."""
    q2 = prior.second_moment if q0 is None else q0
    if math.isinf(q2):
        q2 = 1e12
    cap = 1e9 * (sigma2 + 1.0)
    trajectory: list[SePoint] = []
    converged = False
    for _ in range(max_iters):
        u = optimal_u(q2, delta, sigma2, sigma_s2)
        xi2 = npi_optimal(q2, delta, sigma2, sigma_s2)
        q2_next = mse_at_noise(xi2, prior, alpha)
        trajectory.append(SePoint(q2=q2_next, u=u, xi2=xi2))
        if q2_next > cap:
            # unbounded recursion (no-prior regime above the phase transition)
            q2 = math.inf
            break
        if abs(q2_next - q2) < tol * max(q2, 1e-30):
            q2 = q2_next
            converged = True
            break
        q2 = q2_next
    u_star = optimal_u(q2, delta, sigma2, sigma_s2)
    xi_star2 = npi_optimal(q2, delta, sigma2, sigma_s2)
    lam, tau_s = _params_from_fixed_point(xi_star2, u_star, alpha, delta, prior)
    return SePrediction(
        xi_star2=xi_star2, q_star2=q2, u_star=u_star,
        lam=lam, tau_s=tau_s, trajectory=trajectory, converged=converged,
    )


def alpha_min(delta: float, gamma_s2: float) -> float:
    """Smallest threshold multiplier for which the fixed point is unique.

    Solves (1 + a^2) Phi(-a) - a phi(a) = (delta/2) (gamma_s2 + 1)^2 / gamma_s2^2
    by bisection on the strictly decreasing left-hand side; returns 0 when the
    right-hand side exceeds the value 1/2 attained at a = 0.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if gamma_s2 <= 0:
        raise ValueError(f"gamma_s2 must be positive, got {gamma_s2}")
    if math.isinf(gamma_s2):
        rhs = delta / 2.0
    else:
        rhs = (delta / 2.0) * (gamma_s2 + 1.0) ** 2 / gamma_s2**2

    def lhs(a):
        return (1.0 + a * a) * normal_cdf(-a) - a * normal_pdf(a)

    if rhs >= 0.5:
        return 0.0
    lo, hi = 0.0, 1.0
    while lhs(hi) > rhs:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lhs(mid) > rhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class FixedPointError(RuntimeError):
    pass


def xi_fixed_point(
    alpha: float,
    delta: float,
    sigma2: float,
    sigma_s2: float,
    prior: ThreePointPrior,
    max_iters: int = 5000,
    tol: float = 1e-14,
) -> float:
    """Unique solution of xi^2 = F(xi^2, alpha), the effective-noise fixed point.

    Requires alpha above alpha_min for the given (delta, gamma_s2); solved by
    damped fixed-point iteration (damping engages only if the plain iteration
    oscillates).
    """
    gamma_s2 = math.inf if math.isinf(sigma_s2) else (
        sigma_s2 / sigma2 if sigma2 > 0 else math.inf
    )
    if alpha <= alpha_min(delta, gamma_s2):
        raise FixedPointError(
            f"alpha={alpha} is not above alpha_min({delta}, {gamma_s2}); "
            "the fixed point need not be unique"
        )

    def F(xi2):
        mse = mse_at_noise(xi2, prior, alpha)
        v = sigma2 + mse / delta
        if math.isinf(sigma_s2):
            return v
        return sigma_s2 * v / (sigma_s2 + v)

    xi2 = F(prior_start(sigma2, sigma_s2, prior, delta))
    damping = 1.0
    prev_step = 0.0
    for _ in range(max_iters):
        nxt = F(xi2)
        step = nxt - xi2
        if prev_step * step < 0:
            damping = 0.5
        xi2_new = xi2 + damping * step
        if abs(xi2_new - xi2) < tol * max(xi2, 1e-30):
            return xi2_new
        prev_step = step
        xi2 = xi2_new
    return xi2


def prior_start(sigma2: float, sigma_s2: float, prior: ThreePointPrior, delta: float) -> float:
    """Starting effective noise corresponding to a zero initial estimate."""
    q0 = prior.second_moment
    if math.isinf(q0):
        q0 = 1e12
    return npi_optimal(q0, delta, sigma2, sigma_s2)


def _params_from_fixed_point(
    xi_star2: float,
    u_star: float,
    alpha: float,
    delta: float,
    prior: ThreePointPrior,
) -> tuple[float, float]:
    xi = math.sqrt(xi_star2) if xi_star2 > 0 else 0.0
    if xi == 0.0:
        return 0.0, (0.0 if math.isfinite(u_star) else math.inf)
    mu = prior.mu / xi if math.isfinite(prior.mu) else math.inf
    eta_prime = expected_derivative(prior.eps, mu, alpha)
    if math.isinf(u_star):
        return 0.0, math.inf
    shrink = 1.0 - eta_prime / ((1.0 + u_star) * delta)
    lam = (1.0 + u_star) * alpha * xi * shrink
    tau_s = u_star * shrink
    return lam, tau_s


@dataclass(frozen=True)
class ParamPrediction:
    lam: float
    tau_s: float
    xi_star2: float
    u_star: float
    q_star2: float


def predict_params(
    alpha: float,
    delta: float,
    sigma2: float,
    sigma_s2: float,
    prior: ThreePointPrior,
) -> ParamPrediction:
    """Convex-program parameters (lambda, tau_s) realized by the solver run at
    threshold multiplier alpha, evaluated at the effective-noise fixed point."""
    xi_star2 = xi_fixed_point(alpha, delta, sigma2, sigma_s2, prior)
    q_star2 = mse_at_noise(xi_star2, prior, alpha)
    u_star = optimal_u(q_star2, delta, sigma2, sigma_s2)
    lam, tau_s = _params_from_fixed_point(xi_star2, u_star, alpha, delta, prior)
    return ParamPrediction(lam=lam, tau_s=tau_s, xi_star2=xi_star2, u_star=u_star, q_star2=q_star2)
