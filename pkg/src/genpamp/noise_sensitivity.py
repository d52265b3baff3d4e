"""Closed-form minimax risk surfaces over the (delta, rho, gamma_s2) space.

All quantities reduce to the scalar minimax soft-threshold risk M_pm(delta*rho)
plus algebra; gamma_s2 = +inf and the unbounded LASSO cells are represented
with explicit infinities, never floating-point overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .shrinkage import (
    expected_derivative,
    least_favorable_amplitude,
    minimax_threshold,
)


def minimax_risk(delta: float, rho: float, gamma_s2: float) -> float:
    """Worst-case-over-priors, best-over-parameters noise sensitivity M*.

    Root of M^2 + G M - delta gamma_s2 M_pm = 0 with
    G = delta gamma_s2 + delta - gamma_s2 M_pm(delta rho); finite for every
    finite gamma_s2 (there is no phase-transition curve with a prior).
    """
    _check_surface_point(delta, rho, gamma_s2)
    if gamma_s2 == 0.0:
        return 0.0
    M_pm = minimax_threshold(delta * rho).M_pm
    if math.isinf(gamma_s2):
        return lasso_bound(delta, rho)
    G = delta * gamma_s2 + delta - gamma_s2 * M_pm
    return 0.5 * (-G + math.sqrt(G * G + 4.0 * delta * gamma_s2 * M_pm))


def lasso_bound(delta: float, rho: float) -> float:
    """LASSO minimax noise sensitivity M^b; +inf at or above the phase transition."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    M_pm = minimax_threshold(min(delta * rho, 1.0)).M_pm
    if M_pm >= delta:
        return math.inf
    return M_pm / (1.0 - M_pm / delta)


def denoise_bound(delta: float, rho: float, gamma_s2: float) -> float:
    """Scalar-denoising noise sensitivity M_pm(delta rho) * gamma_s2."""
    return minimax_threshold(delta * rho).M_pm * gamma_s2


def npi_star(delta: float, rho: float, gamma_s2: float, sigma2: float) -> float:
    """Minimax effective-noise level NPI*."""
    _check_surface_point(delta, rho, gamma_s2)
    if gamma_s2 == 0.0:
        return 0.0
    M = minimax_risk(delta, rho, gamma_s2)
    if math.isinf(gamma_s2):
        return sigma2 * (1.0 + M / delta)
    return gamma_s2 * sigma2 * (1.0 + M / delta) / (gamma_s2 + 1.0 + M / delta)


def nearly_least_favorable_fmse(
    delta: float, rho: float, gamma_s2: float, c: float, consistent: bool = False,
) -> float:
    """Noise sensitivity achieved by the c-nearly-least-favorable three-point
    signal; continuous in c with the c -> 0 limit equal to minimax_risk.

    The default form keeps the c-free G squared under the radical while the
    linear term uses the c-dependent G.  consistent=True substitutes
    (1-c) M_pm throughout the quadratic instead; that variant is the risk the
    c-least-favorable signal actually realizes at the solver's fixed point
    (the two agree as c -> 0).
    """
    _check_surface_point(delta, rho, gamma_s2)
    if not 0.0 <= c < 1.0:
        raise ValueError(f"c must lie in [0, 1), got {c}")
    M_pm = minimax_threshold(delta * rho).M_pm
    M_c = (1.0 - c) * M_pm
    if math.isinf(gamma_s2):
        if M_c >= delta:
            return math.inf
        return M_c / (1.0 - M_c / delta)
    if consistent:
        G_c = delta * gamma_s2 + delta - gamma_s2 * M_c
        return 0.5 * (-G_c + math.sqrt(G_c * G_c + 4.0 * delta * gamma_s2 * M_c))
    G = delta * gamma_s2 + delta - gamma_s2 * M_pm
    G_c = delta * gamma_s2 + delta - gamma_s2 * M_c
    return 0.5 * (-G_c + math.sqrt(G * G + 4.0 * delta * gamma_s2 * M_c))


def max_minimax_risk(delta: float, gamma_s2: float) -> float:
    """Supremum of M* over rho at fixed (delta, gamma_s2), attained at rho = 1/delta."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if gamma_s2 == 0.0:
        return 0.0
    g = delta * gamma_s2 - gamma_s2 + delta
    return 0.5 * (math.sqrt(g * g + 4.0 * delta * gamma_s2) - g)


@dataclass(frozen=True)
class MinimaxParams:
    lam_star: float
    tau_star: float
    h_star: float
    u_star: float
    alpha_pm: float
    npi_star: float
    eq_detection_rate: float


def minimax_params(
    delta: float,
    rho: float,
    gamma_s2: float,
    sigma2: float = 1.0,
    c: float = 0.02,
) -> MinimaxParams:
    """Formal minimax tuning (lambda*, tau_s*) and the nearly-least-favorable
    amplitude h*, at sharpness parameter c.

    h* scales the amplitude by the effective noise at the exact minimax risk,
    while u*, lambda* and tau* are evaluated at the risk the c-least-favorable
    signal realizes (the consistent variant); mixing them this way is what
    makes the tuned solver sit exactly at that signal's fixed point.
    """
    _check_surface_point(delta, rho, gamma_s2)
    if gamma_s2 == 0.0:
        raise ValueError("minimax parameters are degenerate for a perfect prior")
    eps = delta * rho
    mm = minimax_threshold(eps)
    NPI = npi_star(delta, rho, gamma_s2, sigma2)
    M_c = nearly_least_favorable_fmse(delta, rho, gamma_s2, c, consistent=True)
    if math.isinf(gamma_s2):
        u_star = 0.0
        NPI_c = sigma2 * (1.0 + M_c / delta) if math.isfinite(M_c) else math.inf
    else:
        u_star = (1.0 + M_c / delta) / gamma_s2
        NPI_c = gamma_s2 * sigma2 * (1.0 + M_c / delta) / (gamma_s2 + 1.0 + M_c / delta)
    h_pm = least_favorable_amplitude(eps, c)
    h_star = h_pm * math.sqrt(NPI)
    eq_dr = expected_derivative(eps, h_pm, mm.alpha_pm)
    shrink = 1.0 - eq_dr / ((1.0 + u_star) * delta)
    if math.isinf(NPI_c):
        # no prior, above the transition: no finite fixed point exists and
        # the formal penalty diverges with the effective noise
        lam_star = math.inf
        tau_star = 0.0
    else:
        lam_star = (1.0 + u_star) * mm.alpha_pm * math.sqrt(NPI_c) * shrink
        tau_star = u_star * shrink
    return MinimaxParams(
        lam_star=lam_star, tau_star=tau_star, h_star=h_star,
        u_star=u_star, alpha_pm=mm.alpha_pm, npi_star=NPI,
        eq_detection_rate=eq_dr,
    )


@dataclass(frozen=True)
class RiskSurfacePoint:
    delta: float
    rho: float
    gamma_s2: float
    M_star: float
    M_lasso_bound: float
    M_denoise_bound: float
    NPI_star: float
    h_star: float
    lambda_star: float
    tau_star: float


def risk_surface_point(
    delta: float, rho: float, gamma_s2: float, sigma2: float = 1.0, c: float = 0.02,
) -> RiskSurfacePoint:
    M = minimax_risk(delta, rho, gamma_s2)
    Mb = lasso_bound(delta, rho)
    Md = denoise_bound(delta, rho, gamma_s2)
    params = minimax_params(delta, rho, gamma_s2, sigma2, c)
    # per-point invariants from the bound inequalities
    if Mb < math.inf:
        assert M <= Mb + 1e-9, (delta, rho, gamma_s2)
    if math.isfinite(Md):
        assert M <= Md + 1e-9, (delta, rho, gamma_s2)
    return RiskSurfacePoint(
        delta=delta, rho=rho, gamma_s2=gamma_s2,
        M_star=M, M_lasso_bound=Mb, M_denoise_bound=Md,
        NPI_star=params.npi_star, h_star=params.h_star,
        lambda_star=params.lam_star, tau_star=params.tau_star,
    )


def risk_surface_sweep(
    deltas,
    rhos,
    gamma_s2_list,
    sigma2: float = 1.0,
    c: float = 0.02,
) -> tuple[list[RiskSurfacePoint], list[tuple[tuple, Exception]]]:
    """Evaluate the surface on the grid; per-point failures are collected,
    not fatal.  Returns (points, errors)."""
    points: list[RiskSurfacePoint] = []
    errors: list[tuple[tuple, Exception]] = []
    for g in gamma_s2_list:
        for d in deltas:
            for r in rhos:
                try:
                    points.append(risk_surface_point(d, r, g, sigma2, c))
                except Exception as exc:  # noqa: BLE001 - collected per point
                    errors.append(((d, r, g), exc))
    return points, errors


def _check_surface_point(delta: float, rho: float, gamma_s2: float) -> None:
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if delta * rho > 1.0 + 1e-12:
        raise ValueError(f"delta*rho = {delta * rho} exceeds 1")
    if gamma_s2 < 0:
        raise ValueError(f"gamma_s2 must be nonnegative, got {gamma_s2}")
