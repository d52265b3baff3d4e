"""Soft-threshold calculus: the scalar denoiser, its risk under three-point
signal laws, worst-case risk, and the minimax threshold.

All risks are computed at unit noise; callers rescale via the scale
invariance sigma^2 * mse(eps, mu/sigma, alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import normal_cdf, normal_pdf


def soft_threshold(x, theta):
    """eta(x; theta): shrink toward zero by theta, elementwise."""
    if np.any(np.asarray(theta) < 0):
        raise ValueError(f"threshold must be nonnegative, got {theta}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)
    return out if out.ndim else float(out)


def soft_threshold_derivative(x, theta):
    """eta'(x; theta): 1 where |x| > theta, else 0 (0 on the boundary)."""
    if np.any(np.asarray(theta) < 0):
        raise ValueError(f"threshold must be nonnegative, got {theta}")
    x = np.asarray(x, dtype=float)
    out = (np.abs(x) > theta).astype(float)
    return out if out.ndim else float(out)


def _point_risk(x: float, alpha: float) -> float:
    """E[(eta(x + Z; alpha) - x)^2] for Z ~ N(0,1) and a fixed signal value x.

    Derived by splitting the Gaussian integral at the threshold around the
    mass point; validated against Monte-Carlo and quadrature oracles in the
    test suite.
    """
    if math.isinf(x):
        return 1.0 + alpha * alpha
    a = alpha - x
    b = alpha + x
    return (
        (1.0 + alpha * alpha) * (normal_cdf(-a) + normal_cdf(-b))
        - (alpha + x) * normal_pdf(a)
        - (alpha - x) * normal_pdf(b)
        + x * x * (normal_cdf(a) - normal_cdf(-b))
    )


def mse_three_point(eps: float, mu: float, alpha: float) -> float:
    """Unit-noise soft-threshold risk under (1-eps)delta_0 + (eps/2)delta_{+-mu}."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if mu < 0 or alpha < 0:
        raise ValueError("mu and alpha must be nonnegative")
    if math.isinf(mu):
        return sup_mse(eps, alpha)
    return (1.0 - eps) * _point_risk(0.0, alpha) + eps * _point_risk(mu, alpha)


def sup_mse(eps: float, alpha: float) -> float:
    """Worst-case unit-noise risk over all laws with at most eps nonzero mass."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    return eps * (1.0 + alpha**2) + (1.0 - eps) * (
        2.0 * (1.0 + alpha**2) * normal_cdf(-alpha) - 2.0 * alpha * normal_pdf(alpha)
    )


@dataclass(frozen=True)
class MinimaxResult:
    alpha_pm: float
    M_pm: float
    boundary: bool = False


_ALPHA_HI = 10.0


@lru_cache(maxsize=4096)
def minimax_threshold(eps: float) -> MinimaxResult:
    """Minimax threshold multiplier alpha_pm(eps) and risk M_pm(eps).

    sup_mse(eps, .) is smooth and unimodal in alpha; a bounded scalar
    minimization to 1e-12 resolution suffices.
    """
    if eps <= 0.0:
        return MinimaxResult(alpha_pm=math.inf, M_pm=0.0, boundary=True)
    if eps >= 1.0:
        return MinimaxResult(alpha_pm=0.0, M_pm=1.0, boundary=True)
    res = minimize_scalar(
        lambda a: sup_mse(eps, a),
        bounds=(0.0, _ALPHA_HI),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return MinimaxResult(alpha_pm=float(res.x), M_pm=float(res.fun))


def expected_derivative(eps: float, mu: float, alpha: float) -> float:
    """E[eta'(X + Z; alpha)] = P(|X + Z| > alpha) under the three-point law."""
    base = 2.0 * normal_cdf(-alpha)
    if math.isinf(mu):
        spike = 1.0
    else:
        spike = normal_cdf(mu - alpha) + normal_cdf(-mu - alpha)
    return (1.0 - eps) * base + eps * spike


def least_favorable_amplitude(eps: float, c: float) -> float:
    """Smallest amplitude h with mse_three_point(eps, h, alpha_pm) = (1-c) M_pm.

    The risk is continuous and increasing in the amplitude, from the
    zero-signal risk up to the worst case M_pm, so a bracketed root find is
    exact up to tolerance.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    mm = minimax_threshold(eps)
    target = (1.0 - c) * mm.M_pm

    def gap(mu):
        return mse_three_point(eps, mu, mm.alpha_pm) - target

    lo = 0.0
    if gap(lo) >= 0.0:
        raise RuntimeError(
            f"no root: zero-amplitude risk already exceeds (1-c)*M_pm at eps={eps}, c={c}"
        )
    hi = 2.0 * mm.alpha_pm + 2.0
    for _ in range(200):
        if gap(hi) > 0.0:
            break
        hi *= 1.5
    else:
        raise RuntimeError(
            f"no bracket for least-favorable amplitude at eps={eps}, c={c}: "
            f"risk gap at mu={hi} is {gap(hi)}"
        )
    return float(brentq(gap, lo, hi, xtol=1e-12, rtol=1e-14))
