"""Reference solvers: proximal-gradient solution of the prior-regularized
LASSO objective (the convex oracle), LMMSE on the stacked linear system,
residual AMP, and scalar denoising of the prior estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amp import ReconstructionReport, amp_reconstruct
from .parameterless import sure_tuned_threshold
from .shrinkage import minimax_threshold, soft_threshold


@dataclass
class ProxSolverConfig:
    lam: float
    tau_s: float
    step: float | None = None  # None: 0.99 / L with L from power iteration
    max_iters: int = 5000
    tol: float = 1e-12
    accelerate: bool = True

    def __post_init__(self):
        if self.lam < 0 or self.tau_s < 0:
            raise ValueError("lam and tau_s must be nonnegative")


@dataclass
class ProxResult:
    x_hat: np.ndarray
    objective_trace: list[float]
    iterations_run: int
    converged: bool
    kkt: float


def _spectral_norm_sq(A: np.ndarray, iters: int = 30, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=A.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = A.T @ (A @ v)
        v /= np.linalg.norm(v)
    return float(v @ (A.T @ (A @ v)))


def _objective(z, y, A, x_tilde, lam, tau_s):
    r = y - A @ z
    return 0.5 * float(r @ r) + lam * float(np.abs(z).sum()) \
        + 0.5 * tau_s * float(np.sum((x_tilde - z) ** 2))


def _prox(v, x_tilde, s, lam, tau_s):
    # argmin_z 1/2 (z - v)^2 + s*lam|z| + s*tau_s/2 (z - x_tilde)^2
    return soft_threshold((v + s * tau_s * x_tilde) / (1.0 + s * tau_s),
                          s * lam / (1.0 + s * tau_s))


def genp_lasso_prox(
    y: np.ndarray,
    A: np.ndarray,
    x_tilde: np.ndarray,
    config: ProxSolverConfig,
) -> ProxResult:
    """Minimize 1/2 ||y - Az||^2 + lam ||z||_1 + tau_s/2 ||x_tilde - z||^2 by
    (optionally accelerated) proximal gradient."""
    n = A.shape[1]
    s = config.step if config.step is not None else 0.99 / _spectral_norm_sq(A)
    z = np.zeros(n)
    z_prev = z
    t_mom = 1.0
    trace = [_objective(z, y, A, x_tilde, config.lam, config.tau_s)]
    converged = False
    iterations = 0
    for it in range(config.max_iters):
        v_point = z
        if config.accelerate and it > 0:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            v_point = z + ((t_mom - 1.0) / t_next) * (z - z_prev)
            t_mom = t_next
        grad = A.T @ (A @ v_point - y)
        z_new = _prox(v_point - s * grad, x_tilde, s, config.lam, config.tau_s)
        obj = _objective(z_new, y, A, x_tilde, config.lam, config.tau_s)
        trace.append(obj)
        step_norm = np.linalg.norm(z_new - z)
        z_prev, z = z, z_new
        iterations = it + 1
        if step_norm <= config.tol * max(np.linalg.norm(z_prev), 1.0):
            converged = True
            break
    kkt = kkt_residual(z, y, A, x_tilde, config.lam, config.tau_s)
    return ProxResult(x_hat=z, objective_trace=trace, iterations_run=iterations,
                      converged=converged, kkt=kkt)


def kkt_residual(z, y, A, x_tilde, lam, tau_s) -> float:
    """Max-norm violation of the stationarity condition
    lam*v + tau_s*(z - x_tilde) = A^T (y - Az), v in the l1 subgradient."""
    g = A.T @ (y - A @ z) - tau_s * (z - x_tilde)
    active = z != 0
    res = np.where(active, np.abs(g - lam * np.sign(z)), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(res)) if res.size else 0.0


def lmmse(
    y: np.ndarray,
    A: np.ndarray,
    x_tilde: np.ndarray,
    sigma2: float,
    sigma_s2: float,
    prior_second_moment: float,
) -> np.ndarray:
    """Linear MMSE estimate for the stacked system [y; x_tilde] = [A; I]x + noise,
    treating x as zero-mean with per-entry variance prior_second_moment."""
    if sigma2 <= 0 and sigma_s2 <= 0:
        raise ValueError("at least one noise variance must be positive")
    if prior_second_moment <= 0:
        raise ValueError("prior_second_moment must be positive")
    n = A.shape[1]
    if sigma_s2 == 0.0:
        return x_tilde.copy()
    # information form: (A^T A / sigma2 + I/sigma_s2 + I/C) x = A^T y / sigma2 + x_tilde / sigma_s2
    H = np.eye(n) * (1.0 / sigma_s2 + 1.0 / prior_second_moment)
    rhs = x_tilde / sigma_s2
    if A.shape[0] > 0 and sigma2 > 0:
        H += (A.T @ A) / sigma2
        rhs = rhs + (A.T @ y) / sigma2
    try:
        return np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"LMMSE system is singular: {exc}") from exc


def residual_amp(
    y: np.ndarray,
    A: np.ndarray,
    x_tilde: np.ndarray,
    alpha: float,
    max_iters: int = 60,
    x_true: np.ndarray | None = None,
) -> ReconstructionReport:
    """Run standard AMP on the residual measurements y - A x_tilde to recover
    the prior error, then add the correction back."""
    e_true = None if x_true is None else x_true - x_tilde
    report = amp_reconstruct(y - A @ x_tilde, A, alpha, max_iters=max_iters, x_true=e_true)
    report.x_hat = x_tilde + report.x_hat
    return report


def scalar_denoise(
    x_tilde: np.ndarray,
    sigma_s2: float,
    mode: str = "minimax",
    eps: float | None = None,
) -> np.ndarray:
    """Soft-threshold the prior estimate directly.

    minimax mode thresholds at alpha_pm(eps) * sigma_s; sure mode picks the
    threshold by SURE, needing no sparsity knowledge.
    """
    if sigma_s2 <= 0:
        return x_tilde.copy()
    if mode == "minimax":
        if eps is None:
            raise ValueError("minimax mode needs the sparsity eps")
        theta = minimax_threshold(eps).alpha_pm * math.sqrt(sigma_s2)
    elif mode == "sure":
        theta = sure_tuned_threshold(x_tilde, sigma_s2)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return soft_threshold(x_tilde, theta)
