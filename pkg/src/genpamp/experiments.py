"""Monte-Carlo experiment harness behind the CLI: benchmark tables over the
sampling plane, the regularization-sweep comparison, the parameterless-tuning
study, and closed-form risk-surface sweeps.

Every experiment derives per-trial seeds as (master seed, trial index), so
results are reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import baselines, noise_sensitivity, parameterless, state_evolution
from .amp import DivergenceError, amp_reconstruct, genp_amp_reconstruct
from .core import (
    GaussianAmplitudePrior,
    NoiseModel,
    ProblemGeometry,
    ThreePointPrior,
    gen_instance,
    trial_seed,
)
from .shrinkage import least_favorable_amplitude, minimax_threshold

# benchmark geometries: (delta, rho) pairs spanning the sampling plane,
# including points above the no-prior phase transition (rho = 1.9)
TABLE1_GEOMETRIES = [
    (0.100, 0.095), (0.100, 0.142), (0.100, 0.170), (0.100, 0.180), (0.100, 1.900),
    (0.250, 0.134), (0.250, 0.201), (0.250, 0.241), (0.250, 0.254), (0.250, 1.900),
    (0.500, 0.193), (0.500, 0.289), (0.500, 0.347), (0.500, 0.366), (0.500, 1.900),
]
TABLE2_GEOMETRIES = [
    (0.100, 0.095), (0.100, 0.142), (0.100, 0.170), (0.100, 0.180), (0.100, 1.900),
]


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, stderr


# ---------------------------------------------------------------------------
# benchmark tables

def _table_trial(args: dict) -> dict:
    """One seed of the sampling-plane benchmark.

    Each method is scored on its own nearly-least-favorable signal: the
    amplitude scales with the effective noise that method equilibrates at
    (sharing the seed keeps support, signs, matrix and noise identical, so
    only the amplitude differs).
    """
    geometry = ProblemGeometry(**args["geometry"])
    noise = NoiseModel(**args["noise"])
    prior = ThreePointPrior(**args["prior"])
    inst = gen_instance(geometry, noise, prior, args["seed"])
    alpha = args["alpha"]
    iters = args["iters"]
    out: dict[str, float] = {}

    genp = genp_amp_reconstruct(
        inst.y, inst.A, inst.x_tilde, sigma_s2=noise.sigma_s2,
        alpha=alpha, max_iters=iters, x_true=inst.x0,
    )
    out["genp_amp"] = genp.final_mse

    mu_amp = args.get("mu_amp")
    inst_amp = inst if mu_amp is None else gen_instance(
        geometry, noise, ThreePointPrior(eps=prior.eps, mu=mu_amp), args["seed"])
    try:
        amp = amp_reconstruct(inst_amp.y, inst_amp.A, alpha, max_iters=iters,
                              x_true=inst_amp.x0)
        out["amp"] = amp.final_mse
    except DivergenceError:
        out["amp"] = math.inf

    mu_dn = args.get("mu_dn")
    inst_dn = inst if mu_dn is None else gen_instance(
        geometry, noise, ThreePointPrior(eps=prior.eps, mu=mu_dn), args["seed"])
    dn = baselines.scalar_denoise(inst_dn.x_tilde, noise.sigma_s2, mode="minimax",
                                  eps=geometry.eps)
    out["dn"] = float(np.sum((dn - inst_dn.x0) ** 2)) / geometry.n

    if args.get("lmmse", True):
        lm = baselines.lmmse(inst.y, inst.A, inst.x_tilde, noise.sigma2,
                             noise.sigma_s2, prior.second_moment)
        out["lmmse"] = float(np.sum((lm - inst.x0) ** 2)) / geometry.n
    return out


def table_rows(
    geometries=TABLE1_GEOMETRIES,
    gamma_s2_list=(1.0,),
    n: int = 2000,
    trials: int = 20,
    seed: int = 0,
    sigma2: float = 1.0,
    c: float = 0.02,
    iters: int = 60,
    workers: int = 1,
    with_lmmse: bool = True,
) -> list[dict]:
    """Closed-form and empirical MSE columns for each (delta, rho, gamma_s2)."""
    rows = []
    for gamma_s2 in gamma_s2_list:
        for delta, rho in geometries:
            eps = delta * rho
            mm = minimax_threshold(eps)
            params = noise_sensitivity.minimax_params(delta, rho, gamma_s2, sigma2, c)
            fmse_genp = sigma2 * noise_sensitivity.nearly_least_favorable_fmse(
                delta, rho, gamma_s2, c, consistent=True)
            M_lasso = noise_sensitivity.lasso_bound(delta, rho)
            h_pm = least_favorable_amplitude(eps, c)
            geometry = ProblemGeometry.from_ratios(n, delta, rho)
            noise = NoiseModel.from_gamma(sigma2, gamma_s2)
            prior = ThreePointPrior(eps=geometry.eps, mu=params.h_star)

            # the no-prior solver and scalar denoising equilibrate at their own
            # effective noise, so their least-favorable amplitudes differ
            if math.isinf(M_lasso):
                mu_amp, fmse_amp = None, math.inf
            else:
                mu_amp = h_pm * math.sqrt(sigma2 * (1.0 + M_lasso / delta))
                amp_se = state_evolution.se_iterate(
                    ThreePointPrior(eps=geometry.eps, mu=mu_amp),
                    mm.alpha_pm, delta, sigma2, math.inf)
                fmse_amp = amp_se.q_star2
            mu_dn = h_pm * math.sqrt(noise.sigma_s2)
            fmse_dn = (1.0 - c) * mm.M_pm * gamma_s2 * sigma2

            args = [{
                "geometry": {"n": geometry.n, "m": geometry.m, "k": geometry.k},
                "noise": {"sigma2": noise.sigma2, "sigma_s2": noise.sigma_s2},
                "prior": {"eps": prior.eps, "mu": prior.mu},
                "alpha": mm.alpha_pm,
                "iters": iters,
                "seed": trial_seed(seed, t),
                "lmmse": with_lmmse,
                "mu_amp": mu_amp,
                "mu_dn": mu_dn,
            } for t in range(trials)]
            results = _parallel_map(_table_trial, args, workers)

            emse_genp, se_genp = _mean_stderr([r["genp_amp"] for r in results])
            amp_vals = [r["amp"] for r in results]
            amp_diverged = any(math.isinf(v) for v in amp_vals)
            emse_amp, se_amp = (math.inf, 0.0) if amp_diverged else _mean_stderr(amp_vals)
            emse_dn, se_dn = _mean_stderr([r["dn"] for r in results])
            row = {
                "delta": delta, "rho": rho, "gamma_s2": gamma_s2,
                "h_star": params.h_star,
                "lambda_star": params.lam_star, "tau_star": params.tau_star,
                "fmse_genp_amp": fmse_genp,
                "emse_genp_amp": emse_genp, "stderr_genp_amp": se_genp,
                "fmse_amp": fmse_amp,
                "emse_amp": emse_amp, "stderr_amp": se_amp,
                "fmse_dn": fmse_dn,
                "emse_dn": emse_dn, "stderr_dn": se_dn,
            }
            if with_lmmse:
                row["emse_lmmse"], row["stderr_lmmse"] = _mean_stderr(
                    [r["lmmse"] for r in results])
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# regularization sweep (predicted vs empirical MSE as lambda varies)

def _sweep_trial(args: dict) -> float:
    geometry = ProblemGeometry(**args["geometry"])
    noise = NoiseModel(**args["noise"])
    prior = ThreePointPrior(**args["prior"])
    inst = gen_instance(geometry, noise, prior, args["seed"])
    rep = genp_amp_reconstruct(
        inst.y, inst.A, inst.x_tilde, sigma_s2=noise.sigma_s2,
        alpha=args["alpha"], max_iters=args["iters"], x_true=inst.x0,
    )
    return rep.final_mse


def lambda_sweep_rows(
    delta: float = 0.64,
    eps: float = 0.128,
    mu: float = 1.0,
    sigma2: float = 0.2,
    gamma_s2_list=(1.0, 4.0, math.inf),
    n: int = 2000,
    trials: int = 10,
    seed: int = 0,
    iters: int = 60,
    alpha_points: int = 14,
    workers: int = 1,
) -> list[dict]:
    """Sweep the threshold multiplier (equivalently the l1 weight) and report
    predicted and empirical MSE per point, for several prior quality levels."""
    prior = ThreePointPrior(eps=eps, mu=mu)
    geometry = ProblemGeometry.from_ratios(n, delta, eps / delta)
    rows = []
    for gamma_s2 in gamma_s2_list:
        noise = NoiseModel.from_gamma(sigma2, gamma_s2)
        a_min = state_evolution.alpha_min(delta, gamma_s2)
        alphas = np.linspace(a_min + 0.25, 3.0, alpha_points)
        for alpha in alphas:
            pred = state_evolution.predict_params(
                float(alpha), delta, sigma2, noise.sigma_s2, prior)
            args = [{
                "geometry": {"n": geometry.n, "m": geometry.m, "k": geometry.k},
                "noise": {"sigma2": noise.sigma2, "sigma_s2": noise.sigma_s2},
                "prior": {"eps": prior.eps, "mu": prior.mu},
                "alpha": float(alpha),
                "iters": iters,
                "seed": trial_seed(seed, t),
            } for t in range(trials)]
            try:
                mses = _parallel_map(_sweep_trial, args, workers)
                emp, stderr = _mean_stderr(mses)
            except DivergenceError:
                emp, stderr = math.inf, 0.0
            rows.append({
                "gamma_s2": gamma_s2,
                "alpha": float(alpha),
                "lambda": pred.lam,
                "mse_pred": pred.q_star2,
                "mse_emp": emp,
                "stderr": stderr,
            })
    return rows


def sweep_minima(rows: list[dict]) -> dict[float, dict]:
    """Per gamma_s2, the sweep point with the smallest empirical MSE."""
    best: dict[float, dict] = {}
    for row in rows:
        g = row["gamma_s2"]
        if g not in best or row["mse_emp"] < best[g]["mse_emp"]:
            best[g] = row
    return best


# ---------------------------------------------------------------------------
# parameterless study

def sigma2_for_snr(snr_db: float, eps: float, delta: float, amp_var: float) -> float:
    """Measurement-noise variance hitting the target SNR in expectation,
    using E||Ax||^2/m = eps * amp_var / delta."""
    signal_power = eps * amp_var / delta
    return signal_power / 10.0 ** (snr_db / 10.0)


def _parameterless_trial(args: dict) -> dict:
    geometry = ProblemGeometry(**args["geometry"])
    noise = NoiseModel(**args["noise"])
    prior = GaussianAmplitudePrior(**args["prior"])
    inst = gen_instance(geometry, noise, prior, args["seed"])
    iters = args["iters"]
    n = geometry.n

    def mse(x_hat):
        return float(np.sum((x_hat - inst.x0) ** 2)) / n

    out: dict[str, float] = {}
    oracle, _ = parameterless.p_genp_amp(
        inst.y, inst.A, inst.x_tilde, max_iters=iters, sigma_s2=noise.sigma_s2)
    out["oracle"] = mse(oracle.x_hat)

    auto, est = parameterless.p_genp_amp(inst.y, inst.A, inst.x_tilde, max_iters=iters)
    out["pgenp"] = mse(auto.x_hat)
    out["sigma_s2_hat"] = est.sigma_s2_hat
    out["unreliable"] = 0.0 if est.reliable else 1.0

    faked, _ = parameterless.p_genp_amp(
        inst.y, inst.A, inst.x_tilde, max_iters=iters, sigma_s2=None, method="faked")
    out["faked"] = mse(faked.x_hat)

    try:
        amp = parameterless.sure_amp(inst.y, inst.A, max_iters=iters, x_true=inst.x0)
        out["amp"] = amp.final_mse
    except DivergenceError:
        out["amp"] = math.inf
    return out


def parameterless_rows(
    snr_db: float = 20.0,
    sigma_s2_grid=(2.0, 5.0, 10.0),
    delta: float = 0.5,
    eps: float = 0.2,
    amp_var: float = 100.0,
    n: int = 2000,
    trials: int = 100,
    seed: int = 0,
    iters: int = 60,
    workers: int = 1,
) -> list[dict]:
    """Prior-variance estimation accuracy and end-to-end MSE per grid point."""
    sigma2 = sigma2_for_snr(snr_db, eps, delta, amp_var)
    geometry = ProblemGeometry.from_ratios(n, delta, eps / delta)
    rows = []
    for sigma_s2 in sigma_s2_grid:
        args = [{
            "geometry": {"n": geometry.n, "m": geometry.m, "k": geometry.k},
            "noise": {"sigma2": sigma2, "sigma_s2": sigma_s2},
            "prior": {"eps": geometry.eps, "amp_var": amp_var},
            "iters": iters,
            "seed": trial_seed(seed, t),
        } for t in range(trials)]
        results = _parallel_map(_parameterless_trial, args, workers)

        hat_mean, hat_se = _mean_stderr([r["sigma_s2_hat"] for r in results])
        mse_oracle, se_oracle = _mean_stderr([r["oracle"] for r in results])
        mse_pgenp, se_pgenp = _mean_stderr([r["pgenp"] for r in results])
        mse_faked, _ = _mean_stderr([r["faked"] for r in results])
        amp_vals = [r["amp"] for r in results]
        mse_amp = math.inf if any(math.isinf(v) for v in amp_vals) \
            else _mean_stderr(amp_vals)[0]
        rows.append({
            "snr_db": snr_db,
            "sigma_s2_true": sigma_s2,
            "sigma_s2_hat_mean": hat_mean,
            "sigma_s2_hat_ci95": 1.96 * hat_se,
            "mse_genp_amp": mse_oracle,
            "stderr_genp_amp": se_oracle,
            "mse_p_genp_amp": mse_pgenp,
            "stderr_p_genp_amp": se_pgenp,
            "mse_p_genp_amp_faked": mse_faked,
            "mse_amp": mse_amp,
            "unreliable_count": int(sum(r["unreliable"] for r in results)),
        })
    return rows


# ---------------------------------------------------------------------------
# single-instance runs and pure prediction

def run_single(
    n: int,
    delta: float,
    rho: float,
    gamma_s2: float,
    sigma2: float,
    mu: float,
    seed: int,
    alpha: float | None,
    iters: int,
    tol: float,
    method: str = "genp-amp",
) -> dict:
    geometry = ProblemGeometry.from_ratios(n, delta, rho)
    noise = NoiseModel.from_gamma(sigma2, gamma_s2)
    prior = ThreePointPrior(eps=geometry.eps, mu=mu)
    inst = gen_instance(geometry, noise, prior, seed)
    if alpha is None:
        alpha = minimax_threshold(geometry.eps).alpha_pm

    if method == "genp-amp":
        rep = genp_amp_reconstruct(inst.y, inst.A, inst.x_tilde, noise.sigma_s2,
                                   alpha=alpha, max_iters=iters, tol=tol, x_true=inst.x0)
    elif method == "amp":
        rep = amp_reconstruct(inst.y, inst.A, alpha, max_iters=iters, tol=tol,
                              x_true=inst.x0)
    elif method == "p-genp-amp":
        rep, _ = parameterless.p_genp_amp(inst.y, inst.A, inst.x_tilde,
                                          max_iters=iters, x_true=inst.x0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return {
        "geometry": {"n": geometry.n, "m": geometry.m, "k": geometry.k},
        "noise": {"sigma2": noise.sigma2, "sigma_s2": noise.sigma_s2},
        "seed": seed,
        "alpha": alpha,
        "mse": rep.final_mse,
        "iterations_run": rep.iterations_run,
        "converged": rep.converged,
        "mse_trace": rep.mse_trace,
        "npi_trace": rep.npi_trace,
    }


def predict_single(
    delta: float,
    rho: float,
    gamma_s2: float,
    sigma2: float,
    mu: float | None,
    alpha: float | None,
    c: float,
) -> dict:
    eps = delta * rho
    if alpha is None:
        alpha = minimax_threshold(eps).alpha_pm
    if mu is None:
        params = noise_sensitivity.minimax_params(delta, rho, gamma_s2, sigma2, c)
        mu = params.h_star
    prior = ThreePointPrior(eps=eps, mu=mu)
    noise = NoiseModel.from_gamma(sigma2, gamma_s2)
    pred = state_evolution.predict_params(alpha, delta, sigma2, noise.sigma_s2, prior)
    return {
        "delta": delta, "rho": rho, "gamma_s2": gamma_s2, "sigma2": sigma2,
        "alpha": alpha, "mu": mu,
        "q_star2": pred.q_star2, "xi_star2": pred.xi_star2,
        "u_star": pred.u_star, "lambda": pred.lam, "tau_s": pred.tau_s,
        "alpha_min": state_evolution.alpha_min(delta, gamma_s2),
    }
