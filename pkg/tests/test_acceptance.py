"""Acceptance gate: one test per release criterion, each reporting a single
pass/fail line (also echoed in the terminal summary).

Criteria 1 and 2 check the c -> 0 closed-form surfaces directly against the
published reference figures. Those figures were generated with the
nearly-least-favorable attenuation c = 0.02 baked into every column, so the
attenuation-free values sit a consistent ~2% high and the stated tolerances
cannot be met; the checks are kept literal and the failures are expected.
The resolved-interpretation checks (attenuation carried through every
formula) live in test_noise_sensitivity.py and pass to +/-2e-3.

Criterion 6's smallest prior-variance grid points are also expected to
fail: the prescribed geometry sits marginally above the no-prior phase
transition, where the pilot run's risk estimate carries an irreducible
finite-size bias (about 2% of the pilot MSE at n=2000) that exceeds the
stated relative tolerances when the true prior variance is small.
"""

import math
import os

import numpy as np
import pytest

from genpamp import experiments
from genpamp.amp import amp_reconstruct, fixed_point_params, genp_amp_reconstruct
from genpamp.baselines import ProxSolverConfig, genp_lasso_prox, kkt_residual
from genpamp.core import (
    NoiseModel,
    ProblemGeometry,
    ThreePointPrior,
    gen_instance,
    normal_cdf,
    normal_pdf,
)
from genpamp.noise_sensitivity import (
    denoise_bound,
    lasso_bound,
    minimax_params,
    minimax_risk,
)
from genpamp.parameterless import sure_risk
from genpamp.shrinkage import minimax_threshold, mse_three_point, soft_threshold
from genpamp.state_evolution import (
    alpha_min,
    mse_at_noise,
    npi,
    npi_optimal,
    optimal_u,
    predict_params,
)

RESULTS: dict[int, tuple[bool, str]] = {}
WORKERS = os.cpu_count() or 1

# published reference figures, gamma_s2 = 1, sigma2 = 1:
# (delta, rho) -> (h*, lambda*, tau*, fMSE GENP, fMSE no-prior, fMSE denoise)
TABLE1 = {
    (0.100, 0.095): (2.828, 2.585, 0.995, 0.033, 0.136, 0.058),
    (0.100, 0.142): (2.807, 2.359, 0.993, 0.047, 0.380, 0.079),
    (0.100, 0.170): (2.801, 2.256, 0.992, 0.055, 1.045, 0.090),
    (0.100, 0.180): (2.799, 2.223, 0.992, 0.058, 2.063, 0.094),
    (0.100, 1.900): (2.656, 0.919, 0.951, 0.405, math.inf, 0.486),
    (0.250, 0.134): (2.581, 2.025, 0.995, 0.086, 0.374, 0.150),
    (0.250, 0.201): (2.547, 1.796, 0.994, 0.120, 1.028, 0.201),
    (0.250, 0.241): (2.533, 1.694, 0.993, 0.139, 2.830, 0.228),
    (0.250, 0.254): (2.529, 1.663, 0.992, 0.145, 5.576, 0.236),
    (0.250, 1.900): (2.276, 0.511, 0.973, 0.619, math.inf, 0.797),
    (0.500, 0.193): (2.362, 1.512, 0.995, 0.182, 0.853, 0.315),
    (0.500, 0.289): (2.314, 1.279, 0.992, 0.245, 2.329, 0.410),
    (0.500, 0.347): (2.291, 1.172, 0.993, 0.280, 6.365, 0.459),
    (0.500, 0.366): (2.285, 1.140, 0.993, 0.291, 12.427, 0.475),
    (0.500, 1.900): (1.253, 0.047, 0.986, 0.689, math.inf, 0.978),
}
# delta = 0.1 column at gamma_s2 in {2, 4}: (gamma_s2, rho) -> (fMSE, fMSE DN)
TABLE2 = {
    (2.0, 0.095): (0.049, 0.115),
    (2.0, 0.142): (0.073, 0.157),
    (2.0, 0.170): (0.087, 0.181),
    (2.0, 0.180): (0.093, 0.189),
    (2.0, 1.900): (0.794, 0.971),
    (4.0, 0.095): (0.068, 0.231),
    (4.0, 0.142): (0.108, 0.315),
    (4.0, 0.170): (0.133, 0.361),
    (4.0, 0.180): (0.142, 0.377),
    (4.0, 1.900): (1.566, 1.942),
}


def record(num: int, failures: list[str], note: str = ""):
    ok = not failures
    detail = "; ".join(failures[:4]) + (note and f" [{note}]")
    RESULTS[num] = (ok, detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}")
    if failures:
        pytest.fail(f"criterion {num}: " + "; ".join(failures) +
                    (f"\n{note}" if note else ""), pytrace=False)


def test_criterion_1_closed_form_table1():
    failures = []
    for (d, r), (_, _, _, fg, fa, fd) in TABLE1.items():
        M = minimax_risk(d, r, 1.0)
        if abs(M - fg) > 0.002:
            failures.append(f"M*({d},{r})={M:.4f} vs {fg} (+/-0.002)")
        Mb = lasso_bound(d, r)
        if math.isinf(fa):
            if not math.isinf(Mb):
                failures.append(f"Mb({d},{r}) finite where reference is UB")
        elif abs(Mb - fa) > 0.005:
            failures.append(f"Mb({d},{r})={Mb:.4f} vs {fa} (+/-0.005)")
        Md = denoise_bound(d, r, 1.0)
        if abs(Md - fd) > 0.002:
            failures.append(f"Mdn({d},{r})={Md:.4f} vs {fd} (+/-0.002)")
    record(1, failures,
           "expected: reference figures carry the c=0.02 attenuation (and, for "
           "the no-prior column, a finite-amplitude fixed point below the "
           "supremum); the attenuation-free surfaces cannot hit them at these "
           "tolerances. Resolved-interpretation checks pass in "
           "test_noise_sensitivity.py.")


def test_criterion_2_closed_form_table2():
    failures = []
    for (g2, r), (fg, fd) in TABLE2.items():
        M = minimax_risk(0.1, r, g2)
        if abs(M - fg) > 0.003:
            failures.append(f"M*(0.1,{r},{g2})={M:.4f} vs {fg} (+/-0.003)")
        Md = denoise_bound(0.1, r, g2)
        if abs(Md - fd) > 0.005:
            failures.append(f"Mdn(0.1,{r},{g2})={Md:.4f} vs {fd} (+/-0.005)")
    record(2, failures,
           "expected: same c=0.02 attenuation as criterion 1; consistent-c "
           "checks pass in test_noise_sensitivity.py.")


def test_criterion_3_empirical_vs_predicted():
    rows = experiments.table_rows(
        geometries=list(TABLE1.keys()), gamma_s2_list=[1.0], n=2000, trials=20,
        seed=0, sigma2=1.0, c=0.02, iters=60, workers=WORKERS, with_lmmse=False)
    failures = []
    for row in rows:
        tol = max(0.005, 3.0 * row["stderr_genp_amp"])
        gap = abs(row["emse_genp_amp"] - row["fmse_genp_amp"])
        if gap > tol:
            failures.append(
                f"({row['delta']},{row['rho']}): |eMSE-fMSE|={gap:.4f} > {tol:.4f}")
    record(3, failures)


def test_criterion_4_regularization_sweep():
    rows = experiments.lambda_sweep_rows(
        delta=0.64, eps=0.128, mu=1.0, sigma2=0.2,
        gamma_s2_list=[1.0, 4.0, math.inf], n=2000, trials=10, seed=0,
        iters=60, workers=WORKERS)
    best = experiments.sweep_minima(rows)
    r4 = best[4.0]["mse_emp"] / best[math.inf]["mse_emp"]
    r1 = best[1.0]["mse_emp"] / best[math.inf]["mse_emp"]
    failures = []
    if not (0.72 <= r4 <= 0.88):
        failures.append(f"min ratio gamma_s2=4: {r4:.3f} not in 0.80+/-0.08")
    if not (0.42 <= r1 <= 0.58):
        failures.append(f"min ratio gamma_s2=1: {r1:.3f} not in 0.50+/-0.08")
    finite = [r for r in rows if math.isfinite(r["mse_emp"])]
    tracked = [r for r in finite
               if abs(r["mse_emp"] - r["mse_pred"]) <= 3.0 * r["stderr"]]
    frac = len(tracked) / len(finite)
    if frac < 0.9:
        failures.append(f"prediction tracks only {frac:.0%} of sweep points")
    record(4, failures)


def test_criterion_5_fixed_point_equivalence():
    failures = []
    for seed in range(5):
        g = ProblemGeometry.from_ratios(200, 0.5, 0.2)
        inst = gen_instance(g, NoiseModel(0.05, 1.0),
                            ThreePointPrior(g.eps, 3.0), seed)
        kkt_scale = float(np.max(np.abs(inst.A.T @ inst.y)))
        for alpha in (1.4, 1.6, 2.0):
            rep = genp_amp_reconstruct(inst.y, inst.A, inst.x_tilde, 1.0,
                                       alpha=alpha, max_iters=500, tol=1e-12)
            lam, tau_s = fixed_point_params(rep.theta_star, rep.u_star, rep.b_star)
            res = genp_lasso_prox(inst.y, inst.A, inst.x_tilde,
                                  ProxSolverConfig(lam=lam, tau_s=tau_s,
                                                   max_iters=40000, tol=1e-13))
            rel = np.linalg.norm(res.x_hat - rep.x_hat) \
                / max(np.linalg.norm(res.x_hat), 1e-30)
            kkt = kkt_residual(rep.x_hat, inst.y, inst.A, inst.x_tilde, lam, tau_s)
            if rel > 1e-3:
                failures.append(f"seed {seed} alpha {alpha}: rel l2 {rel:.2e}")
            if kkt > 1e-3 * kkt_scale:
                failures.append(f"seed {seed} alpha {alpha}: KKT {kkt:.2e}")
    record(5, failures)


def test_criterion_6_parameterless_suite():
    failures = []
    specs = [(20.0, 0.10, 0.05), (5.0, 0.15, 0.10)]
    for snr, var_tol, mse_tol in specs:
        rows = experiments.parameterless_rows(
            snr_db=snr, sigma_s2_grid=(2.0, 5.0, 10.0), delta=0.5, eps=0.2,
            amp_var=100.0, n=2000, trials=100, seed=0, iters=60, workers=WORKERS)
        for row in rows:
            tag = f"SNR={snr} sigma_s2={row['sigma_s2_true']}"
            var_err = abs(row["sigma_s2_hat_mean"] / row["sigma_s2_true"] - 1.0)
            if var_err > var_tol:
                failures.append(f"{tag}: var est off {var_err:.1%} > {var_tol:.0%}")
            mse_err = row["mse_p_genp_amp"] / row["mse_genp_amp"] - 1.0
            if mse_err > mse_tol:
                failures.append(f"{tag}: MSE over oracle by {mse_err:.1%} > {mse_tol:.0%}")
            if not row["mse_p_genp_amp"] < row["mse_amp"]:
                failures.append(f"{tag}: parameterless not below no-prior MSE")
    record(6, failures,
           "partially expected: this geometry (delta=0.5, eps=0.2, i.e. "
           "rho=0.4) sits marginally above the no-prior transition "
           "(rho_PT=0.386), where the pilot's risk estimate carries an "
           "irreducible finite-n bias of ~2% of the pilot MSE (~+0.2 at "
           "20 dB, ~+1 at 5 dB in sigma_s2 units); the smallest grid points "
           "cannot meet the stated relative tolerances at n=2000. "
           "Larger sigma_s2 points and the oracle-gap checks pass.")


def test_criterion_7_property_suites():
    failures = []
    rng = np.random.default_rng(0)

    # risk scale invariance
    prior = ThreePointPrior(eps=0.1, mu=2.5)
    base = mse_at_noise(1.0, prior, 1.4)
    for s2 in (0.25, 2.0, 9.0):
        scaled = mse_at_noise(s2, ThreePointPrior(0.1, 2.5 * math.sqrt(s2)), 1.4)
        if abs(scaled - s2 * base) > 1e-10 * s2 * base:
            failures.append(f"scale invariance broken at s2={s2}")

    # SURE unbiasedness over 100 noise realizations
    n, sigma_t2, theta = 3000, 0.5, 0.8
    signal = np.zeros(n)
    signal[:300] = 2.5
    diffs = []
    for _ in range(100):
        noisy = signal + rng.normal(0.0, math.sqrt(sigma_t2), size=n)
        truth = float(np.sum((soft_threshold(noisy, theta) - signal) ** 2)) / n
        diffs.append(sure_risk(noisy, theta, sigma_t2).r_hat_over_n - truth)
    stderr = float(np.std(diffs, ddof=1)) / 10.0
    if abs(float(np.mean(diffs))) > 3 * stderr:
        failures.append("SURE biased beyond 3 stderr")

    # effective-noise algebraic identity
    for q2 in (0.0, 0.3, 5.0):
        u = optimal_u(q2, 0.25, 1.0, 2.0)
        if abs(npi(q2, u, 0.25, 1.0, 2.0) - npi_optimal(q2, 0.25, 1.0, 2.0)) > 1e-12:
            failures.append(f"npi identity broken at q2={q2}")

    # quadratic-root identity for the risk surface
    for d, r, g2 in [(0.1, 0.095, 1.0), (0.5, 1.9, 4.0), (0.25, 0.5, 0.3)]:
        M = minimax_risk(d, r, g2)
        M_pm = minimax_threshold(d * r).M_pm
        G = d * g2 + d - g2 * M_pm
        if abs(M * M + G * M - d * g2 * M_pm) > 1e-10:
            failures.append(f"quadratic-root identity broken at ({d},{r},{g2})")

    # bounds and monotonicity over the 20 x 20 x 5 grid
    deltas = np.linspace(0.05, 0.95, 20)
    rhos = np.linspace(0.05, 1.0, 20)
    gammas = [0.25, 0.5, 1.0, 2.0, 4.0]
    for g2 in gammas:
        for d in deltas:
            for r in rhos:
                M = minimax_risk(float(d), float(r), g2)
                Mb = lasso_bound(float(d), float(r))
                Md = denoise_bound(float(d), float(r), g2)
                if not math.isfinite(M) or M > Md + 1e-9 or \
                        (math.isfinite(Mb) and M > Mb + 1e-9):
                    failures.append(f"bounds broken at ({d:.2f},{r:.2f},{g2})")
    for d, r in [(0.1, 0.5), (0.5, 0.5)]:
        vals = [minimax_risk(d, r, g) for g in gammas]
        if not all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])):
            failures.append(f"gamma monotonicity broken at ({d},{r})")
    for eps in (0.01, 0.2):
        vals = [minimax_risk(float(d), eps / float(d), 1.0)
                for d in np.linspace(0.05, 0.95, 15)]
        if not all(b <= a + 1e-12 for a, b in zip(vals, vals[1:])):
            failures.append(f"delta monotonicity broken at eps={eps}")

    # infinite prior variance collapses to the no-prior solver bitwise
    g = ProblemGeometry.from_ratios(800, 0.5, 0.2)
    inst = gen_instance(g, NoiseModel(0.05, 1.0), ThreePointPrior(g.eps, 3.0), 1)
    plain = amp_reconstruct(inst.y, inst.A, 1.5, max_iters=30)
    aided = genp_amp_reconstruct(inst.y, inst.A, inst.x_tilde, math.inf,
                                 alpha=1.5, max_iters=30)
    if not np.array_equal(plain.x_hat, aided.x_hat):
        failures.append("no-prior collapse is not bitwise")

    # threshold lower bound defining equation
    for d, g2 in [(0.64, 1.0), (0.64, math.inf), (0.25, math.inf)]:
        a = alpha_min(d, g2)
        rhs = d / 2.0 if math.isinf(g2) else (d / 2.0) * (g2 + 1.0) ** 2 / g2**2
        if a > 0.0:
            lhs = (1 + a * a) * normal_cdf(-a) - a * normal_pdf(a)
            if abs(lhs - rhs) > 1e-12:
                failures.append(f"alpha_min residual at ({d},{g2})")
    record(7, failures)


def test_criterion_8_tuning_self_consistency_and_c_sweep():
    failures = []
    # the formal tuning recomputed from the realized fixed point must satisfy
    # the convex-equivalence relations
    from genpamp.shrinkage import expected_derivative
    for d, r in [(0.1, 0.095), (0.25, 0.201), (0.5, 1.9)]:
        p = minimax_params(d, r, 1.0, 1.0, 0.02)
        prior = ThreePointPrior(d * r, p.h_star)
        pred = predict_params(p.alpha_pm, d, 1.0, 1.0, prior)
        u, xi2 = pred.u_star, pred.xi_star2
        eta_p = expected_derivative(prior.eps, prior.mu / math.sqrt(xi2), p.alpha_pm)
        shrink = 1.0 - eta_p / ((1.0 + u) * d)
        if abs(pred.lam - (1 + u) * p.alpha_pm * math.sqrt(xi2) * shrink) > 1e-6:
            failures.append(f"lambda relation violated at ({d},{r})")
        if abs(pred.tau_s - u * shrink) > 1e-6:
            failures.append(f"tau relation violated at ({d},{r})")

    # best-effort sweep: some attenuation c reproduces the printed tuning
    # columns within 5% across the whole reference table
    best_c, best_dev = None, math.inf
    for c in (0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.05, 0.1):
        dev = 0.0
        for (d, r), (h, lam, tau, *_rest) in TABLE1.items():
            try:
                p = minimax_params(d, r, 1.0, 1.0, c)
            except RuntimeError:
                # at dense corners a large c leaves no attenuated amplitude
                dev = math.inf
                break
            dev = max(dev,
                      abs(p.h_star / h - 1.0),
                      abs(p.lam_star - lam) / max(abs(lam), 0.05),
                      abs(p.tau_star / tau - 1.0))
        if dev < best_dev:
            best_c, best_dev = c, dev
    if best_dev > 0.05:
        failures.append(f"no c in sweep lands within 5% (best c={best_c}, "
                        f"max deviation {best_dev:.1%})")
    record(8, failures)
