import math

import numpy as np
import pytest

from genpamp.core import (
    NoiseModel,
    ProblemGeometry,
    ThreePointPrior,
    gen_instance,
    normal_cdf,
    normal_pdf,
)
from genpamp.shrinkage import minimax_threshold, soft_threshold
from genpamp.state_evolution import (
    FixedPointError,
    alpha_min,
    mse_at_noise,
    npi,
    npi_optimal,
    optimal_u,
    predict_params,
    se_iterate,
    xi_fixed_point,
)


def test_npi_endpoints():
    assert npi(2.0, 0.0, 0.5, 1.0, 3.0) == pytest.approx(1.0 + 2.0 / 0.5)
    assert npi(2.0, math.inf, 0.5, 1.0, 3.0) == 3.0


def test_npi_optimal_algebraic_identity():
    # plugging the optimal weight into the two-term form must give the
    # harmonic combination exactly
    for q2 in (0.0, 0.3, 5.0):
        for sigma_s2 in (0.5, 2.0, 10.0):
            u = optimal_u(q2, 0.25, 1.0, sigma_s2)
            assert npi(q2, u, 0.25, 1.0, sigma_s2) == pytest.approx(
                npi_optimal(q2, 0.25, 1.0, sigma_s2), abs=1e-12)


def test_optimal_u_minimizes_npi():
    q2, delta, sigma2, sigma_s2 = 0.7, 0.5, 1.0, 2.0
    u_star = optimal_u(q2, delta, sigma2, sigma_s2)
    best = npi(q2, u_star, delta, sigma2, sigma_s2)
    for u in np.linspace(0.0, 5.0, 51):
        assert npi(q2, float(u), delta, sigma2, sigma_s2) >= best - 1e-12


def test_npi_optimal_degenerate():
    assert npi_optimal(1.0, 0.5, 1.0, math.inf) == pytest.approx(3.0)
    assert npi_optimal(1.0, 0.5, 1.0, 0.0) == 0.0
    assert npi_optimal(math.inf, 0.5, 1.0, 2.0) == 2.0


def test_mse_scale_invariance():
    prior = ThreePointPrior(eps=0.1, mu=2.5)
    base = mse_at_noise(1.0, prior, 1.4)
    for s2 in (0.25, 2.0, 9.0):
        scaled_prior = ThreePointPrior(eps=0.1, mu=2.5 * math.sqrt(s2))
        assert mse_at_noise(s2, scaled_prior, 1.4) == pytest.approx(
            s2 * base, rel=1e-10)
    assert mse_at_noise(0.0, prior, 1.4) == 0.0


def test_alpha_min_defining_equation():
    for delta, gamma_s2 in [(0.64, 1.0), (0.64, 4.0), (0.64, math.inf),
                            (0.25, math.inf), (0.1, 10.0)]:
        a = alpha_min(delta, gamma_s2)
        rhs = delta / 2.0 if math.isinf(gamma_s2) else \
            (delta / 2.0) * (gamma_s2 + 1.0) ** 2 / gamma_s2**2
        if a == 0.0:
            assert rhs >= 0.5
        else:
            lhs = (1 + a * a) * normal_cdf(-a) - a * normal_pdf(a)
            assert abs(lhs - rhs) <= 1e-12


def test_alpha_min_zero_when_prior_strong():
    # a strong prior removes the uniqueness constraint entirely
    assert alpha_min(1.0, math.inf) == 0.0
    assert alpha_min(0.9, 0.5) == 0.0


def test_xi_fixed_point_residual():
    prior = ThreePointPrior(eps=0.128, mu=1.0)
    for sigma_s2 in (0.2, 0.8, math.inf):
        xi2 = xi_fixed_point(1.5, 0.64, 0.2, sigma_s2, prior)
        mse = mse_at_noise(xi2, prior, 1.5)
        v = 0.2 + mse / 0.64
        target = v if math.isinf(sigma_s2) else sigma_s2 * v / (sigma_s2 + v)
        assert xi2 == pytest.approx(target, rel=1e-10)


def test_xi_fixed_point_below_alpha_min_raises():
    prior = ThreePointPrior(eps=0.128, mu=1.0)
    bad = alpha_min(0.64, math.inf) * 0.5
    with pytest.raises(FixedPointError):
        xi_fixed_point(bad, 0.64, 0.2, math.inf, prior)


def test_se_iterate_agrees_with_fixed_point():
    prior = ThreePointPrior(eps=0.128, mu=1.0)
    for sigma_s2 in (0.2, math.inf):
        pred = se_iterate(prior, 1.5, 0.64, 0.2, sigma_s2)
        assert pred.converged
        xi2 = xi_fixed_point(1.5, 0.64, 0.2, sigma_s2, prior)
        assert pred.xi_star2 == pytest.approx(xi2, rel=1e-8)
        assert pred.q_star2 == pytest.approx(mse_at_noise(xi2, prior, 1.5), rel=1e-8)


def test_se_iterate_divergence_above_transition():
    # no prior, sparsity far above the transition: the recursion blows up
    prior = ThreePointPrior(eps=0.19, mu=2.66)
    mm = minimax_threshold(0.19)
    pred = se_iterate(prior, mm.alpha_pm, 0.1, 1.0, math.inf)
    assert math.isinf(pred.q_star2)
    assert not pred.converged


def test_predict_params_matches_fixed_point_relations():
    prior = ThreePointPrior(eps=0.128, mu=1.0)
    pred = predict_params(1.5, 0.64, 0.2, 0.8, prior)
    u, xi2 = pred.u_star, pred.xi_star2
    from genpamp.shrinkage import expected_derivative
    eta_p = expected_derivative(prior.eps, prior.mu / math.sqrt(xi2), 1.5)
    shrink = 1.0 - eta_p / ((1.0 + u) * 0.64)
    assert pred.lam == pytest.approx((1 + u) * 1.5 * math.sqrt(xi2) * shrink, rel=1e-12)
    assert pred.tau_s == pytest.approx(u * shrink, rel=1e-12)
    # no prior: tau_s vanishes
    pred_inf = predict_params(1.5, 0.64, 0.2, math.inf, prior)
    assert pred_inf.tau_s == 0.0
    assert pred_inf.u_star == 0.0


def test_se_matches_monte_carlo_first_iteration():
    # one solver step from x=0: x_hat0 = x + A^T r has effective noise
    # sigma2 + E||x||^2/delta around the truth; the SE first step predicts
    # the post-threshold MSE
    n, delta, sigma2 = 6000, 0.5, 0.5
    prior = ThreePointPrior(eps=0.1, mu=2.0)
    alpha = 1.5
    geometry = ProblemGeometry.from_ratios(n, delta, prior.eps / delta)
    noise = NoiseModel(sigma2, math.inf)
    mses = []
    for seed in range(4):
        inst = gen_instance(geometry, noise, prior, seed)
        x_hat0 = inst.A.T @ inst.y
        tau2 = sigma2 + prior.second_moment / delta
        x1 = soft_threshold(x_hat0, alpha * math.sqrt(tau2))
        mses.append(float(np.sum((x1 - inst.x0) ** 2)) / n)
    q0 = prior.second_moment
    predicted = mse_at_noise(npi_optimal(q0, delta, sigma2, math.inf), prior, alpha)
    mean = float(np.mean(mses))
    stderr = float(np.std(mses, ddof=1)) / math.sqrt(len(mses))
    assert abs(mean - predicted) < max(4 * stderr, 0.01)
