"""Sparse recovery from noisy linear measurements plus a noisy initial
estimate of the signal: AMP-style solvers, their deterministic state-evolution
predictions, closed-form minimax risk surfaces, SURE-based parameterless
tuning, and reference baselines.
"""

from .amp import (
    DivergenceError,
    ReconstructionReport,
    amp_reconstruct,
    equilibrium_detection_rate,
    fixed_point_params,
    genp_amp_reconstruct,
)
from .core import (
    GaussianAmplitudePrior,
    NoiseModel,
    ProblemGeometry,
    ProblemInstance,
    ThreePointPrior,
    gaussian_matrix,
    gen_instance,
    normal_cdf,
    normal_pdf,
    trial_seed,
)
from .noise_sensitivity import (
    RiskSurfacePoint,
    denoise_bound,
    lasso_bound,
    max_minimax_risk,
    minimax_params,
    minimax_risk,
    nearly_least_favorable_fmse,
    npi_star,
    risk_surface_sweep,
)
from .parameterless import (
    PriorVarianceEstimate,
    SureEstimate,
    estimate_prior_variance,
    p_genp_amp,
    sure_risk,
    sure_tuned_threshold,
)
from .shrinkage import (
    MinimaxResult,
    least_favorable_amplitude,
    minimax_threshold,
    mse_three_point,
    soft_threshold,
    soft_threshold_derivative,
    sup_mse,
)
from .state_evolution import (
    SePoint,
    SePrediction,
    alpha_min,
    mse_map_psi,
    npi,
    optimal_u,
    predict_params,
    se_iterate,
    xi_fixed_point,
)

__version__ = "0.1.0"
