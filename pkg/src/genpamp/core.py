"""Problem-instance generation, geometry bookkeeping, and shared numerics.

All randomness flows through numpy's SeedSequence machinery: a master seed
plus a fixed stream index yields an independent, reproducible substream, so
the sensing matrix, signal support, measurement noise, and prior noise can
each be regenerated in isolation.  Monte-Carlo trials derive their seeds as
(master seed, trial index) and are therefore reproducible under any degree
of parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

SQRT_2PI = math.sqrt(2.0 * math.pi)

# substream indices under the master seed
_STREAM_MATRIX = 0
_STREAM_SIGNAL = 1
_STREAM_MEASUREMENT_NOISE = 2
_STREAM_PRIOR_NOISE = 3


def normal_pdf(z):
    """Standard normal density phi(z)."""
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / SQRT_2PI
    return out if out.ndim else float(out)


def normal_cdf(z):
    """Standard normal distribution function Phi(z)."""
    z = np.asarray(z, dtype=float)
    out = ndtr(z)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ProblemGeometry:
    """Counts (n, m, k) with the derived ratios delta = m/n, rho = k/m.

    rho may exceed 1: recovery with a prior estimate remains meaningful when
    the sparsity exceeds the number of measurements.
    """

    n: int
    m: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def delta(self) -> float:
        return self.m / self.n

    @property
    def rho(self) -> float:
        return self.k / self.m

    @property
    def eps(self) -> float:
        return self.k / self.n

    @classmethod
    def from_ratios(cls, n: int, delta: float, rho: float) -> "ProblemGeometry":
        """Build from (n, delta, rho), rounding m = n*delta and k = m*rho to
        the nearest integers.  The stored ratios are the realized ones."""
        m = round(n * delta)
        k = round(n * delta * rho)
        return cls(n=n, m=m, k=k)


@dataclass(frozen=True)
class NoiseModel:
    """Measurement-noise variance sigma2 and prior-noise variance sigma_s2.

    gamma_s2 = sigma_s2 / sigma2 is the quality ratio of the prior estimate:
    0 means a perfect prior, +inf means no usable prior.
    """

    sigma2: float
    sigma_s2: float

    def __post_init__(self):
        if self.sigma2 < 0 or self.sigma_s2 < 0:
            raise ValueError("variances must be nonnegative")

    @property
    def gamma_s2(self) -> float:
        if math.isinf(self.sigma_s2):
            return math.inf
        if self.sigma2 == 0.0:
            return math.inf if self.sigma_s2 > 0 else 0.0
        return self.sigma_s2 / self.sigma2

    @classmethod
    def from_gamma(cls, sigma2: float, gamma_s2: float) -> "NoiseModel":
        return cls(sigma2=sigma2, sigma_s2=gamma_s2 * sigma2)


@dataclass(frozen=True)
class ThreePointPrior:
    """Sparse signal law (1-eps)*delta_0 + (eps/2)*delta_{+mu} + (eps/2)*delta_{-mu}.

    mu = +inf denotes the worst-case law with its nonzero mass at infinity.
    """

    eps: float
    mu: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    @property
    def second_moment(self) -> float:
        return self.eps * self.mu**2

    def sample_nonzeros(self, k: int, rng: np.random.Generator) -> np.ndarray:
        signs = rng.integers(0, 2, size=k) * 2 - 1
        return self.mu * signs.astype(float)


@dataclass(frozen=True)
class GaussianAmplitudePrior:
    """Sparse signal with nonzero entries drawn i.i.d. N(0, amp_var)."""

    eps: float
    amp_var: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if not self.amp_var > 0:
            raise ValueError(f"amp_var must be positive, got {self.amp_var}")

    @property
    def second_moment(self) -> float:
        return self.eps * self.amp_var

    def sample_nonzeros(self, k: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(0.0, math.sqrt(self.amp_var), size=k)


SignalSpec = ThreePointPrior | GaussianAmplitudePrior


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """m-by-n sensing matrix with i.i.d. N(0, 1/m) entries, deterministic in seed."""
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be positive, got ({m}, {n})")
    rng = _stream(seed, _STREAM_MATRIX)
    return rng.normal(0.0, 1.0 / math.sqrt(m), size=(m, n))


@dataclass
class ProblemInstance:
    """A realized sensing problem: y = A x0 + w plus the prior x_tilde = x0 + e.

    w and e come from independent substreams of the seed, so regenerating
    with a different sigma_s2 leaves (A, x0, y) untouched.
    """

    x0: np.ndarray
    A: np.ndarray
    y: np.ndarray
    x_tilde: np.ndarray
    geometry: ProblemGeometry
    noise: NoiseModel
    signal_spec: SignalSpec
    seed: int

    def to_json(self) -> str:
        spec = self.signal_spec
        if isinstance(spec, ThreePointPrior):
            spec_doc = {"kind": "three_point", "eps": spec.eps, "mu": spec.mu}
        else:
            spec_doc = {"kind": "gaussian", "eps": spec.eps, "amp_var": spec.amp_var}
        doc = {
            "geometry": {"n": self.geometry.n, "m": self.geometry.m, "k": self.geometry.k},
            "noise": {"sigma2": self.noise.sigma2, "sigma_s2": self.noise.sigma_s2},
            "signal_spec": spec_doc,
            "seed": self.seed,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        doc = json.loads(text)
        geometry = ProblemGeometry(**doc["geometry"])
        noise = NoiseModel(**doc["noise"])
        spec_doc = doc["signal_spec"]
        if spec_doc["kind"] == "three_point":
            spec = ThreePointPrior(eps=spec_doc["eps"], mu=spec_doc["mu"])
        else:
            spec = GaussianAmplitudePrior(eps=spec_doc["eps"], amp_var=spec_doc["amp_var"])
        return gen_instance(geometry, noise, spec, doc["seed"])


def gen_instance(
    geometry: ProblemGeometry,
    noise: NoiseModel,
    signal_spec: SignalSpec,
    seed: int,
) -> ProblemInstance:
    """Generate a problem instance with exact-k support chosen uniformly at random."""
    n, m, k = geometry.n, geometry.m, geometry.k
    if k > n:
        raise ValueError(f"sparsity k={k} exceeds dimension n={n}")

    A = gaussian_matrix(m, n, seed)

    sig_rng = _stream(seed, _STREAM_SIGNAL)
    x0 = np.zeros(n)
    if k > 0:
        support = sig_rng.permutation(n)[:k]
        x0[support] = signal_spec.sample_nonzeros(k, sig_rng)

    w_rng = _stream(seed, _STREAM_MEASUREMENT_NOISE)
    y = A @ x0
    if noise.sigma2 > 0:
        y = y + w_rng.normal(0.0, math.sqrt(noise.sigma2), size=m)

    e_rng = _stream(seed, _STREAM_PRIOR_NOISE)
    if noise.sigma_s2 > 0 and math.isfinite(noise.sigma_s2):
        x_tilde = x0 + e_rng.normal(0.0, math.sqrt(noise.sigma_s2), size=n)
    elif noise.sigma_s2 == 0.0:
        x_tilde = x0.copy()
    else:
        # no usable prior; keep a well-defined placeholder
        x_tilde = np.zeros(n)

    return ProblemInstance(
        x0=x0, A=A, y=y, x_tilde=x_tilde,
        geometry=geometry, noise=noise, signal_spec=signal_spec, seed=seed,
    )


def trial_seed(master_seed: int, trial: int) -> int:
    """Derive a per-trial seed from (master seed, trial index).

    Uses SeedSequence so distinct trials give statistically independent
    streams while staying reproducible across runs and worker counts.
    """
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2**63))
