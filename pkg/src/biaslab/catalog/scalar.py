"""Scalar approximation models on an interval or on the real line."""

import math

import numpy as np
from scipy.special import zeta

from ..algebra import FourierMode, ImaginaryExp, is_scalar
from ..core import ApproximationModel, BiasKind, ConfigurationError, CoupledSample, ModelFlags, RateSequence
from ..engine import kind_integrand
from ..laws import Gaussian, Uniform
from .base import DiffusionModel, const_array, register, require, resolve_params

FOURIER_PROBES = (FourierMode(1), FourierMode(-1), FourierMode(2))
EXP_PROBES = (ImaginaryExp((1.0,)), ImaginaryExp((-0.5,)), ImaginaryExp((0.7,)))


@register
class GlivenkoCantelli(DiffusionModel):
    """Y uniform, Y_n the empirical distribution function of n uniforms evaluated at Y."""

    id = "glivenko_cantelli"
    anchor = "II.1 Glivenko-Cantelli error"
    state_space = "interval"
    default_grid = (256, 1024, 4096)
    defaults = {}
    law = Uniform()

    def __init__(self, **params):
        super().__init__(RateSequence("power"), resolve_params(type(self), params))
        self.limit_cdf = self.law.cdf

    def sample(self, n, size, rng):
        u = rng.random(size)
        return CoupledSample(u, rng.binomial(n, u) / n)

    def diffusion(self, x):
        return (x - x * x) / 2

    def drift_theoretical(self, x):
        return const_array(0.0, x)

    def drift_practical(self, x):
        return 1 - 2 * x

    def probe_functions(self):
        return FOURIER_PROBES


@register
class PolyaUrn(DiffusionModel):
    """Proportion of white balls in a Polya urn started with one ball of each colour.

    The pair (X_n, X_N) is drawn from the exchangeable representation of the urn:
    the limit proportion X is uniform and, given X, the draws are independent
    Bernoulli(X). This gives the exact joint law of the recursion at n and N.
    """

    id = "polya_urn"
    anchor = "II.2.c Polya urn"
    state_space = "interval"
    default_grid = (250, 1000, 4000)
    defaults = {"n_max_factor": 100.0, "n_max": None, "exact": False}
    law = Uniform()

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["n_max_factor"] >= 1, "polya_urn: n_max_factor must be at least 1")
        if p["n_max"] is not None:
            if float(p["n_max"]) != int(p["n_max"]) or int(p["n_max"]) < 1:
                raise ConfigurationError("polya_urn: n_max must be a positive integer")
            p["n_max"] = int(p["n_max"])
        if not isinstance(p["exact"], bool):
            raise ConfigurationError("polya_urn: exact must be a boolean")
        super().__init__(RateSequence("power"), p)
        self.limit_cdf = self.law.cdf

    def horizon(self, n):
        if self.params["n_max"] is not None:
            return self.params["n_max"]
        return int(math.ceil(self.params["n_max_factor"] * n))

    def check_index(self, n):
        super().check_index(n)
        if not self.params["exact"] and self.horizon(n) < n:
            raise ConfigurationError(f"polya_urn: N_max={self.horizon(n)} is below n={n}")

    def sample(self, n, size, rng):
        x = rng.random(size)
        whites = rng.binomial(n, x)
        approx = (1 + whites) / (n + 2)
        if self.params["exact"]:
            return CoupledSample(x, approx)
        big = self.horizon(n)
        if big < n:
            raise ConfigurationError(f"polya_urn: N_max={big} is below n={n}")
        more = whites + rng.binomial(big - n, x)
        return CoupledSample((1 + more) / (big + 2), approx)

    def diffusion(self, x):
        return (x - x * x) / 2

    def drift_theoretical(self, x):
        return 1 - 2 * x

    def drift_practical(self, x):
        return const_array(0.0, x)

    def probe_functions(self):
        return FOURIER_PROBES


@register
class GaussianPerturbation(DiffusionModel):
    """Y Gaussian, Y_eps = Y + eps Z + sqrt(eps) T G with eps = eps0 / n.

    Z = kappa Y + z_noise N and T = tau (1 + beta cos Y), so E[Z | Y] = kappa Y
    and E[T^2 | Y] = theta(Y) = tau^2 (1 + beta cos Y)^2.
    """

    id = "gaussian_perturbation"
    anchor = "II.2.a Gaussian perturbation"
    state_space = "real"
    defaults = {"base_sd": 1.0, "kappa": 0.5, "z_noise": 0.5, "tau": 0.5, "beta": 0.3, "eps0": 1.0}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["base_sd"] > 0, "gaussian_perturbation: base_sd must be positive")
        require(p["tau"] > 0, "gaussian_perturbation: tau must be positive")
        require(abs(p["beta"]) < 1, "gaussian_perturbation: |beta| must be below 1")
        require(p["z_noise"] >= 0, "gaussian_perturbation: z_noise must be nonnegative")
        super().__init__(RateSequence("reciprocal_epsilon", c=p["eps0"]), p)
        self.law = Gaussian(0.0, p["base_sd"])
        self.limit_cdf = self.law.cdf

    def sample(self, n, size, rng):
        p = self.params
        eps = self.rate.epsilon(n)
        y = p["base_sd"] * rng.standard_normal(size)
        z = p["kappa"] * y + p["z_noise"] * rng.standard_normal(size)
        t = p["tau"] * (1 + p["beta"] * np.cos(y))
        return CoupledSample(y, y + eps * z + math.sqrt(eps) * t * rng.standard_normal(size))

    def theta(self, x):
        return self.params["tau"] ** 2 * (1 + self.params["beta"] * np.cos(x)) ** 2

    def rho(self, x):
        p = self.params
        dtheta = -2 * p["tau"] ** 2 * p["beta"] * np.sin(x) * (1 + p["beta"] * np.cos(x))
        return dtheta + self.theta(x) * self.law.log_density_derivative(x)

    def diffusion(self, x):
        return self.theta(x) / 2

    def drift_theoretical(self, x):
        return self.params["kappa"] * x

    def drift_practical(self, x):
        return self.rho(x) - self.params["kappa"] * x

    def probe_functions(self):
        return EXP_PROBES


@register
class IndependentSeries(DiffusionModel):
    """S = sum_k X_k / k^2 + Z_k / k with Gaussian terms; Y_n is the partial sum.

    With Gaussian terms the partial sum and the tail are independent Gaussians
    with exactly known moments, so the infinite series is sampled exactly.
    """

    id = "independent_series"
    anchor = "II.2.b Series with independent increments"
    state_space = "real"
    defaults = {"x_mean": 0.5, "x_sd": 1.0, "z_sd": 1.0}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["x_sd"] >= 0 and p["z_sd"] > 0, "independent_series: standard deviations must be positive")
        super().__init__(RateSequence("power"), p)
        mean = p["x_mean"] * math.pi**2 / 6
        var = p["x_sd"] ** 2 * math.pi**4 / 90 + p["z_sd"] ** 2 * math.pi**2 / 6
        self.law = Gaussian(mean, math.sqrt(var))
        self.limit_cdf = self.law.cdf

    def _moments(self, n):
        p = self.params
        tail2, tail4 = float(zeta(2, n + 1)), float(zeta(4, n + 1))
        head2, head4 = math.pi**2 / 6 - tail2, math.pi**4 / 90 - tail4
        head = (p["x_mean"] * head2, p["x_sd"] ** 2 * head4 + p["z_sd"] ** 2 * head2)
        tail = (p["x_mean"] * tail2, p["x_sd"] ** 2 * tail4 + p["z_sd"] ** 2 * tail2)
        return head, tail

    def sample(self, n, size, rng):
        (hm, hv), (tm, tv) = self._moments(n)
        partial = hm + math.sqrt(hv) * rng.standard_normal(size)
        full = partial + tm + math.sqrt(tv) * rng.standard_normal(size)
        return CoupledSample(full, partial)

    def diffusion(self, x):
        return const_array(self.params["z_sd"] ** 2 / 2, x)

    def drift_practical(self, x):
        return const_array(self.params["x_mean"], x)

    def drift_theoretical(self, x):
        s2 = self.params["z_sd"] ** 2
        return -s2 * (x - self.law.mean) / self.law.sd**2 - self.params["x_mean"]

    def probe_functions(self):
        return EXP_PROBES


@register
class ConditionalGaussianMean(DiffusionModel):
    """Y_n is the mean of n draws from N(Y, V(Y)), V = a^2 with a(y) = a0 + a1 sin(y)."""

    id = "cond_gaussian_mean"
    anchor = "II.3 Conditionally Gaussian mean"
    state_space = "real"
    defaults = {"mean": 0.0, "sd": 1.0, "a0": 0.5, "a1": 0.2}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["sd"] > 0, "cond_gaussian_mean: sd must be positive")
        require(p["a0"] > abs(p["a1"]), "cond_gaussian_mean: need a0 > |a1| so that V > 0")
        super().__init__(RateSequence("power"), p)
        self.law = Gaussian(p["mean"], p["sd"])
        self.limit_cdf = self.law.cdf

    def scale(self, x):
        return self.params["a0"] + self.params["a1"] * np.sin(x)

    def variance(self, x):
        return self.scale(x) ** 2

    def rho(self, x):
        dv = 2 * self.scale(x) * self.params["a1"] * np.cos(x)
        return dv + self.variance(x) * self.law.log_density_derivative(x)

    def sample(self, n, size, rng):
        y = self.law.mean + self.law.sd * rng.standard_normal(size)
        return CoupledSample(y, y + self.scale(y) * rng.standard_normal(size) / math.sqrt(n))

    def diffusion(self, x):
        return self.variance(x) / 2

    def drift_theoretical(self, x):
        return const_array(0.0, x)

    def drift_practical(self, x):
        return self.rho(x)

    def probe_functions(self):
        return EXP_PROBES


@register
class MixingShift(ApproximationModel):
    """Y uniform on [0, 1) and Y_n its image under n iterations of the doubling map.

    Y is written as (K + R) / 2^n with K uniform on {0, ..., 2^n - 1} and R
    uniform, so Y_n = R exactly; floating-point doubling would lose all bits
    after about 52 steps.
    """

    id = "mixing_shift"
    anchor = "Remark 4 Mixing shift (non-local)"
    state_space = "interval"
    flags = ModelFlags(expected_local=False)
    default_grid = (4, 16, 64)
    default_fit = "constant"
    defaults = {}
    law = Uniform(panels=32, order=16)

    def __init__(self, **params):
        super().__init__(RateSequence("constant"), resolve_params(type(self), params))
        self.limit_cdf = self.law.cdf

    def sample(self, n, size, rng):
        top = rng.random(size)
        image = rng.random(size)
        if n <= 52:
            scale = 2.0**n
            return CoupledSample((np.floor(top * scale) + image) / scale, image)
        return CoupledSample(top, image)

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        """Expectation of the integrand under two independent uniforms."""
        kind = BiasKind.parse(kind)
        funcs = [f for f in (phi, chi, psi) if f is not None]
        if not all(is_scalar(f) for f in funcs):
            return None
        if kind is BiasKind.SINGULAR:
            return 0j
        x, w = self.law.nodes
        xa, ya = np.meshgrid(x, x, indexing="ij")
        weights = np.outer(w, w)
        psi = chi if psi is None else psi
        values = kind_integrand(
            kind, phi.eval(ya), phi.eval(xa), chi.eval(ya), chi.eval(xa), psi.eval(ya), psi.eval(xa), exponent
        )
        return complex(np.sum(weights * values))

    def probe_functions(self):
        return FOURIER_PROBES


@register
class DecimalTruncation(DiffusionModel):
    """Y uniform, Y_n = floor(base^n Y) / base^n (first n digits)."""

    id = "decimal_truncation"
    anchor = "III Decimal truncation"
    state_space = "interval"
    flags = ModelFlags(deterministic_U=True)
    default_grid = (2, 4, 6)
    extrapolation_variable = "alpha"
    max_index = 12
    defaults = {"base": 10}
    law = Uniform()

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["base"] >= 2, "decimal_truncation: base must be at least 2")
        super().__init__(RateSequence("geometric", base=p["base"]), p)
        self.max_index = int(math.floor(52 * math.log(2) / math.log(p["base"]))) - 3
        self.limit_cdf = self.law.cdf

    def sample(self, n, size, rng):
        scale = self.params["base"] ** n
        digits = rng.integers(0, scale, size)
        frac = rng.random(size)
        return CoupledSample((digits + frac) / scale, digits / scale)

    def diffusion(self, x):
        return const_array(0.0, x)

    def drift_theoretical(self, x):
        return const_array(-0.5, x)

    def drift_practical(self, x):
        return const_array(0.5, x)

    def probe_functions(self):
        return FOURIER_PROBES
