"""Mutual approximations: the same sequence compared at m and at m + k(m)."""

import math

import numpy as np

from ..algebra import (
    ImaginaryExp,
    Integrand,
    IntegrandSum,
    IntegralExp,
    MarginalExp,
    Piecewise,
    Polynomial,
    add_integrands,
    inner01,
    integrate01,
)
from ..core import CoupledSample, ModelFlags, RateSequence
from ..laws import Gaussian
from ..states import EmpiricalState, PathState, RunPathState, run_edges
from .base import DiffusionModel, ExponentialModel, as_integrand, register, require, resolve_params

DISTRIBUTIONS = ("gaussian", "rademacher", "exponential")
SYMMETRIC = ModelFlags(asymptotically_symmetric=True)
# the quartic diagnostic decays only like m^(-1/2) here, so its trend needs a long grid
LOCALITY_GRID = (64, 1024, 16384)


def increment_sums(dist, lengths, size, rng, sd=1.0):
    """Sums of `length` centered iid increments with standard deviation sd, exactly in law."""
    lengths = np.asarray(lengths)
    shape = (size,) + lengths.shape
    if dist == "gaussian":
        return sd * np.sqrt(lengths) * rng.standard_normal(shape)
    if dist == "rademacher":
        return sd * (2.0 * rng.binomial(lengths, 0.5, shape) - lengths)
    return sd * (rng.standard_gamma(lengths, shape) - lengths)


def _check_distribution(model_id, dist):
    require(dist in DISTRIBUTIONS, f"{model_id}: distribution must be one of {', '.join(DISTRIBUTIONS)}")


@register
class CLTMutual(DiffusionModel):
    """Normalised sums S_m / sqrt(m) against S_{m+k} / sqrt(m+k) with k = ceil(theta sqrt(m))."""

    id = "clt_mutual"
    anchor = "II.4.a CLT mutual approximation"
    state_space = "real"
    flags = SYMMETRIC
    locality_grid = LOCALITY_GRID
    defaults = {"sd": 1.0, "distribution": "gaussian", "theta": 1.0}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["sd"] > 0, "clt_mutual: sd must be positive")
        _check_distribution(self.id, p["distribution"])
        super().__init__(RateSequence("mutual", theta=p["theta"]), p)
        self.law = Gaussian(0.0, p["sd"])
        self.limit_cdf = self.law.cdf

    def sample(self, n, size, rng):
        dist, sd = self.params["distribution"], self.params["sd"]
        k = self.rate.gap(n)
        head = increment_sums(dist, n, size, rng, sd)
        tail = increment_sums(dist, k, size, rng, sd)
        return CoupledSample((head + tail) / math.sqrt(n + k), head / math.sqrt(n))

    def diffusion(self, x):
        return np.full(np.shape(x), self.params["sd"] ** 2 / 2)

    def drift_theoretical(self, x):
        return -np.asarray(x) / 2

    drift_practical = drift_theoretical

    def probe_functions(self):
        return (ImaginaryExp((1.0,)), ImaginaryExp((-0.5,)), ImaginaryExp((0.8,)))


class GaussianPathModel(ExponentialModel):
    """Exponential functionals of a centered Gaussian limit with an Ornstein-Uhlenbeck pairing.

    For unit exponentials of the linear functionals f and g, both pairings equal
    (1/2) C(f, g) exp(-C(f + g, f + g) / 2), where C is the covariance.
    """

    def canonical(self, lin):
        return as_integrand(lin)

    def covariance(self, f, g):
        raise NotImplementedError

    def theoretical_pairing(self, lf, lg):
        f, g = as_integrand(lf), as_integrand(lg)
        both = add_integrands(f, g)
        return 0.5 * self.covariance(f, g) * math.exp(-0.5 * self.covariance(both, both))

    practical_pairing = theoretical_pairing


def _halves():
    return (
        IntegralExp(Piecewise(((0.0, 0.5, 1.0), (0.5, 1.0, -0.5)))),
        MarginalExp((0.5,), (1.0,)),
        IntegralExp(Polynomial((0.0, 0.8))),
    )


def _jumps(f):
    """Jumps f(s+) - f(s-) at the interior breakpoints of f."""
    out = {}
    for s in f.breakpoints:
        if 0.0 < s < 1.0:
            jump = float(f(np.nextafter(s, 1.0)) - f(np.nextafter(s, 0.0)))
            if jump:
                out[s] = jump
    return out


def _smooth_deriv(f, x):
    if isinstance(f, Piecewise):
        return np.zeros_like(x)
    if isinstance(f, IntegrandSum):
        return sum(_smooth_deriv(p, x) for p in f.parts)
    return f.deriv(x)


def _left_end(f):
    return float(f(np.nextafter(1.0, 0.0)))


@register
class DonskerMutual(ExponentialModel):
    """Donsker paths of a random walk on the grids m and m + k(m).

    Both paths use the same increments V_k; on the finer grid each V_k sits at
    k / n instead of k / m. With resolution G > 0 only run sums of the
    increments are drawn, which is exact for integrands that are piecewise
    constant on the 1/G grid and for marginals at multiples of 1/G.

    Limits for exp(i int f dX), exp(i int g dX) with h = f + g and
    E = exp(-sd^2 int h^2 / 2):
      symmetric    -(sd^2 / 2) B(f, g) E
      theoretical  -(sd^2 / 2) E [B(f, f) - int f h - 2 int s f(s+) dh(s)]
    where B(f, g) = f(1-) g(1-) + sum over common jump times s of s * jump_f * jump_g.
    The error of int f dX comes from the increments whose position moves
    across a jump of f and from the k(m) increments appended at the end, so
    B(f, f) equals int f^2 only for constant f.
    """

    id = "donsker_mutual"
    anchor = "II.4.b Donsker mutual approximation"
    state_space = "path"
    flags = SYMMETRIC
    locality_grid = LOCALITY_GRID
    defaults = {"sd": 1.0, "distribution": "gaussian", "theta": 1.0, "resolution": 0}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["sd"] > 0, "donsker_mutual: sd must be positive")
        require(p["resolution"] >= 0, "donsker_mutual: resolution must be nonnegative")
        _check_distribution(self.id, p["distribution"])
        super().__init__(RateSequence("mutual", theta=p["theta"]), p)

    def block_size(self, n):
        if self.params["resolution"]:
            return 8192
        return max(64, 2**20 // self.rate.partner(n))

    def sample(self, n, size, rng):
        dist, sd, res = self.params["distribution"], self.params["sd"], self.params["resolution"]
        big = self.rate.partner(n)
        if res:
            edges = run_edges(n, big, res)
            sums = increment_sums(dist, np.diff(edges), size, rng, sd)
            return CoupledSample(RunPathState(sums, edges, big, res), RunPathState(sums, edges, n, res))
        steps = increment_sums(dist, np.ones(big, dtype=np.int64), size, rng, sd)
        walk = np.concatenate([np.zeros((size, 1)), np.cumsum(steps, axis=1)], axis=1)
        return CoupledSample(PathState(walk / math.sqrt(big)), PathState(walk[:, : n + 1] / math.sqrt(n)))

    def canonical(self, lin):
        return as_integrand(lin)

    def linear_ok(self, lin):
        return isinstance(lin, Integrand)

    def error_covariance(self, f, g):
        """B(f, g): limit of alpha(m) E[(X_m(f) - X_n(f)) (X_m(g) - X_n(g))] / sd^2."""
        jf, jg = _jumps(f), _jumps(g)
        return _left_end(f) * _left_end(g) + sum(s * jf[s] * jg[s] for s in jf if s in jg)

    def _drift(self, f, h):
        bps = tuple(set(f.breakpoints) | set(h.breakpoints))
        smooth = integrate01(lambda s: s * f(s) * _smooth_deriv(h, s), bps)
        return float(smooth) + sum(s * float(f(np.nextafter(s, 1.0))) * jump for s, jump in _jumps(h).items())

    def theoretical_pairing(self, lf, lg):
        f, g = as_integrand(lf), as_integrand(lg)
        h = add_integrands(f, g)
        var = self.params["sd"] ** 2
        bracket = self.error_covariance(f, f) - inner01(f, h) - 2 * self._drift(f, h)
        return -0.5 * var * math.exp(-0.5 * var * inner01(h, h)) * bracket

    def symmetric_pairing(self, lf, lg):
        f, g = as_integrand(lf), as_integrand(lg)
        h = add_integrands(f, g)
        var = self.params["sd"] ** 2
        return -0.5 * var * self.error_covariance(f, g) * math.exp(-0.5 * var * inner01(h, h))

    def practical_pairing(self, lf, lg):
        return -self.theoretical_pairing(lf, lg) - 2 * self.symmetric_pairing(lf, lg)

    def ou_symmetric(self, f, g):
        """The Ornstein-Uhlenbeck value -(sd^2 / 2) int f g exp(-sd^2 int (f+g)^2 / 2)."""
        var = self.params["sd"] ** 2
        h = add_integrands(f, g)
        return -0.5 * var * inner01(f, g) * math.exp(-0.5 * var * inner01(h, h))

    def probe_functions(self):
        return (
            IntegralExp(Polynomial((1.0,))),
            MarginalExp((1.0,), (-0.6,)),
            IntegralExp(Polynomial((0.5,))),
        )


@register
class EmpiricalBridge(GaussianPathModel):
    """Centered empirical processes of m and m + k(m) uniform points."""

    id = "empirical_bridge"
    anchor = "II.5 Empirical process and Brownian bridge"
    state_space = "empirical"
    flags = SYMMETRIC
    locality_grid = LOCALITY_GRID
    defaults = {"theta": 1.0}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        super().__init__(RateSequence("mutual", theta=p["theta"]), p)

    def block_size(self, n):
        return max(64, 2**20 // self.rate.partner(n))

    @staticmethod
    def _centering(f):
        return f.integral()

    @staticmethod
    def _cdf(t):
        return min(max(t, 0.0), 1.0)

    def sample(self, n, size, rng):
        points = rng.random((size, self.rate.partner(n)))
        return CoupledSample(
            EmpiricalState(points, self._centering, self._cdf),
            EmpiricalState(points[:, :n], self._centering, self._cdf),
        )

    def covariance(self, f, g):
        return inner01(f, g) - f.integral() * g.integral()

    def probe_functions(self):
        return _halves()
