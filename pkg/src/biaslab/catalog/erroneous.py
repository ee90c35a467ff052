"""Models where every elementary variable carries its own small Gaussian error."""

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm

from ..algebra import Integrand, IntegralExp, MarginalExp, Piecewise, Polynomial, Trig, add_integrands
from ..core import CoupledSample, RateSequence
from ..laws import Uniform
from ..states import EmpiricalState, PathState
from .base import ExponentialModel, as_integrand, register, require, resolve_params

_UNIFORM = Uniform(panels=32, order=24)


@lru_cache(maxsize=None)
def _hermite(order=40):
    x, w = roots_hermitenorm(order)
    return x, w / math.sqrt(2 * math.pi)


@register
class ErroneousEmpirical(ExponentialModel):
    """Empirical process of N uniform points, each observed with error a(V) G / sqrt(m).

    The limit state is the centered empirical measure of the exact points V_j,
    the approximation that of U_j = V_j + a(V_j) G_j / sqrt(m), centered by the
    exact mean of f(U) so both states are centered. N is fixed; m is the index.
    """

    id = "erroneous_empirical"
    anchor = "II.6 Erroneous empirical laws"
    state_space = "empirical"
    defaults = {"n_points": 20, "a0": 0.5, "a1": 0.5}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["n_points"] >= 1, "erroneous_empirical: n_points must be positive")
        require(p["a0"] > 0 and p["a0"] + p["a1"] > 0, "erroneous_empirical: a(v) = a0 + a1 v must be positive on [0, 1]")
        super().__init__(RateSequence("power"), p)
        self._centerings = {}

    def scale(self, v):
        return self.params["a0"] + self.params["a1"] * v

    def perturbed_mean(self, f, m):
        """E f(V + a(V) G / sqrt(m)) by Gauss-Legendre times Gauss-Hermite quadrature."""
        key = (f, m)
        if key not in self._centerings:
            v, wv = _UNIFORM.nodes
            g, wg = _hermite()
            pts = v[:, None] + self.scale(v)[:, None] * g[None, :] / math.sqrt(m)
            self._centerings[key] = float(wv @ f(pts) @ wg)
        return self._centerings[key]

    def sample(self, n, size, rng):
        points = rng.random((size, self.params["n_points"]))
        noisy = points + self.scale(points) * rng.standard_normal(points.shape) / math.sqrt(n)
        return CoupledSample(
            EmpiricalState(points, lambda f: f.integral()),
            EmpiricalState(noisy, lambda f: self.perturbed_mean(f, n)),
        )

    def linear_ok(self, lin):
        return isinstance(lin, Integrand) and lin.smooth

    def _weights(self, f, g):
        size = self.params["n_points"]
        v, w = _UNIFORM.nodes
        both = add_integrands(f, as_integrand(g))
        centered = both(v) - both.integral()
        phase = np.exp(1j * centered / math.sqrt(size))
        base = complex(w @ phase)
        return v, w, phase, base, size

    def theoretical_pairing(self, lf, lg):
        v, w, phase, base, size = self._weights(lf, lg)
        a2 = self.scale(v) ** 2
        curvature = 0.5 * lf.deriv2(v) * a2
        curvature = curvature - w @ curvature
        drift = 1j / math.sqrt(size) * (w @ (curvature * phase))
        spread = -0.5 / size * (w @ (lf.deriv(v) ** 2 * a2 * phase))
        return size * base ** (size - 1) * (drift + spread)

    def symmetric_pairing(self, lf, lg):
        v, w, phase, base, size = self._weights(lf, lg)
        g = as_integrand(lg)
        grad = lf.deriv(v) * (g.deriv(v) if lg is not None else 0.0)
        return -0.5 * (w @ (grad * self.scale(v) ** 2 * phase)) * base ** (size - 1)

    def practical_pairing(self, lf, lg):
        return -self.theoretical_pairing(lf, lg) - 2 * self.symmetric_pairing(lf, lg)

    def probe_functions(self):
        return (
            IntegralExp(Trig("sin", 1.0, 1.0)),
            IntegralExp(Polynomial((0.0, 1.0))),
            IntegralExp(Trig("cos", 1.0, 0.5)),
        )


@register
class ErroneousWalk(ExponentialModel):
    """Donsker path of n_steps increments U_k, each observed as U_k + sqrt(lam / m) G_k.

    For unit exponentials of integrals against the path, with weights
    w_k = (cell average of f) / sqrt(n_steps), everything is explicit:
    the Gaussian error is independent of the walk, so finite-m values are
    available too (``finite_closed_form``).
    """

    id = "erroneous_walk"
    anchor = "II.7 Erroneous random walk"
    state_space = "path"
    default_grid = (16, 64, 256)
    defaults = {"n_steps": 64, "lam": 1.0, "sd": 1.0, "distribution": "gaussian"}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["n_steps"] >= 1, "erroneous_walk: n_steps must be positive")
        require(p["lam"] > 0, "erroneous_walk: lam must be positive")
        require(p["sd"] > 0, "erroneous_walk: sd must be positive")
        require(p["distribution"] in ("gaussian", "rademacher"), "erroneous_walk: distribution must be gaussian or rademacher")
        super().__init__(RateSequence("power"), p)

    def sample(self, n, size, rng):
        p = self.params
        shape = (size, p["n_steps"])
        if p["distribution"] == "gaussian":
            steps = p["sd"] * rng.standard_normal(shape)
        else:
            steps = p["sd"] * (2.0 * rng.integers(0, 2, shape) - 1.0)
        noisy = steps + math.sqrt(p["lam"] / n) * rng.standard_normal(shape)
        start = np.zeros((size, 1))
        scale = math.sqrt(p["n_steps"])
        return CoupledSample(
            PathState(np.concatenate([start, np.cumsum(steps, axis=1)], axis=1) / scale),
            PathState(np.concatenate([start, np.cumsum(noisy, axis=1)], axis=1) / scale),
        )

    def canonical(self, lin):
        return as_integrand(lin)

    def weights(self, lin):
        steps = self.params["n_steps"]
        return np.asarray(as_integrand(lin).cell_averages(steps)) / math.sqrt(steps)

    def characteristic(self, w):
        sd = self.params["sd"]
        if self.params["distribution"] == "gaussian":
            return float(np.prod(np.exp(-0.5 * sd**2 * w**2)))
        return float(np.prod(np.cos(sd * w)))

    def _parts(self, lf, lg):
        wf, wg = self.weights(lf), self.weights(lg)
        return wf, wg, self.characteristic(wf + wg)

    def theoretical_pairing(self, lf, lg):
        wf, _, walk = self._parts(lf, lg)
        return -0.5 * self.params["lam"] * (wf @ wf) * walk

    def symmetric_pairing(self, lf, lg):
        wf, wg, walk = self._parts(lf, lg)
        return -0.5 * self.params["lam"] * (wf @ wg) * walk

    def practical_pairing(self, lf, lg):
        return -self.theoretical_pairing(lf, lg) - 2 * self.symmetric_pairing(lf, lg)

    def finite_closed_form(self, kind, phi, chi, psi=None, m=1):
        """Exact value of the scaled functional at index m (not only its limit)."""
        lam = self.params["lam"]

        def damp(w):
            return math.exp(-0.5 * lam * (w @ w) / m)

        def theoretical(lf, lg):
            wf, _, walk = self._parts(lf, lg)
            return m * walk * (damp(wf) - 1)

        def symmetric(lf, lg):
            wf, wg, walk = self._parts(lf, lg)
            return 0.5 * m * walk * (damp(wf + wg) - damp(wf) - damp(wg) + 1)

        def practical(lf, lg):
            return -theoretical(lf, lg) - 2 * symmetric(lf, lg)

        return self.closed_form_with(kind, phi, chi, psi, theoretical, practical)

    def probe_functions(self):
        return (
            IntegralExp(Polynomial((1.0,))),
            IntegralExp(Piecewise(((0.0, 0.5, 1.0), (0.5, 1.0, -0.5)))),
            MarginalExp((0.5,), (0.8,)),
        )
