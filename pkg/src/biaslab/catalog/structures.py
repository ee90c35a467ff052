"""Gaussian orthogonal measures and Poisson point processes with perturbed atoms."""

import math

import numpy as np

from ..algebra import ImaginaryExp, Integrand, IntegralExp, Polynomial, Trig, add_integrands
from ..core import CoupledSample, RateSequence
from ..laws import Gaussian
from ..states import PointMeasureState
from .base import ExponentialModel, as_integrand, register, require, resolve_params


@register
class OrthogonalMeasure(ExponentialModel):
    """Coordinates X_q of a Gaussian orthogonal measure on a finite basis, each perturbed.

    X ~ N(0, I_Q) and X_n = X + sqrt(lam * speed_q / n) G_q. Functions are
    exp(i <u, X>); products of them add their frequency vectors.
    """

    id = "orthogonal_measure"
    anchor = "II.8 Brownian motion as an orthogonal measure"
    state_space = "vector"
    defaults = {"dim": 4, "lam": 1.0, "speeds": ()}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["dim"] >= 1, "orthogonal_measure: dim must be positive")
        require(p["lam"] > 0, "orthogonal_measure: lam must be positive")
        speeds = p["speeds"] or (1.0,) * p["dim"]
        require(len(speeds) == p["dim"], "orthogonal_measure: speeds needs one entry per coordinate")
        require(all(s > 0 for s in speeds), "orthogonal_measure: speeds must be positive")
        p["speeds"] = tuple(speeds)
        super().__init__(RateSequence("power"), p)
        self.noise = p["lam"] * np.asarray(speeds)

    def sample(self, n, size, rng):
        x = rng.standard_normal((size, self.params["dim"]))
        return CoupledSample(x, x + np.sqrt(self.noise / n) * rng.standard_normal(x.shape))

    def linear_ok(self, lin):
        return isinstance(lin, tuple) and len(lin) == self.params["dim"] and not isinstance(lin[0], tuple)

    def _vectors(self, lf, lg):
        u = np.asarray(lf)
        v = np.zeros_like(u) if lg is None else np.asarray(lg)
        return u, v, math.exp(-0.5 * float((u + v) @ (u + v)))

    def theoretical_pairing(self, lf, lg):
        u, _, gauss = self._vectors(lf, lg)
        return -0.5 * float(self.noise @ (u * u)) * gauss

    def practical_pairing(self, lf, lg):
        u, v, gauss = self._vectors(lf, lg)
        return float(self.noise @ (0.5 * u * u + u * v)) * gauss

    def probe_functions(self):
        dim = self.params["dim"]
        grid = np.linspace(-1.0, 1.0, dim) if dim > 1 else np.array([0.7])
        return (
            ImaginaryExp(tuple(0.6 * grid)),
            ImaginaryExp(tuple(-0.4 * grid[::-1])),
            ImaginaryExp(tuple(np.full(dim, 0.3))),
        )


@register
class PoissonPoint(ExponentialModel):
    """Poisson point process with N(mean, sd^2) marks, each mark perturbed as in the conditional Gaussian model.

    J ~ Poisson(intensity) atoms X_j, observed as X_j + a(X_j) G_j / sqrt(n)
    with a(x) = a0 + a1 sin(x). Functions are exp(i sum_j f(X_j)).
    """

    id = "poisson_point"
    anchor = "II.9 Poisson point process"
    state_space = "point_measure"
    defaults = {"intensity": 3.0, "mean": 0.0, "sd": 1.0, "a0": 0.5, "a1": 0.2}

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["intensity"] > 0, "poisson_point: intensity must be positive")
        require(p["sd"] > 0, "poisson_point: sd must be positive")
        require(p["a0"] > abs(p["a1"]), "poisson_point: need a0 > |a1|")
        super().__init__(RateSequence("power"), p)
        self.marks = Gaussian(p["mean"], p["sd"])

    def scale(self, x):
        return self.params["a0"] + self.params["a1"] * np.sin(x)

    def sample(self, n, size, rng):
        counts = rng.poisson(self.params["intensity"], size)
        width = max(int(counts.max()), 1)
        mask = np.arange(width)[None, :] < counts[:, None]
        atoms = self.marks.mean + self.marks.sd * rng.standard_normal((size, width))
        moved = atoms + self.scale(atoms) * rng.standard_normal(atoms.shape) / math.sqrt(n)
        return CoupledSample(PointMeasureState(atoms, mask), PointMeasureState(moved, mask))

    def linear_ok(self, lin):
        return isinstance(lin, Integrand) and lin.smooth

    def _laplace(self, lf, lg):
        """Mark nodes, weights and E[exp(i N(f + g))] times the intensity-weighted phase."""
        x, w = self.marks.nodes
        both = add_integrands(lf, as_integrand(lg))
        phase = np.exp(1j * both(x))
        c = self.params["intensity"]
        total = np.exp(-c * (w @ (1 - phase)))
        return x, c * w * phase, total

    def theoretical_pairing(self, lf, lg):
        x, weights, total = self._laplace(lf, lg)
        var = self.scale(x) ** 2
        return total * (weights @ (0.5j * lf.deriv2(x) * var - 0.5 * lf.deriv(x) ** 2 * var))

    def symmetric_pairing(self, lf, lg):
        x, weights, total = self._laplace(lf, lg)
        grad = lf.deriv(x) * (as_integrand(lg).deriv(x) if lg is not None else 0.0)
        return -0.5 * total * (weights @ (grad * self.scale(x) ** 2))

    def practical_pairing(self, lf, lg):
        return -self.theoretical_pairing(lf, lg) - 2 * self.symmetric_pairing(lf, lg)

    def candidate_references(self, f):
        """The two readings of the limit of alpha_n E[(Phi_n - Phi)^2] for Phi = exp(i N(f)).

        "displayed" is -exp(-int(1 - e^{2if}) dmu) int e^{2if} gamma[f] dmu with
        gamma[f] = a^2 f'^2; "half" is half of it, the white-form value.
        """
        x, weights, total = self._laplace(f, f)
        displayed = -total * (weights @ (self.scale(x) ** 2 * f.deriv(x) ** 2))
        return {"displayed": complex(displayed), "half": complex(displayed / 2)}

    def probe_functions(self):
        return (
            IntegralExp(Polynomial((0.0, 0.5))),
            IntegralExp(Trig("sin", 0.25, 1.0)),
            IntegralExp(Trig("cos", 0.2, 0.8)),
        )
