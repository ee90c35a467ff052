"""Time-discretisation models: Riemann sums for a stochastic integral, Euler schemes."""

import math

import numpy as np
from scipy import stats

from ..algebra import ImaginaryExp, is_scalar
from ..core import BiasKind, CoupledSample, ModelFlags, RateSequence
from ..laws import Gaussian, Pushforward
from ..rng import auxiliary_stream
from ..states import PathState
from .base import OperatorModel, const_array, register, require, resolve_params

EXP_PROBES = (ImaginaryExp((1.0,)), ImaginaryExp((-0.5,)), ImaginaryExp((0.7,)))


def _chi2_one_cdf(y):
    return stats.chi2(1).cdf(2 * np.asarray(y) + 1)


@register
class StochasticIntegral(OperatorModel):
    """Y = int_0^1 B dB = (B_1^2 - 1) / 2 against the left Riemann sum on n steps.

    The Riemann sum equals (B_1^2 - Q) / 2 with Q the sum of squared increments.
    Given B_1, n Q = B_1^2 + (an independent chi-square with n - 1 degrees of
    freedom), so the pair is drawn exactly without simulating the path.
    """

    id = "stochastic_integral"
    anchor = "II.9 Stochastic integral"
    state_space = "real"
    min_index = 2
    defaults = {}

    def __init__(self, **params):
        super().__init__(RateSequence("power"), resolve_params(type(self), params))
        self.law = Pushforward(Gaussian(0.0, 1.0), lambda b: (b * b - 1) / 2, _chi2_one_cdf)
        self.limit_cdf = _chi2_one_cdf

    def sample(self, n, size, rng):
        b2 = rng.standard_normal(size) ** 2
        q = (b2 + rng.chisquare(n - 1, size)) / n
        return CoupledSample((b2 - 1) / 2, (b2 - q) / 2)

    def theoretical_operator(self, phi, x):
        return 0.25 * phi.d2(x) - x * phi.d1(x)

    def square_field(self, f, g, x):
        return 0.5 * f.d1(x) * g.d1(x)

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        kind = BiasKind.parse(kind)
        funcs = [f for f in (phi, chi, psi) if f is not None]
        if not all(is_scalar(f) for f in funcs):
            return None
        x = self.law.nodes[0]
        if kind is BiasKind.THEORETICAL:
            return self._pair(self.theoretical_operator, phi, chi)
        if kind is BiasKind.SYMMETRIC:
            return complex(self.law.expect(0.5 * self.square_field(phi, chi, x)))
        if kind is BiasKind.SQUARE_FIELD:
            return complex(self.law.expect(self.square_field(phi, phi, x) * chi.eval(x)))
        if kind is BiasKind.QUARTIC:
            return 0j
        return None

    def probe_functions(self):
        return EXP_PROBES


@register
class EulerSDE(OperatorModel):
    """Euler scheme with step 1/n for dY = a(Y) dB + b(Y) dt against the scheme with step 1/(refine n).

    a(y) = c0 + c1 y + c2 sin(y) and b(y) = m0 + m1 y. Time runs in [0, 1] and
    the state is read at the horizon, so the coarse scheme makes about
    n * horizon steps (the last one partial). Both schemes use the
    same Brownian increments. The state is Y at the horizon, or the whole path
    on the coarse grid when output is "path".
    """

    id = "euler_sde"
    anchor = "II.10 Euler scheme for an SDE"
    state_space = "real"
    default_grid = (32, 128, 512)
    # heavy-tailed quartic moments need a longer span to show their decay
    locality_grid = (8, 64, 512)
    reference_kinds = ("Symmetric", "SquareFieldPaired", "QuarticDiagnostic")
    defaults = {
        "c0": 0.0,
        "c1": 2.0,
        "c2": 0.0,
        "m0": 0.0,
        "m1": 0.0,
        "y0": 1.0,
        "horizon": 0.25,
        "refine": 64,
        "output": "terminal",
    }

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(abs(p["c1"]) > abs(p["c2"]), "euler_sde: need |c1| > |c2| so that a'(y)^2 stays bounded below")
        require(p["horizon"] > 0, "euler_sde: horizon must be positive")
        require(p["refine"] >= 2, "euler_sde: refine must be at least 2")
        require(p["output"] in ("terminal", "path"), "euler_sde: output must be terminal or path")
        super().__init__(RateSequence("power"), p)
        if p["output"] == "path":
            self.state_space = "path"
        self._companion = {}

    def vol(self, y):
        p = self.params
        return p["c0"] + p["c1"] * y + p["c2"] * np.sin(y)

    def dvol(self, y):
        return self.params["c1"] + self.params["c2"] * np.cos(y)

    def drift(self, y):
        return self.params["m0"] + self.params["m1"] * y

    def sample(self, n, size, rng):
        p = self.params
        fine = p["refine"]
        full = int(math.floor(n * p["horizon"] + 1e-9))
        steps = [1.0 / n] * full
        rest = p["horizon"] - full / n
        if rest > 1e-12:
            steps.append(rest)
        coarse = np.full(size, p["y0"])
        ref = coarse.copy()
        keep = p["output"] == "path"
        if keep:
            coarse_path = [coarse.copy()]
            ref_path = [ref.copy()]
        for h in steps:
            dt = h / fine
            dw = rng.standard_normal((size, fine)) * math.sqrt(dt)
            for j in range(fine):
                ref = ref + self.vol(ref) * dw[:, j] + self.drift(ref) * dt
            coarse = coarse + self.vol(coarse) * dw.sum(axis=1) + self.drift(coarse) * h
            if keep:
                coarse_path.append(coarse)
                ref_path.append(ref)
        if keep:
            return CoupledSample(
                PathState(np.stack(ref_path, axis=1), p["horizon"]),
                PathState(np.stack(coarse_path, axis=1), p["horizon"]),
            )
        return CoupledSample(ref, coarse)

    def companion(self, samples=200_000, steps=256, seed=0):
        """Draws of (Y_t, G_t) with G_t = N_t^2 * (1/2) int_0^t (a a'(Y_s) / N_s)^2 ds.

        log N_t = int a'(Y) dB - (1/2) int a'(Y)^2 ds + int b'(Y) ds. G_t is the
        conditional second moment of the limit error process U_t.
        """
        key = (samples, steps, seed)
        if key not in self._companion:
            p = self.params
            rng = auxiliary_stream(seed, f"{self.id}-companion")
            dt = p["horizon"] / steps
            y = np.full(samples, p["y0"])
            log_n = np.zeros(samples)
            acc = np.zeros(samples)
            for _ in range(steps):
                db = rng.standard_normal(samples) * math.sqrt(dt)
                a, da = self.vol(y), self.dvol(y)
                mid = 0.5 * ((a * da) ** 2) * np.exp(-2 * log_n) * dt
                acc = acc + mid
                log_n = log_n + da * db - 0.5 * da * da * dt + p["m1"] * dt
                y = y + a * db + self.drift(y) * dt
            self._companion[key] = (y, np.exp(2 * log_n) * acc)
        return self._companion[key]

    def companion_moment(self, **kwargs):
        """Mean and standard error of G_t, the limit of n E[(Y^n_t - Y_t)^2]."""
        _, g = self.companion(**kwargs)
        return float(g.mean()), float(g.std(ddof=1) / math.sqrt(len(g)))

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        """Square-field kinds from the companion simulation (terminal output only).

        Values refer to the coupled difference with the refined scheme, that is
        (1 - 1/refine) times the pairing of the limit error U_t.
        """
        kind = BiasKind.parse(kind)
        if self.params["output"] != "terminal" or not all(is_scalar(f) for f in (phi, chi)):
            return None
        y, g = self.companion()
        # the reference scheme carries its own error; against it the limit shrinks by 1 - 1/refine
        g = g * (1.0 - 1.0 / self.params["refine"])
        if kind is BiasKind.SYMMETRIC:
            return complex(np.mean(0.5 * phi.d1(y) * chi.d1(y) * g))
        if kind is BiasKind.SQUARE_FIELD:
            return complex(np.mean(phi.d1(y) ** 2 * chi.eval(y) * g))
        if kind is BiasKind.QUARTIC:
            return 0j
        return None

    def probe_functions(self):
        return (ImaginaryExp((0.3,)), ImaginaryExp((-0.2,)), ImaginaryExp((0.25,)))


@register
class ODEEuler(OperatorModel):
    """Euler scheme for x' = f(x) y(s) with a random start, against an accurate RK4 solution.

    f(x) = c0 + c1 x + c2 sin(x) and y(s) = y0 + y1 s; each Euler step uses
    the exact integral of y. The approximation is a deterministic function of
    the limit, so only a first-order bias survives: the scaled error tends to
    u_t, solving u' = f'(x) y u - (horizon / 2) f'(x) f(x) y^2 with u_0 = 0.
    """

    id = "ode_euler"
    anchor = "Remark 5 Euler scheme for an ODE"
    state_space = "real"
    flags = ModelFlags(deterministic_U=True)
    default_grid = (16, 32, 64, 128)
    defaults = {
        "c0": 0.5,
        "c1": -0.3,
        "c2": 0.4,
        "y0": 1.0,
        "y1": 0.5,
        "x_mean": 0.0,
        "x_sd": 1.0,
        "horizon": 1.0,
        "ref_steps": 256,
    }

    def __init__(self, **params):
        p = resolve_params(type(self), params)
        require(p["x_sd"] > 0, "ode_euler: x_sd must be positive")
        require(p["horizon"] > 0, "ode_euler: horizon must be positive")
        require(p["ref_steps"] >= 16, "ode_euler: ref_steps must be at least 16")
        super().__init__(RateSequence("power"), p)
        self.start = Gaussian(p["x_mean"], p["x_sd"], order=80)
        self.law = Pushforward(self.start, lambda x0: self.flow(x0)[0])

    def field(self, x):
        p = self.params
        return p["c0"] + p["c1"] * x + p["c2"] * np.sin(x)

    def dfield(self, x):
        return self.params["c1"] + self.params["c2"] * np.cos(x)

    def speed(self, s):
        return self.params["y0"] + self.params["y1"] * s

    def speed_integral(self, a, b):
        return self.params["y0"] * (b - a) + 0.5 * self.params["y1"] * (b * b - a * a)

    def flow(self, x0, steps=None):
        """RK4 for (x, u) from x0; returns x_t and the limit error u_t."""
        t = self.params["horizon"]
        steps = steps or self.params["ref_steps"]
        h = t / steps

        def rhs(s, x, u):
            y = self.speed(s)
            df = self.dfield(x)
            return self.field(x) * y, df * y * u - 0.5 * t * df * self.field(x) * y * y

        x = np.asarray(x0, dtype=float).copy()
        u = np.zeros_like(x)
        for k in range(steps):
            s = k * h
            k1 = rhs(s, x, u)
            k2 = rhs(s + h / 2, x + h / 2 * k1[0], u + h / 2 * k1[1])
            k3 = rhs(s + h / 2, x + h / 2 * k2[0], u + h / 2 * k2[1])
            k4 = rhs(s + h, x + h * k3[0], u + h * k3[1])
            x = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            u = u + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return x, u

    def euler(self, x0, n):
        t = self.params["horizon"]
        x = np.asarray(x0, dtype=float).copy()
        for k in range(n):
            x = x + self.field(x) * self.speed_integral(k * t / n, (k + 1) * t / n)
        return x

    def sample(self, n, size, rng):
        x0 = self.start.mean + self.start.sd * rng.standard_normal(size)
        return CoupledSample(self.flow_only(x0), self.euler(x0, n))

    def flow_only(self, x0):
        t = self.params["horizon"]
        steps = self.params["ref_steps"]
        h = t / steps
        x = np.asarray(x0, dtype=float).copy()
        for k in range(steps):
            s = k * h
            k1 = self.field(x) * self.speed(s)
            k2 = self.field(x + h / 2 * k1) * self.speed(s + h / 2)
            k3 = self.field(x + h / 2 * k2) * self.speed(s + h / 2)
            k4 = self.field(x + h * k3) * self.speed(s + h)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    def limit_error(self):
        """u_t at the quadrature nodes of the law of x_t."""
        if not hasattr(self, "_error_nodes"):
            self._error_nodes = self.flow(self.start.nodes[0])[1]
        return self._error_nodes

    def theoretical_operator(self, phi, x):
        return self.limit_error() * phi.d1(x)

    def practical_operator(self, phi, x):
        return -self.theoretical_operator(phi, x)

    def diffusion(self, x):
        return const_array(0.0, x)

    def square_field(self, f, g, x):
        return const_array(0.0, x)

    def probe_functions(self):
        return EXP_PROBES

