"""Catalog references against independent oracles: exact finite-index formulas,
brute-force quadrature and plain Monte Carlo."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from biaslab.algebra import FourierMode, ImaginaryExp, IntegralExp, Piecewise, Polynomial, Trig
from biaslab.catalog import build_model
from biaslab.core import FunctionalSpec
from biaslab.engine import Moment, compare, estimate, estimate_grid, extrapolate


def _donsker_exact(model, f, g, m):
    """Exact Theoretical and Symmetric values at index m for Gaussian increments."""
    k = model.rate.gap(m)
    n = m + k
    alpha = m / k
    var = model.params["sd"] ** 2

    def coef(h, cells):
        c = np.zeros(n)
        c[:cells] = h.cell_averages(cells) / math.sqrt(cells)
        return c

    fm, fn, gm, gn = coef(f, m), coef(f, n), coef(g, m), coef(g, n)

    def char(c):
        return math.exp(-0.5 * var * (c @ c))

    th = alpha * (char(fm + gn) - char(fn + gn))
    sym = 0.5 * alpha * (char(fm + gm) - char(fm + gn) - char(fn + gm) + char(fn + gn))
    return th, sym


@pytest.mark.parametrize(
    "f, g",
    [
        (Polynomial((1.0,)), Polynomial((1.0,))),
        (Polynomial((0.0, 1.0)), Polynomial((1.0,))),
        (Trig("sin", 1, 0.7), Polynomial((0.2, -0.5))),
        (Piecewise(((0.0, 0.5, 1.0), (0.5, 1.0, -0.5))), Piecewise(((0.0, 0.5, 1.0),))),
    ],
    ids=str,
)
def test_donsker_limit_against_exact_finite_index(f, g):
    model = build_model("donsker_mutual")
    th, sym = _donsker_exact(model, f, g, 200_000)
    phi, chi = IntegralExp(f), IntegralExp(g)
    assert model.closed_form("Theoretical", phi, chi).real == pytest.approx(th, abs=3e-3)
    assert model.closed_form("Symmetric", phi, chi).real == pytest.approx(sym, abs=3e-3)


def test_donsker_constant_integrand_matches_ou_form():
    model = build_model("donsker_mutual")
    one = IntegralExp(Polynomial((1.0,)))
    assert model.closed_form("Symmetric", one, one) == pytest.approx(model.ou_symmetric(Polynomial((1.0,)), Polynomial((1.0,))), abs=1e-12)


@pytest.mark.parametrize("kind", ["Theoretical", "Symmetric"])
def test_erroneous_walk_finite_index_against_monte_carlo(kind):
    model = build_model("erroneous_walk")
    phi, chi = model.probe_functions()[:2]
    spec = FunctionalSpec(kind, phi, chi)
    point = estimate(model, spec, 4, 100_000, seed=5)
    exact = model.finite_closed_form(kind, phi, chi, m=4)
    assert abs(point.mean - exact) < 4 * point.stderr + 1e-12


def test_erroneous_walk_finite_index_converges_to_limit():
    model = build_model("erroneous_walk")
    phi, chi = model.probe_functions()[:2]
    for kind in ("Theoretical", "Practical", "Symmetric"):
        far = model.finite_closed_form(kind, phi, chi, m=10**8)
        assert far == pytest.approx(model.closed_form(kind, phi, chi), abs=1e-6)


def _single_point_brute_force(model, f, g, m):
    """m E[...] for one observed point, by tensor Gauss-Legendre x Gauss-Hermite quadrature."""
    v, wv = special.roots_legendre(160)
    v, wv = 0.5 * (v + 1), 0.5 * wv
    x, wx = special.roots_hermitenorm(90)
    wx = wx / math.sqrt(2 * math.pi)
    u = v[:, None] + model.scale(v)[:, None] * x[None, :] / math.sqrt(m)

    def mean(values):
        return wv @ values @ wx

    f_exact = np.broadcast_to(f(v)[:, None], u.shape)
    g_exact = np.broadcast_to(g(v)[:, None], u.shape)
    phi = np.exp(1j * (f_exact - f.integral()))
    phi_m = np.exp(1j * (f(u) - mean(f(u))))
    chi = np.exp(1j * (g_exact - g.integral()))
    chi_m = np.exp(1j * (g(u) - mean(g(u))))
    th = m * mean((phi_m - phi) * chi)
    sym = 0.5 * m * mean((phi_m - phi) * (chi_m - chi))
    return th, sym


def test_erroneous_empirical_single_point_against_quadrature():
    model = build_model("erroneous_empirical", n_points=1)
    f, g = Trig("sin", 1, 0.8), Polynomial((0.0, 0.6, -0.4))
    # error terms are O(1/m), so a two-point Richardson step removes them
    lo, hi = _single_point_brute_force(model, f, g, 64_000), _single_point_brute_force(model, f, g, 256_000)
    th, sym = ((4 * h - l) / 3 for h, l in zip(hi, lo))
    phi, chi = IntegralExp(f), IntegralExp(g)
    assert model.closed_form("Theoretical", phi, chi) == pytest.approx(th, abs=1e-6)
    assert model.closed_form("Symmetric", phi, chi) == pytest.approx(sym, abs=1e-6)


def test_polya_exact_sampler_second_moment():
    model = build_model("polya_urn", exact=True)
    n = 50
    point = estimate(model, Moment(2), n, 200_000, seed=3)
    expected = model.alpha(n) / (6 * (n + 2))
    assert abs(point.mean.real - expected) < 4 * point.stderr


def test_glivenko_cantelli_finite_index_against_binomial_formula():
    model = build_model("glivenko_cantelli")
    n, p = 64, 1
    phi, chi = FourierMode(p), ImaginaryExp((0.9,))
    turn = np.exp(2j * math.pi * p / n)

    def density(y):
        return ((1 - y + y * turn) ** n - np.exp(2j * math.pi * p * y)) * np.exp(0.9j * y)

    exact = n * complex(
        integrate.quad(lambda y: density(y).real, 0, 1, limit=200)[0],
        integrate.quad(lambda y: density(y).imag, 0, 1, limit=200)[0],
    )
    point = estimate(model, FunctionalSpec("Theoretical", phi, chi), n, 200_000, seed=8)
    assert abs(point.mean - exact) < 4 * point.stderr


def test_poisson_symmetric_limit_selects_a_reading():
    model = build_model("poisson_point")
    phi = model.probe_functions()[0]
    points = estimate_grid(model, FunctionalSpec("Symmetric", phi, phi), model.default_grid, 100_000, seed=4)
    limit = extrapolate(points, model.default_fit, model.extrapolation_variable)
    readings = model.candidate_references(phi.f)
    # the raw second moment is twice the half-convention Symmetric value
    verdicts = {name: compare(2 * limit.value, 2 * limit.uncertainty, value)[1] for name, value in readings.items()}
    assert verdicts["displayed"] and not verdicts["half"]
    assert model.closed_form("Symmetric", phi, phi) == pytest.approx(readings["half"], abs=1e-12)
