import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from biaslab.algebra import Constant, FourierMode, ImaginaryExp, Product
from biaslab.catalog import build_model
from biaslab.core import BiasEstimate, BiasKind, FunctionalSpec, InadmissibleFunctionError, UsageError
from biaslab.engine import (
    Moment,
    _Moments,
    compare,
    estimate,
    estimate_grid,
    estimate_many,
    extrapolate,
    kind_integrand,
    sample_integrands,
)
from biaslab.rng import block_stream

GC = build_model("glivenko_cantelli")
PHI, CHI = FourierMode(1), FourierMode(-1)


def test_same_seed_same_estimate():
    spec = FunctionalSpec("Theoretical", PHI, CHI)
    assert estimate(GC, spec, 64, 5000, seed=3) == estimate(GC, spec, 64, 5000, seed=3)
    assert estimate(GC, spec, 64, 5000, seed=3).mean != estimate(GC, spec, 64, 5000, seed=4).mean


def test_worker_count_does_not_change_results():
    specs = [FunctionalSpec(k, PHI, CHI) for k in ("Theoretical", "Symmetric", "Singular")]
    one = estimate_many(GC, specs, 128, 30_000, seed=9, workers=1)
    two = estimate_many(GC, specs, 128, 30_000, seed=9, workers=2)
    for a, b in zip(one, two):
        assert a.mean == pytest.approx(b.mean, abs=1e-13)
        assert a.stderr == pytest.approx(b.stderr, rel=1e-10)


def test_streams_are_independent_by_key():
    draws = {key: block_stream(*key).random(4).tolist() for key in [(0, "a", 8, 0), (0, "a", 8, 1), (0, "b", 8, 0), (1, "a", 8, 0)]}
    assert len({tuple(v) for v in draws.values()}) == 4
    assert block_stream(0, "a", 8, 0).random(4).tolist() == draws[(0, "a", 8, 0)]


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=60), st.integers(1, 59))
def test_chan_merge_matches_numpy(values, cut):
    data = np.array(values, dtype=complex) * (1 + 0.5j)
    cut = min(cut, len(data) - 1)
    merged = _Moments.of(data[:cut]).merge(_Moments.of(data[cut:]))
    whole = _Moments.of(data)
    np.testing.assert_allclose(merged.mean, whole.mean, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(merged.m2, whole.m2, rtol=1e-7, atol=1e-6)


def _points(values, grid, stderr=1e-3):
    return [BiasEstimate(n, complex(v), stderr, 1000, 0) for n, v in zip(grid, values)]


def test_extrapolate_recovers_synthetic_intercept():
    grid = (64, 256, 1024, 4096)
    exact = [1.5 - 0.5j + (2 + 1j) / math.sqrt(n) + 3 / n for n in grid]
    limit = extrapolate(_points(exact, grid), "sqrt+inv")
    assert limit.value == pytest.approx(1.5 - 0.5j, abs=1e-9)
    auto = extrapolate(_points(exact[:3], grid[:3]))
    assert auto.fit_model == "sqrt"


def test_extrapolate_errors():
    with pytest.raises(UsageError):
        extrapolate([])
    with pytest.raises(UsageError):
        extrapolate(_points([1, 2], (4, 16)), "sqrt+inv")
    with pytest.raises(UsageError):
        extrapolate(_points([1, 2], (4, 16)), "cubic")
    with pytest.raises(UsageError):
        extrapolate(_points([1, 2, 3], (4, 4, 16)), "sqrt")


@pytest.mark.parametrize(
    "value, unc, reference, expected",
    [
        (1.0, 0.1, 1.2, (pytest.approx(2.0), True)),
        (1.0, 0.1, 1.5, (pytest.approx(5.0), False)),
        (1.0, 0.0, 1.0 + 1e-14, (0.0, True)),
        (1.0, 0.0, 1.1, (math.inf, False)),
    ],
)
def test_compare(value, unc, reference, expected):
    assert compare(value, unc, reference) == expected


@given(
    st.complex_numbers(max_magnitude=3, allow_nan=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False),
)
def test_theoretical_practical_symmetric_identity(phi, phi_n, chi, chi_n):
    args = (np.array([phi]), np.array([phi_n]), np.array([chi]), np.array([chi_n]))
    th = kind_integrand(BiasKind.THEORETICAL, *args)
    pr = kind_integrand(BiasKind.PRACTICAL, *args)
    sym = kind_integrand(BiasKind.SYMMETRIC, *args)
    assert abs(th + pr + 2 * sym)[0] < 1e-12


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_square_field_identity_on_samples(p, q):
    phi, chi = FourierMode(p), FourierMode(q)
    specs = [
        FunctionalSpec("SquareFieldPaired", phi, chi),
        FunctionalSpec("Symmetric", Product((phi, phi)), chi),
        FunctionalSpec("Symmetric", phi, Product((phi, chi))),
    ]
    sfp, sym_sq, sym_mixed = sample_integrands(GC, specs, 32, 200, seed=1)
    assert np.max(np.abs(sfp - (-sym_sq + 2 * sym_mixed))) < 1e-12


def test_variance_difference_identity_on_samples():
    phi, chi, psi = FourierMode(1), ImaginaryExp((0.7,)), FourierMode(2)
    one = Constant(1)
    tv, pv, d_phi, d_chi, d_psi = sample_integrands(
        GC,
        [
            FunctionalSpec("TheoreticalVariance", phi, chi, psi),
            FunctionalSpec("PracticalVariance", phi, chi, psi),
            FunctionalSpec("Theoretical", phi, one),
            FunctionalSpec("Theoretical", chi, one),
            FunctionalSpec("Theoretical", psi, one),
        ],
        16,
        300,
        seed=2,
    )
    assert np.max(np.abs(tv - pv + d_phi * d_chi * d_psi)) < 1e-12


def test_singular_is_half_difference():
    th, pr, sing = estimate_many(GC, [FunctionalSpec(k, PHI, CHI) for k in ("Theoretical", "Practical", "Singular")], 64, 4000, 5)
    assert sing.mean == pytest.approx((th.mean - pr.mean) / 2, abs=1e-12)


def test_moment_is_nonnegative_and_real():
    point = estimate(GC, Moment(2), 256, 5000, seed=0)
    assert point.mean.imag == 0 and point.mean.real > 0


def test_error_cases():
    spec = FunctionalSpec("Theoretical", PHI, CHI)
    with pytest.raises(UsageError):
        estimate(GC, spec, 64, 10, seed=0)
    with pytest.raises(UsageError):
        estimate_grid(GC, spec, (64, 32), 1000, 0)
    with pytest.raises(UsageError):
        estimate_grid(GC, spec, (), 1000, 0)
    with pytest.raises(InadmissibleFunctionError):
        estimate(build_model("donsker_mutual"), spec, 64, 1000, 0)
    with pytest.raises(Exception):
        FunctionalSpec("Bogus", PHI, CHI)
