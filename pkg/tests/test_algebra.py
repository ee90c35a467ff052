import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from biaslab.algebra import (
    Composite,
    Constant,
    FourierMode,
    ImaginaryExp,
    Outer,
    Piecewise,
    Polynomial,
    Product,
    Trig,
    add_integrands,
    chain_compose,
    integrate01,
)
from biaslab.core import UsageError
from biaslab.specs import SpecError, parse_function

STEP = 1e-5


def _fd1(fn, x):
    return (fn.eval(x + STEP) - fn.eval(x - STEP)) / (2 * STEP)


def _fd2(fn, x):
    return (fn.eval(x + STEP) - 2 * fn.eval(x) + fn.eval(x - STEP)) / STEP**2


SCALARS = [
    FourierMode(1),
    FourierMode(-2),
    ImaginaryExp((0.7,)),
    Product((FourierMode(1), ImaginaryExp((0.3,)))),
    Composite(Outer("poly", (0, 1, 0.5)), (ImaginaryExp((0.4,)),)),
    Composite(Outer("sin"), (FourierMode(1),)),
    chain_compose(Outer("mul", arity=2), [FourierMode(1), ImaginaryExp((1.1,))]),
    FourierMode(1) + 2 * ImaginaryExp((0.5,)),
]


@pytest.mark.parametrize("fn", SCALARS, ids=str)
def test_derivatives_match_finite_differences(fn):
    x = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(fn.d1(x), _fd1(fn, x), rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(fn.d2(x), _fd2(fn, x), rtol=1e-3, atol=1e-3)


def test_vector_exponential_gradient():
    fn = ImaginaryExp((0.5, -1.0))
    x = np.array([[0.2, 0.4], [1.0, -0.3]])
    grad = fn.d1(x)
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = STEP
        numeric = (fn.eval(x + shift) - fn.eval(x - shift)) / (2 * STEP)
        np.testing.assert_allclose(grad[:, axis], numeric, atol=1e-8)
    assert fn.d2(x).shape == (2, 2, 2)


def test_constant_has_zero_derivatives():
    fn = Constant(2 - 1j)
    x = np.linspace(0, 1, 5)
    assert np.all(fn.eval(x) == 2 - 1j)
    assert not np.any(fn.d1(x)) and not np.any(fn.d2(x))


INTEGRANDS = [
    Polynomial((0.3, -1.0, 2.0)),
    Trig("sin", 2, 0.5),
    Trig("cos", 0.25, 1.5),
    Piecewise(((0.0, 0.3, 1.0), (0.3, 1.0, -0.5))),
    add_integrands(Polynomial((1.0,)), Trig("sin", 1)),
]


@pytest.mark.parametrize("f", INTEGRANDS, ids=str)
def test_antiderivative_matches_quad(f):
    for upper in (0.2, 0.55, 1.0):
        expected = integrate.quad(f, 0, upper, points=[b for b in f.breakpoints if 0 < b < upper] or None)[0]
        assert f.antiderivative(upper) - f.antiderivative(0.0) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("f", INTEGRANDS, ids=str)
def test_cell_averages_sum_to_integral(f):
    assert f.cell_averages(37).mean() == pytest.approx(f.integral(), abs=1e-12)


def test_integrate01_handles_breakpoints():
    f = Piecewise(((0.0, 1 / 3, 2.0),))
    assert integrate01(f, f.breakpoints) == pytest.approx(2 / 3, abs=1e-12)


def test_composite_arity_and_whitelist():
    with pytest.raises(UsageError):
        Outer("tanh")
    with pytest.raises(UsageError):
        Composite(Outer("affine", (0, 1, 1)), (FourierMode(1),))
    with pytest.raises(UsageError):
        chain_compose(Outer("sin"), [])


def test_piecewise_rejects_overlap():
    with pytest.raises(UsageError):
        Piecewise(((0.0, 0.6, 1.0), (0.5, 1.0, 2.0)))


EXAMPLES = [
    "fourier:p=1",
    "iexp:u=0.5,1",
    "const:1",
    "prod(fourier:p=1,iexp:u=2)",
    "re(fourier:p=1)",
    "poly[0,0,1](re(fourier:p=1))",
    "intexp:f=pw[0:0.5=1;0.5:1=-1]",
    "intexp:f=poly[1]+sin[2,1]",
    "margexp:t=0.25,0.5,u=1,-1",
    "sin(fourier:p=1)",
    "scale:2(fourier:p=1)",
    "sum(fourier:p=1,scale:-1(iexp:u=2))",
]


@pytest.mark.parametrize("text", EXAMPLES)
def test_specifier_round_trip(text):
    assert str(parse_function(text)) == text


@pytest.mark.parametrize("text", ["", "fourier:p=1.5", "nope:x=1", "fourier:p=1)", "prod(", "re(fourier:p=1,fourier:p=2)"])
def test_bad_specifiers(text):
    with pytest.raises(SpecError):
        parse_function(text)


@given(st.integers(-6, 6), st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 3)))
def test_parsed_product_evaluates_like_direct(mode, freq):
    text = f"prod(fourier:p={mode},iexp:u={freq})"
    x = np.linspace(0, 1, 9)
    direct = FourierMode(mode).eval(x) * ImaginaryExp((freq,)).eval(x)
    np.testing.assert_allclose(parse_function(text).eval(x), direct, atol=1e-12)


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=4))
def test_polynomial_antiderivative_derivative_inverse(coeffs):
    f = Polynomial(tuple(coeffs))
    x = np.linspace(0.1, 0.9, 5)
    slope = (f.antiderivative(x + STEP) - f.antiderivative(x - STEP)) / (2 * STEP)
    np.testing.assert_allclose(slope, f(x), atol=1e-6)


@given(st.integers(-4, 4), st.integers(-4, 4))
def test_fourier_product_is_a_mode(p, q):
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(Product((FourierMode(p), FourierMode(q))).eval(x), FourierMode(p + q).eval(x), atol=1e-12)
