"""The test-function algebra.

Scalar test functions carry exact first and second derivatives. Points are
arrays of shape (...,) in one dimension and (..., d) in d dimensions; first
derivatives then have shape (...,) or (..., d) and second derivatives (...,)
or (..., d, d).

Cylindrical functions act on model states (paths, empirical measures, point
measures) through the state's own finite representation.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .core import InadmissibleFunctionError, UsageError

SCALAR_SPACES = ("interval", "real", "vector")
TWO_PI = 2.0 * math.pi


class Function:
    """Common arithmetic for every element of the algebra."""

    bound = 1.0

    def evaluate(self, state):
        raise NotImplementedError

    def admissible_on(self, space):
        raise NotImplementedError

    def __add__(self, other):
        return Sum(((1.0, self), (1.0, _lift(other))))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum(((1.0, self), (-1.0, _lift(other))))

    def __rsub__(self, other):
        return Sum(((1.0, _lift(other)), (-1.0, self)))

    def __neg__(self):
        return Sum(((-1.0, self),))

    def __mul__(self, other):
        if isinstance(other, Function):
            return Product((self, other))
        return Sum(((complex(other), self),))

    __rmul__ = __mul__


def _lift(x):
    return x if isinstance(x, Function) else Constant(complex(x))


def _outer(a, b, dim):
    if dim == 1:
        return a * b
    return a[..., :, None] * b[..., None, :]


def _times(values, deriv, order, dim):
    """Multiply a derivative array by pointwise values, broadcasting over trailing axes."""
    if dim == 1:
        return deriv * values
    return deriv * values[(...,) + (None,) * order]


class TestFunction(Function):
    """Bounded scalar function with analytic derivatives."""

    __test__ = False
    dim = 1

    def admissible_on(self, space):
        return space in SCALAR_SPACES

    def evaluate(self, state):
        if not isinstance(state, np.ndarray):
            raise InadmissibleFunctionError(
                f"{self} needs a point-valued state, got {type(state).__name__}"
            )
        return self.eval(state)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim not in (None, 1) and (x.ndim == 0 or x.shape[-1] != self.dim):
            raise UsageError(f"{self} expects points of dimension {self.dim}, got shape {x.shape}")
        return x

    def eval(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class FourierMode(TestFunction):
    p: int = 1

    @property
    def bound(self):
        return 1.0

    def eval(self, x):
        return np.exp(2j * math.pi * self.p * self._check(x))

    def d1(self, x):
        return 2j * math.pi * self.p * self.eval(x)

    def d2(self, x):
        return -((TWO_PI * self.p) ** 2) * self.eval(x)

    def __str__(self):
        return f"fourier:p={self.p}"


@dataclass(frozen=True)
class ImaginaryExp(TestFunction):
    u: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(v) for v in np.atleast_1d(self.u)))

    @property
    def dim(self):
        return len(self.u)

    @property
    def bound(self):
        return 1.0

    def _phase(self, x):
        x = self._check(x)
        if self.dim == 1:
            return self.u[0] * x
        return x @ np.asarray(self.u)

    def eval(self, x):
        return np.exp(1j * self._phase(x))

    def d1(self, x):
        v = self.eval(x)
        if self.dim == 1:
            return 1j * self.u[0] * v
        return 1j * v[..., None] * np.asarray(self.u)

    def d2(self, x):
        v = self.eval(x)
        if self.dim == 1:
            return -(self.u[0] ** 2) * v
        u = np.asarray(self.u)
        return -v[..., None, None] * np.outer(u, u)

    def __str__(self):
        return "iexp:u=" + ",".join(_fmt(v) for v in self.u)


@dataclass(frozen=True)
class Constant(TestFunction):
    c: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))

    dim = None

    @property
    def bound(self):
        return abs(self.c)

    def admissible_on(self, space):
        return True

    def evaluate(self, state):
        return np.full(len(state), self.c, dtype=complex)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape if x.ndim <= 1 else x.shape[:-1], self.c, dtype=complex)

    def d1(self, x):
        return np.zeros(np.shape(x), complex)

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim <= 1:
            return np.zeros(x.shape, complex)
        return np.zeros(x.shape + x.shape[-1:], complex)

    def __str__(self):
        return "const:" + _fmt_complex(self.c)


def _common_dim(functions):
    dims = {getattr(f, "dim", None) for f in functions} - {None}
    if len(dims) > 1:
        raise UsageError(f"cannot combine test functions of dimensions {sorted(dims)}")
    return dims.pop() if dims else None


def _derivs(f, x, dim):
    """(value, d1, d2) of a scalar function with Constant's zero derivatives shaped for dim."""
    v = f.eval(x)
    if isinstance(f, Constant) and dim not in (None, 1):
        return v, np.zeros(v.shape + (dim,), complex), np.zeros(v.shape + (dim, dim), complex)
    if isinstance(f, Constant):
        return v, np.zeros(v.shape, complex), np.zeros(v.shape, complex)
    return v, f.d1(x), f.d2(x)


@dataclass(frozen=True)
class Product(Function):
    factors: tuple

    def __post_init__(self):
        flat = []
        for f in self.factors:
            flat.extend(f.factors if isinstance(f, Product) else (f,))
        object.__setattr__(self, "factors", tuple(flat))
        if all(isinstance(f, TestFunction) for f in flat):
            _common_dim(flat)

    @property
    def scalar(self):
        return all(is_scalar(f) for f in self.factors)

    @property
    def dim(self):
        return _common_dim(self.factors) if self.scalar else None

    @property
    def bound(self):
        return math.prod(f.bound for f in self.factors)

    def admissible_on(self, space):
        return all(f.admissible_on(space) for f in self.factors)

    def evaluate(self, state):
        out = self.factors[0].evaluate(state)
        for f in self.factors[1:]:
            out = out * f.evaluate(state)
        return out

    def _fold(self, x):
        if not self.scalar:
            raise UsageError(f"{self} has no point derivatives")
        dim = self.dim or 1
        v, g, h = _derivs(self.factors[0], x, dim)
        for f in self.factors[1:]:
            fv, fg, fh = _derivs(f, x, dim)
            h = _times(fv, h, 2, dim) + _times(v, fh, 2, dim) + _outer(g, fg, dim) + _outer(fg, g, dim)
            g = _times(fv, g, 1, dim) + _times(v, fg, 1, dim)
            v = v * fv
        return v, g, h

    def eval(self, x):
        return self._fold(x)[0]

    def d1(self, x):
        return self._fold(x)[1]

    def d2(self, x):
        return self._fold(x)[2]

    def __str__(self):
        return "prod(" + ",".join(str(f) for f in self.factors) + ")"


@dataclass(frozen=True)
class Sum(Function):
    terms: tuple

    def __post_init__(self):
        flat = []
        for coef, f in self.terms:
            if isinstance(f, Sum):
                flat.extend((complex(coef) * c, g) for c, g in f.terms)
            else:
                flat.append((complex(coef), f))
        object.__setattr__(self, "terms", tuple(flat))

    @property
    def scalar(self):
        return all(is_scalar(f) for _, f in self.terms)

    @property
    def dim(self):
        return _common_dim([f for _, f in self.terms]) if self.scalar else None

    @property
    def bound(self):
        return sum(abs(c) * f.bound for c, f in self.terms)

    def admissible_on(self, space):
        return all(f.admissible_on(space) for _, f in self.terms)

    def evaluate(self, state):
        out = 0
        for c, f in self.terms:
            out = out + c * f.evaluate(state)
        return np.asarray(out, dtype=complex)

    def _combine(self, x, index):
        if not self.scalar:
            raise UsageError(f"{self} has no point derivatives")
        dim = self.dim or 1
        out = 0
        for c, f in self.terms:
            out = out + c * _derivs(f, x, dim)[index]
        return out

    def eval(self, x):
        return self._combine(x, 0)

    def d1(self, x):
        return self._combine(x, 1)

    def d2(self, x):
        return self._combine(x, 2)

    def __str__(self):
        parts = []
        for c, f in self.terms:
            if c == 1:
                parts.append(str(f))
            else:
                parts.append(f"scale:{_fmt_complex(c)}({f})")
        if len(parts) == 1 and self.terms[0][0] != 1:
            return parts[0]
        return "sum(" + ",".join(parts) + ")"


def is_scalar(f):
    if isinstance(f, TestFunction):
        return True
    if isinstance(f, (Product, Sum, Part, Composite)):
        return f.scalar
    return False


@dataclass(frozen=True)
class Part(Function):
    """Real or imaginary part of a function."""

    inner: Function
    which: str = "re"

    def __post_init__(self):
        if self.which not in ("re", "im"):
            raise UsageError(f"part must be 're' or 'im', got {self.which!r}")

    def _take(self, v):
        return (v.real if self.which == "re" else v.imag).astype(complex)

    @property
    def scalar(self):
        return is_scalar(self.inner)

    @property
    def dim(self):
        return getattr(self.inner, "dim", None)

    @property
    def bound(self):
        return self.inner.bound

    def admissible_on(self, space):
        return self.inner.admissible_on(space)

    def evaluate(self, state):
        return self._take(self.inner.evaluate(state))

    def eval(self, x):
        return self._take(self.inner.eval(x))

    def d1(self, x):
        return self._take(self.inner.d1(x))

    def d2(self, x):
        return self._take(self.inner.d2(x))

    def __str__(self):
        return f"{self.which}({self.inner})"


# ---------------------------------------------------------------- composites


@dataclass(frozen=True)
class Outer:
    """Whitelisted C^2 outer function for composites.

    name is one of poly, sin, cos, exp (arity one), affine or mul (any arity).
    coeffs holds polynomial coefficients (constant term first) or, for affine,
    (a0, a1, ..., ap).
    """

    name: str
    coeffs: tuple = ()
    arity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if self.name not in ("poly", "sin", "cos", "exp", "affine", "mul"):
            raise UsageError(f"outer function {self.name!r} is not in the whitelist")
        if self.name in ("poly", "sin", "cos", "exp") and self.arity != 1:
            raise UsageError(f"{self.name} takes one argument")
        if self.name == "affine":
            object.__setattr__(self, "arity", len(self.coeffs) - 1)
            if self.arity < 1:
                raise UsageError("affine needs at least one slope")

    def value(self, args):
        z = args[0]
        if self.name == "poly":
            return np.polynomial.polynomial.polyval(z, np.asarray(self.coeffs))
        if self.name == "sin":
            return np.sin(z)
        if self.name == "cos":
            return np.cos(z)
        if self.name == "exp":
            return np.exp(z)
        if self.name == "affine":
            return self.coeffs[0] + sum(a * x for a, x in zip(self.coeffs[1:], args))
        return math.prod(args) if len(args) > 1 else args[0]

    def grad(self, args):
        z = args[0]
        if self.name == "poly":
            c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs))
            return [np.polynomial.polynomial.polyval(z, c) + 0 * z]
        if self.name == "sin":
            return [np.cos(z)]
        if self.name == "cos":
            return [-np.sin(z)]
        if self.name == "exp":
            return [np.exp(z)]
        if self.name == "affine":
            return [a + 0 * x for a, x in zip(self.coeffs[1:], args)]
        return [_prod_except(args, (i,)) for i in range(len(args))]

    def hess(self, args):
        z = args[0]
        if self.name == "poly":
            c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs), 2)
            return [[np.polynomial.polynomial.polyval(z, c) + 0 * z]]
        if self.name == "sin":
            return [[-np.sin(z)]]
        if self.name == "cos":
            return [[-np.cos(z)]]
        if self.name == "exp":
            return [[np.exp(z)]]
        p = len(args)
        if self.name == "affine":
            return [[0 * args[0] for _ in range(p)] for _ in range(p)]
        return [[(_prod_except(args, (i, j)) if i != j else 0 * args[0]) for j in range(p)] for i in range(p)]

    def certify(self, bounds):
        b = max(bounds)
        if self.name == "poly":
            return sum(abs(c) * b**k for k, c in enumerate(self.coeffs))
        if self.name in ("sin", "cos"):
            return math.cosh(b)
        if self.name == "exp":
            return math.exp(b)
        if self.name == "affine":
            return abs(self.coeffs[0]) + sum(abs(a) * bb for a, bb in zip(self.coeffs[1:], bounds))
        return math.prod(bounds)

    def __str__(self):
        if self.name in ("poly", "affine"):
            return f"{self.name}[" + ",".join(_fmt_complex(c) for c in self.coeffs) + "]"
        return self.name


def _prod_except(args, skip):
    out = 1.0 + 0 * args[0]
    for k, a in enumerate(args):
        if k not in skip:
            out = out * a
    return out


@dataclass(frozen=True)
class Composite(Function):
    outer: Outer
    inner: tuple

    def __post_init__(self):
        object.__setattr__(self, "inner", tuple(self.inner))
        if not self.inner:
            raise UsageError("a composite needs at least one inner function")
        if self.outer.name != "mul" and len(self.inner) != self.outer.arity:
            raise UsageError(
                f"{self.outer} takes {self.outer.arity} arguments, got {len(self.inner)}"
            )

    @property
    def scalar(self):
        return all(is_scalar(f) for f in self.inner)

    @property
    def dim(self):
        return _common_dim(self.inner) if self.scalar else None

    @property
    def bound(self):
        return self.outer.certify([f.bound for f in self.inner])

    def admissible_on(self, space):
        return all(f.admissible_on(space) for f in self.inner)

    def evaluate(self, state):
        return np.asarray(self.outer.value([f.evaluate(state) for f in self.inner]), dtype=complex)

    def eval(self, x):
        return np.asarray(self.outer.value([f.eval(x) for f in self.inner]), dtype=complex)

    def d1(self, x):
        dim = self.dim or 1
        parts = [_derivs(f, x, dim) for f in self.inner]
        grad = self.outer.grad([p[0] for p in parts])
        return sum(_times(gi, p[1], 1, dim) for gi, p in zip(grad, parts))

    def d2(self, x):
        dim = self.dim or 1
        parts = [_derivs(f, x, dim) for f in self.inner]
        vals = [p[0] for p in parts]
        grad = self.outer.grad(vals)
        hess = self.outer.hess(vals)
        out = sum(_times(gi, p[2], 2, dim) for gi, p in zip(grad, parts))
        for i, pi in enumerate(parts):
            for j, pj in enumerate(parts):
                out = out + _times(hess[i][j], _outer(pi[1], pj[1], dim), 2, dim)
        return out

    def __str__(self):
        return f"{self.outer}(" + ",".join(str(f) for f in self.inner) + ")"


def chain_compose(outer, fs):
    """Compose a whitelisted outer function with a list of test functions."""
    fs = tuple(fs)
    if not fs:
        raise UsageError("chain_compose needs at least one inner function")
    if outer.name != "mul" and outer.arity != len(fs):
        raise UsageError(f"{outer} takes {outer.arity} arguments, got {len(fs)}")
    return Composite(outer, fs)


# ----------------------------------------------------------- path integrands


@lru_cache(maxsize=None)
def _legendre(order):
    x, w = roots_legendre(order)
    return x, w


def integrate01(func, breakpoints=(), order=40, panels=16):
    """Composite Gauss-Legendre integral over [0, 1], split at breakpoints."""
    edges = sorted({0.0, 1.0, *[b for b in breakpoints if 0.0 < b < 1.0]})
    x, w = _legendre(order)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(a, b, panels + 1)
        lo, hi = cuts[:-1, None], cuts[1:, None]
        pts = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        total = total + np.sum(0.5 * (hi - lo) * w * func(pts))
    return total


class Integrand:
    """A real function on [0, 1] (or R) used inside path functionals."""

    smooth = True
    breakpoints = ()

    def __call__(self, x):
        raise NotImplementedError

    def antiderivative(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def deriv2(self, x):
        raise NotImplementedError

    def cell_averages(self, n):
        return _cell_averages(self, n)

    def integral(self):
        return float(self.antiderivative(1.0) - self.antiderivative(0.0))


@lru_cache(maxsize=256)
def _cell_averages(f, n):
    grid = np.arange(n + 1) / n
    prim = f.antiderivative(grid)
    averages = np.diff(prim) * n
    averages.setflags(write=False)
    return averages


@dataclass(frozen=True)
class Piecewise(Integrand):
    """Piecewise-constant integrand: pieces are (start, end, value)."""

    pieces: tuple

    smooth = False

    def __post_init__(self):
        pieces = tuple(sorted((float(a), float(b), float(v)) for a, b, v in self.pieces))
        for a, b, _ in pieces:
            if not a < b:
                raise UsageError(f"empty piece [{a}, {b}]")
        for (_, b, _), (a, _, _) in zip(pieces[:-1], pieces[1:]):
            if a < b - 1e-15:
                raise UsageError("overlapping pieces")
        object.__setattr__(self, "pieces", pieces)

    @property
    def breakpoints(self):
        return tuple(sorted({p for a, b, _ in self.pieces for p in (a, b)}))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, b, v in self.pieces:
            out = np.where((x >= a) & (x < b), v, out)
        last_a, last_b, last_v = self.pieces[-1]
        return np.where(x == last_b, last_v, out)

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, b, v in self.pieces:
            out = out + v * (np.clip(x, a, b) - a)
        return out

    def deriv(self, x):
        raise UsageError("a piecewise-constant integrand has no derivative")

    deriv2 = deriv

    def __str__(self):
        return "pw[" + ";".join(f"{_fmt(a)}:{_fmt(b)}={_fmt(v)}" for a, b, v in self.pieces) + "]"


@dataclass(frozen=True)
class Polynomial(Integrand):
    coeffs: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs) + 0.0

    def antiderivative(self, x):
        c = np.polynomial.polynomial.polyint(self.coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)

    def deriv(self, x):
        c = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c) + 0.0 * np.asarray(x)

    def deriv2(self, x):
        c = np.polynomial.polynomial.polyder(self.coeffs, 2)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c) + 0.0 * np.asarray(x)

    def __str__(self):
        return "poly[" + ",".join(_fmt(c) for c in self.coeffs) + "]"


@dataclass(frozen=True)
class Trig(Integrand):
    """amp * sin(2 pi k x) or amp * cos(2 pi k x)."""

    kind: str = "sin"
    k: float = 1.0
    amp: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise UsageError(f"trig integrand must be sin or cos, got {self.kind!r}")
        if self.k == 0:
            raise UsageError("trig frequency must be nonzero")

    def __call__(self, x):
        w = TWO_PI * self.k * np.asarray(x, dtype=float)
        return self.amp * (np.sin(w) if self.kind == "sin" else np.cos(w))

    def antiderivative(self, x):
        om = TWO_PI * self.k
        w = om * np.asarray(x, dtype=float)
        return self.amp * ((-np.cos(w)) if self.kind == "sin" else np.sin(w)) / om

    def deriv(self, x):
        om = TWO_PI * self.k
        w = om * np.asarray(x, dtype=float)
        return self.amp * om * (np.cos(w) if self.kind == "sin" else -np.sin(w))

    def deriv2(self, x):
        return -((TWO_PI * self.k) ** 2) * self(x)

    def __str__(self):
        return f"{self.kind}[{_fmt(self.k)},{_fmt(self.amp)}]"


@dataclass(frozen=True)
class IntegrandSum(Integrand):
    parts: tuple

    @property
    def smooth(self):
        return all(p.smooth for p in self.parts)

    @property
    def breakpoints(self):
        return tuple(sorted({b for p in self.parts for b in p.breakpoints}))

    def __call__(self, x):
        return sum(p(x) for p in self.parts)

    def antiderivative(self, x):
        return sum(p.antiderivative(x) for p in self.parts)

    def deriv(self, x):
        return sum(p.deriv(x) for p in self.parts)

    def deriv2(self, x):
        return sum(p.deriv2(x) for p in self.parts)

    def __str__(self):
        return "+".join(str(p) for p in self.parts)


def add_integrands(*fs):
    parts = []
    for f in fs:
        if f is None:
            continue
        parts.extend(f.parts if isinstance(f, IntegrandSum) else (f,))
    if not parts:
        return Polynomial((0.0,))
    return parts[0] if len(parts) == 1 else IntegrandSum(tuple(parts))


def inner01(f, g):
    """Integral of f*g over [0, 1]."""
    bps = tuple(set(f.breakpoints) | set(g.breakpoints))
    return float(integrate01(lambda x: f(x) * g(x), bps))


class CylindricalFunction(Function):
    """Function of a path-like state through finitely many linear functionals."""

    bound = 1.0
    spaces = ("path", "empirical", "point_measure")

    def admissible_on(self, space):
        return space in self.spaces


@dataclass(frozen=True)
class IntegralExp(CylindricalFunction):
    """exp(i * integral of f against the state)."""

    f: Integrand

    spaces = ("path", "empirical", "point_measure")

    def linear(self, state):
        return state.integral(self.f)

    def evaluate(self, state):
        if isinstance(state, np.ndarray):
            raise InadmissibleFunctionError(f"{self} needs a path or measure state")
        return np.exp(1j * self.linear(state))

    def __str__(self):
        return f"intexp:f={self.f}"


@dataclass(frozen=True)
class MarginalExp(CylindricalFunction):
    """exp(i * sum_l u_l * X(t_l))."""

    times: tuple = (1.0,)
    weights: tuple = (1.0,)

    spaces = ("path", "empirical")

    def __post_init__(self):
        t = tuple(float(v) for v in np.atleast_1d(self.times))
        u = tuple(float(v) for v in np.atleast_1d(self.weights))
        if len(t) != len(u):
            raise UsageError("margexp needs one weight per time")
        if any(not 0.0 <= s <= 1.0 for s in t):
            raise UsageError("margexp times must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "weights", u)

    def linear(self, state):
        return sum(u * state.value_at(t) for t, u in zip(self.times, self.weights))

    def evaluate(self, state):
        if isinstance(state, np.ndarray):
            raise InadmissibleFunctionError(f"{self} needs a path state")
        return np.exp(1j * self.linear(state))

    def __str__(self):
        return "margexp:t=" + ",".join(map(_fmt, self.times)) + ",u=" + ",".join(map(_fmt, self.weights))


def exponential_form(fn, canonical=None):
    """Write fn as c * exp(i * <linear>) when possible.

    Returns (c, linear) where linear is an Integrand for IntegralExp, a tuple of
    (time, weight) pairs for MarginalExp, a weight tuple for ImaginaryExp, or
    None for constants. ``canonical`` maps leaf linear parts to a common
    representation before they are added. Returns None when fn is not of that
    shape.
    """
    if isinstance(fn, Constant):
        return fn.c, None
    if isinstance(fn, (IntegralExp, MarginalExp, ImaginaryExp)):
        lin = _linear_part(fn)
        return 1.0 + 0j, (canonical(lin) if canonical else lin)
    if isinstance(fn, Sum) and len(fn.terms) == 1:
        inner = exponential_form(fn.terms[0][1], canonical)
        if inner is not None:
            return fn.terms[0][0] * inner[0], inner[1]
    if isinstance(fn, Product):
        c, lin = 1.0 + 0j, None
        for f in fn.factors:
            part = exponential_form(f, canonical)
            if part is None:
                return None
            c = c * part[0]
            lin = add_linear(lin, part[1])
            if lin is NotImplemented:
                return None
        return c, lin
    return None


def _linear_part(fn):
    if isinstance(fn, IntegralExp):
        return fn.f
    if isinstance(fn, MarginalExp):
        return tuple(zip(fn.times, fn.weights))
    return tuple(fn.u)


def add_linear(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if isinstance(a, Integrand) and isinstance(b, Integrand):
        return add_integrands(a, b)
    if isinstance(a, tuple) and isinstance(b, tuple) and type(a[0]) is type(b[0]):
        if isinstance(a[0], tuple):
            return a + b
        if len(a) == len(b):
            return tuple(x + y for x, y in zip(a, b))
    return NotImplemented


def _fmt(v):
    v = float(v)
    return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)


def _fmt_complex(c):
    c = complex(c)
    if c.imag == 0:
        return _fmt(c.real)
    return repr(c).strip("()")
