"""Building blocks shared by catalog models."""

import numpy as np

from ..algebra import (
    Constant,
    Integrand,
    Piecewise,
    Polynomial,
    Product,
    add_linear,
    add_integrands,
    exponential_form,
    is_scalar,
)
from ..core import ApproximationModel, BiasKind, ConfigurationError

REGISTRY = {}


def register(cls):
    REGISTRY[cls.id] = cls
    return cls


def resolve_params(cls, params):
    """Merge user parameters over the class defaults, coercing to the default's type."""
    params = dict(params or {})
    unknown = sorted(set(params) - set(cls.defaults))
    if unknown:
        raise ConfigurationError(f"{cls.id}: unknown parameter(s) {', '.join(unknown)}")
    out = {}
    for key, default in cls.defaults.items():
        value = params.get(key, default)
        try:
            if value is None or default is None:
                out[key] = value
            elif isinstance(default, bool):
                if not isinstance(value, bool):
                    raise TypeError
                out[key] = value
            elif isinstance(default, int):
                if float(value) != int(value):
                    raise TypeError
                out[key] = int(value)
            elif isinstance(default, float):
                out[key] = float(value)
            elif isinstance(default, tuple):
                out[key] = tuple(float(v) for v in value)
            else:
                out[key] = type(default)(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{cls.id}: parameter {key} has invalid value {value!r}") from None
    return out


def require(condition, message):
    if not condition:
        raise ConfigurationError(message)


def products(phi, chi):
    if isinstance(phi, Constant) and isinstance(chi, Constant):
        return Constant(phi.c * chi.c)
    return Product((phi, chi))


class OperatorModel(ApproximationModel):
    """Model whose reference values come from explicit operators on a scalar law.

    Subclasses provide ``law`` plus ``theoretical_operator`` and
    ``practical_operator`` mapping (phi, points) to arrays. Every other kind is
    derived from those two: the symmetric form is minus the mean of the two
    operators, the square field comes from the symmetric form by polarisation,
    and the variances from the derivation defect of each operator.
    """

    law = None

    def theoretical_operator(self, phi, x):
        raise NotImplementedError

    def practical_operator(self, phi, x):
        raise NotImplementedError

    def _pair(self, op, phi, chi):
        if isinstance(phi, Constant):
            return 0j
        x = self.law.nodes[0]
        return complex(self.law.expect(op(phi, x) * chi.eval(x)))

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        funcs = [f for f in (phi, chi, psi) if f is not None]
        if not all(is_scalar(f) for f in funcs):
            return None
        th = lambda f, g: self._pair(self.theoretical_operator, f, g)  # noqa: E731
        pr = lambda f, g: self._pair(self.practical_operator, f, g)  # noqa: E731
        return derive_kind(kind, th, pr, products, phi, chi, psi, self.flags.expected_local)


def derive_kind(kind, th, pr, prod, phi, chi, psi=None, local=True):
    """Reference value of any bias kind from the theoretical and practical pairings.

    The symmetric form is minus the mean of the two pairings, the square field
    follows by polarisation and the variance kinds from the derivation defect.
    """
    kind = BiasKind.parse(kind)
    sym = lambda f, g: -0.5 * (th(f, g) + pr(f, g))  # noqa: E731
    if kind is BiasKind.THEORETICAL:
        return th(phi, chi)
    if kind is BiasKind.PRACTICAL:
        return pr(phi, chi)
    if kind is BiasKind.SYMMETRIC:
        return sym(phi, chi)
    if kind is BiasKind.SINGULAR:
        return 0.5 * (th(phi, chi) - pr(phi, chi))
    if kind is BiasKind.SQUARE_FIELD:
        return -sym(prod(phi, phi), chi) + 2 * sym(phi, prod(phi, chi))
    if kind is BiasKind.QUARTIC:
        return 0j if local else None
    psi = chi if psi is None else psi
    op = th if kind is BiasKind.THEORETICAL_VARIANCE else pr
    return op(prod(phi, chi), psi) - op(chi, prod(phi, psi)) - op(phi, prod(chi, psi))


class _NoForm(Exception):
    pass


def _form_product(a, b):
    lin = add_linear(a[1], b[1])
    if lin is NotImplemented:
        raise _NoForm
    return a[0] * b[0], lin


class ExponentialModel(ApproximationModel):
    """Model with reference values for functions of the form c * exp(i <linear>).

    Subclasses implement ``theoretical_pairing(lf, lg)`` and
    ``practical_pairing(lf, lg)`` for unit exponentials with linear parts lf
    and lg (lg may be None for the constant 1); products of exponentials add
    their linear parts, which gives every other kind.
    """

    def linear_ok(self, lin):
        return True

    def canonical(self, lin):
        return lin

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        return self.closed_form_with(kind, phi, chi, psi, self.theoretical_pairing, self.practical_pairing)

    def closed_form_with(self, kind, phi, chi, psi, theoretical, practical):
        """Derive ``kind`` from the given pairings of unit exponentials."""
        forms = []
        for f in (phi, chi, psi):
            if f is None:
                forms.append(None)
                continue
            form = exponential_form(f, self.canonical)
            if form is None or (form[1] is not None and not self.linear_ok(form[1])):
                return None
            forms.append(form)

        def pairing(method):
            def run(a, b):
                if a[1] is None:
                    return 0j
                return a[0] * b[0] * complex(method(a[1], b[1]))

            return run

        try:
            return derive_kind(
                kind, pairing(theoretical), pairing(practical), _form_product, *forms, local=self.flags.expected_local
            )
        except _NoForm:
            return None

    def theoretical_pairing(self, lf, lg):
        raise NotImplementedError

    def practical_pairing(self, lf, lg):
        raise NotImplementedError


def as_integrand(lin):
    """Linear part of a path exponential as an integrand against dX.

    X(t) is the integral of the indicator of [0, t]; this also matches linear
    interpolation between grid points, since the cell average of the indicator
    is the interpolation weight.
    """
    if lin is None:
        return Polynomial((0.0,))
    if isinstance(lin, Integrand):
        return lin
    parts = [Piecewise(((0.0, t, u),)) for t, u in lin if t > 0]
    return add_integrands(*parts)


class DiffusionModel(OperatorModel):
    """Operators of the form a(x) phi'' + b(x) phi' with a shared second-order part."""

    def diffusion(self, x):
        raise NotImplementedError

    def drift_theoretical(self, x):
        raise NotImplementedError

    def drift_practical(self, x):
        raise NotImplementedError

    def theoretical_operator(self, phi, x):
        return self.diffusion(x) * phi.d2(x) + self.drift_theoretical(x) * phi.d1(x)

    def practical_operator(self, phi, x):
        return self.diffusion(x) * phi.d2(x) + self.drift_practical(x) * phi.d1(x)

    def square_field(self, f, g, x):
        """Pointwise square field Gamma[f, g](x) = 2 a(x) f'(x) g'(x)."""
        return 2.0 * self.diffusion(x) * f.d1(x) * g.d1(x)


def const_array(value, x):
    return np.full(np.shape(x), float(value))
