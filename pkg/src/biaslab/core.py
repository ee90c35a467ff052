"""Shared domain types: rates, bias kinds, estimates and the model base class."""

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid model parameters, rates or manifests."""


class UsageError(ValueError):
    """An operation was called with arguments that cannot work together."""


class InadmissibleFunctionError(UsageError):
    """A test function cannot be evaluated on a model's state space."""


class NonLocalModelError(UsageError):
    """A check that needs a local limit form was asked of a non-local model."""


class BiasKind(str, enum.Enum):
    THEORETICAL = "Theoretical"
    PRACTICAL = "Practical"
    SYMMETRIC = "Symmetric"
    SINGULAR = "Singular"
    QUARTIC = "QuarticDiagnostic"
    THEORETICAL_VARIANCE = "TheoreticalVariance"
    PRACTICAL_VARIANCE = "PracticalVariance"
    SQUARE_FIELD = "SquareFieldPaired"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for kind in cls:
            if kind.value.lower() == str(name).lower() or kind.name.lower() == str(name).lower():
                return kind
        raise ConfigurationError(f"unknown bias kind {name!r}")


def bilinear(a, b):
    """Complex product without conjugation."""
    return a * b


def as_complex(re, im=0.0):
    return complex(float(re), float(im))


RATE_KINDS = ("power", "reciprocal_epsilon", "mutual", "constant", "geometric")


@dataclass(frozen=True)
class RateSequence:
    """Scaling sequence alpha_n.

    power:               alpha_n = c * n**p
    reciprocal_epsilon:  eps_n = c / n and alpha_n = 1 / eps_n
    mutual:              alpha(m) = m / k(m) with k(m) = ceil(theta * sqrt(m))
    constant:            alpha_n = 1
    geometric:           alpha_n = base**n
    """

    kind: str = "power"
    c: float = 1.0
    p: float = 1.0
    theta: float = 1.0
    base: float = 10.0

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ConfigurationError(f"unknown rate kind {self.kind!r}")
        if self.kind in ("power", "reciprocal_epsilon") and not self.c > 0:
            raise ConfigurationError(f"rate parameter c must be positive, got {self.c}")
        if self.kind == "power" and not self.p > 0:
            raise ConfigurationError(f"rate exponent p must be positive, got {self.p}")
        if self.kind == "mutual" and not self.theta > 0:
            raise ConfigurationError(f"mutual rate theta must be positive, got {self.theta}")
        if self.kind == "geometric" and not self.base > 1:
            raise ConfigurationError(f"geometric rate base must exceed 1, got {self.base}")

    def gap(self, m):
        """k(m) for mutual rates: the number of extra terms in the partner sum."""
        return int(math.ceil(self.theta * math.sqrt(m) - 1e-12))

    def partner(self, m):
        return m + self.gap(m)

    def __call__(self, n):
        if n < 1:
            raise UsageError(f"index must be at least 1, got {n}")
        if self.kind == "power":
            return self.c * float(n) ** self.p
        if self.kind == "reciprocal_epsilon":
            return float(n) / self.c
        if self.kind == "mutual":
            return float(n) / self.gap(n)
        if self.kind == "geometric":
            return float(self.base) ** n
        return 1.0

    def epsilon(self, n):
        if self.kind != "reciprocal_epsilon":
            raise UsageError("epsilon is only defined for reciprocal_epsilon rates")
        return self.c / float(n)


def rate_eval(rate, n):
    value = rate(n)
    if not value > 0 or not math.isfinite(value):
        raise ConfigurationError(f"rate evaluated to {value} at n={n}")
    return value


@dataclass(frozen=True)
class BiasEstimate:
    n: int
    mean: complex
    stderr: float
    samples: int
    seed: int
    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mean.real) and math.isfinite(self.mean.imag)):
            raise UsageError(f"non-finite estimate at n={self.n}: {self.mean}")
        if not self.stderr >= 0:
            raise UsageError(f"negative or NaN stderr at n={self.n}")


@dataclass(frozen=True)
class LimitEstimate:
    value: complex
    uncertainty: float
    fit_model: str
    residual: float
    points_used: tuple = ()


def singular_combine(th, pr):
    """Half-difference of a Theoretical and a Practical estimate at the same n."""
    if th.n != pr.n:
        raise UsageError(f"cannot combine estimates at n={th.n} and n={pr.n}")
    return BiasEstimate(
        n=th.n,
        mean=(th.mean - pr.mean) / 2,
        stderr=0.5 * math.hypot(th.stderr, pr.stderr),
        samples=min(th.samples, pr.samples),
        seed=th.seed,
        alpha=th.alpha,
    )


@dataclass(frozen=True)
class ModelFlags:
    asymptotically_symmetric: bool = False
    expected_local: bool = True
    deterministic_U: bool = False


@dataclass(frozen=True)
class CoupledSample:
    limit: object
    approx: object

    def __len__(self):
        return len(self.limit)


STATE_SPACES = ("interval", "real", "vector", "path", "empirical", "point_measure")


class ApproximationModel:
    """A coupled sampler of (Y, Y_n) with its rate and reference operators.

    Subclasses set the class attributes and implement ``sample``; those with
    reference values override ``closed_form``.
    """

    id = ""
    anchor = ""
    state_space = "real"
    flags = ModelFlags()
    default_grid = (64, 256, 1024)
    default_samples = 20_000
    extrapolation_variable = "n"
    min_index = 1
    max_index = None
    default_fit = "auto"
    locality_grid = None

    def __init__(self, rate, params):
        self.rate = rate
        self.params = dict(params)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def check_index(self, n):
        if int(n) != n or n < self.min_index:
            raise ConfigurationError(f"{self.id}: index {n} below minimum {self.min_index}")
        if self.max_index is not None and n > self.max_index:
            raise ConfigurationError(f"{self.id}: index {n} above maximum {self.max_index}")

    def alpha(self, n):
        return rate_eval(self.rate, n)

    def block_size(self, n):
        return 8192

    def sample(self, n, size, rng):
        raise NotImplementedError

    def closed_form(self, kind, phi, chi, psi=None, exponent=4):
        """Reference limit, or None when no reference is known."""
        return None

    def probe_functions(self):
        """A few admissible test functions used by the default checks."""
        raise NotImplementedError

    def admits(self, fn):
        return fn.admissible_on(self.state_space)

    limit_cdf = None


@dataclass(frozen=True)
class FunctionalSpec:
    kind: BiasKind
    phi: object
    chi: object
    psi: object = None
    exponent: float = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", BiasKind.parse(self.kind))


@dataclass(frozen=True)
class Combination:
    """A fixed linear combination of functionals, estimated from shared samples."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((complex(c), s) for c, s in self.terms))


def finite_or_raise(values, what):
    if not np.all(np.isfinite(values)):
        raise UsageError(f"non-finite values while evaluating {what}")
    return values
