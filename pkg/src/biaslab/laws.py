"""Limit laws with quadrature rules used for reference values."""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats
from scipy.special import roots_hermitenorm, roots_legendre


@dataclass(frozen=True)
class Uniform:
    low: float = 0.0
    high: float = 1.0
    panels: int = 64
    order: int = 24

    @cached_property
    def nodes(self):
        x, w = roots_legendre(self.order)
        cuts = np.linspace(self.low, self.high, self.panels + 1)
        lo, hi = cuts[:-1, None], cuts[1:, None]
        pts = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
        wts = (0.5 * (hi - lo) * w).ravel() / (self.high - self.low)
        return pts, wts

    def expect(self, values):
        return np.sum(self.nodes[1] * values)

    def cdf(self, x):
        return stats.uniform(self.low, self.high - self.low).cdf(x)

    def log_density_derivative(self, x):
        return np.zeros_like(x)


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    sd: float = 1.0
    order: int = 160

    @cached_property
    def nodes(self):
        x, w = roots_hermitenorm(self.order)
        return self.mean + self.sd * x, w / math.sqrt(2 * math.pi)

    def expect(self, values):
        return np.sum(self.nodes[1] * values)

    def cdf(self, x):
        return stats.norm(self.mean, self.sd).cdf(x)

    def log_density_derivative(self, x):
        return -(np.asarray(x) - self.mean) / self.sd**2


class Pushforward:
    """Image of a quadrature law under a map; cdf is optional."""

    def __init__(self, base, transform, cdf=None):
        self.base = base
        self.transform = transform
        self._cdf = cdf

    @cached_property
    def nodes(self):
        x, w = self.base.nodes
        return self.transform(x), w

    def expect(self, values):
        return np.sum(self.nodes[1] * values)

    def cdf(self, x):
        if self._cdf is None:
            raise NotImplementedError("this law has no closed-form cdf")
        return self._cdf(x)
