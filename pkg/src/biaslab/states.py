"""Finite representations of path-like model states."""

import math

import numpy as np

from .algebra import Piecewise, Polynomial
from .core import InadmissibleFunctionError


class PathState:
    """Piecewise-linear paths on a uniform grid of [0, horizon].

    values has shape (samples, steps + 1). For a piecewise-linear path the
    integral of f against dX equals the integration-by-parts value
    X(1)f(1) - X(0)f(0) - int X df, and both reduce to
    sum_k dX_k * (average of f on cell k), which is what ``integral`` uses.
    """

    def __init__(self, values, horizon=1.0):
        self.values = np.asarray(values, dtype=float)
        self.horizon = float(horizon)

    def __len__(self):
        return self.values.shape[0]

    @property
    def steps(self):
        return self.values.shape[1] - 1

    def value_at(self, t):
        if t > self.horizon + 1e-12:
            raise InadmissibleFunctionError(f"time {t} is beyond the path horizon {self.horizon}")
        x = t / self.horizon * self.steps
        k = min(int(math.floor(x + 1e-9)), self.steps)
        frac = x - k
        if frac <= 1e-9 or k == self.steps:
            return self.values[:, k]
        return self.values[:, k] + frac * (self.values[:, k + 1] - self.values[:, k])

    def integral(self, f):
        if abs(self.horizon - 1.0) > 1e-12:
            raise InadmissibleFunctionError("path integrals need paths on [0, 1]")
        return np.diff(self.values, axis=1) @ f.cell_averages(self.steps)


class RunPathState:
    """Partial-sum paths stored as sums of increments over index runs.

    The path on grid N has increments V_k / sqrt(N). Runs are index ranges
    [edges[r], edges[r+1]) chosen so that every cell of a run lies in one cell
    of the resolution grid {j / resolution} or is a single straddling cell.
    Integrals of piecewise-constant integrands whose breakpoints sit on the
    resolution grid are then exact.
    """

    def __init__(self, run_sums, edges, grid, resolution):
        self.run_sums = run_sums
        self.edges = np.asarray(edges)
        self.grid = int(grid)
        self.resolution = int(resolution)
        self.active = int(np.searchsorted(self.edges, self.grid))

    def __len__(self):
        return self.run_sums.shape[0]

    def _check(self, f):
        if isinstance(f, Polynomial) and len(f.coeffs) == 1:
            return
        if isinstance(f, Piecewise):
            ok = all(abs(b * self.resolution - round(b * self.resolution)) < 1e-9 for b in f.breakpoints)
            if ok:
                return
        raise InadmissibleFunctionError(
            f"integrand {f} is not piecewise constant on the 1/{self.resolution} grid"
        )

    def integral(self, f):
        self._check(f)
        starts = self.edges[: self.active]
        lo = starts / self.grid
        hi = (starts + 1) / self.grid
        averages = (f.antiderivative(hi) - f.antiderivative(lo)) * self.grid
        return self.run_sums[:, : self.active] @ averages / math.sqrt(self.grid)

    def value_at(self, t):
        x = t * self.resolution
        if abs(x - round(x)) > 1e-9:
            raise InadmissibleFunctionError(f"time {t} is not on the 1/{self.resolution} grid")
        pos = t * self.grid
        k = int(math.floor(pos + 1e-12))
        r = int(np.searchsorted(self.edges, k))
        total = self.run_sums[:, :r].sum(axis=1)
        frac = pos - k
        if frac > 1e-12:
            total = total + frac * self.run_sums[:, r]
        return total / math.sqrt(self.grid)


def run_edges(m, n, resolution):
    """Index runs for the coupled pair of grids m < n at the given resolution."""
    edges = {0, m, n}
    for size in (m, n):
        for j in range(1, resolution):
            q, r = divmod(j * size, resolution)
            edges.add(q)
            if r:
                edges.add(q + 1)
    return np.array(sorted(e for e in edges if e <= n))


class EmpiricalState:
    """Centered, scaled empirical measure (1/sqrt(N)) * sum_j (delta_{x_j} - law)."""

    def __init__(self, points, centering, cdf=None):
        self.points = np.asarray(points, dtype=float)
        self.centering = centering
        self.cdf = cdf

    def __len__(self):
        return self.points.shape[0]

    def integral(self, f):
        size = self.points.shape[1]
        return (f(self.points).sum(axis=1) - size * self.centering(f)) / math.sqrt(size)

    def value_at(self, t):
        if self.cdf is None:
            raise InadmissibleFunctionError("this empirical state has no marginal values")
        size = self.points.shape[1]
        return ((self.points <= t).sum(axis=1) - size * self.cdf(t)) / math.sqrt(size)


class PointMeasureState:
    """Finite point measures: points (samples, J_max) with a mask of live atoms."""

    def __init__(self, points, mask):
        self.points = np.asarray(points, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)

    def __len__(self):
        return self.points.shape[0]

    def integral(self, f):
        return np.where(self.mask, f(self.points), 0.0).sum(axis=1)

    def value_at(self, t):
        raise InadmissibleFunctionError("point measures have no marginal values")
