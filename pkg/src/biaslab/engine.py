"""Monte Carlo estimation of bias functionals and extrapolation in n."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebra import Constant, chain_compose, is_scalar
from .core import (
    BiasEstimate,
    BiasKind,
    Combination,
    FunctionalSpec,
    InadmissibleFunctionError,
    LimitEstimate,
    NonLocalModelError,
    UsageError,
    singular_combine,
)
from .rng import block_stream

MIN_SAMPLES = 100
ROUNDING = 1e-12


@dataclass(frozen=True)
class Moment:
    """alpha_n * E|Y_n - Y|^power for point-valued states."""

    power: float = 2.0


class _Evaluator:
    """Evaluates functions on a coupled sample, caching by function."""

    def __init__(self, sample):
        self.sample = sample
        self.cache = {}

    def pair(self, fn):
        if fn not in self.cache:
            lim = np.asarray(fn.evaluate(self.sample.limit), dtype=complex)
            app = np.asarray(fn.evaluate(self.sample.approx), dtype=complex)
            if isinstance(fn, Constant):
                app = lim
            self.cache[fn] = (lim, app)
        return self.cache[fn]


def kind_integrand(kind, phi, phi_n, chi, chi_n, psi=None, psi_n=None, exponent=4):
    """Per-sample integrand of a bias functional, before the alpha_n factor."""
    d_phi = phi_n - phi
    if kind is BiasKind.THEORETICAL:
        return d_phi * chi
    if kind is BiasKind.PRACTICAL:
        return -d_phi * chi_n
    if kind is BiasKind.SYMMETRIC:
        return 0.5 * d_phi * (chi_n - chi)
    if kind is BiasKind.SQUARE_FIELD:
        return d_phi * d_phi * (chi_n + chi) / 2
    if kind is BiasKind.QUARTIC:
        return (np.abs(d_phi) ** exponent).astype(complex)
    if kind is BiasKind.THEORETICAL_VARIANCE:
        return d_phi * (chi_n - chi) * psi
    if kind is BiasKind.PRACTICAL_VARIANCE:
        return d_phi * (chi_n - chi) * psi_n
    raise UsageError(f"{kind.value} has no direct integrand")


def _spec_values(spec, ev):
    phi, phi_n = ev.pair(spec.phi)
    chi, chi_n = ev.pair(spec.chi)
    psi = psi_n = None
    if spec.kind in (BiasKind.THEORETICAL_VARIANCE, BiasKind.PRACTICAL_VARIANCE):
        psi, psi_n = ev.pair(spec.psi if spec.psi is not None else spec.chi)
    return kind_integrand(spec.kind, phi, phi_n, chi, chi_n, psi, psi_n, spec.exponent)


def _item_values(item, ev):
    if isinstance(item, FunctionalSpec):
        return _spec_values(item, ev)
    if isinstance(item, Combination):
        out = 0
        for coef, spec in item.terms:
            out = out + coef * _item_values(spec, ev)
        return np.asarray(out, dtype=complex)
    if isinstance(item, Moment):
        lim, app = ev.sample.limit, ev.sample.approx
        if not isinstance(lim, np.ndarray):
            raise InadmissibleFunctionError("moments need point-valued states")
        diff = np.abs(app - lim)
        if diff.ndim > 1:
            diff = np.linalg.norm(diff, axis=-1)
        return (diff**item.power).astype(complex)
    raise UsageError(f"cannot estimate {item!r}")


def _functions_of(item):
    if isinstance(item, FunctionalSpec):
        return [f for f in (item.phi, item.chi, item.psi) if f is not None]
    if isinstance(item, Combination):
        return [f for _, s in item.terms for f in _functions_of(s)]
    return []


def _expand(items):
    """Replace Singular specs by their Theoretical and Practical halves."""
    flat, layout = [], []
    for item in items:
        if isinstance(item, FunctionalSpec) and item.kind is BiasKind.SINGULAR:
            th = FunctionalSpec(BiasKind.THEORETICAL, item.phi, item.chi)
            pr = FunctionalSpec(BiasKind.PRACTICAL, item.phi, item.chi)
            layout.append(("singular", len(flat)))
            flat.extend([th, pr])
        else:
            layout.append(("plain", len(flat)))
            flat.append(item)
    return flat, layout


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, values):
        parts = np.stack([values.real, values.imag])
        mean = parts.mean(axis=1)
        m2 = ((parts - mean[:, None]) ** 2).sum(axis=1)
        return cls(values.shape[0], mean, m2)

    def merge(self, other):
        total = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / total)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / total)
        return _Moments(total, mean, m2)


def _blocks(model, n, samples):
    size = model.block_size(n)
    return [(b, min(size, samples - b * size)) for b in range(math.ceil(samples / size))]


def _run_block(model, items, n, seed, block, size):
    rng = block_stream(seed, model.id, n, block)
    sample = model.sample(n, size, rng)
    ev = _Evaluator(sample)
    out = []
    for item in items:
        values = _item_values(item, ev)
        if not np.all(np.isfinite(values)):
            raise UsageError(f"{model.id}: non-finite integrand at n={n}")
        out.append(_Moments.of(values))
    return out


def _validate(model, items, n, samples):
    if samples < MIN_SAMPLES:
        raise UsageError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    model.check_index(n)
    for item in items:
        for fn in _functions_of(item):
            if not model.admits(fn):
                raise InadmissibleFunctionError(f"{fn} is not admissible for {model.id}")


def estimate_many(model, items, n, samples, seed, workers=1):
    """Estimate several functionals from one shared set of samples."""
    flat, layout = _expand(list(items))
    _validate(model, flat, n, samples)
    blocks = _blocks(model, n, samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda b: _run_block(model, flat, n, seed, *b), blocks))
    else:
        partials = [_run_block(model, flat, n, seed, *b) for b in blocks]
    totals = partials[0]
    for part in partials[1:]:
        totals = [a.merge(b) for a, b in zip(totals, part)]
    alpha = model.alpha(n)
    estimates = []
    for acc in totals:
        var = acc.m2 / max(acc.count - 1, 1)
        se = alpha * np.sqrt(var / acc.count)
        mean = alpha * complex(acc.mean[0], acc.mean[1])
        estimates.append(BiasEstimate(n, mean, float(se.max()), acc.count, seed, alpha))
    out = []
    for how, idx in layout:
        if how == "singular":
            out.append(singular_combine(estimates[idx], estimates[idx + 1]))
        else:
            out.append(estimates[idx])
    return out


def estimate(model, spec, n, samples, seed, workers=1):
    return estimate_many(model, [spec], n, samples, seed, workers)[0]


def _check_grid(n_grid):
    n_grid = list(n_grid)
    if not n_grid:
        raise UsageError("empty n-grid")
    if any(b <= a for a, b in zip(n_grid[:-1], n_grid[1:])):
        raise UsageError(f"n-grid must be strictly increasing, got {n_grid}")
    return n_grid


def estimate_grid_many(model, items, n_grid, samples, seed, workers=1):
    """One list of estimates per item, over the grid."""
    n_grid = _check_grid(n_grid)
    for n in n_grid:
        model.check_index(n)
    per_n = [estimate_many(model, items, n, samples, seed, workers) for n in n_grid]
    return [list(col) for col in zip(*per_n)]


def estimate_grid(model, spec, n_grid, samples, seed, workers=1):
    return estimate_grid_many(model, [spec], n_grid, samples, seed, workers)[0]


def sample_integrands(model, items, n, size, seed):
    """Raw per-sample integrands (without alpha) for the first ``size`` samples."""
    _validate(model, items, n, max(size, MIN_SAMPLES))
    chunks = []
    for block, count in _blocks(model, n, size):
        rng = block_stream(seed, model.id, n, block)
        ev = _Evaluator(model.sample(n, count, rng))
        chunks.append([_item_values(item, ev) for item in items])
    return [np.concatenate(col) for col in zip(*chunks)]


# ------------------------------------------------------------ extrapolation

FITS = {
    "constant": (0,),
    "sqrt": (0, 1),
    "sqrt+inv": (0, 1, 2),
}


def _abscissa(point, variable):
    scale = point.n if variable == "n" else point.alpha
    return 1.0 / math.sqrt(scale)


def extrapolate(points, fit="auto", variable="n"):
    """Least-squares fit of the estimates in powers of n^(-1/2); value is the intercept."""
    points = list(points)
    if not points:
        raise UsageError("nothing to extrapolate")
    if fit == "auto":
        fit = "constant" if len(points) == 1 else ("sqrt+inv" if len(points) >= 4 else "sqrt")
    if fit not in FITS:
        raise UsageError(f"unknown fit model {fit!r}")
    powers = FITS[fit]
    if len(points) < len(powers):
        raise UsageError(f"fit {fit} needs at least {len(powers)} points, got {len(points)}")
    x = np.array([_abscissa(p, variable) for p in points])
    if len(set(np.round(x, 15))) < len(powers) or len(set(p.n for p in points)) < len(points):
        raise UsageError("singular design matrix: duplicate n in the grid")
    design = np.stack([x**k for k in powers], axis=1)
    sigma = np.array([p.stderr for p in points])
    weights = 1.0 / sigma**2 if np.all(sigma > 0) else np.ones_like(sigma)
    root = np.sqrt(weights)
    scaled = design * root[:, None]
    norms = np.linalg.norm(scaled, axis=0)
    norms[norms == 0] = 1.0
    if np.linalg.cond(scaled / norms) > 1e10:
        raise UsageError("singular design matrix")
    solve = np.linalg.pinv(scaled / norms) * root[None, :] / norms[:, None]
    dof = len(points) - len(powers)
    value, variances, residual = [], [], 0.0
    for comp in ("real", "imag"):
        y = np.array([getattr(p.mean, comp) for p in points])
        coef = solve @ y
        res = y - design @ coef
        var = float(np.sum(solve[0] ** 2 * sigma**2))
        if dof > 0 and np.all(sigma > 0):
            chi2 = float(np.sum(weights * res**2)) / dof
            var *= max(chi2, 1.0)
        value.append(coef[0])
        variances.append(var)
        residual = max(residual, float(np.sqrt(np.mean(res**2))))
    last = max(points, key=lambda p: p.n)
    uncertainty = max(math.sqrt(max(variances)), last.stderr / 2)
    return LimitEstimate(
        value=complex(value[0], value[1]),
        uncertainty=uncertainty,
        fit_model=fit,
        residual=residual,
        points_used=tuple((p.n, p) for p in points),
    )


def compare(value, uncertainty, reference, sigmas=3.0):
    """z-score and pass flag for |value - reference| <= sigmas * uncertainty (componentwise).

    Differences below ROUNDING count as exact agreement, so identities that
    hold up to floating point rounding do not produce spurious z-scores.
    """
    delta = max(abs(value.real - reference.real), abs(value.imag - reference.imag))
    if delta <= ROUNDING:
        return 0.0, True
    if uncertainty <= 0:
        return math.inf, False
    z = delta / uncertainty
    return z, z <= sigmas


# ----------------------------------------------------------------- chain rule


def chain_rule_check(model, outer, fs, n, samples, seed, workers=1):
    """Compare alpha_n E[(F(f(Y_n)) - F(f(Y)))^2] with E[sum F_i F_j Gamma[f_i, f_j]].

    The right side uses the model's square field when it has one; otherwise it
    is estimated at the same n from alpha_n E[sum F_i F_j df_i df_j] with the
    gradient taken at Y.
    """
    if not model.flags.expected_local:
        raise NonLocalModelError(f"{model.id} is not local; the chain rule does not apply")
    fs = tuple(fs)
    composite = chain_compose(outer, fs)
    lhs = estimate(model, FunctionalSpec(BiasKind.SQUARE_FIELD, composite, Constant(1.0)), n, samples, seed, workers)
    gamma = getattr(model, "square_field", None)
    if gamma is not None and all(is_scalar(f) for f in fs):
        pts = model.law.nodes[0]
        vals = [f.eval(pts) for f in fs]
        grad = outer.grad(vals)
        total = 0
        for i, fi in enumerate(fs):
            for j, fj in enumerate(fs):
                total = total + grad[i] * grad[j] * gamma(fi, fj, pts)
        return lhs, complex(model.law.expect(total))
    rhs_est = _gradient_square(model, outer, fs, n, samples, seed)
    return lhs, rhs_est


def _gradient_square(model, outer, fs, n, samples, seed):
    total = _Moments(0, np.zeros(2), np.zeros(2))
    for block, count in _blocks(model, n, samples):
        rng = block_stream(seed, model.id, n, block)
        ev = _Evaluator(model.sample(n, count, rng))
        pairs = [ev.pair(f) for f in fs]
        grad = outer.grad([p[0] for p in pairs])
        acc = 0
        for i, pi in enumerate(pairs):
            for j, pj in enumerate(pairs):
                acc = acc + grad[i] * grad[j] * (pi[1] - pi[0]) * (pj[1] - pj[0])
        part = _Moments.of(np.asarray(acc, dtype=complex))
        total = part if total.count == 0 else total.merge(part)
    return model.alpha(n) * complex(total.mean[0], total.mean[1])
