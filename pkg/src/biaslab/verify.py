"""Structural checks that any approximation model should pass, as pass/fail reports."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import Composite, Constant, Outer, chain_compose, is_scalar
from .core import BiasKind, Combination, FunctionalSpec, UsageError
from .engine import compare, estimate_grid_many, extrapolate, sample_integrands

SIGMAS = 3.0
ZERO_FACTOR = 10.0
ZERO_RATIO = 0.3


@dataclass
class VerificationReport:
    check: str
    model: str
    pairs: list
    z_scores: list
    status: str
    narrative: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        out = asdict(self)
        out["z_scores"] = [None if not math.isfinite(z) else z for z in self.z_scores]
        return out


def _setup(model, n_grid, samples):
    return tuple(n_grid or model.default_grid), int(samples or model.default_samples)


def _limits(model, items, n_grid, samples, seed, fit=None):
    """Grid estimates and extrapolated limit for each item, from shared samples."""
    grids = estimate_grid_many(model, items, n_grid, samples, seed)
    fit = fit or model.default_fit
    return [(pts, extrapolate(pts, fit, model.extrapolation_variable)) for pts in grids]


def _z_against(limit, reference):
    z, _ = compare(limit.value, limit.uncertainty, reference, SIGMAS)
    return z


def _z_between(a, b):
    unc = math.hypot(a.uncertainty, b.uncertainty)
    z, _ = compare(a.value, unc, b.value, SIGMAS)
    return z


def zero_trend(points, limit, against="limit"):
    """Limit indistinguishable from zero and a clear decrease along the grid.

    The extrapolated value must be below ZERO_FACTOR times its uncertainty
    (or, with against="first", the standard error of the smallest-n point),
    and the last grid value below ZERO_RATIO times the first one unless the
    first value is itself within noise of zero.
    """
    first, last = points[0], points[-1]
    scale = max(limit.uncertainty if against == "limit" else first.stderr, 1e-300)
    small = abs(limit.value) <= ZERO_FACTOR * scale or abs(limit.value) <= 1e-12
    first_noise = abs(first.mean) <= SIGMAS * first.stderr
    ratio = abs(last.mean) / abs(first.mean) if abs(first.mean) > 0 else 0.0
    decreasing = first_noise or ratio < ZERO_RATIO
    details = {
        "limit": [limit.value.real, limit.value.imag],
        "uncertainty": limit.uncertainty,
        "ratio_last_first": ratio,
        "first_within_noise": bool(first_noise),
    }
    return small and decreasing, abs(limit.value) / scale if scale > 1e-300 else 0.0, details


def _label(*fns):
    return ", ".join(str(f) for f in fns)


def _status(ok):
    return "pass" if ok else "fail"


def _skip(check, model, note):
    return VerificationReport(check, model.id, [], [], "skip", note)


def _default_pairs(model):
    probes = list(model.probe_functions())[:2] + [Constant(1.0)]
    return [(a, b) for a in probes for b in probes]


# ------------------------------------------------------------------- checks


def check_h_consistency(model, pairs=None, n_grid=None, samples=None, seed=0, limits=True):
    """Theoretical + Practical = -2 Symmetric per sample, and for the extrapolated limits."""
    pairs = list(pairs) if pairs is not None else _default_pairs(model)
    if len(pairs) < 3:
        raise UsageError("check_h_consistency needs at least 3 function pairs")
    n_grid, samples = _setup(model, n_grid, samples)
    kinds = (BiasKind.THEORETICAL, BiasKind.PRACTICAL, BiasKind.SYMMETRIC)
    items = [FunctionalSpec(k, phi, chi) for phi, chi in pairs for k in kinds]
    raw = sample_integrands(model, items, n_grid[0], min(samples, 4096), seed)
    residual = 0.0
    for i in range(0, len(raw), 3):
        th, pr, sym = raw[i : i + 3]
        residual = max(residual, float(np.max(np.abs(th + pr + 2 * sym))))
    ok = residual < 1e-12
    z_scores, refs = [], []
    if limits:
        results = _limits(model, items, n_grid, samples, seed)
        for i in range(0, len(results), 3):
            (_, th), (_, pr), (_, sym) = results[i : i + 3]
            total = th.value + pr.value + 2 * sym.value
            unc = math.sqrt(th.uncertainty**2 + pr.uncertainty**2 + 4 * sym.uncertainty**2)
            z, passed = compare(total, unc, 0j, SIGMAS)
            z_scores.append(z)
            ok = ok and passed
            refs.append({"theoretical": _pair_value(th), "practical": _pair_value(pr), "symmetric": _pair_value(sym)})
    return VerificationReport(
        "h_consistency",
        model.id,
        [_label(p, c) for p, c in pairs],
        z_scores,
        _status(ok),
        "theoretical + practical = -2 symmetric, sample by sample and for the limits",
        {"max_sample_residual": residual, "limits": refs, "n_grid": list(n_grid), "samples": samples},
    )


def _pair_value(limit):
    return [limit.value.real, limit.value.imag, limit.uncertainty]


def check_closed_forms(model, pairs=None, kinds=("Theoretical", "Practical", "Symmetric"), n_grid=None, samples=None, seed=0):
    """Extrapolated limits against the model's reference values, for every pair and kind."""
    pairs = list(pairs) if pairs is not None else _default_pairs(model)
    n_grid, samples = _setup(model, n_grid, samples)
    items, refs = [], []
    for phi, chi in pairs:
        for kind in kinds:
            ref = model.closed_form(kind, phi, chi)
            if ref is not None:
                items.append(FunctionalSpec(kind, phi, chi))
                refs.append(ref)
    if not items:
        return _skip("closed_forms", model, "no reference values for these functions")
    results = _limits(model, items, n_grid, samples, seed)
    z_scores, rows = [], []
    for item, ref, (_, lim) in zip(items, refs, results):
        z = _z_against(lim, ref)
        z_scores.append(z)
        rows.append(
            {
                "kind": item.kind.value,
                "phi": str(item.phi),
                "chi": str(item.chi),
                "limit": _pair_value(lim),
                "reference": [ref.real, ref.imag],
                "z": z,
            }
        )
    return VerificationReport(
        "closed_forms",
        model.id,
        [f"{r['kind']}({r['phi']}, {r['chi']})" for r in rows],
        z_scores,
        _status(all(z <= SIGMAS for z in z_scores)),
        "extrapolated bias limits agree with the reference operators",
        {"rows": rows, "n_grid": list(n_grid), "samples": samples},
    )


def check_square_field(model, phi, chi, n_grid=None, samples=None, seed=0):
    """Paired square-field limit against -S(phi^2, chi) + 2 S(phi, phi chi) and the reference."""
    n_grid, samples = _setup(model, n_grid, samples)
    lhs = FunctionalSpec(BiasKind.SQUARE_FIELD, phi, chi)
    rhs = Combination(
        (
            (-1.0, FunctionalSpec(BiasKind.SYMMETRIC, phi * phi, chi)),
            (2.0, FunctionalSpec(BiasKind.SYMMETRIC, phi, phi * chi)),
        )
    )
    (_, left), (_, right) = _limits(model, [lhs, rhs], n_grid, samples, seed)
    z_scores = [_z_between(left, right)]
    ref = model.closed_form(BiasKind.SQUARE_FIELD, phi, chi)
    if ref is not None:
        z_scores.append(_z_against(left, ref))
    return VerificationReport(
        "square_field",
        model.id,
        [_label(phi, chi)],
        z_scores,
        _status(all(z <= SIGMAS for z in z_scores)),
        "the paired square-field limit equals the square field built from the symmetric form",
        {
            "square_field": _pair_value(left),
            "from_symmetric": _pair_value(right),
            "reference": None if ref is None else [ref.real, ref.imag],
        },
    )


def check_locality(model, phis=None, n_grid=None, samples=None, seed=0, exponent=4):
    """Quartic diagnostic vanishes for local models and settles on a positive plateau otherwise."""
    phis = list(phis) if phis is not None else list(model.probe_functions())[:2]
    if len(phis) < 2:
        raise UsageError("check_locality needs at least 2 test functions")
    n_grid, samples = _setup(model, n_grid or model.locality_grid, samples)
    items = [FunctionalSpec(BiasKind.QUARTIC, phi, Constant(1.0), exponent=exponent) for phi in phis]
    local = model.flags.expected_local
    results = _limits(model, items, n_grid, samples, seed)
    ok, z_scores, rows = True, [], []
    for phi, (pts, lim) in zip(phis, results):
        ref = model.closed_form(BiasKind.QUARTIC, phi, Constant(1.0), exponent=exponent)
        if local:
            passed, z, info = zero_trend(pts, lim)
        else:
            positive = lim.value.real > SIGMAS * lim.uncertainty
            z = _z_against(lim, ref) if ref is not None else 0.0
            passed = positive and z <= SIGMAS
            info = {"limit": [lim.value.real, lim.value.imag], "uncertainty": lim.uncertainty, "positive": bool(positive)}
        if ref is not None:
            info["reference"] = [ref.real, ref.imag]
        info["grid"] = [[p.n, p.mean.real, p.stderr] for p in pts]
        ok = ok and passed
        z_scores.append(z)
        rows.append(info)
    narrative = (
        "scaled quartic moment tends to zero (local form)"
        if local
        else "scaled quartic moment settles on a positive plateau (non-local form)"
    )
    return VerificationReport("locality", model.id, [str(p) for p in phis], z_scores, _status(ok), narrative, {"rows": rows})


def check_first_order_singular(model, phi, psi, chi, n_grid=None, samples=None, seed=0):
    """Theoretical and practical variances coincide, and the singular operator is a derivation."""
    if not model.flags.expected_local:
        return _skip("first_order", model, "non-local model: variance coincidence is not expected")
    n_grid, samples = _setup(model, n_grid, samples)
    tv = FunctionalSpec(BiasKind.THEORETICAL_VARIANCE, phi, psi, chi)
    pv = FunctionalSpec(BiasKind.PRACTICAL_VARIANCE, phi, psi, chi)
    diff = Combination(((1.0, tv), (-1.0, pv)))
    th, pr = BiasKind.THEORETICAL, BiasKind.PRACTICAL
    defect = Combination(
        (
            (0.5, FunctionalSpec(th, phi * psi, chi)),
            (-0.5, FunctionalSpec(pr, phi * psi, chi)),
            (-0.5, FunctionalSpec(th, psi, phi * chi)),
            (0.5, FunctionalSpec(pr, psi, phi * chi)),
            (-0.5, FunctionalSpec(th, phi, psi * chi)),
            (0.5, FunctionalSpec(pr, phi, psi * chi)),
        )
    )
    # the difference is a cubic moment of the error, whose expansion may start at 1/n
    fit = "sqrt+inv" if len(n_grid) >= 3 else None
    items = [tv, pv, diff, defect]
    (_, tv_lim), (_, pv_lim), (_, diff_lim), (_, defect_lim) = _limits(model, items, n_grid, samples, seed, fit)
    z_scores = [_z_against(diff_lim, 0j), _z_against(defect_lim, 0j)]
    return VerificationReport(
        "first_order",
        model.id,
        [_label(phi, psi, chi)],
        z_scores,
        _status(all(z <= SIGMAS for z in z_scores)),
        "theoretical and practical variances coincide; the singular operator obeys the Leibniz rule",
        {
            "theoretical_variance": _pair_value(tv_lim),
            "practical_variance": _pair_value(pv_lim),
            "difference": _pair_value(diff_lim),
            "derivation_defect": _pair_value(defect_lim),
        },
    )


def check_prop5_symmetry(model, phi, psi, n_grid=None, samples=None, seed=0):
    """alpha_n E[phi(Y_n) psi(Y) - phi(Y) psi(Y_n)] tends to zero and Theoretical equals Practical."""
    if not model.flags.asymptotically_symmetric:
        return _skip("prop5_symmetry", model, "model is not flagged asymptotically symmetric")
    n_grid, samples = _setup(model, n_grid, samples)
    th = BiasKind.THEORETICAL
    swap = Combination(((1.0, FunctionalSpec(th, phi, psi)), (-1.0, FunctionalSpec(th, psi, phi))))
    gap = Combination(((1.0, FunctionalSpec(th, phi, psi)), (-1.0, FunctionalSpec(BiasKind.PRACTICAL, phi, psi))))
    (swap_pts, swap_lim), (_, gap_lim) = _limits(model, [swap, gap], n_grid, samples, seed)
    trend_ok, z_swap, info = zero_trend(swap_pts, swap_lim)
    z_gap = _z_against(gap_lim, 0j)
    return VerificationReport(
        "prop5_symmetry",
        model.id,
        [_label(phi, psi)],
        [z_swap, z_gap],
        _status(trend_ok and z_gap <= SIGMAS),
        "the exchange functional vanishes in the limit and theoretical equals practical",
        {"exchange": info, "theoretical_minus_practical": _pair_value(gap_lim)},
    )


def check_prop17_deterministic(model, phis=None, n_grid=None, samples=None, seed=0):
    """When Y_n is a function of Y: symmetric limit zero and Theoretical = -Practical."""
    if not model.flags.deterministic_U:
        return _skip("prop17_deterministic", model, "approximation is not a deterministic function of the limit")
    phis = list(phis) if phis is not None else list(model.probe_functions())[:2]
    n_grid, samples = _setup(model, n_grid, samples)
    pairs = [(a, b) for a in phis for b in phis]
    items = []
    for phi, chi in pairs:
        items.append(FunctionalSpec(BiasKind.SYMMETRIC, phi, chi))
        items.append(
            Combination(((1.0, FunctionalSpec(BiasKind.THEORETICAL, phi, chi)), (1.0, FunctionalSpec(BiasKind.PRACTICAL, phi, chi))))
        )
        items.append(FunctionalSpec(BiasKind.THEORETICAL, phi, chi))
    results = _limits(model, items, n_grid, samples, seed)
    ok, z_scores, rows = True, [], []
    for k, (phi, chi) in enumerate(pairs):
        (sym_pts, sym_lim), (_, sum_lim), (_, th_lim) = results[3 * k : 3 * k + 3]
        trend_ok, z_sym, info = zero_trend(sym_pts, sym_lim, against="first")
        z_sum = _z_against(sum_lim, 0j)
        row = {"symmetric": info, "theoretical_plus_practical": _pair_value(sum_lim), "theoretical": _pair_value(th_lim)}
        zs = [z_sym, z_sum]
        ref = model.closed_form(BiasKind.THEORETICAL, phi, chi)
        if ref is not None:
            zs.append(_z_against(th_lim, ref))
            row["theoretical_reference"] = [ref.real, ref.imag]
        passed = trend_ok and all(z <= SIGMAS for z in zs[1:])
        ok = ok and passed
        z_scores.extend(zs)
        rows.append(row)
    return VerificationReport(
        "prop17_deterministic",
        model.id,
        [_label(p, c) for p, c in pairs],
        z_scores,
        _status(ok),
        "a deterministic approximation has a zero symmetric form and opposite theoretical and practical biases",
        {"rows": rows},
    )


def _outer_partial(outer, fs, index):
    """The function F_index(f_1(y), ..., f_p(y)) as an element of the algebra."""
    if outer.name == "poly":
        coeffs = np.polynomial.polynomial.polyder(np.asarray(outer.coeffs))
        if not len(coeffs) or not np.any(coeffs):
            return Constant(0.0)
        return Composite(Outer("poly", tuple(coeffs)), fs)
    if outer.name == "sin":
        return Composite(Outer("cos"), fs)
    if outer.name == "cos":
        return -Composite(Outer("sin"), fs)
    if outer.name == "exp":
        return Composite(Outer("exp"), fs)
    if outer.name == "affine":
        return Constant(outer.coeffs[index + 1])
    rest = fs[:index] + fs[index + 1 :]
    if not rest:
        return Constant(1.0)
    return rest[0] if len(rest) == 1 else Composite(Outer("mul"), rest)


def check_chain_rule(model, outer, fs, n_grid=None, samples=None, seed=0):
    """Square field of F(f_1, ..., f_p) against sum_ij F_i F_j Gamma[f_i, f_j].

    The left side is the extrapolated limit of alpha_n E[(F(f(Y_n)) - F(f(Y)))^2].
    The right side is the quadrature of the model's square field when it has
    one, and otherwise the limit of alpha_n E[sum F_i F_j df_i df_j] with the
    gradient taken at Y, estimated from the same samples.
    """
    if not model.flags.expected_local:
        return _skip("chain_rule", model, "the chain rule needs a local form")
    n_grid, samples = _setup(model, n_grid, samples)
    fs = tuple(fs)
    composite = chain_compose(outer, fs)
    lhs_spec = FunctionalSpec(BiasKind.SQUARE_FIELD, composite, Constant(1.0))
    partials = [_outer_partial(outer, fs, i) for i in range(len(fs))]
    terms = tuple(
        FunctionalSpec(BiasKind.THEORETICAL_VARIANCE, fi, fj, partials[i] * partials[j])
        for i, fi in enumerate(fs)
        for j, fj in enumerate(fs)
    )
    rhs_spec = Combination(tuple((1.0, t) for t in terms))
    gap_spec = Combination(((1.0, lhs_spec),) + tuple((-1.0, t) for t in terms))
    # the gap is a cubic remainder of the error, whose expansion may start at 1/n
    fit = "sqrt+inv" if len(n_grid) >= 3 else None
    (_, lhs), (_, rhs), (_, gap) = _limits(model, [lhs_spec, rhs_spec, gap_spec], n_grid, samples, seed, fit)
    z_scores = [_z_against(gap, 0j)]
    details = {"lhs": _pair_value(lhs), "rhs_sampled": _pair_value(rhs), "gap": _pair_value(gap)}
    gamma = getattr(model, "square_field", None)
    if gamma is not None and all(is_scalar(f) for f in fs):
        x = model.law.nodes[0]
        grad = outer.grad([f.eval(x) for f in fs])
        total = sum(grad[i] * grad[j] * gamma(fi, fj, x) for i, fi in enumerate(fs) for j, fj in enumerate(fs))
        exact = complex(model.law.expect(total))
        z_scores.append(_z_against(lhs, exact))
        details["rhs_quadrature"] = [exact.real, exact.imag]
    return VerificationReport(
        "chain_rule",
        model.id,
        [str(composite)],
        z_scores,
        _status(all(z <= SIGMAS for z in z_scores)),
        "the square field of a composite follows the chain rule",
        details,
    )


# ------------------------------------------------------------------- suites


def _probes(model):
    probes = list(model.probe_functions())
    while len(probes) < 3:
        probes.append(probes[-1])
    return probes


def _suite_checks(model):
    p0, p1, p2 = _probes(model)[:3]
    square = Outer("poly", (0.0, 0.0, 1.0))
    return {
        "theorem1": [
            ("h_consistency", lambda **kw: check_h_consistency(model, **kw)),
            ("square_field", lambda **kw: check_square_field(model, p0, p1, **kw)),
            ("locality", lambda **kw: check_locality(model, [p0, p1], **kw)),
        ],
        "operators": [("closed_forms", lambda **kw: check_closed_forms(model, **kw))],
        "locality": [("locality", lambda **kw: check_locality(model, [p0, p1], **kw))],
        "first_order": [("first_order", lambda **kw: check_first_order_singular(model, p0, p1, p2, **kw))],
        "prop5": [("prop5_symmetry", lambda **kw: check_prop5_symmetry(model, p0, p1, **kw))],
        "prop17": [("prop17_deterministic", lambda **kw: check_prop17_deterministic(model, [p0, p1], **kw))],
        "chain_rule": [("chain_rule", lambda **kw: check_chain_rule(model, square, [p0], **kw))],
    }


SUITES = ("theorem1", "operators", "locality", "first_order", "prop5", "prop17", "chain_rule")


def expand_suites(names):
    """Suite names (with "all") to an ordered list without duplicates."""
    out = []
    for name in names:
        if name == "all":
            picked = SUITES
        elif name in SUITES:
            picked = (name,)
        else:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
        out.extend(s for s in picked if s not in out)
    if not out:
        raise UsageError("no suite selected")
    return out


def run_suites(model, suites, samples=None, seed=0, n_grid=None):
    """Run the named suites on one model; a check shared by two suites runs once."""
    table = _suite_checks(model)
    done, reports = set(), []
    for suite in expand_suites(suites):
        for name, check in table[suite]:
            if name in done:
                continue
            done.add(name)
            reports.append(check(n_grid=n_grid, samples=samples, seed=seed))
    return reports
