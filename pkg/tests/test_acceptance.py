"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` to get only the lines.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from biaslab.algebra import Constant, FourierMode, ImaginaryExp, IntegralExp, Outer, Polynomial
from biaslab.catalog import build_model, model_ids
from biaslab.core import BiasKind, FunctionalSpec
from biaslab.engine import Moment, compare, estimate_grid, estimate_grid_many, extrapolate
from biaslab.specs import parse_function
from biaslab.verify import (
    check_chain_rule,
    check_closed_forms,
    check_first_order_singular,
    check_h_consistency,
    check_locality,
    check_prop17_deterministic,
)

SEED = 2024


def _limit(model, spec, grid, samples, seed=SEED, fit=None):
    points = estimate_grid(model, spec, grid, samples, seed)
    return points, extrapolate(points, fit or model.default_fit, model.extrapolation_variable)


def _fmt(z):
    return f"{z:.3g}"


# ------------------------------------------------------------------ criteria


def criterion_1():
    model = build_model("glivenko_cantelli")
    modes = [FourierMode(p) for p in (-1, 0, 1)]
    pairs = [(a, b) for a in modes for b in modes]

    # independent oracle: scipy adaptive quadrature of the operator table
    def oracle(kind, phi, chi):
        def density(y):
            d1, d2 = phi.d1(np.array([y]))[0], phi.d2(np.array([y]))[0]
            diff = (y - y * y) / 2
            if kind == "Theoretical":
                value = diff * d2
            elif kind == "Practical":
                value = diff * d2 + (1 - 2 * y) * d1
            else:
                value = -(diff * d2 + (0.5 - y) * d1)
            return value * chi.eval(np.array([y]))[0]

        re = integrate.quad(lambda y: density(y).real, 0, 1, limit=200)[0]
        im = integrate.quad(lambda y: density(y).imag, 0, 1, limit=200)[0]
        return complex(re, im)

    table_ok = all(
        abs(model.closed_form(kind, phi, chi) - oracle(kind, phi, chi)) < 1e-8
        for kind in ("Theoretical", "Practical", "Symmetric")
        for phi, chi in pairs
    )
    report = check_closed_forms(model, pairs, n_grid=(256, 1024, 4096), samples=200_000, seed=SEED)
    spot = next(r for r in report.details["rows"] if r["kind"] == "Theoretical" and r["phi"] == "fourier:p=1" and r["chi"] == "fourier:p=0")
    spot_ok = spot["reference"] == pytest.approx([1.0, 0.0], abs=1e-12) and spot["z"] <= 3
    ok = table_ok and report.passed and spot_ok
    detail = f"27 limits, max z={_fmt(max(report.z_scores))}; spot Th(1,0) limit={spot['limit'][0]:.3f}{spot['limit'][1]:+.3f}i; quadrature table {'ok' if table_ok else 'MISMATCH'}"
    return ok, detail


def criterion_2():
    model = build_model("polya_urn", n_max_factor=100)
    grid = (250, 1000, 4000)
    _, moment = _limit(model, Moment(2.0), grid, 100_000)
    moment_ok = abs(moment.value.real - 1 / 6) <= 0.05 / 6
    spec = FunctionalSpec("Practical", FourierMode(1), FourierMode(-1))
    _, prac = _limit(model, spec, grid, 100_000)
    ref = -math.pi**2 / 3
    z, prac_ok = compare(prac.value, prac.uncertainty, complex(ref))
    closed_ok = abs(model.closed_form("Practical", FourierMode(1), FourierMode(-1)) - ref) < 1e-8
    ok = moment_ok and prac_ok and closed_ok
    return ok, f"n E[(X-X_n)^2] -> {moment.value.real:.4f} (1/6={1/6:.4f}); Practical -> {prac.value.real:.3f} vs -pi^2/3={ref:.3f}, z={_fmt(z)}"


def criterion_3():
    model = build_model("clt_mutual", sd=1.0)
    phi = ImaginaryExp((1.0,))
    spec = FunctionalSpec("Theoretical", phi, phi)
    _, lim = _limit(model, spec, (1000, 4000, 16000), 400_000)
    ref = 0.5 * math.exp(-2)
    z, ok = compare(lim.value, lim.uncertainty, complex(ref))
    ok = ok and abs(model.closed_form("Theoretical", phi, phi) - ref) < 1e-10
    return ok, f"Theoretical limit {lim.value.real:.5f}{lim.value.imag:+.5f}i vs e^-2/2={ref:.5f}, z={_fmt(z)}"


def criterion_4():
    # run sums on a single cell are exact in law for f = 1
    model = build_model("donsker_mutual", sd=1.0, resolution=1)
    one = Polynomial((1.0,))
    phi = IntegralExp(one)
    spec = FunctionalSpec("Symmetric", phi, phi)
    _, lim = _limit(model, spec, (1000, 4000, 16000), 400_000)
    ref = model.ou_symmetric(one, one)
    arithmetic = -0.5 * math.exp(-0.5 * 4)
    z, ok = compare(lim.value, lim.uncertainty, complex(ref))
    ok = ok and abs(ref - arithmetic) < 1e-10
    return ok, f"Symmetric limit {lim.value.real:.5f} vs OU form {ref:.5f}, z={_fmt(z)}"


def _circle_quartic(points=2000):
    """Brute force E|e^{2 pi i X} - e^{2 pi i Y}|^4 for independent uniforms on a midpoint grid."""
    grid = (np.arange(points) + 0.5) / points
    phase = np.exp(2j * np.pi * grid)
    return float(np.mean(np.abs(phase[:, None] - phase[None, :]) ** 4))


def criterion_5():
    lines, ok = [], True
    for mid in ("glivenko_cantelli", "polya_urn", "stochastic_integral"):
        model = build_model(mid)
        phis = list(model.probe_functions())[:2]
        rep = check_locality(model, phis, samples=100_000, seed=SEED)
        ok = ok and rep.passed
        lines.append(f"{mid} {rep.status}")
    mixing = build_model("mixing_shift")
    rep = check_locality(mixing, [FourierMode(1), FourierMode(-1)], samples=100_000, seed=SEED)
    plateau = rep.details["rows"][0]["limit"][0]
    oracle = _circle_quartic()
    mixing_ok = rep.passed and abs(plateau - 6) <= 0.6 and abs(oracle - 6) < 1e-6
    ok = ok and mixing_ok
    lines.append(f"mixing_shift plateau {plateau:.3f} (circle oracle {oracle:.4f})")
    return ok, "; ".join(lines)


def criterion_6():
    model = build_model("glivenko_cantelli")
    inner = parse_function("re(fourier:p=1)")
    rep = check_chain_rule(model, Outer("poly", (0.0, 0.0, 1.0)), [inner], samples=200_000, seed=SEED)
    lhs = rep.details["lhs"]
    return rep.passed, f"F(x)=x^2 of cos(2 pi y): lhs {lhs[0]:.4f}, rhs {rep.details['rhs_quadrature'][0]:.4f}, z={[_fmt(z) for z in rep.z_scores]}"


def criterion_7():
    parts, ok = [], True
    for mid in ("glivenko_cantelli", "gaussian_perturbation"):
        model = build_model(mid)
        p0, p1, p2 = list(model.probe_functions())[:3]
        rep = check_first_order_singular(model, p0, p1, p2, samples=200_000, seed=SEED)
        ok = ok and rep.passed
        parts.append(f"{mid} z={[_fmt(z) for z in rep.z_scores]}")
    return ok, "; ".join(parts)


def _stochastic_integral_oracle(size=10_000_000, seed=7):
    """Independent MC of -(1/2) E[exp(2iY)], Y = (B_1^2 - 1)/2, from B_1 directly."""
    rng = np.random.default_rng(seed)
    total, sq, done = 0j, 0.0, 0
    while done < size:
        chunk = min(1_000_000, size - done)
        b = rng.standard_normal(chunk)
        values = -0.5 * np.exp(1j * (b * b - 1))
        total += values.sum()
        sq += float(np.sum(np.abs(values - values.mean()) ** 2))
        done += chunk
    mean = total / size
    return mean, math.sqrt(sq / (size - 1) / size)


def criterion_8():
    model = build_model("stochastic_integral")
    phi = ImaginaryExp((1.0,))
    spec = FunctionalSpec("Symmetric", phi, phi)
    _, lim = _limit(model, spec, (64, 256, 1024), 400_000)
    raw, raw_unc = 2 * lim.value, 2 * lim.uncertainty
    oracle, oracle_unc = _stochastic_integral_oracle()
    z, ok = compare(raw, math.hypot(raw_unc, oracle_unc), oracle)
    return ok, f"2 x Symmetric limit {raw.real:.4f}{raw.imag:+.4f}i vs oracle {oracle.real:.4f}{oracle.imag:+.4f}i, z={_fmt(z)}"


def criterion_9():
    model = build_model("euler_sde", c0=0.0, c1=2.0, c2=0.0, m0=0.0, m1=0.0, y0=1.0, horizon=0.25, refine=64)
    _, lim = _limit(model, Moment(2.0), (32, 128, 512), 100_000)
    companion, companion_se = model.companion_moment()
    analytic = 2 * math.e
    ok = abs(lim.value.real - companion) <= 0.1 * companion and abs(companion - analytic) <= 0.02 * analytic
    return ok, f"n E[(Y^n-Y)^2] -> {lim.value.real:.3f} +/- {lim.uncertainty:.3f}; companion {companion:.3f} +/- {companion_se:.3f}; 2e={analytic:.3f}"


def _ode_u_oracle(model, x0, steps=(2000, 4000)):
    """u_t as the Richardson limit of n (Euler - exact) with an independent fine solve."""
    from scipy.integrate import solve_ivp

    t = model.params["horizon"]

    def exact(x):
        sol = solve_ivp(lambda s, z: model.field(z) * model.speed(s), (0, t), [x], rtol=1e-12, atol=1e-12)
        return sol.y[0, -1]

    def euler(x, n):
        h = t / n
        for k in range(n):
            x = x + model.field(x) * model.speed_integral(k * h, (k + 1) * h)
        return x

    target = exact(x0)
    a, b = (n * (euler(x0, n) - target) for n in steps)
    return 2 * b - a


def criterion_10():
    parts, ok = [], True
    for mid in ("decimal_truncation", "ode_euler"):
        model = build_model(mid)
        rep = check_prop17_deterministic(model, list(model.probe_functions())[:2], samples=200_000, seed=SEED)
        ok = ok and rep.passed
        parts.append(f"{mid} {rep.status}")
    model = build_model("ode_euler")
    oracle_ok = all(abs(model.flow(np.array([x0]))[1][0] - _ode_u_oracle(model, x0)) < 1e-4 for x0 in (-1.0, 0.3, 1.2))
    th_refs = [
        r.get("theoretical_reference") for r in rep.details["rows"]
    ]
    ok = ok and oracle_ok and all(ref is not None for ref in th_refs)
    parts.append(f"u_t against Euler/Richardson oracle {'ok' if oracle_ok else 'MISMATCH'}")
    return ok, "; ".join(parts)


def criterion_11():
    worst, failures = 0.0, []
    for mid in model_ids():
        model = build_model(mid)
        rep = check_h_consistency(model, n_grid=model.default_grid[:1], samples=2000, seed=SEED, limits=False)
        worst = max(worst, rep.details["max_sample_residual"])
        if not rep.passed:
            failures.append(mid)
    return not failures, f"{len(model_ids())} models, max per-sample residual {worst:.2e}" + (f", failing {failures}" if failures else "")


CRITERIA = [
    (1, "Glivenko-Cantelli operator table", criterion_1),
    (2, "Polya urn", criterion_2),
    (3, "CLT mutual", criterion_3),
    (4, "Donsker mutual", criterion_4),
    (5, "Locality suite", criterion_5),
    (6, "Chain rule", criterion_6),
    (7, "Variance coincidence", criterion_7),
    (8, "Stochastic integral", criterion_8),
    (9, "Euler scheme", criterion_9),
    (10, "Deterministic regimes", criterion_10),
    (11, "Structural identities", criterion_11),
]


def run_criterion(number, title, func, out=None):
    start = time.perf_counter()
    ok, detail = func()
    elapsed = time.perf_counter() - start
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.1f}s]", file=out or sys.stdout, flush=True)
    return ok


@pytest.mark.parametrize("number,title,func", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_acceptance(number, title, func, capsys):
    with capsys.disabled():
        print()
        ok = run_criterion(number, title, func)
    assert ok


if __name__ == "__main__":
    results = [run_criterion(*row) for row in CRITERIA]
    sys.exit(0 if all(results) else 1)
