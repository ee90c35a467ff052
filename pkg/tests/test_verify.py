import json
import math

import pytest

from biaslab.algebra import Constant, FourierMode, ImaginaryExp, Outer
from biaslab.catalog import build_model
from biaslab.core import BiasEstimate, LimitEstimate, UsageError
from biaslab.verify import (
    check_chain_rule,
    check_closed_forms,
    check_first_order_singular,
    check_h_consistency,
    check_locality,
    check_prop5_symmetry,
    check_prop17_deterministic,
    check_square_field,
    expand_suites,
    run_suites,
    zero_trend,
)

GC = build_model("glivenko_cantelli")
CGM = build_model("cond_gaussian_mean")
SAMPLES = 40_000


def test_h_consistency_passes_and_needs_three_pairs():
    report = check_h_consistency(GC, samples=SAMPLES, seed=1)
    assert report.passed and report.details["max_sample_residual"] < 1e-12
    with pytest.raises(UsageError):
        check_h_consistency(GC, pairs=[(FourierMode(1), FourierMode(1))] * 2)


def test_closed_forms_on_conditionally_gaussian_mean():
    phi, chi = CGM.probe_functions()[:2]
    report = check_closed_forms(CGM, [(phi, chi), (chi, phi)], samples=SAMPLES, seed=2)
    assert report.passed
    assert {row["kind"] for row in report.details["rows"]} == {"Theoretical", "Practical", "Symmetric"}


def test_square_field_passes_and_vanishes_for_constants():
    phi, chi = GC.probe_functions()[:2]
    assert check_square_field(GC, phi, chi, samples=SAMPLES, seed=3).passed
    flat = check_square_field(GC, Constant(2.0), chi, samples=2000, seed=3)
    assert flat.passed


def test_locality_local_and_non_local():
    assert check_locality(GC, list(GC.probe_functions())[:2], samples=SAMPLES, seed=4).passed
    shift = build_model("mixing_shift")
    report = check_locality(shift, list(shift.probe_functions())[:2], samples=SAMPLES, seed=4)
    assert report.passed
    with pytest.raises(UsageError):
        check_locality(GC, [FourierMode(1)])


def test_first_order_passes_and_skips_non_local():
    p0, p1, p2 = GC.probe_functions()[:3]
    assert check_first_order_singular(GC, p0, p1, p2, samples=SAMPLES, seed=5).passed
    shift = build_model("mixing_shift")
    q0, q1, q2 = (list(shift.probe_functions()) * 3)[:3]
    assert check_first_order_singular(shift, q0, q1, q2).status == "skip"


def test_first_order_constant_function_gives_zero_defect():
    p0, p1 = GC.probe_functions()[:2]
    report = check_first_order_singular(GC, Constant(1.0), p0, p1, samples=2000, seed=5)
    assert report.details["derivation_defect"][:2] == pytest.approx([0.0, 0.0], abs=1e-12)


def test_prop5_exchange_is_exactly_zero_for_equal_functions():
    model = build_model("clt_mutual")
    phi = model.probe_functions()[0]
    report = check_prop5_symmetry(model, phi, phi, samples=SAMPLES, seed=6)
    assert report.passed
    assert report.details["exchange"]["limit"][:2] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert check_prop5_symmetry(GC, phi, phi).status == "skip"


def test_prop17_skips_when_not_deterministic():
    assert check_prop17_deterministic(GC).status == "skip"


def test_chain_rule_on_gaussian_mean():
    report = check_chain_rule(CGM, Outer("poly", (0.0, 0.0, 1.0)), [ImaginaryExp((0.5,))], samples=SAMPLES, seed=7)
    assert report.passed


def test_report_serialises():
    report = check_h_consistency(GC, samples=2000, seed=1, limits=False)
    payload = json.loads(json.dumps(report.to_dict()))
    assert payload["check"] == "h_consistency" and payload["status"] == "pass"


def test_zero_trend_rules():
    grid = (64, 256, 1024)
    falling = [BiasEstimate(n, complex(8 / n), 1e-4, 1000, 0) for n in grid]
    flat = [BiasEstimate(n, complex(0.05), 1e-4, 1000, 0) for n in grid]
    near_zero = LimitEstimate(0j, 1e-3, "sqrt", 0.0)
    assert zero_trend(falling, near_zero)[0]
    assert not zero_trend(flat, near_zero)[0]
    assert not zero_trend(falling, LimitEstimate(0.5 + 0j, 1e-3, "sqrt", 0.0))[0]


def test_suite_expansion():
    assert expand_suites(["all"])[0] == "theorem1" and len(expand_suites(["all", "prop5"])) == 7
    with pytest.raises(UsageError):
        expand_suites([])
    with pytest.raises(UsageError):
        expand_suites(["bogus"])


def test_run_suites_deduplicates_shared_checks():
    reports = run_suites(GC, ["theorem1", "locality"], samples=5000, seed=1)
    assert [r.check for r in reports] == ["h_consistency", "square_field", "locality"]
    assert all(math.isfinite(z) for r in reports for z in r.z_scores)
