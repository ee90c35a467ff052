"""Command line driver: ``biaslab catalog``, ``biaslab run`` and ``biaslab verify``."""

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .catalog import build_model, model_ids
from .core import ConfigurationError, FunctionalSpec, UsageError
from .engine import compare, estimate_grid, extrapolate
from .report import build_report, catalog_listing, load_manifest, summary_table, write_csv, write_json
from .specs import parse_function
from .verify import SUITES, expand_suites, run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "BIASLAB_SEED"


def resolve_seed(cli_seed=None, manifest_seed=None):
    """Command line first, then the manifest, then $BIASLAB_SEED, then 0."""
    if cli_seed is not None:
        return cli_seed
    if manifest_seed is not None:
        return manifest_seed
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be a nonnegative integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigurationError(f"{SEED_ENV} must be a nonnegative integer, got {raw!r}")
    return seed


def _flag_filter(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    lowered = value.strip().lower()
    if lowered in ("true", "false"):
        return key.strip(), lowered == "true"
    return key.strip(), value.strip()


def _nonnegative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="biaslab", description="Bias operators of approximation models by Monte Carlo.")
    parser.add_argument("--version", action="version", version=f"biaslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="list the catalog models")
    cat.add_argument("--filter", action="append", type=_flag_filter, default=[], metavar="KEY=VALUE", help="e.g. local=false")
    cat.add_argument("--json", action="store_true", help="print JSON instead of a table")

    run = sub.add_parser("run", help="run the experiments of a manifest")
    run.add_argument("-m", "--manifest", required=True, help="manifest JSON file (object or array of objects)")
    run.add_argument("--seed", type=_nonnegative)
    run.add_argument("--samples", type=int)
    run.add_argument("--out", help="output directory (overrides the manifest)")

    ver = sub.add_parser("verify", help="run structural checks")
    ver.add_argument("--model", required=True, help="model id or 'all'")
    ver.add_argument("--suite", action="append", default=[], help=f"one of {', '.join(SUITES)} or all; repeatable or comma separated")
    ver.add_argument("--seed", type=_nonnegative)
    ver.add_argument("--samples", type=int)
    ver.add_argument("--out", help="directory for verify_report.json")
    return parser


# ---------------------------------------------------------------- commands


def cmd_catalog(args, out=None):
    out = out or sys.stdout
    rows = catalog_listing(dict(args.filter))
    if args.json:
        print(json.dumps(rows, indent=2, default=str), file=out)
        return EXIT_OK
    for row in rows:
        flags = [name for name in ("local", "asymptotically_symmetric", "deterministic_U") if row[name]]
        print(f"{row['id']:<22} {row['anchor']}", file=out)
        params = ", ".join(f"{k}={v!r}" for k, v in row["params"].items()) or "-"
        print(f"    state: {row['state_space']}; flags: {', '.join(flags) or '-'}", file=out)
        print(f"    params: {params}", file=out)
        print(f"    closed forms: {', '.join(row['closed_forms']) or '-'}", file=out)
    print(f"{len(rows)} models", file=out)
    return EXIT_OK


def run_experiment(manifest, index, seed, samples, out_dir):
    """Estimate every functional of one manifest entry; returns the list of report dicts."""
    model = build_model(manifest.model, **manifest.params)
    n_grid = tuple(manifest.n_grid or model.default_grid)
    samples = int(samples or manifest.samples or model.default_samples)
    fit = manifest.fit or model.default_fit
    label = manifest.label(index)
    reports = []
    for k, entry in enumerate(manifest.functionals):
        phi, chi = parse_function(entry.phi), parse_function(entry.chi)
        psi = parse_function(entry.psi) if entry.psi else None
        spec = FunctionalSpec(entry.kind, phi, chi, psi, entry.exponent)
        points = estimate_grid(model, spec, n_grid, samples, seed)
        limit = extrapolate(points, fit, model.extrapolation_variable)
        reference = model.closed_form(spec.kind, phi, chi, psi, entry.exponent)
        z, passed = (None, None) if reference is None else compare(limit.value, limit.uncertainty, reference)
        report = build_report(model.id, (spec.kind.value, entry.phi, entry.chi), points, limit, reference, z, passed, seed)
        stem = Path(out_dir) / label / f"{k:02d}_{spec.kind.value}"
        write_json(stem.with_suffix(".json"), report)
        write_csv(stem.with_suffix(".csv"), points)
        reports.append(report)
    if manifest.checks:
        checks = run_suites(model, manifest.checks, samples=samples, seed=seed, n_grid=manifest.n_grid)
        write_json(Path(out_dir) / label / "checks.json", [c.to_dict() for c in checks])
        reports.extend({"pass": c.status != "fail", "check": c.check} for c in checks)
    return reports


def cmd_run(args, out=None):
    out = out or sys.stdout
    manifests = load_manifest(args.manifest)
    failed = False
    for index, manifest in enumerate(manifests):
        seed = resolve_seed(args.seed, manifest.seed)
        out_dir = args.out or manifest.output
        for rep in run_experiment(manifest, index, seed, args.samples, out_dir):
            if rep.get("pass") is False:
                failed = True
            if "kind" in rep:
                z = "-" if rep["z"] is None else f"{rep['z']:.3g}"
                status = {True: "pass", False: "FAIL", None: "no reference"}[rep["pass"]]
                limit = complex(rep["limit"]["re"], rep["limit"]["im"])
                print(f"{manifest.label(index)} {rep['kind']}({rep['phi']}, {rep['chi']}): limit {limit:.6g} "
                      f"+/- {rep['limit']['unc']:.2g}  z={z}  {status}", file=out)
            else:
                print(f"{manifest.label(index)} check {rep['check']}: {'pass' if rep['pass'] else 'FAIL'}", file=out)
    return EXIT_FAIL if failed else EXIT_OK


def _split_suites(values):
    names = [part.strip() for value in values for part in value.split(",") if part.strip()]
    return expand_suites(names)


def cmd_verify(args, out=None):
    out = out or sys.stdout
    suites = _split_suites(args.suite)
    if args.model == "all":
        ids = model_ids()
    elif args.model in model_ids():
        ids = [args.model]
    else:
        raise ConfigurationError(f"--model: unknown model {args.model!r}")
    seed = resolve_seed(args.seed)
    reports = []
    for mid in ids:
        reports.extend(run_suites(build_model(mid), suites, samples=args.samples, seed=seed))
    print(summary_table(reports), file=out)
    for rep in reports:
        if rep.status == "pass" and rep.check == "locality" and not build_model(rep.model).flags.expected_local:
            print(f"{rep.model}: non-local plateau found, as expected", file=out)
    if args.out:
        write_json(Path(args.out) / "verify_report.json", {"seed": seed, "suites": suites, "reports": [r.to_dict() for r in reports]})
    return EXIT_FAIL if any(r.status == "fail" for r in reports) else EXIT_OK


COMMANDS = {"catalog": cmd_catalog, "run": cmd_run, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return EXIT_USAGE if stop.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, UsageError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
