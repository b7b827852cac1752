"""Command line entry point: ``scoresim {simulate,replicate,psi-study,validate}``.

Exit codes: 0 success, 1 validation failure, 2 runtime or fit failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ScenarioError, ScoresimError
from .harness import run_psi_study, run_replications, write_psi_report, write_replication_reports
from .pipeline import manifest, simulate_dataset, write_dataset_csv, write_manifest
from .samplers import Streams
from .scenario import apply_shift, load_scenario, load_shift, validate

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _load_valid(path):
    spec = load_scenario(path)
    result = validate(spec)
    for w in result.warnings:
        logging.warning("%s: %s", path, w)
    if not result.ok:
        for v in result.violations:
            print(f"{path}: {v}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    return spec


def cmd_validate(args) -> int:
    spec = load_scenario(args.scenario)
    result = validate(spec)
    for w in result.warnings:
        print(f"warning: {w}")
    for v in result.violations:
        print(f"violation: {v}")
    if result.ok:
        print(f"{args.scenario}: ok ({len(spec.attributes)} attributes)")
        return EXIT_OK
    return EXIT_INVALID


def cmd_simulate(args) -> int:
    spec = _load_valid(args.scenario)
    seed = spec.global_.seed if args.seed is None else args.seed
    result = simulate_dataset(spec, Streams(seed), n=args.n)
    write_dataset_csv(result.dataset, spec, args.out)
    if args.manifest:
        write_manifest(manifest(spec, seed, result, scenario_file=str(args.scenario)), args.manifest)
    print(f"wrote {result.dataset.n} rows to {args.out} (bad rate {result.dataset.defaults.mean():.4f})")
    return EXIT_OK


def cmd_replicate(args) -> int:
    spec = _load_valid(args.scenario)
    seed = spec.global_.seed if args.seed is None else args.seed
    reps = spec.global_.replications if args.reps is None else args.reps
    summary = run_replications(spec, reps, seed, workers=args.workers)
    paths = write_replication_reports(summary, spec, args.out_dir)
    print(f"{reps} replications; wrote {len(paths)} files to {args.out_dir}")
    return EXIT_OK


def cmd_psi_study(args) -> int:
    base = _load_valid(args.base)
    shift = load_shift(args.shift, base)
    try:
        shifted = apply_shift(shift)
    except ScenarioError as exc:
        print(f"{args.shift}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = validate(shifted)
    if not result.ok:
        for v in result.violations:
            print(f"{args.shift}: {v}", file=sys.stderr)
        return EXIT_INVALID
    seed = base.global_.seed if args.seed is None else args.seed
    reps = base.global_.replications if args.reps is None else args.reps
    summary = run_psi_study(base, shift, reps, seed, workers=args.workers)
    write_psi_report(summary, args.out_dir, base=base, shift=shift)
    for name in summary.names:
        st = summary.psi[name]
        print(f"{name:28s} mean PSI {st.mean:.4f}  sd {float(st.sd):.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scoresim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one dataset and write it as CSV")
    s.add_argument("--scenario", required=True)
    s.add_argument("--seed", type=_u64, help="defaults to the scenario's global seed")
    s.add_argument("--out", required=True, help="output CSV path")
    s.add_argument("--manifest", help="optional JSON run manifest path")
    s.add_argument("--n", type=_positive, help="override the scenario sample size")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("replicate", help="replicate the pipeline and report observed bad rates")
    r.add_argument("--scenario", required=True)
    r.add_argument("--reps", type=_positive)
    r.add_argument("--seed", type=_u64)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--workers", type=_positive, default=1)
    r.set_defaults(func=cmd_replicate)

    q = sub.add_parser("psi-study", help="PSI of shifted test datasets against one base dataset")
    q.add_argument("--base", required=True)
    q.add_argument("--shift", required=True)
    q.add_argument("--reps", type=_positive)
    q.add_argument("--seed", type=_u64)
    q.add_argument("--out-dir", required=True)
    q.add_argument("--workers", type=_positive, default=1)
    q.set_defaults(func=cmd_psi_study)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ScoresimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
