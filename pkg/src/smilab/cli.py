"""Command-line entry point.

    smilab run --config exp.yaml [--seed N] [--out path]
    smilab sweep --config exp.yaml [--out path]
    smilab verify [--filter name] [--out path]
    smilab baseline --alpha-sq 0.25,0.75 [--cap 1000]

Exit codes: 0 success, 1 domain/config error, 2 verification failure,
3 I/O error. ``SMILAB_WORKERS`` sets the worker count (default: CPU count).
"""
from __future__ import annotations

import argparse
import sys

from .config import load_config
from .einselection import build_coarse_state, coarse_probabilities, fine_grain
from .errors import SMIError
from . import __version__
from .report import emit_report, to_json
from .runner import RunResult, run_experiment, run_sweep
from .verify import FAULTS, verify_suite

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smilab", description=__doc__.split("\n\n")[0])
    p.add_argument("--workers", type=int, default=None, help="worker threads (overrides SMILAB_WORKERS)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--out", default=None, help="override output.path")

    sweep = sub.add_parser("sweep", help="expand list-valued lambda/tau and run every point")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=None)

    ver = sub.add_parser("verify", help="run the built-in acceptance checks")
    ver.add_argument("--filter", default=None, help="only checks whose name contains this")
    ver.add_argument("--out", default=None, help="write the JSON report here")
    ver.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)

    base = sub.add_parser("baseline", help="fine-grain a distribution into an envariant state")
    base.add_argument("--alpha-sq", required=True, help="comma-separated probabilities")
    base.add_argument("--cap", type=int, default=1000, help="largest allowed denominator M")
    return p


def _emit(results, config, out):
    path = out or config["output.path"]
    if path is None:
        body = [r.to_dict() for r in results] if isinstance(results, list) else results.to_dict()
        print(to_json(body))
    else:
        for f in emit_report(results, path, config["output.format"]):
            print(f"wrote {f}", file=sys.stderr)


def _verify(args) -> int:
    report = verify_suite(args.filter, workers=args.workers, inject_fault=args.inject_fault)
    for c in report.checks:
        print(c.line())
    if args.out:
        payload = {"passed": report.passed, "checks": [c.to_dict() for c in report.checks]}
        emit_report(RunResult("builtin", __version__, "verify-suite", payload), args.out)
    print("verification", "passed" if report.passed else "FAILED")
    return EXIT_OK if report.passed else EXIT_VERIFY


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            if args.seed is not None:
                config = config.replace(master_seed=args.seed)
            result = run_experiment(config, workers=args.workers)
            _emit(result, config, args.out)
            if config.kind == "verify-suite" and not result.payload["passed"]:
                return EXIT_VERIFY
        elif args.command == "sweep":
            config = load_config(args.config)
            _emit(run_sweep(config, workers=args.workers), config, args.out)
        elif args.command == "verify":
            return _verify(args)
        elif args.command == "baseline":
            alpha = [float(x) for x in args.alpha_sq.split(",") if x.strip()]
            approx = fine_grain(alpha, args.cap)
            state = build_coarse_state([m for m in approx.numerators if m > 0])
            print(f"M = {approx.denominator}, m = {list(approx.numerators)}, error = {approx.achieved_error:.3g}")
            print("p(s_k) =", ", ".join(str(p) for p in coarse_probabilities(state)))
    except OSError as exc:  # includes ReportIOError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SMIError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
