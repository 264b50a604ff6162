"""Command-line interface.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration
error, 3 a Neumann series diverged.
"""
import argparse
import json
import os
import sys

from .config import ExperimentConfig, load_config
from .errors import (
    AdmissibilityViolation,
    ConfigError,
    DivergenceDetected,
    FormBoundError,
    InvalidParameter,
)
from .fieldio import field_to_csv, read_field, write_field
from .harness import DiagnosticsReport, SUITES, run_calibration, run_suite, sweep, write_sweep_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGENCE = 0, 1, 2, 3
THREADS_ENV = "FORMBOUND_THREADS"


class UsageError(Exception):
    pass


def _common(parser, default=argparse.SUPPRESS):
    # accepted before and after the subcommand; SUPPRESS keeps a subparser from resetting the top-level value
    parser.add_argument("--config", default=default, help="TOML experiment configuration")
    parser.add_argument("--out", default=default, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=default, help="root seed, unsigned 64-bit")
    parser.add_argument("--threads", type=int, default=default, help=f"worker threads (fallback: ${THREADS_ENV})")
    parser.add_argument("--suite", default=default,
                        help=f"suite name ({', '.join(sorted(SUITES))}) or comma-separated checks")


def build_parser():
    parser = argparse.ArgumentParser(prog="formbound", description=__doc__.splitlines()[0])
    _common(parser, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run an invariant suite and write report.json + checks.csv")
    _common(p)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("solve", help="apply the resolvent to one FBND1 field")
    _common(p)
    p.add_argument("--field", required=True, help="input scalar field (FBND1)")
    p.add_argument("--drift", help="drift name from the config (default: first)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--csv", action="store_true", help="also write solution.csv")

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    _common(p)
    p.add_argument("--axis", required=True, choices=["mu", "delta", "p", "n"])

    p = sub.add_parser("calibrate", help="estimate form bounds and calibrate mu0")
    _common(p)

    p = sub.add_parser("report", help="render a JSON report as markdown")
    _common(p)
    p.add_argument("report", help="report.json written by verify")
    return parser


def _resolve_threads(args, cfg):
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
    return cfg.threads


def _load(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.suite is not None:
        cfg.suite = args.suite
    cfg.threads = _resolve_threads(args, cfg)
    return cfg.validate()


def _cmd_verify(args, cfg):
    def show(rec):
        if not args.quiet:
            print(f"{'PASS' if rec.passed else 'FAIL'} {rec.name} [{rec.status}] {rec.runtime:.1f}s", flush=True)

    report = run_suite(cfg, progress=show)
    jpath, _ = report.write(cfg.out)
    print(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed; report: {jpath}")
    return report.exit_code


def _cmd_solve(args, cfg):
    from .drift import make_drift
    from .resolvent import ResolventProblem, theta_apply

    f, grid = read_field(args.field)
    if f.shape != grid.shape:
        raise UsageError(f"{args.field} holds a vector field; solve needs a scalar field")
    spec = cfg.drift_by_name(args.drift) if args.drift else cfg.drift[0]
    drift = make_drift(grid, spec)
    t = cfg.tolerances
    prob = ResolventProblem(args.mu, args.p, drift, t.neumann_tol, t.neumann_max_terms, dealias=cfg.dealias)
    u, rep = theta_apply(prob, f, full_output=True)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "solution.fbnd")
    write_field(path, grid, u)
    if args.csv:
        field_to_csv(os.path.join(cfg.out, "solution.csv"), grid, u)
    info = {"drift": spec.label, "mu": args.mu, "p": args.p, "terms": rep.terms_used,
            "last_term_ratio": rep.last_term_ratio, "tail_bound": rep.tail_bound,
            "converged": rep.converged, "output": path}
    print(json.dumps(info))
    return EXIT_OK if rep.converged else EXIT_FAIL


def _cmd_sweep(args, cfg):
    columns, rows = sweep(cfg, args.axis)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"sweep_{args.axis}.csv")
    write_sweep_csv(path, columns, rows)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def _cmd_calibrate(args, cfg):
    report = run_calibration(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "constants.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict()["constants"], fh, indent=2)
    for label, per_p in report.constants.items():
        for p, led in per_p.items():
            print(f"{label} p={p}: mu0={led['mu0']:g} c={led['c_delta_p']:.4f}")
    return report.exit_code


def _cmd_report(args, cfg):
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = DiagnosticsReport.from_json(fh.read())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from exc
    text = report.to_markdown()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.md"), "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "verify": _cmd_verify,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
    "report": _cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError, AdmissibilityViolation, InvalidParameter, OSError) as exc:
        print(f"formbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceDetected as exc:
        print(f"formbound: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except FormBoundError as exc:
        print(f"formbound: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
