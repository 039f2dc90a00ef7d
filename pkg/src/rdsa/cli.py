"""Command-line entry point: ``rdsa run | rates | identities``.

A config file given with ``--config`` overrides the command-line flags.  It
may be JSON (an object whose keys are the long flag names, dashes or
underscores) or plain ``key = value`` lines with ``#`` comments.

On failure a JSON object ``{"error": <category>, "message": ...}`` is printed
to stderr and the exit status identifies the category.
"""

import argparse
import json
import sys

import numpy as np

from .exceptions import DomainError, RDSAError
from .harness import ExperimentConfig, emit_results, rate_diagnostics, run_experiment
from .optimize import ALGORITHMS
from .perturb import PermSequence, lex_gram, lex_moment, perm_gram

EXIT_CODES = {
    "error": 1,
    "domain": 2,
    "range": 3,
    "overflow": 4,
    "numerical": 5,
    "unsupported": 6,
    "io": 7,
    "config": 8,
}


def _add_common(p):
    p.add_argument("--objective", default="quadratic", choices=["quadratic", "fourth", "rastrigin"])
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--config", default=None, help="JSON or key=value file; overrides flags")


def build_parser():
    parser = argparse.ArgumentParser(prog="rdsa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="experiment sweep")
    _add_common(run)
    run.add_argument("--budget", type=int, default=50000)
    run.add_argument("--algos", default="1RDSA-Perm-DP",
                     help="comma-separated ids: " + ",".join(ALGORITHMS))
    run.add_argument("--format", default="csv", choices=["csv", "json"])
    run.add_argument("--jobs", type=int, default=1)

    rates = sub.add_parser("rates", help="convergence-rate diagnostics")
    _add_common(rates)
    rates.add_argument("--kind", default="thm3", choices=["thm3", "thm5"])
    rates.add_argument("--c", type=float, default=5.0)
    rates.add_argument("--delta0", type=float, default=1.9)
    rates.add_argument("--b0", type=float, default=1.0)
    rates.add_argument("--r", type=float, default=0.6)
    rates.add_argument("--n-min", type=int, default=100)
    rates.add_argument("--n-max", type=int, default=10000)

    ident = sub.add_parser("identities", help="perturbation-sequence identity checks")
    ident.add_argument("--max-dim", type=int, default=6)
    ident.add_argument("--out", default=None)
    ident.add_argument("--config", default=None)
    return parser


class ConfigError(RDSAError):
    category = "config"


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            try:
                data[key] = json.loads(value)
            except json.JSONDecodeError:
                data[key] = value
    return {k.replace("-", "_"): v for k, v in data.items()}


def _apply_config(args):
    if not args.config:
        return args
    for key, value in load_config(args.config).items():
        if key == "schedules":
            args.schedules = value
            continue
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}")
        if key == "algos" and isinstance(value, list):
            value = ",".join(value)
        setattr(args, key, value)
    return args


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_run(args):
    cfg = ExperimentConfig(
        objective=args.objective,
        dim=args.dim,
        sigma=0.001 if args.sigma is None else args.sigma,
        budget=args.budget,
        algorithms=args.algos,
        replications=args.reps,
        base_seed=args.seed,
        schedules=getattr(args, "schedules", None) or {},
        n_jobs=args.jobs,
        out=args.out,
        format=args.format,
    )
    results, summaries = run_experiment(cfg)
    text = emit_results(results, cfg.format, None, summaries)
    _write(text, cfg.out)


def cmd_rates(args):
    diag = rate_diagnostics(
        args.kind, objective=args.objective, dim=args.dim, reps=args.reps,
        base_seed=args.seed, sigma=args.sigma, c=args.c, delta0=args.delta0,
        b0=args.b0, r=args.r, n_min=args.n_min, n_max=args.n_max,
    )
    _write(json.dumps(diag.to_dict(), indent=2) + "\n", args.out)


def identity_report(max_dim):
    """Exact integer checks of the cycle identities for N = 1..max_dim."""
    if max_dim < 1:
        raise DomainError(f"max-dim must be >= 1, got {max_dim}")
    rows = []
    for N in range(1, max_dim + 1):
        cycle = 3**N
        G = lex_gram(N)
        entry = {
            "N": N,
            "lex_gram": bool(np.array_equal(G, 2 * cycle * np.eye(N, dtype=np.int64))),
            "fourth_moment": lex_moment(N, {0: 4}),
            "fourth_moment_expected": 2 * 3 ** (N + 1),
            "perm_gram": bool(np.array_equal(perm_gram(PermSequence.cyclic(N)), np.eye(N, dtype=np.int64))),
        }
        if N >= 2:
            entry["cross_moment"] = lex_moment(N, {0: 2, 1: 2})
            entry["cross_moment_expected"] = 4 * cycle
            entry["mixed_moment"] = lex_moment(N, {0: 3, 1: 1}) if N == 2 else lex_moment(N, {0: 1, 1: 1, 2: 2})
        rows.append(entry)
    return rows


def cmd_identities(args):
    _write(json.dumps(identity_report(args.max_dim), indent=2) + "\n", args.out)


COMMANDS = {"run": cmd_run, "rates": cmd_rates, "identities": cmd_identities}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        COMMANDS[args.command](args)
    except RDSAError as exc:
        return _fail(exc.category, exc)
    except OSError as exc:
        return _fail("io", exc)
    return 0


def _fail(category, exc):
    sys.stderr.write(json.dumps({"error": category, "message": str(exc)}) + "\n")
    return EXIT_CODES.get(category, 1)


if __name__ == "__main__":
    sys.exit(main())
