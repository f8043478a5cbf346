"""Command-line interface: price, greeks, sweep-rho, converge.

Exit codes: 0 success, 2 configuration/usage error, 3 model validation
failure. CSV output embeds the effective configuration and seed as comment
lines; identical configuration and seed produce byte-identical CSV for any
thread count. Wall-clock timings go to the ``seconds`` column only with
``--timing`` (and always to JSON output), keeping the default CSV
deterministic.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace

from .config import ConfigError, RunConfig, build_run, load_config
from .estimators import (
    FdConfig,
    GreekEstimate,
    convergence_table,
    fd_greek,
    mc_estimates,
    mc_price,
    quad_greek,
    residual_risk,
)
from .model import validate_model
from .payoffs import validate_payoff
from .simulate import SimScheme
from .weights import WeightVariant, greek_of

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3

CSV_HEADER = ("variant", "value", "stderr", "n", "seconds", "oracle_value", "z_score")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_report(path: str | None, comment_lines: list[str], header: tuple[str, ...],
                  rows: list[dict], fmt: str, meta: dict) -> None:
    if fmt == "json":
        payload = dict(meta)
        payload["results"] = rows
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"# {line}" for line in comment_lines]
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_fmt(row.get(col)) for col in header))
        text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _estimate_row(est: GreekEstimate, timing: bool, oracle_value: float | None = None) -> dict:
    row = {
        "variant": est.variant,
        "value": float(est.value),
        "stderr": float(est.stderr),
        "n": est.n,
        "seconds": float(est.seconds) if timing else None,
        "oracle_value": None if oracle_value is None else float(oracle_value),
        "z_score": None,
    }
    if oracle_value is not None and est.stderr > 0.0:
        row["z_score"] = abs(float(est.value) - float(oracle_value)) / float(est.stderr)
    return row


def _load_run(args) -> RunConfig:
    raw = load_config(args.config)
    run = build_run(raw)
    sim = run.sim
    if args.n is not None:
        sim = replace(sim, n_samples=args.n)
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if args.antithetic:
        sim = replace(sim, antithetic=True)
    if args.scheme is not None:
        sim = replace(sim, scheme=SimScheme.parse(args.scheme))
    return replace(run, sim=sim)


def _validate(run: RunConfig) -> list[str]:
    report = validate_model(run.model, run.tuning)
    return report.violations + validate_payoff(run.payoff)


def _meta(run: RunConfig, command: str) -> tuple[list[str], dict]:
    echo = run.echo_lines()
    digest = hashlib.sha256("\n".join(echo).encode()).hexdigest()[:16]
    comments = [f"command = {command}", f"model_hash = {digest}", *echo]
    meta = {
        "command": command,
        "model_hash": digest,
        "seed": run.sim.seed,
        "config": {line.split(" = ")[0]: json.loads(line.split(" = ", 1)[1]) for line in echo},
    }
    return comments, meta


def _all_variants_for(rho: float) -> list[WeightVariant]:
    correlated = [v for v in WeightVariant if not v.value.startswith("Indep")]
    if rho == 0.0:
        return list(WeightVariant)
    return correlated


def _cmd_price(args) -> int:
    run = _load_run(args)
    bad = _validate(run)
    if bad:
        print("\n".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    est = mc_price(run.model, run.payoff, run.sim, run.tuning, threads=args.threads)
    comments, meta = _meta(run, "price")
    timing = args.timing or args.format == "json"
    _write_report(args.out, comments, CSV_HEADER, [_estimate_row(est, timing)],
                  args.format, meta)
    return EXIT_OK


def _cmd_greeks(args) -> int:
    run = _load_run(args)
    if args.all_variants:
        variants = _all_variants_for(run.model.rho)
    else:
        if not args.variant:
            print("greeks: pass --variant NAME or --all-variants", file=sys.stderr)
            return EXIT_CONFIG
        try:
            variants = [WeightVariant(name) for name in args.variant]
        except ValueError:
            known = ", ".join(v.value for v in WeightVariant)
            print(f"unknown variant in {args.variant}; known: {known}", file=sys.stderr)
            return EXIT_CONFIG
    bad = _validate(run)
    if bad:
        print("\n".join(bad), file=sys.stderr)
        return EXIT_VALIDATION

    estimates = mc_estimates(run.model, run.payoff, run.tuning, variants, run.sim,
                             threads=args.threads)
    timing = args.timing or args.format == "json"
    oracle_values: dict[str, float] = {}
    oracle_rows: list[dict] = []
    if args.oracle in ("quad", "both"):
        for which in sorted({greek_of(v) for v in variants}):
            value = quad_greek(run.model, run.payoff, which)
            oracle_values[which] = value
            oracle_rows.append({
                "variant": f"Quad_{which}", "value": value, "stderr": 0.0,
                "n": None, "seconds": None, "oracle_value": None, "z_score": None,
            })
    if args.oracle in ("fd", "both"):
        for which in sorted({greek_of(v) for v in variants}):
            est = fd_greek(run.model, run.payoff, which, FdConfig(), run.sim, run.tuning,
                           threads=args.threads)
            oracle_rows.append(_estimate_row(est, timing))

    rows = [
        _estimate_row(estimates[v.value], timing, oracle_values.get(greek_of(v)))
        for v in variants
    ]
    rows.extend(oracle_rows)
    comments, meta = _meta(run, "greeks")
    _write_report(args.out, comments, CSV_HEADER, rows, args.format, meta)
    return EXIT_OK


def _cmd_sweep_rho(args) -> int:
    run = _load_run(args)
    try:
        grid = [float(tok) for tok in args.grid.split(",") if tok.strip() != ""]
    except ValueError:
        print(f"--grid: expected comma-separated floats, got {args.grid!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not grid:
        print("--grid: empty grid", file=sys.stderr)
        return EXIT_CONFIG
    if any(not abs(r) < 1.0 for r in grid):
        print(f"--grid: correlations must lie strictly inside (-1, 1), got {grid}", file=sys.stderr)
        return EXIT_CONFIG
    bad = _validate(run)
    if bad:
        print("\n".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    variant = None
    if args.variant:
        try:
            variant = WeightVariant(args.variant[0])
        except ValueError:
            print(f"unknown variant {args.variant[0]!r}", file=sys.stderr)
            return EXIT_CONFIG
    rows = residual_risk(run.model, run.payoff, run.tuning, grid, run.sim,
                         variant=variant, which=args.greek, threads=args.threads)
    comments, meta = _meta(run, "sweep-rho")
    header = ("rho", "delta_corr", "delta_ind", "abs_diff", "stderr")
    _write_report(args.out, comments, header, rows, args.format, meta)
    return EXIT_OK


def _cmd_converge(args) -> int:
    run = _load_run(args)
    try:
        sizes = [int(float(tok)) for tok in args.n_grid.split(",") if tok.strip() != ""]
    except ValueError:
        print(f"--n-grid: expected comma-separated counts, got {args.n_grid!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not sizes:
        print("--n-grid: empty grid", file=sys.stderr)
        return EXIT_CONFIG
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        print(f"--n-grid: must be strictly increasing, got {sizes}", file=sys.stderr)
        return EXIT_CONFIG
    variant = None
    if args.variant:
        try:
            variant = WeightVariant(args.variant[0])
        except ValueError:
            print(f"unknown variant {args.variant[0]!r}", file=sys.stderr)
            return EXIT_CONFIG
    bad = _validate(run)
    if bad:
        print("\n".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    rows = convergence_table(run.model, run.payoff, run.tuning, variant, sizes,
                             run.sim.seed, antithetic=run.sim.antithetic,
                             scheme=run.sim.scheme, threads=args.threads)
    comments, meta = _meta(run, "converge")
    _write_report(args.out, comments, ("n", "value", "stderr"), rows, args.format, meta)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the key=value run configuration")
    common.add_argument("--n", type=int, default=None, help="override sample count")
    common.add_argument("--seed", type=int, default=None, help="override the 64-bit seed")
    common.add_argument("--antithetic", action="store_true", help="enable antithetic pairing")
    common.add_argument("--scheme", default=None, help="sampling scheme: exact | euler:STEPS")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results identical)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--timing", action="store_true",
                        help="fill the seconds column in CSV (breaks byte-reproducibility)")

    parser = argparse.ArgumentParser(prog="quantogreeks",
                                     description="Quanto option pricing and hedge sensitivities")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", parents=[common], help="Monte Carlo price with standard error")
    p.set_defaults(handler=_cmd_price)

    g = sub.add_parser("greeks", parents=[common], help="weighted Monte Carlo Greeks")
    g.add_argument("--variant", action="append", default=None,
                   help="estimator variant (repeatable)")
    g.add_argument("--all-variants", action="store_true", help="run the full estimator zoo")
    g.add_argument("--oracle", choices=("fd", "quad", "both"), default=None,
                   help="append oracle rows and conformance z-scores")
    g.set_defaults(handler=_cmd_greeks)

    s = sub.add_parser("sweep-rho", parents=[common], help="residual-risk table over a rho grid")
    s.add_argument("--grid", required=True, help="comma-separated correlations in (-1, 1)")
    s.add_argument("--greek", choices=("dE", "dI", "dEdI"), default="dE")
    s.add_argument("--variant", action="append", default=None,
                   help="correlated variant for the sweep")
    s.set_defaults(handler=_cmd_sweep_rho)

    c = sub.add_parser("converge", parents=[common], help="estimates along a sample-size grid")
    c.add_argument("--n-grid", required=True, help="comma-separated increasing sample counts")
    c.add_argument("--variant", action="append", default=None,
                   help="Greek variant (default: price)")
    c.set_defaults(handler=_cmd_converge)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
