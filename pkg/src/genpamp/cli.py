"""Command-line benchmark harness.

Commands: fig1 (regularization sweep), table1/table2 (sampling-plane
benchmark), fig2 (parameterless study), surface (closed-form risk surface),
run (single instance), predict (state evolution only).  Data goes to the
output file or stdout; progress goes to stderr.  Exit codes: 0 ok, 2 bad
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time

from . import experiments, noise_sensitivity

log = logging.getLogger("genpamp")

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "UB" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def _write_rows(rows: list[dict], out: str | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2, default=lambda v: "inf" if v == math.inf else v)
    else:
        buf = io.StringIO()
        if rows:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow([_fmt(v) for v in row.values()])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _gamma_value(token: str) -> float:
    if token.lower() in ("inf", "infinity", "ub"):
        return math.inf
    return float(token)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--gamma-s2", type=_gamma_value, nargs="+", default=None)
    p.add_argument("--delta", type=float, nargs="+", default=None)
    p.add_argument("--rho", type=float, nargs="+", default=None)
    p.add_argument("--c", type=float, default=0.02)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--iters", type=int, default=60)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--method", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genpamp",
        description="Sparse recovery with a noisy prior estimate: benchmarks and predictions.",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file with defaults; explicit flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fig1", "table1", "table2", "fig2", "surface", "run", "predict"):
        p = sub.add_parser(name)
        _add_common(p)
    sub.choices["fig2"].add_argument("--snr-db", type=float, nargs="+",
                                     default=[20.0, 5.0])
    sub.choices["fig2"].add_argument("--sigma-s2", type=float, nargs="+",
                                     default=[2.0, 5.0, 10.0])
    sub.choices["run"].add_argument("--mu", type=float, default=1.0)
    sub.choices["predict"].add_argument("--mu", type=float, default=None)
    return parser


def _apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    if not args.config:
        return
    with open(args.config) as fh:
        doc = json.load(fh)
    explicit = {tok.split("=")[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in explicit:
            setattr(args, attr, value)


def _trials(args, default: int) -> int:
    t = args.trials if args.trials is not None else default
    if t < 1:
        raise ValueError("trials must be >= 1")
    return t


def cmd_fig1(args) -> list[dict]:
    gammas = args.gamma_s2 or [1.0, 4.0, math.inf]
    return experiments.lambda_sweep_rows(
        sigma2=args.sigma2 if args.sigma2 != 1.0 else 0.2,
        gamma_s2_list=gammas,
        n=args.n, trials=_trials(args, 10), seed=args.seed,
        iters=args.iters, workers=args.workers,
    )


def _table(args, geometries, gammas) -> list[dict]:
    if args.delta and args.rho:
        geometries = [(d, r) for d in args.delta for r in args.rho]
    for d, r in geometries:
        if d * r > 1.0:
            raise ValueError(f"delta*rho must not exceed 1, got {d}*{r}")
    return experiments.table_rows(
        geometries=geometries, gamma_s2_list=gammas,
        n=args.n, trials=_trials(args, 20), seed=args.seed,
        sigma2=args.sigma2, c=args.c, iters=args.iters, workers=args.workers,
    )


def cmd_table1(args) -> list[dict]:
    return _table(args, experiments.TABLE1_GEOMETRIES, args.gamma_s2 or [1.0])


def cmd_table2(args) -> list[dict]:
    return _table(args, experiments.TABLE2_GEOMETRIES, args.gamma_s2 or [2.0, 4.0])


def cmd_fig2(args) -> list[dict]:
    rows = []
    for snr in args.snr_db:
        rows.extend(experiments.parameterless_rows(
            snr_db=snr, sigma_s2_grid=args.sigma_s2,
            n=args.n, trials=_trials(args, 100), seed=args.seed,
            iters=args.iters, workers=args.workers,
        ))
    return rows


def cmd_surface(args) -> list[dict]:
    deltas = args.delta or [d for d, _ in experiments.TABLE1_GEOMETRIES[::5]]
    rhos = args.rho or sorted({r for _, r in experiments.TABLE1_GEOMETRIES})
    gammas = args.gamma_s2 or [1.0]
    points, errors = noise_sensitivity.risk_surface_sweep(
        deltas, rhos, gammas, sigma2=args.sigma2, c=args.c)
    for coords, exc in errors:
        log.warning("surface point %s failed: %s", coords, exc)
    return [{
        "delta": p.delta, "rho": p.rho, "gamma_s2": p.gamma_s2,
        "M_star": p.M_star, "M_lasso": p.M_lasso_bound, "M_denoise": p.M_denoise_bound,
        "NPI_star": p.NPI_star, "h_star": p.h_star,
        "lambda_star": p.lambda_star, "tau_star": p.tau_star,
    } for p in points]


def cmd_run(args) -> list[dict]:
    delta = (args.delta or [0.5])[0]
    rho = (args.rho or [0.2])[0]
    gamma = (args.gamma_s2 or [1.0])[0]
    return [experiments.run_single(
        n=args.n, delta=delta, rho=rho, gamma_s2=gamma, sigma2=args.sigma2,
        mu=args.mu, seed=args.seed, alpha=args.alpha, iters=args.iters,
        tol=args.tol, method=args.method or "genp-amp",
    )]


def cmd_predict(args) -> list[dict]:
    delta = (args.delta or [0.5])[0]
    rho = (args.rho or [0.2])[0]
    gamma = (args.gamma_s2 or [1.0])[0]
    return [experiments.predict_single(
        delta=delta, rho=rho, gamma_s2=gamma, sigma2=args.sigma2,
        mu=args.mu, alpha=args.alpha, c=args.c,
    )]


_COMMANDS = {
    "fig1": cmd_fig1,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "fig2": cmd_fig2,
    "surface": cmd_surface,
    "run": cmd_run,
    "predict": cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_CONFIG if exc.code not in (0, None) else 0
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        _apply_config_file(args, argv)
    except (OSError, json.JSONDecodeError) as exc:
        log.error("bad config file: %s", exc)
        return EXIT_BAD_CONFIG

    start = time.monotonic()
    try:
        rows = _COMMANDS[args.command](args)
    except ValueError as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_BAD_CONFIG
    except (RuntimeError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL

    fmt = "json" if args.command in ("run", "predict") and args.format == "csv" \
        else args.format
    _write_rows(rows, args.out, fmt)
    log.info("%s finished in %.1fs", args.command, time.monotonic() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
