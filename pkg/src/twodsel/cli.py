"""Command-line interface: ``twodsel {fit,select,simulate,benchmark}``.

Every option can also come from a JSON file given with ``--config``; keys are
the long option names with dashes replaced by underscores. Explicit command
line options override the file, which overrides the built-in defaults. Each
run writes a JSON report that embeds the fully resolved configuration.

Exit status: 0 when all requested work succeeded, 1 when some replications or
ranks failed (results for the rest are still written), 2 for invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import io
from .benchmarks import METHODS
from .exceptions import ParseError
from .prox import PenaltySpec
from .selection import IC_KINDS, adaptive_weights, init_heuristic, resample_selection, select
from .simulation import CORRELATIONS, RESPONSES, ScenarioSpec, run_study
from .solver import PIPELINE_CONFIG, STEPSIZE_MODES, SolverConfig, bcpd_fit

log = logging.getLogger("twodsel")

DEFAULTS = {
    "seed": 0,
    "method": None,  # per command
    "ranks": "1,2,3,4",
    "rank": 3,
    "lam": 0.0,
    "lambda_grid_size": 50,
    "ic": "aic",
    "epsilon": PIPELINE_CONFIG.epsilon,
    "max_iter": PIPELINE_CONFIG.max_iter,
    "stepsize": PIPELINE_CONFIG.stepsize_mode,
    "backtrack_start": PIPELINE_CONFIG.backtrack_start,
    "replications": 20,
    "resample": 0,
    "subsample": None,
    "out": "twodsel-out",
    "noisy_fit": True,
    "data": None,
    "profiles": None,
    "correlation": "iid",
    "nsr": 0.0,
    "n": 100,
    "s": 10,
    "t": 10,
    "true_rank": 3,
    "response": "probability",
    "verbose": False,
}


class UsageError(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--seed", type=int)
    p.add_argument("--ic", choices=IC_KINDS)
    p.add_argument("--epsilon", type=float, help="convergence tolerance (default 1e-4)")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--stepsize", choices=STEPSIZE_MODES)
    p.add_argument("--backtrack-start", type=float,
                   help="fraction of the analytic constant backtracking starts from")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def _add_data(p):
    p.add_argument("--data", help="dataset manifest (JSON)")
    p.add_argument("--profiles", help="profile file averaged into the predictor cells")


def _add_scenario(p):
    p.add_argument("--method", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--ranks", help="comma-separated candidate ranks")
    p.add_argument("--lambda-grid-size", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--correlation", choices=CORRELATIONS)
    p.add_argument("--nsr", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--true-rank", type=int)
    p.add_argument("--response", choices=RESPONSES)
    p.add_argument("--noisy-fit", dest="noisy_fit", action="store_true", default=None,
                   help="fit on X+E (default)")
    p.add_argument("--clean-fit", dest="noisy_fit", action="store_false",
                   help="fit on the noise-free X")


def build_parser():
    parser = argparse.ArgumentParser(prog="twodsel",
                                     description="Two-dimensional variable selection for matrix GLMs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="one penalized fit at a given rank and lambda")
    _add_common(p)
    _add_data(p)
    p.add_argument("--rank", type=int)
    p.add_argument("--lambda", dest="lam", type=float)

    p = sub.add_parser("select", help="choose rank and lambda by information criterion")
    _add_common(p)
    _add_data(p)
    p.add_argument("--ranks")
    p.add_argument("--lambda-grid-size", type=int)
    p.add_argument("--resample", type=int, help="number of random subsets for selection rates")
    p.add_argument("--subsample", type=int, help="samples per subset")

    for name, text in (("simulate", "selection accuracy on simulated data"),
                       ("benchmark", "compare all methods on simulated data")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_scenario(p)
    return parser


def resolve(args):
    """Merge command line, config file and defaults into one dict."""
    opts = dict(DEFAULTS)
    if args.config:
        try:
            from_file = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        if "lambda" in from_file:
            from_file["lam"] = from_file.pop("lambda")
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        opts.update(from_file)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            opts[key] = value
    opts["command"] = args.command
    if opts["method"] is None:
        opts["method"] = ",".join(METHODS) if args.command == "benchmark" else "proposed"
    return opts


def _int_list(text, name):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} must be comma-separated integers, got {text!r}") from None


def solver_config(opts):
    try:
        return SolverConfig(epsilon=float(opts["epsilon"]), max_iter=int(opts["max_iter"]),
                            stepsize_mode=opts["stepsize"],
                            backtrack_start=float(opts["backtrack_start"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_data(opts):
    if not opts["data"]:
        raise UsageError(f"{opts['command']} needs --data <manifest>")
    if opts["profiles"]:
        return io.ingest_profiles(opts["profiles"], opts["data"])
    return io.ingest(opts["data"])


def _labels(opts):
    manifest = io.load_manifest(opts["data"])
    return manifest.row_labels, manifest.col_labels


def cmd_fit(opts, out):
    config = solver_config(opts)
    data = _load_data(opts)
    rank, lam = int(opts["rank"]), float(opts["lam"])
    s, t = data.X.shape[1:]
    if not 1 <= rank <= min(s, t):
        raise UsageError(f"--rank must lie in [1, {min(s, t)}]")
    if lam < 0:
        raise UsageError("--lambda must be nonnegative")
    init = init_heuristic(data, rank)
    weights, _ = adaptive_weights(data, rank, init.model, config)
    fit = bcpd_fit(data, init.model, weights, PenaltySpec.for_rank(lam, rank), config)
    io.write_json(out / "fit.json", {"config": opts, "weights": {
        "rows": weights.row_norms, "cols": weights.col_norms}, "fit": fit})
    print(f"rank {rank}, lambda {lam:g}: objective {fit.objective:.6g} after {fit.iterations} "
          f"iterations ({'converged' if fit.converged else 'not converged'})")
    return 0


def cmd_select(opts, out):
    config = solver_config(opts)
    data = _load_data(opts)
    ranks = _int_list(opts["ranks"], "ranks")
    kwargs = dict(ranks=ranks, config=config, ic_kind=opts["ic"],
                  n_lambda=int(opts["lambda_grid_size"]))
    report = select(data, **kwargs)
    payload = {"config": opts, "selection": report}
    failed = [row for row in report.ic_table if "error" in row]
    print(f"rank {report.chosen_rank}, lambda {report.chosen_lambda:.4g}; "
          f"rows {report.active_rows}, cols {report.active_cols}")
    if int(opts["resample"] or 0) > 0:
        R = int(opts["resample"])
        m = int(opts["subsample"]) if opts["subsample"] else int(round(0.8 * data.n))
        opts["subsample"] = m
        row_rates, col_rates = resample_selection(data, lambda d: select(d, **kwargs), R, m,
                                                  seed=int(opts["seed"]))
        rows = io.rates_rows(row_rates, col_rates, *_labels(opts))
        io.write_rates_csv(out / "rates.csv", rows)
        table = io.format_rates_table(rows)
        (out / "rates.txt").write_text(table + "\n")
        payload["rates"] = rows
        print(table)
    io.write_json(out / "selection.json", payload)
    if failed:
        print(f"{len(failed)} rank(s) failed: see selection.json", file=sys.stderr)
        return 1
    return 0


def cmd_study(opts, out):
    config = solver_config(opts)
    methods = [m.strip() for m in str(opts["method"]).split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {bad}; expected a subset of {', '.join(METHODS)}")
    if int(opts["replications"]) < 1:
        raise UsageError("--replications must be at least 1")
    try:
        spec = ScenarioSpec(correlation=opts["correlation"], nsr=float(opts["nsr"]), n=int(opts["n"]),
                            s=int(opts["s"]), t=int(opts["t"]), true_rank=int(opts["true_rank"]),
                            zero_rows=tuple(range(0, int(opts["s"]), 2)),
                            zero_cols=tuple(range(1, int(opts["t"]), 2)),
                            seed=int(opts["seed"]), noisy_fit=bool(opts["noisy_fit"]),
                            response=opts["response"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ranks = _int_list(opts["ranks"], "ranks")

    def progress(rec):
        log.info("%s rep %d: accuracy %s (%.1fs)", rec["method"], rec["replication"],
                 rec.get("accuracy", "failed"), rec["seconds"])

    summaries, records = run_study(spec, methods, int(opts["replications"]), config, ranks,
                                   opts["ic"], int(opts["lambda_grid_size"]), progress)
    rows = io.results_rows(summaries, spec)
    io.write_results_csv(out / "results.csv", rows)
    table = io.format_results_table(rows)
    (out / "results.txt").write_text(table + "\n")
    io.write_json(out / "report.json", {"config": opts, "scenario": spec.to_dict(),
                                        "summaries": summaries, "records": records})
    print(table)
    failures = sum(m.failures for m in summaries.values())
    if failures:
        print(f"{failures} replication(s) failed: see report.json", file=sys.stderr)
        return 1
    return 0


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "simulate": cmd_study, "benchmark": cmd_study}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        opts = resolve(args)
        logging.basicConfig(level=logging.INFO if opts["verbose"] else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        status = COMMANDS[args.command](opts, out)
        log.info("%s finished in %.1fs", args.command, time.perf_counter() - start)
        return status
    except (UsageError, ParseError, ValueError, OSError) as exc:
        print(f"twodsel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"twodsel {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
