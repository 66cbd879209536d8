"""Command-line interface.

Subcommands: ``run`` executes a configured experiment and writes trace and
summary CSVs, ``bounds`` prints the regret-bound constants and right-hand
sides, ``vartheta`` evaluates the context-richness constant for a seeded
context sequence, ``verify`` runs the engine's invariant suites, and
``report`` recomputes a summary table from an existing trace CSV.

Exit codes: 0 success, 1 failed invariant, 2 invalid configuration or
usage, 3 runtime failure inside a simulation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .core import RoundContexts
from .harness import (
    ConfigError,
    ExperimentConfig,
    SimulationError,
    run_experiment,
    run_generalization,
    write_env_log_csv,
    write_summary_csv,
    write_trace_csv,
)
from .rng import substream
from .theory import (
    BoundInputs,
    PreconditionError,
    bound_constants,
    estimate_vartheta,
    theorem_rhs,
)
from .verify import ALL_CHECKS, FAULT_MODES, run_checks

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metabandit",
        description="Meta-learning Thompson sampling benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configured experiment")
    run_p.add_argument("--config", required=True, help="path to a JSON config file")
    run_p.add_argument("--output-dir", required=True, help="directory for CSV outputs")
    run_p.add_argument("--seed", type=int, default=None, help="override the root seed")
    run_p.add_argument(
        "--agents", default=None, help="comma-separated subset of agents to run"
    )
    run_p.add_argument("--threads", type=int, default=None, help="worker pool size")
    run_p.add_argument(
        "--normalize-contexts",
        action="store_true",
        help="project context vectors onto the unit ball",
    )
    run_p.add_argument(
        "--shared-contexts",
        action="store_true",
        help="reuse one context sequence across all tasks of a run",
    )
    run_p.add_argument(
        "--env-log",
        action="store_true",
        help="also write per-round environment hashes for pairing verification",
    )

    bounds_p = sub.add_parser("bounds", help="print bound constants and both bound values")
    bounds_p.add_argument("--m", type=int, required=True)
    bounds_p.add_argument("--n", type=int, required=True)
    bounds_p.add_argument("--k", type=int, required=True)
    bounds_p.add_argument("--d", type=int, required=True)
    bounds_p.add_argument("--v", type=float, required=True)
    bounds_p.add_argument("--delta", type=float, required=True)
    bounds_p.add_argument("--lambda-min", type=float, required=True)
    bounds_p.add_argument("--lambda-max", type=float, required=True)
    bounds_p.add_argument("--lambda-max-sigma-q", type=float, required=True)
    bounds_p.add_argument("--mu-q-norm", type=float, required=True)
    bounds_p.add_argument("--vartheta", type=float, default=None)
    bounds_p.add_argument("--json", action="store_true", dest="as_json")

    var_p = sub.add_parser("vartheta", help="context-richness constant of a context set")
    var_p.add_argument("--n", type=int, required=True)
    var_p.add_argument("--window", type=int, required=True)
    var_p.add_argument("--k", type=int, required=True)
    var_p.add_argument("--d", type=int, required=True)
    var_p.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    var_p.add_argument("--samples", type=int, default=10_000)
    var_p.add_argument("--seed", type=int, default=0)
    var_p.add_argument(
        "--contexts",
        choices=("random", "basis"),
        default="random",
        help="random unit vectors or cycling standard basis vectors",
    )
    var_p.add_argument("--json", action="store_true", dest="as_json")

    verify_p = sub.add_parser("verify", help="run the invariant suites")
    verify_p.add_argument(
        "--checks",
        default=None,
        help=f"comma-separated subset of: {', '.join(ALL_CHECKS)}",
    )
    verify_p.add_argument("--fault", choices=FAULT_MODES, default=None)
    verify_p.add_argument("--json", action="store_true", dest="as_json")

    report_p = sub.add_parser("report", help="summarize an existing trace CSV")
    report_p.add_argument("--trace", required=True, help="trace CSV produced by run")
    report_p.add_argument("--output", default=None, help="write the summary CSV here")
    report_p.add_argument("--json", action="store_true", dest="as_json")
    return parser


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["root_seed"] = args.seed
        if args.agents is not None:
            overrides["agents"] = tuple(a.strip() for a in args.agents.split(",") if a.strip())
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.normalize_contexts:
            overrides["normalize_contexts"] = True
        if args.shared_contexts:
            overrides["shared_contexts"] = True
        if args.env_log:
            overrides["env_log"] = True
        if overrides:
            config = ExperimentConfig.from_dict({**config.to_dict(), **overrides})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir {outdir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if config.experiment == "generalization":
            result = run_generalization(config)
            for norm in config.epsilon_norms:
                tag = f"{norm:g}".replace(".", "p")
                write_trace_csv(result.traces[norm], outdir / f"trace_eps{tag}.csv")
                write_summary_csv(
                    result.summary_rows(norm), outdir / f"summary_eps{tag}.csv"
                )
            print(f"wrote {2 * len(config.epsilon_norms)} files to {outdir}")
        else:
            result = run_experiment(config)
            write_trace_csv(result.trace, outdir / "trace.csv")
            write_summary_csv(result.summary_rows, outdir / "summary.csv")
            if config.env_log:
                write_env_log_csv(result.env_log, outdir / "env_log.csv")
            print(f"wrote trace.csv and summary.csv to {outdir}")
    except SimulationError as exc:
        coords = f"run={exc.run}, task={exc.task}, round={exc.round}"
        print(f"runtime failure at {coords}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        inputs = BoundInputs(
            m=args.m,
            n=args.n,
            k=args.k,
            d=args.d,
            v=args.v,
            delta=args.delta,
            lambda_min=args.lambda_min,
            lambda_max=args.lambda_max,
            lambda_max_sigma_q=args.lambda_max_sigma_q,
            mu_q_norm=args.mu_q_norm,
            vartheta=args.vartheta,
        )
        u = bound_constants(inputs)
        table = {
            "u1": u.u1,
            "u2": u.u2,
            "u3": u.u3,
            "u4": u.u4,
            "u5": u.u5,
        }
        if inputs.vartheta is not None:
            table["rhs_meta_tslb"] = theorem_rhs(inputs, "meta_tslb")
            table["rhs_meta_ts"] = theorem_rhs(inputs, "meta_ts")
    except (PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.as_json:
        print(json.dumps(table, indent=2, sort_keys=True))
    else:
        for key, value in table.items():
            print(f"{key:>14} = {value:.12g}")
    return EXIT_OK


def _basis_contexts(n: int, k: int, d: int) -> list[RoundContexts]:
    rounds = []
    for t in range(1, n + 1):
        vec = np.zeros(d)
        vec[(t - 1) % d] = 1.0
        rounds.append(RoundContexts(np.tile(vec, (k, 1)), t))
    return rounds


def _random_unit_contexts(n: int, k: int, d: int, seed: int) -> list[RoundContexts]:
    rounds = []
    for t in range(1, n + 1):
        vecs = substream(seed, "cli_ctx", t).standard_normal((k, d))
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        rounds.append(RoundContexts(vecs, t))
    return rounds


def _cmd_vartheta(args) -> int:
    if args.contexts == "basis":
        rounds = _basis_contexts(args.n, args.k, args.d)
    else:
        rounds = _random_unit_contexts(args.n, args.k, args.d, args.seed)
    rng = substream(args.seed, "cli_vartheta_mc")
    try:
        params = estimate_vartheta(
            lambda t: rounds[t - 1],
            args.n,
            args.window,
            np.eye(args.d),
            mode=args.mode,
            rng=rng,
            samples=args.samples,
        )
    except (PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = {
        "window": params.window,
        "rho_min": params.rho_min,
        "lambda_min_B1": params.lambda_min_B1,
        "vartheta": params.vartheta,
        "is_estimate": params.is_estimate,
        "sequences_checked": params.sequences_checked,
    }
    if args.as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key:>18} = {value}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    names = None
    if args.checks is not None:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
        if not names:
            print("error: empty verification set", file=sys.stderr)
            return EXIT_CONFIG
    try:
        results = run_checks(names, fault=args.fault)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.as_json:
        print(
            json.dumps(
                [
                    {
                        "name": r.name,
                        "passed": r.passed,
                        "worst_slack": r.worst_slack,
                        "detail": r.detail,
                    }
                    for r in results
                ],
                indent=2,
            )
        )
    else:
        for r in results:
            print(r.row())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def _cmd_report(args) -> int:
    path = Path(args.trace)
    if not path.exists():
        print(f"error: trace file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    finals: dict[tuple[str, int], dict[int, float]] = defaultdict(dict)
    try:
        with path.open() as fh:
            reader = csv.DictReader(fh)
            required = {"run", "task", "round", "agent", "instant_regret", "cumulative_regret"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                missing = sorted(required - set(reader.fieldnames or []))
                print(f"error: trace is missing columns: {missing}", file=sys.stderr)
                return EXIT_CONFIG
            for row in reader:
                key = (row["agent"], int(row["task"]))
                finals[key][int(row["run"])] = float(row["cumulative_regret"])
    except (ValueError, KeyError) as exc:
        print(f"error: malformed trace row: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for (agent, task), by_run in sorted(finals.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        values = np.array([by_run[r] for r in sorted(by_run)])
        stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
        rows.append((agent, task, float(values.mean()), stderr))
    if args.output:
        write_summary_csv(rows, args.output)
        print(f"wrote summary to {args.output}")
    elif args.as_json:
        print(
            json.dumps(
                [
                    {"agent": a, "task": t, "mean_cumulative_regret": m, "stderr": s}
                    for a, t, m, s in rows
                ],
                indent=2,
            )
        )
    else:
        print("agent,task,mean_cumulative_regret,stderr")
        for agent, task, mean, stderr in rows:
            print(f"{agent},{task},{mean:.12g},{stderr:.12g}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the contract
        return int(exc.code) if exc.code else EXIT_OK
    handlers = {
        "run": _cmd_run,
        "bounds": _cmd_bounds,
        "vartheta": _cmd_vartheta,
        "verify": _cmd_verify,
        "report": _cmd_report,
    }
    return handlers[args.command](args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
