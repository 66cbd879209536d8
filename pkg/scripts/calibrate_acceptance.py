"""One-shot driver that executes every acceptance-scale benchmark with the
frozen seeds and prints the statistics the acceptance suite asserts.

Not part of the test suite; exists so a full-scale dry run can be examined
before (and independently of) pytest.
"""

import json
import math
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import numpy as np

from metabandit.harness import ExperimentConfig, run_experiment, run_generalization

ROOT_SEED = 20250405
OUT = Path("/tmp/acceptance_calibration.json")


def sign_test_pvalue(wins: int, n: int) -> float:
    return sum(math.comb(n, i) for i in range(wins, n + 1)) / 2.0**n


def main() -> None:
    report = {}

    t0 = time.perf_counter()
    cfg = ExperimentConfig(experiment="linear", root_seed=ROOT_SEED, runs=100)
    res = run_experiment(cfg)
    totals = {a: res.trace.total_per_run(a) for a in cfg.agents}
    wins = int(np.sum(totals["meta_tslb"] < totals["meta_ts"]))
    report["linear"] = {
        "elapsed": time.perf_counter() - t0,
        "means": {a: float(v.mean()) for a, v in totals.items()},
        "wins": wins,
        "p_value": sign_test_pvalue(wins, 100),
    }
    viol = checked = 0
    conc_viol_runs = 0
    for diag in res.diagnostics:
        lam_min_inv = diag["lambda_min_star_inv"]
        if not diag["eigencondition_ok"]:
            continue
        run_bad = False
        for agent in ("meta_tslb", "meta_ts"):
            lam = diag["agents"][agent]["lambda_max"]
            for s in range(len(lam) - 1):
                checked += 1
                if lam[s + 1] > (7 / 8) * lam[s] + 1 / (100 * lam_min_inv) + 1e-12:
                    viol += 1
        # concentration envelope with delta=0.05 for the mean-playing agent
        err = diag["agents"]["meta_tslb"]["mean_err"]
        lam_q = diag["lambda_max_sigma_q"]
        floor = 2.0 / (175.0 * lam_min_inv)
        for s in range(1, len(err) + 1):
            radius = 0.2 * math.sqrt(
                5 * ((lam_q - floor) * (7 / 8) ** (s - 1) + floor) * math.log(2 * 5 / 0.05)
            )
            if err[s - 1] > radius:
                run_bad = True
        conc_viol_runs += run_bad
    report["linear"]["contraction"] = {"violations": viol, "checked": checked}
    report["linear"]["concentration_violating_runs"] = conc_viol_runs
    print(json.dumps(report["linear"], indent=2), flush=True)

    for name in ("finite_priors", "sequential", "infinite_arms"):
        t0 = time.perf_counter()
        cfg = ExperimentConfig(
            experiment=name,
            root_seed=ROOT_SEED,
            runs=100,
            agents=("meta_tslb", "meta_ts", "oracle_ts"),
        )
        res = run_experiment(cfg)
        totals = {a: res.trace.total_per_run(a) for a in cfg.agents}
        report[name] = {
            "elapsed": time.perf_counter() - t0,
            "means": {a: float(v.mean()) for a, v in totals.items()},
        }
        if name == "finite_priors":
            hits = sum(
                int(d["agents"]["meta_tslb"]["selected"][-1] == d["j_star"])
                for d in res.diagnostics
            )
            report[name]["final_argmax_hits_default_bank"] = hits
        print(name, json.dumps(report[name], indent=2), flush=True)

    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        experiment="generalization",
        root_seed=ROOT_SEED,
        runs=100,
        agents=("meta_tslb", "oracle_ts"),
    )
    gen = run_generalization(cfg)
    gen_stats = {}
    for norm in cfg.epsilon_norms:
        trace = gen.traces[norm]
        gen_stats[str(norm)] = {
            "tslb_total": float(trace.total_per_run("meta_tslb").mean()),
            "tslb_final_task": float(trace.per_task_final("meta_tslb").mean(axis=0)[-1]),
            "oracle_final_task": float(trace.per_task_final("oracle_ts").mean(axis=0)[-1]),
        }
    report["generalization"] = {"elapsed": time.perf_counter() - t0, "norms": gen_stats}
    print(json.dumps(report["generalization"], indent=2), flush=True)

    from helpers_theory import run_theory_benchmark

    t0 = time.perf_counter()
    bench = run_theory_benchmark(runs=100, max_diag_trajectories=200)
    report["theory"] = {
        "elapsed": time.perf_counter() - t0,
        "vartheta": bench.params.vartheta,
        "rho_min": bench.params.rho_min,
        "trajectories": bench.n_trajectories,
        "assumption_failures": bench.assumption_failures,
        "eigen_sum_failures": bench.eigen_sum_failures,
        "width_failures": bench.width_failures,
        "min_eigen_slack": bench.min_eigen_slack,
        "min_width_slack": bench.min_width_slack,
        "max_run_regret": float(bench.per_run_regret.max()),
        "rhs_tslb": bench.rhs_tslb,
        "rhs_ts": bench.rhs_ts,
    }
    print(json.dumps(report["theory"], indent=2), flush=True)

    OUT.write_text(json.dumps(report, indent=2))
    print("saved", OUT, flush=True)


if __name__ == "__main__":
    main()
