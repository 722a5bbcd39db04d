#!/usr/bin/env python3
"""Full benchmark protocol: every problem, every method, statistical reports.

The complete grid is 17 problems x 6 methods x 50 trials x 200 iterations
= 5100 trials.  Expect this to run for many hours on a single core; use
--workers to parallelize across processes (trials are independent) and
rerun the same command to resume an interrupted sweep — finished trials
are never recomputed.

Usage:
    python scripts/full_protocol.py --out results/full --workers 8
    python scripts/full_protocol.py --out results/full --problems jlh2,ackley10
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cbobench.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/full", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--problems", default="all")
    ap.add_argument("--methods", default="all")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--predictor-cmd", default=None,
                    help="external predictive-distribution server for the ppd_* methods")
    args = ap.parse_args()

    run_flags = [
        "run",
        "--problems", args.problems,
        "--methods", args.methods,
        "--trials", str(args.trials),
        "--iters", str(args.iters),
        "--init", "20",
        "--pool", "1000",
        "--seed", str(args.seed),
        "--errata", "corrected",
        "--workers", str(args.workers),
        "--out", args.out,
    ]
    if args.predictor_cmd:
        run_flags += ["--predictor-cmd", args.predictor_cmd]
    code = cli_main(run_flags)
    if code != 0:
        return code
    for report in (
        ["report", "feasibility", "--out", args.out],
        ["report", "fixed_iteration", "--out", args.out],
        ["report", "fixed_runtime", "--budget", "runtime:fastest", "--out", args.out],
        ["report", "ranking", "--metric", "performance", "--out", args.out],
        ["report", "ranking", "--metric", "time", "--out", args.out],
        ["report", "pareto", "--out", args.out],
    ):
        code = cli_main(report)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
