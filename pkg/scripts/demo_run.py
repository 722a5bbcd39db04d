#!/usr/bin/env python3
"""Desk-scale demonstration of the full pipeline.

Runs a small grid (3 problems x all 6 methods x 3 trials x 15 iterations),
then cuts every report kind from the finished store.  Takes a few minutes
on one core; pass --workers to spread trials over processes.

Usage:
    python scripts/demo_run.py [--out DIR] [--workers N]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cbobench.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/demo", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    run_flags = [
        "run",
        "--problems", "jlh2,gkxwc1,three_truss",
        "--methods", "all",
        "--trials", "3",
        "--iters", "15",
        "--init", "10",
        "--pool", "300",
        "--seed", "0",
        "--errata", "corrected",
        "--workers", str(args.workers),
        "--out", args.out,
    ]
    code = cli_main(run_flags)
    if code != 0:
        return code
    return cli_main(["report", "all", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
