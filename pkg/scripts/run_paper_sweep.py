"""Full factorial sweep at paper scale: 4 architectures x 2 feed policies x 10 seeds.

    python scripts/run_paper_sweep.py --workers 8 --out results/paper

Writes per-run and combined message CSVs plus the summary tables (see
``platsim sweep --help``) and prints summary.txt.
"""

import argparse
import logging
import os
from pathlib import Path

from platsim.sweep import SweepSpec, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1")
    ap.add_argument("--out", type=Path, default=Path("results/paper"))
    ap.add_argument("--scope", default="reshared", choices=["reshared", "all"])
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    spec = SweepSpec(seeds=tuple(range(args.seeds)), preset="paper", workers=args.workers,
                     out_dir=args.out, scope=args.scope)
    result = run_sweep(spec)
    print((args.out / "summary.txt").read_text(), end="")
    if result.failures:
        raise SystemExit(f"{len(result.failures)} run(s) failed")


if __name__ == "__main__":
    main()
