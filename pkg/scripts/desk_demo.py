"""Desk-scale sweep (1000 users, 1000 steps) in well under a minute.

    python scripts/desk_demo.py [--seeds 3]
"""

import argparse
import tempfile
from pathlib import Path

from platsim.metrics import METRICS
from platsim.sweep import SweepSpec, run_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    out = args.out or Path(tempfile.mkdtemp(prefix="platsim-desk-"))

    result = run_sweep(SweepSpec(seeds=tuple(range(args.seeds)), preset="desk", out_dir=out))
    print(f"{len(result.runs)} runs in {result.seconds:.1f}s -> {out}\n")
    ratios = result.ratios()
    print(f"{'platform':<10}" + "".join(f"{m:>10}" for m in METRICS))
    for a in result.spec.architectures:
        print(f"{a.value:<10}" + "".join(f"{ratios.get((a, m), float('nan')):>10.3f}" for m in METRICS))


if __name__ == "__main__":
    main()
