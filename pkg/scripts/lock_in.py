"""Exposure by production decile on the complete graph, Hot vs LIFO.

Under Hot the earliest messages to pick up a reshare fill every feed and keep
later ones out; under LIFO exposure is spread evenly over production order.

    python scripts/lock_in.py --seed 0 [--preset desk]
"""

import argparse

import numpy as np

from platsim.engine import SimulationConfig, run
from platsim.metrics import exposure_weighted_quality, in_scope


def deciles(outcomes):
    exp = np.array([o.exposure for o in sorted(outcomes, key=lambda o: o.msg_id)], dtype=float)
    parts = np.array_split(exp, 10)
    return np.array([p.sum() for p in parts]) / max(exp.sum(), 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--preset", default="paper", choices=["paper", "desk"])
    args = ap.parse_args()

    print(f"{'policy':<6} {'EWQ':>7}  exposure share by production decile")
    for policy in ("lifo", "hot"):
        cfg = SimulationConfig.preset(args.preset, architecture="complete", policy=policy, seed=args.seed)
        outs = in_scope(run(cfg).outcomes)
        share = deciles(outs)
        q = exposure_weighted_quality(outs)
        print(f"{policy:<6} {q if q is not None else float('nan'):>7.3f}  " + " ".join(f"{s:.2f}" for s in share))


if __name__ == "__main__":
    main()
