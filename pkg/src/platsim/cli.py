"""Command line: ``platsim run | sweep | validate | sample-graph``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

from platsim import graph as g
from platsim import io
from platsim.engine import ConfigError, SimulationConfig, Simulation
from platsim.graph import Architecture
from platsim.metrics import MetricScope, in_scope, summarize, validity_counts, zero_inflation
from platsim.stochastics import RandomSource
from platsim.sweep import SweepSpec, run_sweep

log = logging.getLogger("platsim")

# run-level settings exposed as flags: (field, type, help)
_OVERRIDES = [
    ("steps", int, "number of activations T (10000)"),
    ("n_users", int, "user count (architecture default)"),
    ("n_pages", int, "page count (layered only)"),
    ("n_groups", int, "group count (tree and layered)"),
    ("n_edges", int, "edge target: followers (network), memberships (tree), total budget (layered)"),
    ("p_post", float, "post probability (0.45)"),
    ("p_share", float, "reshare probability (0.25)"),
    ("capacity", int, "feed and queue capacity (10)"),
    ("max_affiliations", int, "per-user cap on groups and on pages (10)"),
    ("triangular_mode", float, "mode of the triangular trait distributions (0.5)"),
    ("rwr_restart_p", float, "restart probability for random-walk sampling (0.15)"),
    ("edge_list", str, "SNAP-style follower file to sample user graphs from (default: synthetic)"),
    ("graph_seed", int, "seed for graph construction (default: the run seed)"),
]


def _flag(field: str) -> str:
    return "--" + field.replace("_", "-")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=["paper", "desk"], default="paper",
                   help="scale preset (default: paper; desk = 1000 users, 1000 steps)")
    p.add_argument("--config", type=Path, help="key = value file with [defaults] and per-architecture sections")
    for field, typ, help_ in _OVERRIDES:
        p.add_argument(_flag(field), dest=field, type=typ, default=None, help=help_)
    p.add_argument("--flip-edges", action="store_true", default=None,
                   help="edge file lines mean 'src follows dst' rather than 'dst follows src'")
    p.add_argument("--exclude-page-likes", action="store_true",
                   help="leave likes by pages out of the like counts")
    p.add_argument("--scope", choices=[s.value for s in MetricScope], default=MetricScope.RESHARED.value,
                   help="message scope for summary tables (default: reshared)")


def _settings(args, arch) -> dict:
    settings = {}
    if args.config:
        settings.update(io.read_config(args.config, arch))
    for field, _, _ in _OVERRIDES:
        v = getattr(args, field)
        if v is not None:
            settings[field] = v
    if args.flip_edges:
        settings["flip_edges"] = True
    if args.exclude_page_likes:
        settings["count_page_likes"] = False
    return settings


def _seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def cmd_run(args) -> int:
    settings = _settings(args, args.arch)
    settings["record_events"] = args.events
    settings["materialize_complete"] = args.materialize_complete
    settings.update(architecture=args.arch, policy=args.alg, seed=args.seed)
    cfg = SimulationConfig.preset(args.preset, **settings).validate()
    sim = Simulation(cfg)
    result = sim.run()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_messages(out / "messages.csv",
                      [(cfg.seed, cfg.architecture.value, cfg.policy.value, result.outcomes)])
    scoped = in_scope(result.outcomes, args.scope)
    lines = [result.graph.summary(), ""]
    if scoped:
        s = summarize(scoped)
        io.write_json(out / "summary.json", io.summary_record(cfg.architecture.value, cfg.policy.value, s,
                                                              seed=cfg.seed, scope=args.scope))
        lines.append(io.breadth_depth_table([(cfg.architecture.value, cfg.policy.value, s)]))
    else:
        lines.append("no messages produced")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if result.events is not None:
        with (out / "events.tsv").open("w", encoding="utf-8") as fh:
            result.events.write_tsv(fh)
    print(f"{len(result.outcomes)} messages -> {out}")
    return 0


def cmd_sweep(args) -> int:
    archs = [Architecture.parse(a) for a in args.archs.split(",")]
    per_arch = {}
    base = _settings(args, None)
    for a in archs:
        specific = _settings(args, a)
        per_arch[a.value] = {k: v for k, v in specific.items() if base.get(k) != v}
    spec = SweepSpec(
        architectures=tuple(archs),
        policies=tuple(args.algs.split(",")),
        seeds=tuple(_seeds(args.seeds)),
        preset=args.preset,
        overrides=base,
        per_architecture=per_arch,
        out_dir=args.out,
        workers=args.workers,
        scope=args.scope,
    )
    result = run_sweep(spec)
    print((args.out / "summary.txt").read_text(encoding="utf-8"), end="")
    if result.failures:
        print(f"{len(result.failures)} run(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    rows = io.read_messages(args.csv)
    groups = defaultdict(list)
    for r in rows:
        groups[(r.platform, r.algorithm)].append(r.outcome)
    everything = [r.outcome for r in rows]
    report = {"messages": len(rows), "validity": validity_counts(everything)}
    if everything:
        report["zero_inflation_pct"] = zero_inflation(everything)
        report["zero_inflation_reshared_scope_pct"] = zero_inflation(in_scope(everything))
    report["conditions"] = {
        f"{p}/{a}": {"messages": len(v), "validity": validity_counts(v), "zero_inflation_pct": zero_inflation(v)}
        for (p, a), v in sorted(groups.items())
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"messages: {report['messages']}")
        for k, v in report["validity"].items():
            print(f"{k}: {v}")
        for k, v in report.get("zero_inflation_pct", {}).items():
            print(f"zero {k}: {v:.1f}%")
    v = report["validity"]
    bad = v["reshares_without_reach"] + v["likes_exceeding_exposure"] + v["exposure_exceeding_reach"]
    return 1 if bad else 0


def cmd_sample_graph(args) -> int:
    edges = g.load_edge_list(args.input)
    sample = g.rwr_sample(edges, args.target, args.restart_p, RandomSource(args.seed).derive("rwr"))
    stats = g.edge_stats(sample.edges)
    stats.update(reseeds=sample.reseeds, walk_steps=sample.steps)
    block = "\n".join(f"{k}: {v}" for k, v in stats.items())
    out_edges = sample.edges
    if sample.edges.labels is not None and not args.dense_ids:
        lab = sample.edges.labels
        out_edges = g.EdgeSet(lab[sample.edges.src], lab[sample.edges.dst], sample.edges.n_nodes)
    g.write_edge_list(out_edges, args.out, header=block)
    print(block)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="platsim", description=__doc__,
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one simulation run", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--arch", required=True, help="complete | network | tree | layered (or tiktok/twitter/reddit/facebook)")
    p.add_argument("--alg", required=True, choices=["lifo", "hot"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--events", action="store_true", help="also write the tab-separated event log")
    p.add_argument("--materialize-complete", action="store_true",
                   help="store the complete graph explicitly instead of implicitly")
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="factorial sweep", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--archs", default="complete,network,tree,layered")
    p.add_argument("--algs", default="lifo,hot")
    p.add_argument("--seeds", default="0-9", help="comma list and/or ranges, e.g. 0-9")
    p.add_argument("--workers", type=int, default=1, help="parallel runs")
    p.add_argument("--out", type=Path, default=Path("sweep"))
    _add_overrides(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="construct-validity and zero-inflation report for a messages CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample-graph", help="random-walk-with-restart sample of an edge list",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--target", type=int, required=True, help="number of nodes to sample")
    p.add_argument("--restart-p", type=float, default=g.DEFAULT_RWR_RESTART)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dense-ids", action="store_true", help="write relabelled ids 0..n-1")
    p.set_defaults(func=cmd_sample_graph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {_flag(exc.field)}: {exc}".replace(f"{exc.field}: ", "", 1), file=sys.stderr)
        return 2
    except (g.GraphError, io.SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
