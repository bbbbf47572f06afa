"""Factorial architecture x policy x seed sweeps."""

from __future__ import annotations

import csv
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from platsim import io
from platsim.engine import SimulationConfig, run
from platsim.feed import FeedPolicy
from platsim.graph import Architecture
from platsim.metrics import (
    METRICS, ConditionSummary, MessageOutcome, MetricScope, early_exposure_share,
    exposure_weighted_quality, hot_lifo_ratio, in_scope, seed_quality_dispersion, summarize,
)

log = logging.getLogger(__name__)

ALL_ARCHITECTURES = tuple(Architecture)
ALL_POLICIES = (FeedPolicy.LIFO, FeedPolicy.HOT)
PAPER_SEEDS = tuple(range(10))


@dataclass
class SweepSpec:
    architectures: tuple[Architecture, ...] = ALL_ARCHITECTURES
    policies: tuple[FeedPolicy, ...] = ALL_POLICIES
    seeds: tuple[int, ...] = PAPER_SEEDS
    preset: str = "paper"
    overrides: dict = field(default_factory=dict)
    per_architecture: dict = field(default_factory=dict)
    out_dir: Path | None = None
    workers: int = 1
    scope: MetricScope = MetricScope.RESHARED

    def __post_init__(self):
        self.architectures = tuple(Architecture.parse(a) for a in self.architectures)
        self.policies = tuple(FeedPolicy.parse(p) for p in self.policies)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.scope = MetricScope.parse(self.scope)
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def config_for(self, arch: Architecture, policy: FeedPolicy, seed: int) -> SimulationConfig:
        settings = dict(self.overrides)
        settings.update(self.per_architecture.get(arch.value, {}))
        settings.update(architecture=arch, policy=policy, seed=seed)
        return SimulationConfig.preset(self.preset, **settings)

    def run_keys(self) -> list[tuple[Architecture, FeedPolicy, int]]:
        return [(a, p, s) for a in self.architectures for p in self.policies for s in self.seeds]


@dataclass
class RunRecord:
    architecture: Architecture
    policy: FeedPolicy
    seed: int
    outcomes: list[MessageOutcome] | None
    seconds: float
    error: str | None = None


def _execute(cfg: SimulationConfig) -> RunRecord:
    t0 = time.perf_counter()
    try:
        outcomes = run(cfg).outcomes
        return RunRecord(cfg.architecture, cfg.policy, cfg.seed, outcomes, time.perf_counter() - t0)
    except Exception:  # isolate the failure to this run
        return RunRecord(cfg.architecture, cfg.policy, cfg.seed, None, time.perf_counter() - t0,
                         traceback.format_exc())


@dataclass
class SweepResult:
    spec: SweepSpec
    runs: dict[tuple[Architecture, FeedPolicy, int], RunRecord]
    seconds: float

    @property
    def failures(self) -> list[RunRecord]:
        return [r for r in self.runs.values() if r.error is not None]

    def outcomes(self, arch: Architecture, policy: FeedPolicy, seed: int | None = None,
                 scoped: bool = True) -> list[MessageOutcome]:
        seeds = self.spec.seeds if seed is None else (seed,)
        out: list[MessageOutcome] = []
        for s in seeds:
            rec = self.runs.get((arch, policy, s))
            if rec is not None and rec.outcomes is not None:
                out.extend(in_scope(rec.outcomes, self.spec.scope) if scoped else rec.outcomes)
        return out

    def condition(self, arch: Architecture, policy: FeedPolicy) -> ConditionSummary:
        return summarize(self.outcomes(arch, policy))

    def conditions(self) -> dict[tuple[Architecture, FeedPolicy], ConditionSummary]:
        return {(a, p): self.condition(a, p) for a in self.spec.architectures for p in self.spec.policies
                if self.outcomes(a, p)}

    def ratios(self) -> dict[tuple[Architecture, str], float]:
        conds = self.conditions()
        out = {}
        for a in self.spec.architectures:
            hot, lifo = conds.get((a, FeedPolicy.HOT)), conds.get((a, FeedPolicy.LIFO))
            if hot is None or lifo is None:
                continue
            for m in METRICS:
                try:
                    out[(a, m)] = hot_lifo_ratio(hot, lifo, m)
                except ValueError:
                    pass
        return out

    def early_share(self, arch: Architecture, policy: FeedPolicy, fraction: float = 0.1) -> float:
        """Exposure share on each run's earliest messages, pooled over seeds."""
        total = early = 0.0
        for s in self.spec.seeds:
            outs = self.outcomes(arch, policy, s)
            e = sum(o.exposure for o in outs)
            if e:
                total += e
                early += early_exposure_share(outs, fraction) * e
        return early / total if total else 0.0

    def seed_qualities(self, arch: Architecture, policy: FeedPolicy) -> list[tuple[int, float | None]]:
        return [(s, exposure_weighted_quality(self.outcomes(arch, policy, s))) for s in self.spec.seeds
                if self.outcomes(arch, policy, s)]


def run_sweep(spec: SweepSpec) -> SweepResult:
    t0 = time.perf_counter()
    configs = [spec.config_for(*k) for k in spec.run_keys()]
    for c in configs:
        c.validate()
    if spec.workers <= 1:
        records = [_execute(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_execute, configs))
    runs = {(r.architecture, r.policy, r.seed): r for r in records}
    for r in records:
        if r.error:
            log.error("run %s/%s/seed %d failed:\n%s", r.architecture.value, r.policy.value, r.seed, r.error)
    result = SweepResult(spec, runs, time.perf_counter() - t0)
    if spec.out_dir is not None:
        write_outputs(result, spec.out_dir)
    return result


def write_outputs(result: SweepResult, out: Path) -> list[str]:
    """Write every sweep artifact under ``out``; returns notices for the report."""
    spec = result.spec
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs").mkdir(exist_ok=True)
    notices: list[str] = []

    combined = out / "messages.csv"
    combined.unlink(missing_ok=True)
    for (a, p, s), rec in result.runs.items():
        if rec.outcomes is None:
            continue
        group = [(s, a.value, p.value, rec.outcomes)]
        io.write_messages(out / "runs" / f"{a.value}-{p.value}-seed{s}.csv", group)
        io.write_messages(combined, group, append=True)

    conds = result.conditions()
    io.write_json(out / "conditions.json", [
        io.summary_record(a.value, p.value, c, scope=spec.scope.value, seeds=list(spec.seeds))
        for (a, p), c in conds.items()
    ])
    io.write_json(out / "runs.json", [
        io.summary_record(a.value, p.value, summarize(in_scope(rec.outcomes, spec.scope)), seed=s,
                          seconds=round(rec.seconds, 3))
        for (a, p, s), rec in result.runs.items() if rec.outcomes
    ])

    ratios = result.ratios()
    with (out / "ratios.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["platform", "metric", "hot_mean", "lifo_mean", "ratio"])
        for (a, m), r in ratios.items():
            w.writerow([a.value, m, io.fmt(conds[(a, FeedPolicy.HOT)].metric(m).unconditional_mean),
                        io.fmt(conds[(a, FeedPolicy.LIFO)].metric(m).unconditional_mean), io.fmt(r)])

    dispersion_rows = []
    with (out / "seed_quality.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["platform", "algorithm", "seed", "exposure_weighted_quality"])
        for a in spec.architectures:
            for p in spec.policies:
                qs = result.seed_qualities(a, p)
                for s, q in qs:
                    w.writerow([a.value, p.value, s, "" if q is None else io.fmt(q)])
                vals = [q for _, q in qs if q is not None]
                if len(vals) >= 2:
                    dispersion_rows.append([a.value, p.value, *map(io.fmt, seed_quality_dispersion(vals))])
    if len(spec.seeds) < 2:
        notices.append("only one seed: seed-level quality dispersion not computed")

    with (out / "exposure_scatter.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["platform", "algorithm", "seed", "msg_id", "alpha", "exposure"])
        for (a, p, s), rec in result.runs.items():
            if rec.outcomes is None:
                continue
            for o in in_scope(rec.outcomes, spec.scope):
                if o.exposure > 0:
                    w.writerow([a.value, p.value, s, o.msg_id, io.fmt(o.alpha), o.exposure])

    lines = [f"scope: {spec.scope.value}", f"runs: {len(result.runs)}  failed: {len(result.failures)}",
             f"wall seconds: {result.seconds:.1f}", "", "breadth / depth", ""]
    lines.append(io.breadth_depth_table([(a.value, p.value, c) for (a, p), c in conds.items()]))
    lines += ["hot / lifo ratio of unconditional means", ""]
    ratio_rows = [["platform"] + list(METRICS)]
    for a in spec.architectures:
        if any((a, m) in ratios for m in METRICS):
            ratio_rows.append([a.value] + [io.fmt(ratios[(a, m)]) if (a, m) in ratios else "-" for m in METRICS])
    if len(ratio_rows) > 1:
        lines.append(io.align(ratio_rows))
    lines += ["early exposure share (first 10% of messages)", ""]
    early = [["platform", "alg", "share"]]
    for (a, p) in conds:
        early.append([a.value, p.value, f"{result.early_share(a, p):.3f}"])
    lines.append(io.align(early))
    if dispersion_rows:
        lines += ["seed-level exposure-weighted quality", ""]
        lines.append(io.align([["platform", "alg", "min", "max", "range"]] + dispersion_rows))
    lines += notices
    if result.failures:
        lines.append("failed runs:")
        lines += [f"  {r.architecture.value}/{r.policy.value}/seed {r.seed}" for r in result.failures]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return notices

