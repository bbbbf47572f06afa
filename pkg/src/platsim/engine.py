"""The activation loop.

One step = one activated agent (user or page, never a group):

1. pull every message from its member groups' queues (and, for layered
   users, from the output queues of pages it follows) into its input feed;
2. post a new message with probability ``p_post``; otherwise, with
   probability ``p_share``, scan the feed and reshare one eligible message
   chosen uniformly, removing it from the feed;
3. push whatever was posted or reshared to its user delivery neighbours,
   to one random member group, and for pages to follower pages, its own
   output queue and every group it administers;
4. like the feed message with the highest like score.

Reach counts agents whose input feed admitted the message; exposure counts
agents who scanned a feed holding it (reshare scan or like scan). Both are
unique-agent counts and authors never receive their own messages.

Every step draws the same number of uniforms from each stream whatever the
feed state, so two runs that differ only in policy stay coupled.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import io
import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from platsim import graph as g
from platsim.domain import DEFAULT_TRIANGULAR_MODE, AgentPopulation, Message, MessageTraits, sample_population
from platsim.feed import DEFAULT_CAPACITY, EMPTY, FeedPolicy, FeedStore, InsertOutcome
from platsim.graph import Architecture, PlatformGraph
from platsim.metrics import MessageOutcome
from platsim.stochastics import MAX_SEED, RandomSource, scale_index, triangular_inverse_cdf

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending setting."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# (n_users, n_pages, n_groups, n_edges)
PAPER_SCALE = {
    Architecture.COMPLETE: (10_000, 0, 0, None),
    Architecture.NETWORK: (10_000, 0, 0, 2_281_390),
    Architecture.TREE: (10_000, 0, 100, 2_000),
    Architecture.LAYERED: (9_000, 1_000, 100, 1_839_636),
}
DESK_SCALE = {
    Architecture.COMPLETE: (1_000, 0, 0, None),
    Architecture.NETWORK: (1_000, 0, 0, 22_814),
    Architecture.TREE: (1_000, 0, 20, 200),
    Architecture.LAYERED: (1_000, 100, 20, 18_396),
}
PRESETS = {"paper": (PAPER_SCALE, 10_000), "desk": (DESK_SCALE, 1_000)}


@dataclass
class SimulationConfig:
    architecture: Architecture = Architecture.COMPLETE
    policy: FeedPolicy = FeedPolicy.LIFO
    seed: int = 0
    steps: int = 10_000
    n_users: int | None = None
    n_pages: int | None = None
    n_groups: int | None = None
    n_edges: int | None = None
    p_post: float = 0.45
    p_share: float = 0.25
    capacity: int = DEFAULT_CAPACITY
    max_affiliations: int = g.DEFAULT_MAX_AFFILIATIONS
    triangular_mode: float = DEFAULT_TRIANGULAR_MODE
    rwr_restart_p: float = g.DEFAULT_RWR_RESTART
    edge_list: str | None = None
    flip_edges: bool = False
    layered_split: dict[str, float] | None = None
    graph_seed: int | None = None
    count_page_likes: bool = True
    record_events: bool = False
    materialize_complete: bool = False

    def __post_init__(self):
        self.architecture = Architecture.parse(self.architecture)
        self.policy = FeedPolicy.parse(self.policy)

    @classmethod
    def preset(cls, name: str, **overrides) -> "SimulationConfig":
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
        scale, steps = PRESETS[name]
        arch = Architecture.parse(overrides.get("architecture", Architecture.COMPLETE))
        nu, np_, ng, ne = scale[arch]
        base = dict(architecture=arch, steps=steps, n_users=nu, n_pages=np_, n_groups=ng, n_edges=ne)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def resolved(self) -> "SimulationConfig":
        """Copy with architecture defaults filled in for unset counts."""
        nu, np_, ng, ne = PAPER_SCALE[self.architecture]
        return dataclasses.replace(
            self,
            n_users=nu if self.n_users is None else self.n_users,
            n_pages=np_ if self.n_pages is None else self.n_pages,
            n_groups=ng if self.n_groups is None else self.n_groups,
            n_edges=ne if self.n_edges is None else self.n_edges,
        )

    def validate(self) -> "SimulationConfig":
        c = self.resolved()
        if not 0 <= c.seed <= MAX_SEED:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if c.steps < 0:
            raise ConfigError("steps", "must be >= 0")
        for name in ("p_post", "p_share", "rwr_restart_p"):
            v = getattr(c, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(name, f"probability outside [0, 1]: {v}")
        if c.rwr_restart_p >= 1.0:
            raise ConfigError("rwr_restart_p", "must be < 1")
        if c.capacity < 1:
            raise ConfigError("capacity", "must be >= 1")
        if c.max_affiliations < 1:
            raise ConfigError("max_affiliations", "must be >= 1")
        if not 0.0 <= c.triangular_mode <= 1.0:
            raise ConfigError("triangular_mode", "must lie in [0, 1]")
        if c.n_users < 2:
            raise ConfigError("n_users", "need at least 2 users")
        if c.n_pages < 0 or c.n_groups < 0:
            raise ConfigError("n_pages" if c.n_pages < 0 else "n_groups", "must be >= 0")
        arch = c.architecture
        if arch in (Architecture.COMPLETE, Architecture.NETWORK, Architecture.TREE) and c.n_pages:
            raise ConfigError("n_pages", f"{arch.value} architecture has no pages")
        if arch in (Architecture.COMPLETE, Architecture.NETWORK) and c.n_groups:
            raise ConfigError("n_groups", f"{arch.value} architecture has no groups")
        if arch is Architecture.TREE:
            if c.n_groups < 1:
                raise ConfigError("n_groups", "tree architecture requires groups")
            if c.n_edges is None or c.n_edges < 0:
                raise ConfigError("n_edges", "tree needs a membership edge count")
            if c.n_edges > c.n_users * min(c.max_affiliations, c.n_groups):
                raise ConfigError("n_edges", "more memberships than the per-user cap allows")
        if arch in (Architecture.NETWORK, Architecture.LAYERED) and c.n_edges is None and c.edge_list is None:
            raise ConfigError("n_edges", f"{arch.value} needs an edge count or an edge list")
        return c


# ---------------------------------------------------------------------------
# platform construction


def _user_edges(n: int, target: int | None, cfg: SimulationConfig, src: RandomSource,
                symmetric: bool = False) -> g.EdgeSet:
    """Edges among ``n`` nodes: an RWR sample of the supplied file, or a
    synthetic scale-free graph, trimmed to ``target`` edges when given."""
    if cfg.edge_list:
        full = g.load_edge_list(cfg.edge_list)
        if cfg.flip_edges:
            full = full.reversed()
        sample = g.rwr_sample(full, n, cfg.rwr_restart_p, src.derive("rwr"))
        edges = sample.edges
    else:
        if target is None:
            raise ConfigError("n_edges", "synthetic graphs need an edge count")
        edges = g.synth_scale_free(n, g.attach_m_for(n, target), src.derive("synth"))
    if symmetric:
        pairs = g._symmetric_unique(edges)
        edges = g.EdgeSet(pairs[:, 0], pairs[:, 1], edges.n_nodes, edges.labels)
    if target is not None:
        if len(edges) >= target:
            edges = g.trim_edges(edges, target, src.derive("trim"))
        else:
            log.warning("sampled graph has %d edges, fewer than the %d requested", len(edges), target)
    return edges


def build_platform(cfg: SimulationConfig) -> PlatformGraph:
    cfg = cfg.validate()
    seed = cfg.seed if cfg.graph_seed is None else cfg.graph_seed
    src = RandomSource(seed).derive("graph")
    arch = cfg.architecture
    if arch is Architecture.COMPLETE:
        graph = g.build_complete(cfg.n_users)
        return graph.materialize() if cfg.materialize_complete else graph
    if arch is Architecture.TREE:
        return g.build_tree(cfg.n_users, cfg.n_groups, cfg.n_edges, src, cfg.max_affiliations)
    if arch is Architecture.NETWORK:
        # an edge file is oriented already; the synthetic graph is generated in delivery direction
        edges = _user_edges(cfg.n_users, cfg.n_edges, dataclasses.replace(cfg, flip_edges=False), src)
        return g.build_network(cfg.n_users, edges, flip=cfg.flip_edges)
    # layered
    if cfg.n_edges is None:
        raise ConfigError("n_edges", "layered needs a total edge budget")
    budget = g.layered_budget(cfg.n_edges, cfg.layered_split)
    if cfg.n_pages == 0:
        budget["friendships"] += budget["page_page"] + budget["page_follows"] + budget["admin"]
        budget["page_page"] = budget["page_follows"] = budget["admin"] = 0
    if cfg.n_groups == 0:
        budget["friendships"] += budget["memberships"] + budget["admin"]
        budget["memberships"] = budget["admin"] = 0
    friends = _user_edges(cfg.n_users, budget["friendships"], cfg, src.derive("friendships"), symmetric=True)
    budget["friendships"] = len(friends)
    if cfg.n_pages >= 2 and budget["page_page"]:
        pages = _user_edges(cfg.n_pages, budget["page_page"], cfg, src.derive("page_page"))
    else:
        pages = g.EdgeSet(np.empty(0, np.int64), np.empty(0, np.int64), cfg.n_pages)
    budget["page_page"] = len(pages)
    return g.build_layered(cfg.n_users, cfg.n_pages, cfg.n_groups, friends, pages, budget, src,
                           cfg.max_affiliations)


# ---------------------------------------------------------------------------
# event log


class EventKind(enum.IntEnum):
    POSTED = 0
    RESHARED = 1
    LIKED = 2
    DELIVERED = 3
    REVIEWED = 4


class Target(enum.IntEnum):
    AGENT = 0
    GROUP = 1
    PAGE_OUTPUT = 2


_TARGET_PREFIX = {Target.AGENT: "", Target.GROUP: "g", Target.PAGE_OUTPUT: "o"}
_OUTCOME_NAME = {int(o): o.name.lower() for o in InsertOutcome}
_NO_OUTCOME = -1


class EventLog:
    """Append-only event records kept as column chunks.

    A record is (step, kind, target kind, agent, message, outcome); ``agent``
    is the recipient for deliveries.
    """

    def __init__(self):
        self._chunks: list[tuple[int, int, int, np.ndarray, np.ndarray, np.ndarray]] = []

    def add(self, step: int, kind: EventKind, agent: int, msg: int, outcome: int = _NO_OUTCOME,
            target: Target = Target.AGENT) -> None:
        self._chunks.append((step, int(kind), int(target), np.array([agent]), np.array([msg]),
                             np.array([outcome])))

    def add_many(self, step: int, kind: EventKind, agents, msgs, outcomes=None,
                 target: Target = Target.AGENT) -> None:
        agents = np.asarray(agents, dtype=np.int64)
        if len(agents) == 0:
            return
        msgs = np.broadcast_to(np.asarray(msgs, dtype=np.int64), agents.shape)
        outcomes = (np.full(agents.shape, _NO_OUTCOME) if outcomes is None
                    else np.asarray(outcomes, dtype=np.int64))
        self._chunks.append((step, int(kind), int(target), agents, msgs, outcomes))

    def __len__(self) -> int:
        return sum(len(c[3]) for c in self._chunks)

    def records(self) -> Iterator[tuple[int, EventKind, str, int, str]]:
        for step, kind, target, agents, msgs, outcomes in self._chunks:
            prefix = _TARGET_PREFIX[Target(target)]
            k = EventKind(kind)
            for a, m, o in zip(agents.tolist(), msgs.tolist(), outcomes.tolist()):
                yield step, k, f"{prefix}{a}", m, _OUTCOME_NAME.get(o, "")

    def count(self, kind: EventKind) -> int:
        return sum(len(c[3]) for c in self._chunks if c[1] == kind)

    def write_tsv(self, fh) -> None:
        fh.write("step\tkind\tagent\tmsg\toutcome\n")
        for step, kind, agent, msg, outcome in self.records():
            fh.write(f"{step}\t{kind.name.lower()}\t{agent}\t{msg}\t{outcome}\n")

    def to_tsv(self) -> str:
        buf = io.StringIO()
        self.write_tsv(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_tsv().encode()).hexdigest()


# ---------------------------------------------------------------------------
# world state and step loop


@dataclass
class MessageTable:
    """Column store of every produced message, ids in production order."""

    capacity: int
    n: int = 0
    author: np.ndarray = field(init=False)
    created: np.ndarray = field(init=False)
    k: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)
    alpha: np.ndarray = field(init=False)
    magnitude: np.ndarray = field(init=False)
    reshares: np.ndarray = field(init=False)
    likes: np.ndarray = field(init=False)

    def __post_init__(self):
        cap = max(self.capacity, 1)
        self.author = np.zeros(cap, dtype=np.int64)
        self.created = np.zeros(cap, dtype=np.int64)
        self.k = np.zeros(cap)
        self.beta = np.zeros(cap)
        self.alpha = np.zeros(cap)
        self.magnitude = np.zeros(cap)
        self.reshares = np.zeros(cap, dtype=np.int64)
        self.likes = np.zeros(cap, dtype=np.int64)

    def __len__(self) -> int:
        return self.n

    def add(self, author: int, step: int, traits: MessageTraits) -> int:
        i = self.n
        self.author[i] = author
        self.created[i] = step
        self.k[i], self.beta[i], self.alpha[i] = traits.motivating, traits.illuminating, traits.quality
        self.magnitude[i] = traits.magnitude
        self.n += 1
        return i

    def __getitem__(self, i: int) -> Message:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return Message(
            id=i, author=int(self.author[i]), created_step=int(self.created[i]),
            traits=MessageTraits(float(self.k[i]), float(self.beta[i]), float(self.alpha[i])),
            reshare_count=int(self.reshares[i]), like_count=int(self.likes[i]),
        )

    def __iter__(self) -> Iterator[Message]:
        return (self[i] for i in range(self.n))


class Simulation:
    def __init__(self, config: SimulationConfig, graph: PlatformGraph | None = None):
        self.config = cfg = config.validate()
        self.graph = graph if graph is not None else build_platform(cfg)
        gr = self.graph
        self.n_users, self.n_pages = gr.n_users, gr.n_pages
        n_agents = gr.n_agents
        root = RandomSource(cfg.seed)
        self.population: AgentPopulation = sample_population(root.derive("agents"), n_agents,
                                                              cfg.triangular_mode)
        T = cfg.steps
        self.active = np.minimum((root.derive("activation").random(T) * n_agents).astype(np.int64),
                                 n_agents - 1)
        self.decisions = root.derive("decisions").random((T, 4))
        self.message_uniforms = root.derive("messages").random((T, 3))

        self.messages = MessageTable(T)
        self.feeds = FeedStore(n_agents, cfg.capacity, cfg.policy, self.messages.reshares)
        self.groups = FeedStore(gr.n_groups, cfg.capacity, cfg.policy, self.messages.reshares)
        self.page_out = FeedStore(gr.n_pages, cfg.capacity, cfg.policy, self.messages.reshares)
        self.outputs: list[list[int]] = [[] for _ in range(n_agents)]

        # np.zeros is lazily committed, so untouched rows cost nothing
        self.reach_seen = np.zeros((max(T, 1), n_agents), dtype=bool)
        self.exposure_seen = np.zeros((max(T, 1), n_agents), dtype=bool)
        self.reach = np.zeros(max(T, 1), dtype=np.int64)
        self.exposure = np.zeros(max(T, 1), dtype=np.int64)
        self.resharers: set[tuple[int, int]] = set()
        self.likers: set[tuple[int, int]] = set()
        self.events = EventLog() if cfg.record_events else None
        self.t = 0
        self._phi = self.population.quality_preference
        self._p_s = self.population.reshare_threshold

    # -- accounting -------------------------------------------------------

    def _admitted(self, m: int, agents: np.ndarray) -> None:
        seen = self.reach_seen[m]
        fresh = agents[~seen[agents]]
        seen[fresh] = True
        self.reach[m] += len(fresh)

    def _expose(self, a: int, order: list[int]) -> None:
        ids = np.asarray(order, dtype=np.int64)
        col = self.exposure_seen[ids, a]
        fresh = ids[~col]
        self.exposure_seen[fresh, a] = True
        self.exposure[fresh] += 1
        if self.events is not None:
            self.events.add_many(self.t, EventKind.REVIEWED, np.full(len(ids), a), ids)

    # -- step phases ------------------------------------------------------

    def _pull(self, a: int) -> None:
        gr = self.graph
        sources: list[tuple[FeedStore, int, Target]] = []
        if a < self.n_users:
            sources += [(self.groups, int(x), Target.GROUP) for x in gr.user_groups[a]]
            sources += [(self.page_out, int(x), Target.PAGE_OUTPUT) for x in gr.user_pages[a]]
        else:
            sources += [(self.groups, int(x), Target.GROUP) for x in gr.page_admin[a - self.n_users]]
        if not sources:
            return
        author = self.messages.author
        incoming: list[int] = []
        for store, row, _ in sources:
            incoming.extend(m for m, _ in store.ordered_entries(row) if author[m] != a)
        if not incoming:
            return
        results = self.feeds.insert_many(a, incoming)
        codes = np.fromiter((int(o) for o, _ in results), dtype=np.int64, count=len(results))
        ids = np.asarray(incoming, dtype=np.int64)
        for m in ids[codes <= InsertOutcome.EVICTING].tolist():
            if not self.reach_seen[m, a]:
                self.reach_seen[m, a] = True
                self.reach[m] += 1
        if self.events is not None:
            self.events.add_many(self.t, EventKind.DELIVERED, np.full(len(ids), a), ids, codes)

    def _push_agents(self, rows: np.ndarray, m: int) -> None:
        author = int(self.messages.author[m])
        rows = rows[rows != author]
        if len(rows) == 0:
            return
        codes, _ = self.feeds.deliver(rows, m)
        self._admitted(m, rows[codes <= InsertOutcome.EVICTING])
        if self.events is not None:
            self.events.add_many(self.t, EventKind.DELIVERED, rows, m, codes)

    def _push_queue(self, store: FeedStore, row: int, m: int, target: Target) -> None:
        res = store.insert(row, m)
        if self.events is not None:
            self.events.add(self.t, EventKind.DELIVERED, row, m, int(res.outcome), target)

    def _deliver(self, a: int, m: int, u_group: float) -> None:
        gr = self.graph
        if a < self.n_users:
            self._push_agents(gr.delivery_targets(a), m)
            groups = gr.user_groups[a]
            if len(groups):
                self._push_queue(self.groups, int(groups[scale_index(u_group, len(groups))]), m, Target.GROUP)
        else:
            p = a - self.n_users
            self._push_queue(self.page_out, p, m, Target.PAGE_OUTPUT)
            self._push_agents(gr.page_followers[p] + self.n_users, m)
            for grp in gr.page_admin[p].tolist():
                self._push_queue(self.groups, grp, m, Target.GROUP)

    def _like(self, a: int) -> None:
        order = self.feeds.review_order(a)
        if not order:
            return
        self._expose(a, order)
        ids = np.asarray(order, dtype=np.int64)
        phi = self._phi[a]
        scores = (1.0 - phi) * self.messages.k[ids] + phi * self.messages.beta[ids]
        top = int(ids[int(np.argmax(scores))])  # first maximum in review order
        self.messages.likes[top] += 1
        self.likers.add((top, a))
        if self.events is not None:
            self.events.add(self.t, EventKind.LIKED, a, top)

    def step(self) -> None:
        cfg = self.config
        t = self.t
        if t >= cfg.steps:
            raise RuntimeError("simulation already finished")
        a = int(self.active[t])
        u_post, u_share, u_pick, u_group = self.decisions[t]
        msgs = self.messages

        self._pull(a)

        m = None
        if u_post < cfg.p_post:
            u = self.message_uniforms[msgs.n]
            tri = triangular_inverse_cdf(u[:2], 0.0, cfg.triangular_mode, 1.0)
            m = msgs.add(a, t, MessageTraits(float(tri[0]), float(tri[1]), float(-1.0 + 2.0 * u[2])))
            self.outputs[a].append(m)
            if self.events is not None:
                self.events.add(t, EventKind.POSTED, a, m)
        elif u_share < cfg.p_share:
            order = self.feeds.review_order(a)
            if order:
                self._expose(a, order)
                phi, p_s = self._phi[a], self._p_s[a]
                cand = [x for x in order if msgs.alpha[x] > phi and msgs.magnitude[x] >= p_s]
                if cand:
                    m = cand[scale_index(u_pick, len(cand))]
                    self.feeds.remove(a, m)
                    msgs.reshares[m] += 1
                    self.resharers.add((m, a))
                    self.outputs[a].append(m)
                    if self.events is not None:
                        self.events.add(t, EventKind.RESHARED, a, m)

        if m is not None:
            self._deliver(a, m, u_group)

        self._like(a)
        self.t += 1

    def run(self) -> "RunResult":
        while self.t < self.config.steps:
            self.step()
        return self.result()

    def outcomes(self) -> list[MessageOutcome]:
        n = self.messages.n
        resharers = np.zeros(n, dtype=np.int64)
        likers = np.zeros(n, dtype=np.int64)
        for m, _ in self.resharers:
            resharers[m] += 1
        for m, a in self.likers:
            if self.config.count_page_likes or a < self.n_users:
                likers[m] += 1
        msgs = self.messages
        return [
            MessageOutcome(
                msg_id=i, created_step=int(msgs.created[i]),
                k=float(msgs.k[i]), beta=float(msgs.beta[i]), alpha=float(msgs.alpha[i]),
                reach=int(self.reach[i]), exposure=int(self.exposure[i]),
                reshares=int(resharers[i]), likes=int(likers[i]),
            )
            for i in range(n)
        ]

    def result(self) -> "RunResult":
        return RunResult(self.config, self.graph, self.messages, self.outcomes(), self.events)


@dataclass
class RunResult:
    config: SimulationConfig
    graph: PlatformGraph
    messages: MessageTable
    outcomes: list[MessageOutcome]
    events: EventLog | None


def run(config: SimulationConfig, graph: PlatformGraph | None = None) -> RunResult:
    return Simulation(config, graph).run()
