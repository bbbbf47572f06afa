"""Platform topologies: complete, network, tree and layered.

Agent ids are dense: users ``0..n_users-1`` then pages
``n_users..n_users+n_pages-1``. Groups live in their own id space
``0..n_groups-1`` because they never activate.

Edge direction for follower files: ``u v`` means *v follows u*, so a post
by ``u`` is delivered to ``v``. Pass ``flip=True`` for files written the
other way round.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from platsim.stochastics import RandomSource, scale_index

log = logging.getLogger(__name__)

DEFAULT_MAX_AFFILIATIONS = 10
DEFAULT_RWR_RESTART = 0.15

# share of the layered edge budget per relation; friendships absorb rounding
LAYERED_SPLIT = {
    "page_page": 0.10,
    "page_follows": 0.04,
    "memberships": 0.04,
    "admin": 0.005,
}


class Architecture(enum.Enum):
    COMPLETE = "complete"
    NETWORK = "network"
    TREE = "tree"
    LAYERED = "layered"

    @classmethod
    def parse(cls, value: "str | Architecture") -> "Architecture":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        v = PLATFORM_ALIASES.get(v, v)
        try:
            return cls(v)
        except ValueError:
            raise ValueError(
                f"unknown architecture {value!r}; expected one of complete, network, tree, layered"
            ) from None

    @property
    def platform(self) -> str:
        return {"complete": "tiktok", "network": "twitter", "tree": "reddit", "layered": "facebook"}[self.value]


PLATFORM_ALIASES = {"tiktok": "complete", "team": "complete", "twitter": "network",
                    "reddit": "tree", "facebook": "layered"}


class GraphError(ValueError):
    pass


class EdgeListError(GraphError):
    pass


@dataclass
class EdgeSet:
    """Directed, duplicate-free edges over dense node ids ``0..n_nodes-1``."""

    src: np.ndarray
    dst: np.ndarray
    n_nodes: int
    labels: np.ndarray | None = None  # original node ids, when remapped

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.src)

    @classmethod
    def from_pairs(cls, pairs, n_nodes: int | None = None) -> "EdgeSet":
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        arr = _dedup(arr)
        if n_nodes is None:
            n_nodes = int(arr.max()) + 1 if len(arr) else 0
        return cls(arr[:, 0], arr[:, 1], n_nodes)

    def pairs(self) -> np.ndarray:
        return np.column_stack([self.src, self.dst])

    def reversed(self) -> "EdgeSet":
        return EdgeSet(self.dst.copy(), self.src.copy(), self.n_nodes, self.labels)


def _dedup(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr.reshape(0, 2)
    arr = arr[arr[:, 0] != arr[:, 1]]
    _, first = np.unique(arr, axis=0, return_index=True)
    return arr[np.sort(first)]


def load_edge_list(path) -> EdgeSet:
    """Read a SNAP-style ``src dst`` file.

    Lines starting with ``#`` and blank lines are skipped, duplicate edges and
    self-loops dropped, and node ids remapped to ``0..n-1`` in ascending order
    of the original ids (kept in ``labels``).
    """
    path = Path(path)
    src, dst = [], []
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise EdgeListError(f"cannot read edge list {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 2:
                raise EdgeListError(f"{path}:{lineno}: expected 'src dst', got {s!r}")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            src.append(a)
            dst.append(b)
    if not src:
        warnings.warn(f"edge list {path} is empty", stacklevel=2)
        return EdgeSet(np.empty(0, np.int64), np.empty(0, np.int64), 0, np.empty(0, np.int64))
    raw = np.column_stack([np.asarray(src, np.int64), np.asarray(dst, np.int64)])
    labels, dense = np.unique(raw, return_inverse=True)
    dense = _dedup(dense.reshape(-1, 2))
    return EdgeSet(dense[:, 0], dense[:, 1], len(labels), labels)


def write_edge_list(edges: EdgeSet, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for a, b in zip(edges.src.tolist(), edges.dst.tolist()):
            fh.write(f"{a} {b}\n")


def _undirected_csr(edges: EdgeSet) -> tuple[np.ndarray, np.ndarray]:
    n = edges.n_nodes
    a = np.concatenate([edges.src, edges.dst])
    b = np.concatenate([edges.dst, edges.src])
    order = np.lexsort((b, a))
    a, b = a[order], b[order]
    keep = np.ones(len(a), dtype=bool)
    keep[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
    a, b = a[keep], b[keep]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, a + 1, 1)
    return np.cumsum(indptr), b


@dataclass
class RWRSample:
    edges: EdgeSet
    nodes: np.ndarray  # original ids of the sampled nodes, ascending
    reseeds: int
    steps: int


def rwr_sample(edges: EdgeSet, target_n: int, restart_p: float, src: RandomSource,
               stall_limit: int | None = None) -> RWRSample:
    """Random walk with restarts on the undirected view of ``edges``.

    The walk returns to its start node with probability ``restart_p`` per step
    and stops once ``target_n`` distinct nodes are visited. When the start
    component is used up (or the walk stalls for ``stall_limit`` steps without
    a new node) a fresh start is drawn uniformly among unvisited nodes. The
    result is the induced subgraph with original edge directions, relabelled
    to ``0..target_n-1`` by ascending original id.
    """
    n = edges.n_nodes
    if n == 0:
        raise GraphError("cannot sample an empty graph")
    if target_n > n:
        raise GraphError(f"target_n={target_n} exceeds node count {n}")
    if not 0.0 <= restart_p < 1.0:
        raise GraphError("restart_p must be in [0, 1)")
    indptr, nbrs = _undirected_csr(edges)
    n_comp, comp = connected_components(
        coo_matrix((np.ones(len(edges)), (edges.src, edges.dst)), shape=(n, n)), directed=False
    )
    comp_size = np.bincount(comp, minlength=n_comp)
    comp_seen = np.zeros(n_comp, dtype=np.int64)
    if stall_limit is None:
        stall_limit = max(1000, 100 * target_n)

    visited = np.zeros(n, dtype=bool)
    order: list[int] = []

    def touch(v: int) -> None:
        visited[v] = True
        order.append(v)
        comp_seen[comp[v]] += 1

    def fresh_start() -> int:
        unvisited = np.flatnonzero(~visited)
        return int(unvisited[scale_index(src.random(), len(unvisited))])

    start = scale_index(src.random(), n)
    touch(start)
    cur, reseeds, steps, since_new = start, 0, 0, 0
    block, bi = src.random(2 * 4096).reshape(2, 4096), 4096
    while len(order) < target_n:
        if comp_seen[comp[start]] == comp_size[comp[start]] or since_new >= stall_limit:
            start = cur = fresh_start()
            touch(start)
            reseeds += 1
            since_new = 0
            continue
        if bi == block.shape[1]:
            block, bi = src.random(2 * 4096).reshape(2, 4096), 0
        u_restart, u_step = block[0, bi], block[1, bi]
        bi += 1
        steps += 1
        lo, hi = indptr[cur], indptr[cur + 1]
        if u_restart < restart_p or hi == lo:
            cur = start
            since_new += 1
            continue
        cur = int(nbrs[lo + scale_index(u_step, int(hi - lo))])
        if visited[cur]:
            since_new += 1
        else:
            touch(cur)
            since_new = 0

    nodes = np.sort(np.asarray(order, dtype=np.int64))
    remap = np.full(n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    keep = (remap[edges.src] >= 0) & (remap[edges.dst] >= 0)
    labels = edges.labels[nodes] if edges.labels is not None else nodes
    sub = EdgeSet(remap[edges.src[keep]], remap[edges.dst[keep]], len(nodes), labels)
    return RWRSample(sub, labels, reseeds, steps)


def synth_scale_free(n: int, attach_m: int, src: RandomSource) -> EdgeSet:
    """Preferential attachment: a seed clique on ``attach_m`` nodes, then each
    new node links to ``attach_m`` distinct existing nodes chosen in proportion
    to degree.

    Edges point from the older node to the newer one (the newcomer follows).
    Edge count is ``C(m, 2) + m * (n - m)``.
    """
    m = attach_m
    if not n > m >= 1:
        raise GraphError(f"synth_scale_free needs n > attach_m >= 1, got n={n}, m={m}")
    n_edges = m * (m - 1) // 2 + m * (n - m)
    src_arr = np.empty(n_edges, dtype=np.int64)
    dst_arr = np.empty(n_edges, dtype=np.int64)
    # every edge endpoint, so a uniform pick from it is a degree-weighted pick
    ends = np.empty(2 * n_edges, dtype=np.int64)
    e = 0
    for i in range(m):
        for j in range(i + 1, m):
            src_arr[e], dst_arr[e] = i, j
            e += 1
    ends[: 2 * e : 2], ends[1 : 2 * e : 2] = src_arr[:e], dst_arr[:e]
    gen = src._gen
    for v in range(m, n):
        n_ends = 2 * e
        if n_ends == 0:
            targets = np.arange(v)[:m]
        else:
            chosen: dict[int, None] = {}
            while len(chosen) < m:
                draw = ends[gen.integers(0, n_ends, size=2 * (m - len(chosen)))]
                for t in draw.tolist():
                    chosen.setdefault(t)
                    if len(chosen) == m:
                        break
            targets = np.fromiter(chosen, dtype=np.int64, count=m)
        src_arr[e : e + m] = targets
        dst_arr[e : e + m] = v
        ends[2 * e : 2 * (e + m) : 2] = targets
        ends[2 * e + 1 : 2 * (e + m) : 2] = v
        e += m
    return EdgeSet(src_arr, dst_arr, n)


def attach_m_for(n: int, target_edges: int) -> int:
    """Smallest attachment count whose edge total reaches ``target_edges``."""
    for m in range(1, n):
        if m * (m - 1) // 2 + m * (n - m) >= target_edges:
            return m
    raise GraphError(f"{target_edges} edges impossible on {n} nodes")


def trim_edges(edges: EdgeSet, target: int, src: RandomSource) -> EdgeSet:
    """Uniformly drop edges down to ``target`` (order of survivors preserved)."""
    if target > len(edges):
        raise GraphError(f"cannot trim {len(edges)} edges up to {target}")
    if target == len(edges):
        return edges
    keep = np.sort(src._gen.choice(len(edges), size=target, replace=False))
    return EdgeSet(edges.src[keep], edges.dst[keep], edges.n_nodes, edges.labels)


def _csr(n: int, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjacency lists ``a -> b`` for ids ``0..n-1``, each list ascending."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    order = np.lexsort((b, a))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, a + 1, 1)
    return np.cumsum(indptr), b[order]


@dataclass
class Adjacency:
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def build(cls, n: int, a, b) -> "Adjacency":
        return cls(*_csr(n, a, b))

    @classmethod
    def empty(cls, n: int) -> "Adjacency":
        return cls(np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64))

    def __getitem__(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def __len__(self) -> int:
        return len(self.indptr) - 1


@dataclass
class PlatformGraph:
    """Delivery structure of one platform.

    ``user_delivery[u]``: users whose input feed receives what ``u`` posts
    (followers or friends). ``None`` with ``implicit_complete`` set means all
    other users. ``user_groups``/``user_pages``: memberships and page follows
    per user. ``page_followers``: pages receiving a page's posts.
    ``page_admin``: groups a page administers.
    """

    architecture: Architecture
    n_users: int
    n_pages: int = 0
    n_groups: int = 0
    implicit_complete: bool = False
    user_delivery: Adjacency | None = None
    user_groups: Adjacency | None = None
    user_pages: Adjacency | None = None
    page_followers: Adjacency | None = None
    page_admin: Adjacency | None = None
    relation_edges: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.user_groups is None:
            self.user_groups = Adjacency.empty(self.n_users)
        if self.user_pages is None:
            self.user_pages = Adjacency.empty(self.n_users)
        if self.page_followers is None:
            self.page_followers = Adjacency.empty(self.n_pages)
        if self.page_admin is None:
            self.page_admin = Adjacency.empty(self.n_pages)
        if self.user_delivery is None and not self.implicit_complete:
            self.user_delivery = Adjacency.empty(self.n_users)

    @property
    def n_agents(self) -> int:
        return self.n_users + self.n_pages

    @property
    def n_edges(self) -> int:
        return sum(self.relation_edges.values())

    def delivery_targets(self, user: int) -> np.ndarray:
        if self.implicit_complete:
            others = np.arange(self.n_users - 1, dtype=np.int64)
            others[user:] += 1
            return others
        return self.user_delivery[user]

    def materialize(self) -> "PlatformGraph":
        """Explicit copy of an implicit complete graph (for small n)."""
        if not self.implicit_complete:
            return self
        n = self.n_users
        a, b = np.divmod(np.arange(n * n, dtype=np.int64), n)
        off = a != b
        return PlatformGraph(
            self.architecture, n, implicit_complete=False,
            user_delivery=Adjacency.build(n, a[off], b[off]),
            relation_edges=dict(self.relation_edges),
        )

    def group_members(self) -> Adjacency:
        ug = self.user_groups
        users = np.repeat(np.arange(self.n_users), ug.degree())
        return Adjacency.build(self.n_groups, ug.indices, users)

    def summary(self) -> str:
        lines = [
            f"architecture: {self.architecture.value}",
            f"users: {self.n_users}",
            f"pages: {self.n_pages}",
            f"groups: {self.n_groups}",
        ]
        for rel, count in self.relation_edges.items():
            lines.append(f"edges.{rel}: {count}")
        lines.append(f"edges.total: {self.n_edges}")
        return "\n".join(lines)


def build_complete(n_users: int) -> PlatformGraph:
    if n_users < 2:
        raise GraphError("complete graph needs at least 2 users")
    return PlatformGraph(
        Architecture.COMPLETE, n_users, implicit_complete=True,
        relation_edges={"user_user": n_users * (n_users - 1)},
    )


def _check_range(edges: EdgeSet, n: int, what: str) -> None:
    if len(edges) and (edges.src.max() >= n or edges.dst.max() >= n or min(edges.src.min(), edges.dst.min()) < 0):
        raise GraphError(f"{what} reference node ids outside [0, {n})")


def build_network(n_users: int, edges: EdgeSet, flip: bool = False) -> PlatformGraph:
    _check_range(edges, n_users, "follower edges")
    e = edges.reversed() if flip else edges
    return PlatformGraph(
        Architecture.NETWORK, n_users,
        user_delivery=Adjacency.build(n_users, e.src, e.dst),
        relation_edges={"user_user": len(e)},
    )


def sample_capped_pairs(n_left: int, n_right: int, count: int, cap: int | None,
                        src: RandomSource) -> np.ndarray:
    """``count`` distinct (left, right) pairs drawn uniformly, with at most
    ``cap`` pairs per left node. Returns an array of shape (count, 2)."""
    per_left = n_right if cap is None else min(cap, n_right)
    if count > n_left * per_left:
        raise GraphError(
            f"infeasible: {count} pairs over {n_left}x{n_right} with at most {per_left} per node"
        )
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    gen = src._gen
    seen: set[int] = set()
    load = np.zeros(n_left, dtype=np.int64)
    out: list[int] = []
    total = n_left * n_right
    if count > total // 2 and cap is None:
        picked = gen.choice(total, size=count, replace=False)
        return np.column_stack(np.divmod(np.sort(picked), n_right))
    while len(out) < count:
        for code in gen.integers(0, total, size=2 * (count - len(out)) + 16).tolist():
            if code in seen:
                continue
            left = code // n_right
            if load[left] >= per_left:
                continue
            seen.add(code)
            load[left] += 1
            out.append(code)
            if len(out) == count:
                break
    return np.column_stack(np.divmod(np.asarray(out, dtype=np.int64), n_right))


def build_tree(n_users: int, n_groups: int, n_membership_edges: int, src: RandomSource,
               max_affiliations: int = DEFAULT_MAX_AFFILIATIONS) -> PlatformGraph:
    if n_groups < 1:
        raise GraphError("tree architecture needs at least one group")
    pairs = sample_capped_pairs(n_users, n_groups, n_membership_edges, max_affiliations, src)
    return PlatformGraph(
        Architecture.TREE, n_users, n_groups=n_groups,
        user_groups=Adjacency.build(n_users, pairs[:, 0], pairs[:, 1]),
        relation_edges={"memberships": len(pairs)},
    )


def layered_budget(total: int, split: dict[str, float] | None = None) -> dict[str, int]:
    """Split a layered edge budget across relations; friendships take the remainder."""
    split = dict(LAYERED_SPLIT if split is None else split)
    counts = {k: int(round(total * v)) for k, v in split.items()}
    counts["friendships"] = total - sum(counts.values())
    if counts["friendships"] < 0:
        raise GraphError("layered edge split exceeds the total budget")
    return {"friendships": counts.pop("friendships"), **counts}


def _symmetric_unique(edges: EdgeSet) -> np.ndarray:
    lo = np.minimum(edges.src, edges.dst)
    hi = np.maximum(edges.src, edges.dst)
    pairs = np.column_stack([lo, hi])
    _, first = np.unique(pairs, axis=0, return_index=True)
    return pairs[np.sort(first)]


def build_layered(n_users: int, n_pages: int, n_groups: int, user_edges: EdgeSet,
                  page_edges: EdgeSet, budget: dict[str, int], src: RandomSource,
                  max_affiliations: int = DEFAULT_MAX_AFFILIATIONS) -> PlatformGraph:
    """Users, pages and groups with five relation types.

    ``user_edges`` become symmetric friendships (one edge per unordered pair),
    ``page_edges`` directed page follows (``p q``: q follows p). Page follows
    by users, group memberships and page admin links are drawn uniformly
    under the per-user caps. ``budget`` gives the edge count of each relation
    (see ``layered_budget``); the two sampled relations must already match.
    """
    _check_range(user_edges, n_users, "friendship edges")
    _check_range(page_edges, n_pages, "page edges")
    friends = _symmetric_unique(user_edges)
    if len(friends) != budget["friendships"]:
        raise GraphError(f"have {len(friends)} friendships, budget says {budget['friendships']}")
    if len(page_edges) != budget["page_page"]:
        raise GraphError(f"have {len(page_edges)} page-page edges, budget says {budget['page_page']}")
    if budget["memberships"] or budget["admin"]:
        if n_groups < 1:
            raise GraphError("memberships or admin links need at least one group")
    if budget["page_follows"] and n_pages < 1:
        raise GraphError("page follows need at least one page")
    follows = sample_capped_pairs(n_users, max(n_pages, 1), budget["page_follows"], max_affiliations,
                                  src.derive("page_follows"))
    members = sample_capped_pairs(n_users, max(n_groups, 1), budget["memberships"], max_affiliations,
                                  src.derive("memberships"))
    admin = sample_capped_pairs(max(n_pages, 1), max(n_groups, 1), budget["admin"], None,
                                src.derive("admin"))
    fa = np.concatenate([friends[:, 0], friends[:, 1]])
    fb = np.concatenate([friends[:, 1], friends[:, 0]])
    return PlatformGraph(
        Architecture.LAYERED, n_users, n_pages=n_pages, n_groups=n_groups,
        user_delivery=Adjacency.build(n_users, fa, fb),
        user_groups=Adjacency.build(n_users, members[:, 0], members[:, 1]),
        user_pages=Adjacency.build(n_users, follows[:, 0], follows[:, 1]),
        page_followers=Adjacency.build(n_pages, page_edges.src, page_edges.dst),
        page_admin=Adjacency.build(n_pages, admin[:, 0], admin[:, 1]),
        relation_edges={
            "friendships": len(friends),
            "page_page": len(page_edges),
            "page_follows": len(follows),
            "memberships": len(members),
            "admin": len(admin),
        },
    )


def edge_stats(edges: EdgeSet) -> dict[str, int]:
    deg = np.bincount(np.concatenate([edges.src, edges.dst]), minlength=edges.n_nodes) if edges.n_nodes else np.zeros(0)
    n_comp = 0
    if edges.n_nodes:
        n_comp, _ = connected_components(
            coo_matrix((np.ones(len(edges)), (edges.src, edges.dst)), shape=(edges.n_nodes,) * 2),
            directed=False,
        )
    return {
        "nodes": int(edges.n_nodes),
        "edges": int(len(edges)),
        "max_degree": int(deg.max()) if len(deg) else 0,
        "components": int(n_comp),
    }
