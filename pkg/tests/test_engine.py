import itertools
import math
from collections import Counter, defaultdict

import numpy as np
import pytest

from oracles import ReferenceWorld
from platsim.engine import ConfigError, EventKind, Simulation, SimulationConfig, build_platform, run
from platsim.feed import InsertOutcome
from platsim.graph import Architecture
from platsim.metrics import validity_counts

SMALL = {
    "complete": dict(n_users=6),
    "network": dict(n_users=8, n_edges=20),
    "tree": dict(n_users=8, n_groups=3, n_edges=10),
    "layered": dict(n_users=8, n_pages=4, n_groups=3, n_edges=24),
}


def _records(sim):
    return [(t, k.name.lower(), a, m, o) for t, k, a, m, o in sim.events.records()]


def _scripted(cfg, active, post, share=None):
    """Simulation with the activation order and post/reshare decisions forced."""
    sim = Simulation(cfg)
    sim.active[:] = active
    sim.decisions[:, 0] = [0.0 if p else 0.99 for p in post]
    sim.decisions[:, 1] = 0.0 if share is None else [0.0 if s else 0.99 for s in share]
    sim._phi[:] = -1.0  # every message clears the quality bar ...
    sim._p_s[:] = 0.0   # ... and the magnitude bar
    return sim


def test_two_users_forced_post():
    sim = Simulation(SimulationConfig(architecture="complete", n_users=2, steps=1, p_post=1.0))
    sim.step()
    author = int(sim.active[0])
    assert sim.feeds.contents(1 - author) == [0]
    assert sim.feeds.contents(author) == []


def test_tree_without_memberships_delivers_nothing():
    cfg = SimulationConfig(architecture="tree", n_users=50, n_groups=5, n_edges=0, steps=500, record_events=True)
    sim = Simulation(cfg)
    res = sim.run()
    assert sim.events.count(EventKind.DELIVERED) == 0
    assert len(res.outcomes) > 0 and all(o.reach == 0 for o in res.outcomes)


def test_hot_reshared_message_blocks_fresh_post():
    cfg = SimulationConfig(architecture="complete", policy="hot", n_users=3, steps=3, capacity=1, record_events=True)
    sim = _scripted(cfg, active=[0, 1, 0], post=[True, False, True])
    sim.run()
    assert int(sim.messages.reshares[0]) == 1
    delivered = [(t, a, m, o) for t, k, a, m, o in sim.events.records() if k is EventKind.DELIVERED]
    assert delivered == [
        (0, "1", 0, "accepted"), (0, "2", 0, "accepted"),
        (1, "2", 0, "duplicate"),
        (2, "1", 1, "accepted"), (2, "2", 1, "rejected_full"),
    ]
    assert sim.feeds.contents(2) == [0]


def test_three_agent_state_machine_enumeration():
    """Every 5-step script of a 3-agent C=1 world agrees with the reference
    engine, and the Hot blocking case is reachable."""
    blocked = Counter()
    for policy in ("hot", "lifo"):
        cfg = SimulationConfig(architecture="complete", policy=policy, n_users=3, steps=5, capacity=1,
                               record_events=True)
        for rest in itertools.product(range(3), repeat=4):
            for post in itertools.product((True, False), repeat=5):
                sim = _scripted(cfg, (0,) + rest, post)
                sim.run()
                got = _records(sim)
                assert got == ReferenceWorld(sim).run().events
                blocked[policy] += sum(1 for r in got if r[4] == "rejected_full")
    assert blocked["hot"] > 0 and blocked["lifo"] == 0


@pytest.mark.parametrize("arch", list(SMALL))
@pytest.mark.parametrize("policy", ["lifo", "hot"])
def test_engine_matches_reference(arch, policy):
    for seed in range(4):
        cfg = SimulationConfig(architecture=arch, policy=policy, seed=seed, steps=300, capacity=3,
                               record_events=True, **SMALL[arch])
        sim = Simulation(cfg)
        sim.run()
        ref = ReferenceWorld(sim).run()
        assert _records(sim) == ref.events
        outs = sim.outcomes()
        assert [o.reach for o in outs] == [len(ref.reach.get(m, ())) for m in range(len(outs))]
        assert [o.exposure for o in outs] == [len(ref.exposed.get(m, ())) for m in range(len(outs))]
        assert [o.likes for o in outs] == [len(ref.likers.get(m, ())) for m in range(len(outs))]


def test_zero_steps():
    sim = Simulation(SimulationConfig(architecture="complete", n_users=5, steps=0, record_events=True))
    res = sim.run()
    assert res.outcomes == [] and len(res.events) == 0 and len(res.messages) == 0
    with pytest.raises(RuntimeError):
        sim.step()


@pytest.mark.parametrize("arch", list(Architecture))
def test_determinism(arch):
    cfg = SimulationConfig.preset("desk", architecture=arch, policy="hot", seed=11, steps=400, record_events=True)
    a, b = run(cfg), run(cfg)
    assert a.events.digest() == b.events.digest()
    assert a.outcomes == b.outcomes


def test_hot_and_lifo_share_random_numbers():
    base = dict(architecture="network", n_users=300, n_edges=3000, steps=2000, seed=4)
    lifo = run(SimulationConfig(policy="lifo", **base))
    hot = run(SimulationConfig(policy="hot", **base))
    assert [(o.created_step, o.k, o.alpha) for o in lifo.outcomes] == \
           [(o.created_step, o.k, o.alpha) for o in hot.outcomes]


@pytest.fixture(scope="module", params=list(Architecture), ids=lambda a: a.value)
def desk_run(request):
    cfg = SimulationConfig.preset("desk", architecture=request.param, policy="hot", seed=3, record_events=True)
    sim = Simulation(cfg)
    sim.run()
    return sim


def test_conservation(desk_run):
    sim = desk_run
    reshared, liked = Counter(), Counter()
    for _, k, _, m, _ in sim.events.records():
        if k is EventKind.RESHARED:
            reshared[m] += 1
        elif k is EventKind.LIKED:
            liked[m] += 1
    n = len(sim.messages)
    assert [int(x) for x in sim.messages.reshares[:n]] == [reshared[m] for m in range(n)]
    assert [int(x) for x in sim.messages.likes[:n]] == [liked[m] for m in range(n)]


def test_causality(desk_run):
    posted, admitted = {}, set()
    for t, k, a, m, o in desk_run.events.records():
        if k is EventKind.POSTED:
            posted[m] = t
        elif k is EventKind.DELIVERED and o in ("accepted", "evicting") and a.isdigit():
            admitted.add((int(a), m))
        elif k in (EventKind.RESHARED, EventKind.LIKED):
            assert m in posted and posted[m] <= t
            assert (int(a), m) in admitted
        elif k is EventKind.REVIEWED:
            assert (int(a), m) in admitted


def test_log_is_chronological(desk_run):
    steps = [r[0] for r in desk_run.events.records()]
    assert steps == sorted(steps)


def test_construct_validity(desk_run):
    outs = desk_run.outcomes()
    v = validity_counts(outs)
    assert v["reshares_without_reach"] == v["likes_exceeding_exposure"] == v["exposure_exceeding_reach"] == 0
    assert all(not o.violations() for o in outs)
    n_agents = desk_run.graph.n_agents
    assert all(o.reach <= n_agents - 1 for o in outs)


def test_authors_never_receive_own_messages(desk_run):
    author = desk_run.messages.author
    for _, k, a, m, _ in desk_run.events.records():
        if k in (EventKind.DELIVERED, EventKind.REVIEWED, EventKind.LIKED) and a.isdigit():
            assert int(a) != author[m]


def test_activation_uniform():
    cfg = SimulationConfig(architecture="layered", n_users=30, n_pages=10, n_groups=3, n_edges=60,
                           steps=100_000, seed=2)
    sim = Simulation(cfg)
    n = 40
    freq = np.bincount(sim.active, minlength=n) / cfg.steps
    sigma = math.sqrt((1 / n) * (1 - 1 / n) / cfg.steps)
    assert len(freq) == n
    assert np.all(np.abs(freq - 1 / n) <= 3 * sigma)


def test_tree_isolation():
    cfg = SimulationConfig.preset("desk", architecture="tree", policy="lifo", seed=5, record_events=True)
    sim = Simulation(cfg)
    sim.run()
    for t, k, a, _, _ in sim.events.records():
        if k is EventKind.DELIVERED and a.isdigit():
            # users only ever receive by pulling from their groups on their own turn
            assert int(a) == sim.active[t]


def test_page_post_reaches_admin_groups_and_followers():
    cfg = SimulationConfig.preset("desk", architecture="layered", seed=0, steps=1, p_post=1.0)
    gr = build_platform(cfg)
    page = next(p for p in range(gr.n_pages) if len(gr.page_admin[p]) and len(gr.page_followers[p]))
    sim = Simulation(cfg, gr)
    sim.active[0] = gr.n_users + page
    sim.step()
    for grp in gr.page_admin[page].tolist():
        assert sim.groups.contents(grp) == [0]
    assert sim.page_out.contents(page) == [0]
    for q in gr.page_followers[page].tolist():
        assert sim.feeds.contents(gr.n_users + q) == [0]


def test_page_follower_pulls_output_queue():
    cfg = SimulationConfig.preset("desk", architecture="layered", seed=0, steps=2, p_post=1.0)
    gr = build_platform(cfg)
    user = next(u for u in range(gr.n_users) if len(gr.user_pages[u]))
    page = int(gr.user_pages[user][0])
    sim = Simulation(cfg, gr)
    sim.active[:] = [gr.n_users + page, user]
    sim.run()
    assert 0 in sim.feeds.contents(user)
    assert sim.outcomes()[0].reach >= 1


def test_single_edge_network_delivery():
    from platsim.graph import EdgeSet, build_network
    gr = build_network(3, EdgeSet.from_pairs([(0, 1)], n_nodes=3))
    cfg = SimulationConfig(architecture="network", n_users=3, n_edges=1, steps=1, p_post=1.0, record_events=True)
    sim = Simulation(cfg, gr)
    sim.active[0] = 0
    sim.run()
    delivered = [(a, o) for _, k, a, _, o in sim.events.records() if k is EventKind.DELIVERED]
    assert delivered == [("1", "accepted")]


@pytest.mark.parametrize("n", [2, 3, 10, 50])
@pytest.mark.parametrize("policy", ["lifo", "hot"])
def test_implicit_complete_matches_materialized(n, policy):
    base = dict(architecture="complete", policy=policy, n_users=n, steps=400, seed=n, record_events=True)
    implicit = run(SimulationConfig(**base))
    explicit = run(SimulationConfig(materialize_complete=True, **base))
    assert not explicit.graph.implicit_complete and implicit.graph.implicit_complete
    assert implicit.events.to_tsv() == explicit.events.to_tsv()


def test_page_likes_flag():
    base = dict(architecture="layered", n_users=60, n_pages=20, n_groups=4, n_edges=300, steps=3000, seed=1)
    with_pages = run(SimulationConfig(**base)).outcomes
    users_only = run(SimulationConfig(count_page_likes=False, **base)).outcomes
    assert all(u.likes <= w.likes for u, w in zip(users_only, with_pages))
    assert sum(u.likes for u in users_only) < sum(w.likes for w in with_pages)


def test_paper_scale_message_count():
    res = run(SimulationConfig.preset("paper", architecture="tree", policy="lifo", seed=0))
    assert 4_350 <= len(res.outcomes) <= 4_650


def test_event_tsv_format():
    cfg = SimulationConfig(architecture="tree", n_users=10, n_groups=2, n_edges=10, steps=50, record_events=True)
    text = run(cfg).events.to_tsv()
    lines = text.splitlines()
    assert lines[0] == "step\tkind\tagent\tmsg\toutcome"
    kinds = {ln.split("\t")[1] for ln in lines[1:]}
    assert kinds <= {"posted", "reshared", "liked", "delivered", "reviewed"}
    assert any(ln.split("\t")[2].startswith("g") for ln in lines[1:])


@pytest.mark.parametrize("overrides, field", [
    (dict(architecture="tree", n_groups=0), "n_groups"),
    (dict(architecture="tree", n_pages=5), "n_pages"),
    (dict(architecture="complete", n_groups=3), "n_groups"),
    (dict(p_post=1.5), "p_post"),
    (dict(capacity=0), "capacity"),
    (dict(seed=-1), "seed"),
    (dict(n_users=1), "n_users"),
    (dict(architecture="tree", n_edges=10**6), "n_edges"),
])
def test_config_errors_name_the_field(overrides, field):
    arch = overrides.pop("architecture", "complete")
    cfg = SimulationConfig.preset("desk", architecture=arch)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    with pytest.raises(ConfigError) as info:
        Simulation(cfg)
    assert info.value.field == field


def test_defaults_match_paper_settings():
    c = SimulationConfig().validate()
    assert (c.steps, c.p_post, c.p_share, c.capacity, c.max_affiliations) == (10_000, 0.45, 0.25, 10, 10)
    assert c.n_users == 10_000
    with pytest.raises(ConfigError):
        SimulationConfig.preset("huge")
