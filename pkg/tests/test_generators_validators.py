import pytest
from hypothesis import given, settings, strategies as st

from adnet.generators import FAMILIES, InstanceSpec, generate, instance_text, parse_instance
from adnet.graph_to_star import run_graph_to_star
from adnet.model import TemporalSnapshot, UsageError
from adnet.validators import (
    derive_committees,
    disseminate,
    leaders_at,
    validate_complete_tree,
    validate_depth_d_tree,
    validate_token_dissemination,
)

from oracles import adjacency, bfs


def test_line_5():
    g, uids = generate(InstanceSpec("line", 5, 0))
    assert sorted(g.active) == [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert sorted(uids) == [1, 2, 3, 4, 5]


def test_increasing_ring():
    g, uids = generate(InstanceSpec("increasing-ring", 6, 3))
    assert len(g.active) == 6
    start = uids.index(1)
    assert [uids[(start + k) % 6] for k in range(6)] == [1, 2, 3, 4, 5, 6]


def test_random_connected_100_seed_7():
    g, _ = generate(InstanceSpec("random-connected", 100, 7, max_degree=4))
    adj = adjacency(100, g.active)
    assert len(bfs(adj, 0)) == 100
    assert max(len(a) for a in adj) <= 4


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), st.integers(1, 200), st.integers(0, 10 ** 6), st.integers(2, 6))
def test_generated_graphs_are_connected_and_deterministic(family, n, seed, deg):
    spec = InstanceSpec(family, n, seed, max_degree=deg)
    g, uids = generate(spec)
    assert len(bfs(adjacency(n, g.active), 0)) == n
    assert sorted(uids) == list(range(1, n + 1))
    if family == "random-connected":
        assert max((len(a) for a in adjacency(n, g.active)), default=0) <= deg
    assert generate(spec) == (g, uids)
    back, buids = parse_instance(instance_text(g, uids))
    assert back.active == g.active and buids == uids


def test_bad_specs():
    with pytest.raises(UsageError):
        InstanceSpec("hypercube", 4)
    with pytest.raises(UsageError):
        InstanceSpec("line", 0)
    with pytest.raises(UsageError):
        InstanceSpec("line", 3, uid_policy="given", uids=(1, 1, 2))


def _star(n, center=0):
    return TemporalSnapshot.from_edges(n, [(center, i) for i in range(n) if i != center])


def test_depth_validator():
    uids = [9, 1, 2, 3, 4]
    assert validate_depth_d_tree(_star(5), 1, uids=uids, leaders={0}).ok
    v = validate_depth_d_tree(_star(5), 1, uids=uids, leaders={0, 1})
    assert not v.ok and "2 nodes claim Leader" in v.reasons[0]
    path = TemporalSnapshot.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert not validate_depth_d_tree(path, 2, root=0).ok
    assert validate_depth_d_tree(path, 3, root=0).ok
    cyc = TemporalSnapshot.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert not validate_depth_d_tree(cyc, 2, root=0).ok


def test_complete_tree_validator():
    cbt = TemporalSnapshot.from_edges(15, [(i, (i - 1) // 2) for i in range(1, 15)])
    v = validate_depth_d_tree(cbt, 3, root=0)
    assert v.ok and v.details["depth"] == 3
    assert validate_complete_tree(cbt, 0, 2).ok
    lopsided = TemporalSnapshot.from_edges(4, [(0, 1), (1, 2), (1, 3)])
    assert not validate_complete_tree(lopsided, 0, 2).ok
    assert not validate_complete_tree(_star(5), 0, 2).ok


def test_token_dissemination():
    alone, _ = disseminate(_star(1), 0, [1])
    assert validate_token_dissemination(alone, [1]).ok
    uids = [5, 1, 2, 3, 4]
    got, used = disseminate(_star(5), 0, uids)
    assert used == 2
    assert validate_token_dissemination(got, uids).ok
    cut, _ = disseminate(_star(5), 0, uids, rounds=used - 1)
    assert not validate_token_dissemination(cut, uids).ok


def test_committee_views_first_and_last_phase():
    g, uids = generate(InstanceSpec("random-connected", 30, 2))
    r = run_graph_to_star(g, uids)
    first = derive_committees(leaders_at(r.trace, 0, 30), uids)
    assert first.count == 30 and not first.problems
    last = derive_committees(leaders_at(r.trace, r.ledger.rounds, 30), uids)
    assert last.count == 1 and not last.problems
    bad = derive_committees({0: 0, 1: 0}, [1, 5])
    assert bad.problems
