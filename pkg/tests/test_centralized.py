import math

import pytest

from adnet.centralized import (
    ConstructionBug,
    ScheduleRound,
    apply_schedule,
    cut_in_half,
    cut_in_half_schedule,
    diameter,
    euler_ring_then_cut,
    euler_tour,
    flooding_sends,
    total_activations,
    track_potential,
)
from adnet.generators import InstanceSpec, generate
from adnet.model import TemporalSnapshot

from oracles import adjacency, all_pairs_diameter, bfs, cut_in_half_pairs, tree_shape


def line(n):
    return TemporalSnapshot.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def lg(n):
    return math.ceil(math.log2(max(n, 2)))


def test_cut_in_half_n9():
    rounds = cut_in_half(9)
    # ceil(log2 9) = 4 rounds, the last one has nothing left to do
    assert len(rounds) == 4 and rounds[3] == []
    assert rounds[:3] == [[(1, 3), (3, 5), (5, 7), (7, 9)], [(1, 5), (5, 9)], [(1, 9)]]
    assert sum(len(r) for r in cut_in_half(9)) == 7


def test_cut_in_half_n2():
    sched = cut_in_half_schedule([0, 1])
    assert total_activations(sched) == 0


def test_cut_in_half_matches_oracle():
    for n in range(1, 300):
        assert cut_in_half(n) == (cut_in_half_pairs(n) if n >= 2 else []), n


@pytest.mark.parametrize("n", [3, 9, 64, 100, 1024])
def test_cut_in_half_is_legal_and_cheap(n):
    snaps = apply_schedule(line(n), cut_in_half_schedule(list(range(n))))
    final = snaps[-1]
    assert len(final.active - final.original) <= n
    # depth of the BFS tree from the first node
    assert max(bfs(adjacency(n, final.active), 0).values()) <= lg(n)


def test_illegal_schedule_raises():
    with pytest.raises(ConstructionBug):
        apply_schedule(line(4), [ScheduleRound([(0, 3)])])


def test_euler_tour_walks_the_tree():
    g, _ = generate(InstanceSpec("random-tree", 40, 2))
    ring = euler_tour(g, 0)
    assert len(ring) == 2 * 40 - 1
    assert ring.nodes[0] == ring.nodes[-1] == 0
    adj = g.adjacency()
    assert all(b in adj[a] for a, b in zip(ring.nodes, ring.nodes[1:]))


@pytest.mark.parametrize("family", ["random-tree", "random-connected", "line", "ring"])
@pytest.mark.parametrize("n", [2, 5, 64, 300])
def test_euler_ring_then_cut(family, n):
    g, uids = generate(InstanceSpec(family, n, 3))
    sched, root = euler_ring_then_cut(g, uids)
    assert uids[root] == n
    snaps = apply_schedule(g, sched)  # raises on any illegal step
    final = snaps[-1]
    ok, depth, _, _ = tree_shape(n, final.active, root)
    assert ok and depth <= lg(2 * n - 1)
    assert total_activations(sched) <= 2 * n


def test_diameter_agrees_with_floyd_warshall():
    for seed in range(5):
        g, _ = generate(InstanceSpec("random-connected", 30, seed))
        assert diameter(g) == all_pairs_diameter(30, g.active)
    g = TemporalSnapshot.from_edges(3, [(0, 1)])
    assert diameter(g) == math.inf


def test_potential_on_static_line():
    n = 9
    snaps = [line(n)] * 5
    tab = track_potential(snaps, 0, n - 1)
    assert tab.values() == [n - 1] * 5


def test_potential_one_hop():
    n = 9
    snaps = [line(n)] * 2
    tab = track_potential(snaps, 0, n - 1, sends=[[(0, 1)]])
    assert tab.values() == [n - 1, n - 2]


def test_potential_cut_in_half_round():
    n = 9
    snaps = apply_schedule(line(n), cut_in_half_schedule(list(range(n))))
    tab = track_potential(snaps[:2], 0, n - 1)
    # the first round shortcuts every other hop, nobody has talked yet
    assert tab.values() == [8, 4]
    assert not tab.violations


def test_potential_under_flooding_obeys_the_cap():
    n = 64
    snaps = apply_schedule(line(n), cut_in_half_schedule(list(range(n))))
    tab = track_potential(snaps, 0, n - 1, flooding_sends(snaps))
    assert not tab.violations
    assert tab.values()[-1] < tab.values()[0]
    assert tab.to_csv().splitlines()[0] == "round,PO,K"
