import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from adnet.engine import Engine
from adnet.model import TemporalSnapshot
from adnet.subroutines import (
    AsyncLineToPolylogTree,
    LineToTree,
    TreeToStar,
    orient_tree,
    polylog_arity,
)
from adnet.validators import validate_complete_tree, validate_depth_d_tree

from oracles import canon, is_complete_tree, pointer_jumping_rounds, sync_line_tree


def tree_with_depth(d, extra, rng):
    """Random tree rooted at 0 whose depth is exactly d."""
    n = d + 1 + extra
    parent = {i: i - 1 for i in range(1, d + 1)}
    depth = {i: i for i in range(d + 1)}
    for x in range(d + 1, n):
        p = rng.choice([y for y in depth if depth[y] < d])
        parent[x] = p
        depth[x] = depth[p] + 1
    return n, parent


def run_tree_to_star(n, parent, uids=None):
    es = [(x, p) for x, p in parent.items()]
    g = TemporalSnapshot.from_edges(n, es)
    eng = Engine(TreeToStar.from_edges(n, es, 0), g, uids or list(range(1, n + 1)))
    return eng.run(), eng


def run_line(n, arity=2, wakes=None):
    g = TemporalSnapshot.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    prog = LineToTree(list(range(n)), arity, wakes)
    eng = Engine(prog, g, list(range(n)), round_cap=100000)
    snap, led, _ = eng.run()
    return prog, snap, led, eng


def test_orient_tree():
    st_ = orient_tree(4, [(0, 1), (1, 2), (1, 3)], 0)
    assert st_[0].root and st_[0].parent is None
    assert st_[2].parent == 1 and st_[1].children == {2, 3}
    with pytest.raises(ValueError):
        orient_tree(4, [(0, 1), (2, 3)], 0)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 7, 8, 9, 31, 32, 33, 100])
def test_tree_to_star_on_paths(d):
    n = d + 1
    (snap, led, _), eng = run_tree_to_star(n, {i: i - 1 for i in range(1, n)})
    want = pointer_jumping_rounds({i: max(i - 1, 0) for i in range(n)}, 0)
    assert want == (math.ceil(math.log2(d)) if d > 1 else 0)
    assert led.last_change_round == want
    assert validate_depth_d_tree(snap, 1, root=0).ok
    assert led.peak_edges <= max(2 * n - 3, n - 1)
    assert not eng.rejections


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 40), st.integers(0, 10 ** 6))
def test_tree_to_star_on_random_trees(d, extra, seed):
    n, parent = tree_with_depth(d, extra, random.Random(seed))
    (snap, led, _), eng = run_tree_to_star(n, parent)
    assert led.last_change_round == pointer_jumping_rounds({**parent, 0: 0}, 0)
    assert validate_depth_d_tree(snap, 1, root=0).ok
    assert led.peak_edges <= max(2 * n - 3, n - 1)
    assert not eng.rejections


def test_sync_line_matches_oracle_small():
    for n in range(2, 80):
        prog, snap, led, eng = run_line(n)
        par, last = sync_line_tree(n)
        assert set(snap.active) == {canon(c, p) for c, p in par.items()}, n
        assert prog.steps() == last, n
        assert is_complete_tree(n, snap.active, n - 1, 2)
        assert led.peak_activated_degree <= 4
        assert not eng.rejections


def test_line_steps_within_log_n():
    for n in list(range(2, 200)) + [255, 256, 257, 1000]:
        _, last = sync_line_tree(n)
        assert last <= math.ceil(math.log2(n)), n


@pytest.mark.parametrize("arity", [4, 8])
def test_power_of_two_arity(arity):
    for n in [5, 17, 64, 65, 200, 513]:
        prog, snap, led, eng = run_line(n, arity)
        par, last = sync_line_tree(n, arity)
        assert set(snap.active) == {canon(c, p) for c, p in par.items()}
        assert validate_complete_tree(snap, n - 1, arity).ok
        assert prog.steps() == last


def test_polylog_arity():
    assert [polylog_arity(n) for n in (1, 2, 4, 8, 16, 17, 256, 257, 2 ** 16, 2 ** 16 + 1)] == \
        [2, 2, 2, 2, 4, 4, 8, 8, 16, 16]
    for n in range(2, 5000, 37):
        a = polylog_arity(n)
        assert a & (a - 1) == 0 and 2 <= a <= max(2, math.ceil(math.log2(n)))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 120), st.integers(0, 10 ** 6))
def test_async_equals_sync(n, seed):
    rng = random.Random(seed)
    lg = math.ceil(math.log2(n))
    wakes = [rng.randint(0, 3 * lg) for _ in range(n)]
    _, snap, led, eng = run_line(n, 2, wakes)
    par, _ = sync_line_tree(n)
    assert set(snap.active) == {canon(c, p) for c, p in par.items()}
    assert led.rounds <= 3 * (lg + max(wakes))
    assert not eng.rejections


def test_async_polylog_tree():
    n = 300
    rng = random.Random(5)
    wakes = [rng.randint(0, 10) for _ in range(n)]
    g = TemporalSnapshot.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    prog = AsyncLineToPolylogTree(list(range(n)), wakes)
    snap, _, _ = Engine(prog, g, list(range(n))).run()
    assert validate_complete_tree(snap, n - 1, polylog_arity(n)).ok
