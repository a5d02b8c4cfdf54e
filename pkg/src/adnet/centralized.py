"""Centralized baselines: CutInHalf on a line, Euler-tour ring + CutInHalf on
any connected graph, and the information potential PO_{u,v}.

A schedule is a list of rounds; each round is a list of real node pairs to
activate (and, for the cleanup round, pairs to deactivate).  Schedules are
always replayed through `resolve_round`, so they obey the same distance-2
rule as the distributed protocols.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .model import RoundActions, TemporalSnapshot, bfs_distances, edge, resolve_round


class ConstructionBug(RuntimeError):
    """A centralized schedule proposed something the model rejects."""


@dataclass
class ScheduleRound:
    activate: list = field(default_factory=list)
    deactivate: list = field(default_factory=list)


def cut_in_half(n):
    """Index schedule over positions 1..n of a line.

    Round i activates (j, j + 2^i) for every j with j mod 2^i == 1 and
    j + 2^i <= n.
    """
    if n < 2:
        return []
    rounds = []
    for i in range(1, math.ceil(math.log2(n)) + 1):
        step = 1 << i
        pairs = [(j, j + step) for j in range(1, n + 1) if j % step == 1 and j + step <= n]
        rounds.append(pairs)
    return rounds


def cut_in_half_schedule(order):
    """CutInHalf on the line order[0] - order[1] - ... as real node pairs."""
    return [ScheduleRound([(order[a - 1], order[b - 1]) for a, b in rnd])
            for rnd in cut_in_half(len(order))]


def apply_schedule(g_s: TemporalSnapshot, schedule):
    """Replay a schedule; returns the list of snapshots [E(1), E(2), ...]."""
    snaps = [g_s]
    cur = g_s
    for rnd in schedule:
        acts = RoundActions()
        for u, v in rnd.activate:
            acts.activate(u, v)
        for u, v in rnd.deactivate:
            acts.deactivate(u, v)
        cur, _, _, rej = resolve_round(cur, acts)
        if rej:
            r = rej[0]
            raise ConstructionBug(f"round {r.round}: {r.kind} {r.pair} rejected ({r.reason})")
        snaps.append(cur)
    return snaps


def total_activations(schedule):
    return sum(len(r.activate) for r in schedule)


# ----------------------------------------------------------------------------
# Euler tour ring


@dataclass
class VirtualRing:
    nodes: list  # virtual position -> real node

    def __len__(self):
        return len(self.nodes)


def bfs_tree(g: TemporalSnapshot, root):
    adj = g.adjacency()
    par = {root: None}
    order = [root]
    for x in order:
        for y in sorted(adj[x]):
            if y not in par:
                par[y] = x
                order.append(y)
    return par


def euler_tour(g: TemporalSnapshot, root) -> VirtualRing:
    """Closed walk around a BFS spanning tree: 2n-1 virtual nodes."""
    par = bfs_tree(g, root)
    kids = {}
    for x, p in par.items():
        if p is not None:
            kids.setdefault(p, []).append(x)
    for lst in kids.values():
        lst.sort()
    walk = [root]
    stack = [(root, iter(kids.get(root, ())))]
    while stack:
        x, it = stack[-1]
        y = next(it, None)
        if y is None:
            stack.pop()
            if stack:
                walk.append(stack[-1][0])
        else:
            walk.append(y)
            stack.append((y, iter(kids.get(y, ()))))
    return VirtualRing(walk)


def euler_ring_then_cut(g_s: TemporalSnapshot, uids):
    """Schedule solving Depth-log n Tree from any connected graph.

    The walk around a BFS tree (rooted at the max-UID node) is a virtual
    line whose consecutive nodes are adjacent or equal.  CutInHalf runs on
    that line; a virtual pair maps to a real pair, and pairs that are equal
    or already active are skipped (the witness chain stays valid because a
    skipped pair is either a single node or already an edge).  A last round
    keeps only a BFS tree of the result.
    """
    n = g_s.n
    root = max(range(n), key=lambda u: uids[u])
    ring = euler_tour(g_s, root)
    line = ring.nodes
    active = set(g_s.active)
    schedule = []
    for rnd in cut_in_half(len(line)):
        acts = []
        seen = set()
        for a, b in rnd:
            x, y = line[a - 1], line[b - 1]
            if x == y:
                continue
            e = edge(x, y)
            if e in active or e in seen:
                continue
            seen.add(e)
            acts.append((x, y))
        active |= seen
        schedule.append(ScheduleRound(acts))
    # cleanup: BFS tree of the final graph
    final = TemporalSnapshot(n, frozenset(active), g_s.original)
    par = bfs_tree(final, root)
    keep = {edge(x, p) for x, p in par.items() if p is not None}
    drop = sorted(active - keep)
    if drop:
        schedule.append(ScheduleRound([], drop))
    return schedule, root


def diameter(g: TemporalSnapshot):
    adj = g.adjacency()
    best = 0
    for s in range(g.n):
        d = bfs_distances(adj, s)
        if min(d) < 0:
            return math.inf
        best = max(best, max(d))
    return best


# ----------------------------------------------------------------------------
# potential


@dataclass
class PotentialTable:
    u: int
    v: int
    rows: list = field(default_factory=list)   # (round, PO, |K|)
    violations: list = field(default_factory=list)

    def values(self):
        return [po for _, po, _ in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["round", "PO", "K"])
        w.writerows(self.rows)
        return buf.getvalue()


def flooding_sends(snapshots):
    """Every node tells every neighbour everything, every round."""
    out = []
    for snap in snapshots[:-1]:
        out.append([(a, b) for a, b in snap.active] + [(b, a) for a, b in snap.active])
    return out


def track_potential(snapshots, u, v, sends=None) -> PotentialTable:
    """PO_{u,v}(i) = min over w in K(UID_u) of dist_{E(i)}(w, v).

    `sends[i]` lists the (sender, receiver) pairs of round i (over E(i));
    without it no information moves.  Each round is checked against the two
    reduction rules combined: PO(i) - PO(i+1) <= PO(i)/2 + 1.
    """
    know = {u}
    table = PotentialTable(u, v)
    prev = None
    for i, snap in enumerate(snapshots):
        if i > 0 and sends is not None and i - 1 < len(sends):
            new = {b for a, b in sends[i - 1] if a in know}
            know |= new
        dist = bfs_distances(snap.adjacency(), v)
        po = min(dist[w] for w in know if dist[w] >= 0)
        r = snap.round
        table.rows.append((r, po, len(know)))
        if prev is not None and prev - po > prev / 2 + 1:
            table.violations.append((r, prev, po))
        prev = po
    return table
