"""Temporal graph data model: snapshots, proposals and their resolution.

A snapshot holds the active edge set E(i) and the original edges E(1).
Edges are canonical pairs (min, max).  A new edge uv may only be activated
when some w has both uw and wv active; deactivation is unilateral, but an
activate/deactivate disagreement between the two endpoints leaves the pair
untouched.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

NOT_DISTANCE_2 = "not-distance-2"
ALREADY_ACTIVE = "already-active"
NOT_ACTIVE = "not-active"
CONFLICT = "conflict"


class UsageError(ValueError):
    """Bad input handed to the library (out-of-range node, malformed file...)."""


def edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def build_adjacency(n: int, edges: Iterable[tuple[int, int]]) -> list[set]:
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def is_connected_adj(adj) -> bool:
    n = len(adj)
    if n <= 1:
        return True
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                count += 1
                stack.append(y)
    return count == n


@dataclass(frozen=True)
class TemporalSnapshot:
    n: int
    active: frozenset
    original: frozenset
    round: int = 1
    _adj: list = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        for u, v in self.active:
            if u == v:
                raise UsageError(f"self-loop on {u}")
            if not (0 <= u < v < self.n):
                raise UsageError(f"edge ({u}, {v}) is not canonical for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], round: int = 1):
        es = frozenset(edge(u, v) for u, v in edges)
        return cls(n, es, es, round)

    def adjacency(self) -> list[set]:
        if self._adj is None:
            object.__setattr__(self, "_adj", build_adjacency(self.n, self.active))
        return self._adj

    def is_connected(self) -> bool:
        return is_connected_adj(self.adjacency())

    def activated(self) -> frozenset:
        """Edges active now that were not part of G_s."""
        return self.active - self.original

    def with_active(self, active, round=None) -> "TemporalSnapshot":
        return TemporalSnapshot(self.n, frozenset(active), self.original,
                                self.round + 1 if round is None else round)

    # edge-list text: "n m" then m lines "u v"
    def to_text(self) -> str:
        lines = [f"{self.n} {len(self.active)}"]
        lines += [f"{u} {v}" for u, v in sorted(self.active)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TemporalSnapshot":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("uids:")]
        if not rows:
            raise UsageError("empty edge list")
        try:
            n, m = int(rows[0][0]), int(rows[0][1])
            edges = [(int(a), int(b)) for a, b in rows[1:]]
        except (ValueError, IndexError) as exc:
            raise UsageError(f"malformed edge list: {exc}") from None
        if len(edges) != m:
            raise UsageError(f"header says {m} edges, found {len(edges)}")
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise UsageError(f"bad edge {u} {v}")
        return cls.from_edges(n, edges)


def _check_node(snapshot: TemporalSnapshot, u: int):
    if not (0 <= u < snapshot.n):
        raise UsageError(f"node {u} out of range for n={snapshot.n}")


def neighbors_1(snapshot: TemporalSnapshot, u: int) -> set:
    _check_node(snapshot, u)
    return set(snapshot.adjacency()[u])


def neighbors_2(snapshot: TemporalSnapshot, u: int) -> set:
    _check_node(snapshot, u)
    adj = snapshot.adjacency()
    out = set()
    for v in adj[u]:
        out |= adj[v]
    out -= adj[u]
    out.discard(u)
    return out


@dataclass
class NodeActions:
    messages: list = field(default_factory=list)
    activations: set = field(default_factory=set)
    deactivations: set = field(default_factory=set)


class RoundActions(dict):
    """node -> NodeActions, the proposals of one round."""

    def _get(self, u) -> NodeActions:
        a = self.get(u)
        if a is None:
            a = self[u] = NodeActions()
        return a

    def send(self, u, target, payload):
        self._get(u).messages.append((target, payload))
        return self

    def activate(self, u, v):
        self._get(u).activations.add(edge(u, v))
        return self

    def deactivate(self, u, v):
        self._get(u).deactivations.add(edge(u, v))
        return self

    def validate(self, snapshot: TemporalSnapshot):
        adj = snapshot.adjacency()
        for u, a in self.items():
            _check_node(snapshot, u)
            for e in list(a.activations) + list(a.deactivations):
                if u not in e or e[0] == e[1]:
                    raise UsageError(f"node {u} proposed {e}, which it is not an endpoint of")
                _check_node(snapshot, e[0])
                _check_node(snapshot, e[1])
            for target, _ in a.messages:
                if target not in adj[u]:
                    raise UsageError(f"node {u} sent to non-neighbor {target}")

    def proposals(self):
        acts, deacts = [], []
        for u, a in self.items():
            for e in a.activations:
                acts.append((u, e[1] if e[0] == u else e[0]))
            for e in a.deactivations:
                deacts.append((u, e[1] if e[0] == u else e[0]))
        return acts, deacts


@dataclass(frozen=True)
class Rejection:
    round: int
    proposer: int
    pair: tuple
    kind: str  # "act" or "deact"
    reason: str


def plan_round(adj, acts, deacts, round_no=0):
    """Decide which proposals take effect against the current adjacency.

    acts / deacts are lists of (proposer, other endpoint).  Nothing is
    mutated; returns (accepted activations, accepted deactivations,
    rejections) with edges in canonical form and sorted.
    """
    a_by, d_by = {}, {}
    for u, v in acts:
        a_by.setdefault(edge(u, v), []).append(u)
    for u, v in deacts:
        d_by.setdefault(edge(u, v), []).append(u)
    rejections = []
    acc_a, acc_d = [], []
    for e in sorted(a_by):
        u, v = e
        if e in d_by:
            for p in a_by[e]:
                rejections.append(Rejection(round_no, p, e, "act", CONFLICT))
            continue
        au, av = adj[u], adj[v]
        if v in au:
            for p in a_by[e]:
                rejections.append(Rejection(round_no, p, e, "act", ALREADY_ACTIVE))
            continue
        if len(au) > len(av):
            au, av = av, au
        if any(w in av for w in au):
            acc_a.append(e)
        else:
            for p in a_by[e]:
                rejections.append(Rejection(round_no, p, e, "act", NOT_DISTANCE_2))
    for e in sorted(d_by):
        u, v = e
        if e in a_by:
            for p in d_by[e]:
                rejections.append(Rejection(round_no, p, e, "deact", CONFLICT))
            continue
        if v in adj[u]:
            acc_d.append(e)
        else:
            for p in d_by[e]:
                rejections.append(Rejection(round_no, p, e, "deact", NOT_ACTIVE))
    return acc_a, acc_d, rejections


def resolve_round(snapshot: TemporalSnapshot, actions: RoundActions):
    """E(i+1) = (E(i) | E_ac(i)) - E_dac(i).

    Returns (next snapshot, resolved activations, resolved deactivations,
    rejections).
    """
    actions.validate(snapshot)
    acts, deacts = actions.proposals()
    acc_a, acc_d, rej = plan_round(snapshot.adjacency(), acts, deacts, snapshot.round)
    active = (set(snapshot.active) | set(acc_a)) - set(acc_d)
    nxt = TemporalSnapshot(snapshot.n, frozenset(active), snapshot.original, snapshot.round + 1)
    return nxt, frozenset(acc_a), frozenset(acc_d), rej


def bfs_distances(adj, src) -> list:
    dist = [-1] * len(adj)
    dist[src] = 0
    dq = deque([src])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                dq.append(y)
    return dist
