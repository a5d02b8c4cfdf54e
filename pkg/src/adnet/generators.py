"""Instance families: lines, rings, trees and random connected graphs.

Every generator is deterministic in its seed.  UIDs are distinct positive
integers; the uid policy decides how they are laid over the nodes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import TemporalSnapshot, UsageError, edge

FAMILIES = ("line", "ring", "increasing-ring", "random-tree", "random-connected")
UID_POLICIES = ("random", "increasing", "given")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n: int
    seed: int = 0
    uid_policy: str = "random"
    max_degree: int = 4
    uids: tuple | None = None  # used by the "given" policy

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}; pick one of {', '.join(FAMILIES)}")
        if self.uid_policy not in UID_POLICIES:
            raise UsageError(f"unknown uid policy {self.uid_policy!r}")
        if self.n < 1:
            raise UsageError("n must be at least 1")
        if self.family == "random-connected" and self.max_degree < 2 and self.n > 2:
            raise UsageError("a connected graph on more than 2 nodes needs max_degree >= 2")
        if self.uid_policy == "given":
            if self.uids is None or len(self.uids) != self.n or len(set(self.uids)) != self.n:
                raise UsageError("the given uid list must hold n distinct values")


def _line(n):
    return [(i, i + 1) for i in range(n - 1)]


def _ring(n):
    if n <= 2:
        return _line(n)
    return _line(n) + [(0, n - 1)]


def _random_tree(n, rng):
    # random recursive tree over a shuffled labelling
    perm = list(range(n))
    rng.shuffle(perm)
    es = []
    for i in range(1, n):
        j = rng.randrange(i)
        es.append(edge(perm[i], perm[j]))
    return es


def _random_connected(n, max_degree, rng):
    """Random spanning tree with capped degree, then extra edges while there is room."""
    if n == 1:
        return []
    perm = list(range(n))
    rng.shuffle(perm)
    deg = [0] * n
    es = set()
    open_nodes = [perm[0]]  # nodes that can still take an edge
    for i in range(1, n):
        u = perm[i]
        k = rng.randrange(len(open_nodes))
        v = open_nodes[k]
        es.add(edge(u, v))
        deg[u] += 1
        deg[v] += 1
        if deg[v] >= max_degree:
            open_nodes[k] = open_nodes[-1]
            open_nodes.pop()
        if deg[u] < max_degree:
            open_nodes.append(u)
        if not open_nodes and i < n - 1:
            raise UsageError("degree cap too small to span the graph")
    # about n/2 extra edges, each only if both ends still have room
    for _ in range(n // 2):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or deg[u] >= max_degree or deg[v] >= max_degree:
            continue
        e = edge(u, v)
        if e in es:
            continue
        es.add(e)
        deg[u] += 1
        deg[v] += 1
    return sorted(es)


def generate(spec: InstanceSpec):
    """Build (G_s, uids) for an instance spec."""
    rng = random.Random(spec.seed)
    n = spec.n
    fam = spec.family
    if fam == "line":
        es = _line(n)
    elif fam in ("ring", "increasing-ring"):
        es = _ring(n)
    elif fam == "random-tree":
        es = _random_tree(n, rng)
    else:
        es = _random_connected(n, spec.max_degree, rng)
    g = TemporalSnapshot.from_edges(n, es)

    if spec.uid_policy == "given":
        uids = list(spec.uids)
    elif fam == "increasing-ring":
        # smallest uid at a random start, increasing clockwise (0 -> 1 -> ... -> n-1 -> 0)
        start = rng.randrange(n)
        uids = [0] * n
        for k in range(n):
            uids[(start + k) % n] = k + 1
    elif spec.uid_policy == "increasing":
        uids = list(range(1, n + 1))
    else:
        uids = list(range(1, n + 1))
        rng.shuffle(uids)
    return g, uids


def instance_text(g: TemporalSnapshot, uids) -> str:
    return g.to_text() + "uids: " + " ".join(str(x) for x in uids) + "\n"


def parse_instance(text: str):
    uids = None
    for ln in text.splitlines():
        if ln.startswith("uids:"):
            try:
                uids = [int(x) for x in ln[5:].split()]
            except ValueError:
                raise UsageError("malformed uids line") from None
    g = TemporalSnapshot.from_text(text)
    if uids is None:
        uids = list(range(1, g.n + 1))
    if len(uids) != g.n or len(set(uids)) != g.n:
        raise UsageError("uids line must list n distinct values")
    return g, uids
