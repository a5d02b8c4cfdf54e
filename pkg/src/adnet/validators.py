"""Outcome checks for Depth-d Tree and Token Dissemination, plus committee views.

Validators return verdicts, they do not raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Engine, NonTermination, ProtocolBug
from .model import TemporalSnapshot, bfs_distances, edge, is_connected_adj


@dataclass
class Verdict:
    ok: bool
    reasons: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "reasons": list(self.reasons), **self.details}


def tree_parents(snapshot: TemporalSnapshot, root):
    """BFS parents of the active graph from root (None for the root)."""
    adj = snapshot.adjacency()
    par = {root: None}
    order = [root]
    for x in order:
        for y in sorted(adj[x]):
            if y not in par:
                par[y] = x
                order.append(y)
    return par


def validate_depth_d_tree(snapshot: TemporalSnapshot, d, root=None, uids=None, leaders=None) -> Verdict:
    """Is the active graph a spanning tree of depth <= d rooted at the unique leader?

    `leaders` is the set of nodes whose status says Leader; `uids`, when
    given, pins the root to the max-UID node.
    """
    n = snapshot.n
    reasons = []
    adj = snapshot.adjacency()
    m = len(snapshot.active)
    if leaders is not None:
        leaders = set(leaders)
        if len(leaders) != 1:
            reasons.append(f"{len(leaders)} nodes claim Leader")
        elif root is None:
            root = next(iter(leaders))
        elif root not in leaders:
            reasons.append(f"root {root} is not the claimed leader")
    if root is None:
        root = max(range(n), key=lambda u: uids[u]) if uids is not None else 0
    if uids is not None and uids[root] != max(uids):
        reasons.append("root is not the max-UID node")
    connected = is_connected_adj(adj)
    if not connected:
        reasons.append("active graph does not span")
    if m != n - 1:
        reasons.append(f"{m} active edges, a tree needs {n - 1}")
    dist = bfs_distances(adj, root)
    depth = max(dist) if connected else -1
    if connected and depth > d:
        reasons.append(f"depth {depth} exceeds {d}")
    return Verdict(not reasons, reasons, {"depth": depth, "edges": m, "root": root,
                                          "is_tree": connected and m == n - 1})


def level_sizes(snapshot: TemporalSnapshot, root):
    dist = bfs_distances(snapshot.adjacency(), root)
    sizes = {}
    for x in dist:
        sizes[x] = sizes.get(x, 0) + 1
    return [sizes[k] for k in sorted(sizes)]


def validate_complete_tree(snapshot: TemporalSnapshot, root, arity=2) -> Verdict:
    """Complete arity-ary tree: every level full except the last, fan-out <= arity."""
    base = validate_depth_d_tree(snapshot, snapshot.n, root=root)
    reasons = list(base.reasons)
    if base.ok:
        par = tree_parents(snapshot, root)
        kids = {}
        for x, p in par.items():
            if p is not None:
                kids[p] = kids.get(p, 0) + 1
        fan = max(kids.values(), default=0)
        if fan > arity:
            reasons.append(f"a node has {fan} children, arity is {arity}")
        sizes = level_sizes(snapshot, root)
        for k, s in enumerate(sizes[:-1]):
            if s != arity ** k:
                reasons.append(f"level {k} holds {s} nodes, a complete tree holds {arity ** k}")
                break
    return Verdict(not reasons, reasons, dict(base.details))


# ----------------------------------------------------------------------------
# token dissemination epilogue


class _TokenNode:
    """Convergecast up the tree, then broadcast the full set back down."""

    def __init__(self, me, uid, parent, kids, stop_round):
        self.me = me
        self.parent = parent
        self.kids = set(kids)
        self.known = {uid}
        self.heard = set()
        self.sent_up = False
        self.full = False
        self.sent_down = False
        self.stop_round = stop_round

    def send(self, ctx):
        if self.stop_round is not None and ctx.round > self.stop_round:
            return
        if not self.sent_up and self.heard >= self.kids and self.parent is not None:
            ctx.send(self.parent, ("up", sorted(self.known)))
            self.sent_up = True
        if self.full and not self.sent_down:
            for k in self.kids:
                ctx.send(k, ("down", sorted(self.known)))
            self.sent_down = True

    def act(self, ctx, inbox):
        if self.stop_round is not None and ctx.round > self.stop_round:
            ctx.terminate()
            ctx.sleep()
            return
        for sender, (kind, toks) in inbox:
            self.known.update(toks)
            if kind == "up":
                self.heard.add(sender)
            else:
                self.full = True
        if self.parent is None and self.heard >= self.kids:
            self.full = True
        if self.full and (self.sent_down or not self.kids):
            ctx.terminate()
            ctx.sleep()


class TokenEpilogue:
    def __init__(self, parents, uids, stop_round=None):
        self.parents = parents
        self.uids = uids
        self.kids = {}
        for x, p in parents.items():
            if p is not None:
                self.kids.setdefault(p, set()).add(x)
        self.stop_round = stop_round
        self.nodes = {}

    def node(self, u, uid):
        nd = _TokenNode(u, uid, self.parents[u], self.kids.get(u, ()), self.stop_round)
        self.nodes[u] = nd
        return nd


def disseminate(snapshot: TemporalSnapshot, root, uids, rounds=None):
    """Run the epilogue over the tree in `snapshot`; returns (received sets, rounds used).

    With `rounds` given the nodes stop after that many rounds, finished or not.
    """
    par = tree_parents(snapshot, root)
    prog = TokenEpilogue(par, uids, rounds)
    eng = Engine(prog, snapshot, uids, round_cap=4 * snapshot.n + 8)
    try:
        _, led, _ = eng.run()
        used = led.rounds
    except (NonTermination, ProtocolBug):
        used = eng.round
    return {u: set(nd.known) for u, nd in prog.nodes.items()}, used


def validate_token_dissemination(received, uids) -> Verdict:
    everything = set(uids)
    missing = {u: len(everything - s) for u, s in received.items() if s != everything}
    if len(received) != len(uids):
        return Verdict(False, ["not every node reported"], {})
    if missing:
        worst = max(missing.values())
        return Verdict(False, [f"{len(missing)} nodes miss tokens (worst: {worst} missing)"],
                       {"incomplete": len(missing)})
    return Verdict(True, [], {"incomplete": 0})


# ----------------------------------------------------------------------------
# committees


@dataclass
class CommitteeView:
    leader_of: dict                 # node -> leader node
    members: dict                   # leader -> set of nodes
    problems: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.members)

    def sizes(self):
        return {ld: len(ms) for ld, ms in self.members.items()}


def leaders_at(trace, round_no, n):
    """Fold the per-node "leader" notes of a trace up to a round."""
    leader_of = {u: u for u in range(n)}
    for _, u, key, val in trace.notes_until(round_no):
        if key == "leader":
            leader_of[u] = val
    return leader_of


def derive_committees(leader_of, uids, snapshot=None, shape=None) -> CommitteeView:
    """Partition by leader and check leader = max UID (and the gadget shape if asked)."""
    members = {}
    for u, ld in leader_of.items():
        members.setdefault(ld, set()).add(u)
    view = CommitteeView(dict(leader_of), members)
    for ld, ms in members.items():
        if leader_of.get(ld) != ld:
            view.problems.append(f"leader {ld} of {len(ms)} nodes follows {leader_of.get(ld)}")
            continue
        top = max(ms, key=lambda x: uids[x])
        if top != ld:
            view.problems.append(f"committee of {ld} contains the larger uid at {top}")
    if shape == "star" and snapshot is not None:
        view.problems.extend(star_shape_problems(view, snapshot))
    return view


def star_shape_problems(view: CommitteeView, snapshot: TemporalSnapshot):
    """Activated edges inside a committee must all touch its leader, and every member must."""
    adj = snapshot.adjacency()
    out = []
    for u, v in snapshot.active - snapshot.original:
        lu, lv = view.leader_of[u], view.leader_of[v]
        if lu == lv and u != lu and v != lu:
            out.append(f"activated edge {u}-{v} between two followers of {lu}")
    for ld, ms in view.members.items():
        for x in ms:
            if x != ld and ld not in adj[x]:
                out.append(f"member {x} not adjacent to its leader {ld}")
    return out


def shape_notes_at(trace, round_no, key="wreath"):
    """Latest per-node shape note (ccw, cw, parent) recorded up to a round."""
    out = {}
    for _, u, k, val in trace.notes_until(round_no):
        if k == key:
            out[u] = tuple(val)
    return out


def wreath_shape_problems(view: CommitteeView, snapshot: TemporalSnapshot, shape, arity=2):
    """Each committee must be a ring plus a complete tree at its leader, and nothing else.

    `shape` maps a node to (ccw, cw, tree parent).  A singleton has no ring;
    a pair uses its one edge as ring and tree.
    """
    out = []
    adj = snapshot.adjacency()
    want = set()
    for ld, ms in view.members.items():
        k = len(ms)
        ring = {x: shape.get(x, (None, None, None)) for x in ms}
        if k == 1:
            if ring[ld][:2] != (None, None):
                out.append(f"singleton {ld} has ring pointers")
        else:
            for x, (ccw, cw, _) in ring.items():
                if cw not in ms or ccw not in ms or ring[cw][0] != x:
                    out.append(f"ring pointers of {x} in committee {ld} do not match")
                    break
            else:
                seen, x = set(), ld
                while x not in seen:
                    seen.add(x)
                    want.add(edge(x, ring[x][1]))
                    x = ring[x][1]
                if seen != ms:
                    out.append(f"ring of committee {ld} covers {len(seen)} of {k} nodes")
        kids = {}
        for x in ms:
            p = ring[x][2]
            if x == ld:
                if p is not None:
                    out.append(f"leader {ld} has a tree parent")
                continue
            if p not in ms:
                out.append(f"tree parent of {x} is outside committee {ld}")
                continue
            kids.setdefault(p, []).append(x)
            want.add(edge(x, p))
        depth = {ld: 0}
        stack = [ld]
        while stack:
            x = stack.pop()
            for c in kids.get(x, ()):
                depth[c] = depth[x] + 1
                stack.append(c)
        if len(depth) != k:
            out.append(f"tree of committee {ld} reaches {len(depth)} of {k} nodes")
            continue
        if max((len(c) for c in kids.values()), default=0) > arity:
            out.append(f"tree of committee {ld} exceeds arity {arity}")
        levels = {}
        for d in depth.values():
            levels[d] = levels.get(d, 0) + 1
        top = max(levels)
        if any(levels[d] != arity ** d for d in range(top)):
            out.append(f"tree of committee {ld} is not complete")
    for e in want:
        if e[1] not in adj[e[0]]:
            out.append(f"gadget edge {e[0]}-{e[1]} is not active")
    for e in snapshot.active - snapshot.original:
        if e not in want:
            out.append(f"activated edge {e[0]}-{e[1]} is neither ring nor tree")
    return out
