"""Lock-step round engine.

Every round runs, for the scheduled nodes: send, receive, propose
activations/deactivations, then the proposals are resolved (activations
first, deactivations after) and the metrics are updated.

A node program is any object with ``init(ctx)``, ``send(ctx)`` and
``act(ctx, inbox)``.  The only window a node has onto the world is its
``Ctx``: own id/uid, the round counter, N1 and N2 id views and the inbox.
Nodes may go dormant with ``ctx.sleep()``; a dormant node is woken by an
incoming message, by a change on one of its incident edges or by a timer.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from .model import (
    TemporalSnapshot,
    UsageError,
    build_adjacency,
    edge,
    is_connected_adj,
    plan_round,
)


class NonTermination(RuntimeError):
    def __init__(self, msg, trace=None, ledger=None):
        super().__init__(msg)
        self.trace = trace
        self.ledger = ledger


class ProtocolBug(RuntimeError):
    def __init__(self, msg, trace=None, ledger=None):
        super().__init__(msg)
        self.trace = trace
        self.ledger = ledger


class LocalityError(ProtocolBug):
    pass


class TraceMismatch(UsageError):
    pass


def default_round_cap(n: int) -> int:
    lg = max(1, math.ceil(math.log2(max(n, 2))))
    return 64 * lg * lg


# ----------------------------------------------------------------------------
# metrics


class _DegreeTracker:
    """Degree per node plus a histogram so the running max is cheap."""

    def __init__(self, n):
        self.deg = [0] * n
        self.hist = {0: n} if n else {}
        self.max = 0

    def inc(self, u):
        d = self.deg[u]
        self.hist[d] -= 1
        self.deg[u] = d + 1
        self.hist[d + 1] = self.hist.get(d + 1, 0) + 1
        if d + 1 > self.max:
            self.max = d + 1

    def dec(self, u):
        d = self.deg[u]
        self.hist[d] -= 1
        self.deg[u] = d - 1
        self.hist[d - 1] = self.hist.get(d - 1, 0) + 1
        while self.max > 0 and self.hist.get(self.max, 0) == 0:
            self.max -= 1


@dataclass
class MetricsLedger:
    n: int
    rounds: int = 0
    phases: int = 0
    total_activations: int = 0
    max_activated_edges: int = 0
    max_activated_degree: int = 0
    terminated: bool = False
    # momentary values, taken after activations and before deactivations
    peak_edges: int = 0
    peak_activated_edges: int = 0
    peak_activated_degree: int = 0
    peak_degree: int = 0
    messages: int = 0
    last_change_round: int = 0
    max_node_activations: int = 0  # most edges one node activated in a single round
    history_activations: list = field(default_factory=list)
    history_activated_edges: list = field(default_factory=list)
    history_activated_degree: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "rounds": self.rounds,
            "phases": self.phases,
            "total_activations": self.total_activations,
            "max_activated_edges": self.max_activated_edges,
            "max_activated_degree": self.max_activated_degree,
            "terminated": self.terminated,
        }

    def extended_json(self) -> dict:
        d = self.to_json()
        d.update(
            peak_edges=self.peak_edges,
            peak_activated_edges=self.peak_activated_edges,
            peak_activated_degree=self.peak_activated_degree,
            peak_degree=self.peak_degree,
            messages=self.messages,
            last_change_round=self.last_change_round,
        )
        return d


# ----------------------------------------------------------------------------
# trace


@dataclass
class RoundRecord:
    round: int
    acts: list
    deacts: list
    msgc: int
    notes: list = field(default_factory=list)


@dataclass
class Trace:
    n: int
    records: list = field(default_factory=list)

    def to_text(self) -> str:
        out = []
        for rec in self.records:
            r = rec.round
            for u, v in rec.acts:
                out.append(f"{r} | ACT {u} {v}")
            for u, v in rec.deacts:
                out.append(f"{r} | DEACT {u} {v}")
            for u, key, val in rec.notes:
                out.append(f"{r} | NOTE {u} {key} {json.dumps(val)}")
            out.append(f"{r} | MSGC {rec.msgc}")
        return "\n".join(out) + ("\n" if out else "")

    @classmethod
    def from_text(cls, text: str, n: int) -> "Trace":
        recs = {}
        for ln in text.splitlines():
            if not ln.strip():
                continue
            try:
                rs, body = ln.split("|", 1)
                r = int(rs)
                parts = body.split()
                rec = recs.setdefault(r, RoundRecord(r, [], [], 0))
                kind = parts[0]
                if kind == "ACT":
                    rec.acts.append(edge(int(parts[1]), int(parts[2])))
                elif kind == "DEACT":
                    rec.deacts.append(edge(int(parts[1]), int(parts[2])))
                elif kind == "MSGC":
                    rec.msgc = int(parts[1])
                elif kind == "NOTE":
                    rec.notes.append((int(parts[1]), parts[2], json.loads(" ".join(parts[3:]))))
                else:
                    raise ValueError(kind)
            except (ValueError, IndexError):
                raise TraceMismatch(f"corrupted trace line: {ln!r}") from None
        return cls(n, [recs[r] for r in sorted(recs)])

    def notes_until(self, round_no):
        for rec in self.records:
            if rec.round > round_no:
                break
            yield from ((rec.round,) + tuple(nt) for nt in rec.notes)


def replay_iter(trace: Trace, g_s: TemporalSnapshot):
    if trace.n != g_s.n:
        raise TraceMismatch(f"trace is for n={trace.n}, graph has n={g_s.n}")
    adj = build_adjacency(g_s.n, g_s.active)
    active = set(g_s.active)
    yield g_s
    expect = g_s.round
    for rec in trace.records:
        if rec.round != expect:
            raise TraceMismatch(f"trace jumps to round {rec.round}, expected {expect}")
        expect += 1
        acc_a, acc_d, rej = plan_round(
            adj,
            [(u, v) for u, v in rec.acts],
            [(u, v) for u, v in rec.deacts],
        )
        if rej or len(acc_a) != len(set(rec.acts)) or len(acc_d) != len(set(rec.deacts)):
            raise TraceMismatch(f"round {rec.round}: recorded changes are not legal on this graph")
        for u, v in acc_a:
            adj[u].add(v)
            adj[v].add(u)
            active.add((u, v))
        for u, v in acc_d:
            adj[u].discard(v)
            adj[v].discard(u)
            active.discard((u, v))
        yield TemporalSnapshot(g_s.n, frozenset(active), g_s.original, rec.round + 1)


def replay(trace: Trace, g_s: TemporalSnapshot) -> list:
    """All snapshots [E(1), E(2), ...] reproduced from the trace."""
    return list(replay_iter(trace, g_s))


def ledger_from_trace(trace: Trace, g_s: TemporalSnapshot) -> MetricsLedger:
    """Independent fold of the three edge measures over a trace."""
    led = MetricsLedger(g_s.n)
    for snap in _skip_first(replay_iter(trace, g_s)):
        act = snap.active - snap.original
        deg = {}
        for u, v in act:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        led.history_activated_edges.append(len(act))
        led.history_activated_degree.append(max(deg.values(), default=0))
    for rec in trace.records:
        led.history_activations.append(len(rec.acts))
        led.messages += rec.msgc
    led.rounds = len(trace.records)
    led.total_activations = sum(led.history_activations)
    led.max_activated_edges = max(led.history_activated_edges, default=0)
    led.max_activated_degree = max(led.history_activated_degree, default=0)
    return led


def _skip_first(it):
    next(it)
    yield from it


# ----------------------------------------------------------------------------
# node context


class Ctx:
    __slots__ = ("me", "uid", "round", "_eng", "_acts", "_deacts", "_sleep", "_wake_at")

    def __init__(self, eng, me, uid):
        self._eng = eng
        self.me = me
        self.uid = uid
        self.round = 0
        self._acts = None
        self._deacts = None
        self._sleep = False
        self._wake_at = None

    @property
    def n(self):
        """Network size; only protocols that are allowed to know it may read it."""
        return self._eng.n

    @property
    def n1(self):
        a = self._eng.adj[self.me]
        return frozenset(a) if self._eng.strict else a

    @property
    def n2(self):
        adj = self._eng.adj
        mine = adj[self.me]
        out = set()
        for v in mine:
            out |= adj[v]
        out -= mine
        out.discard(self.me)
        return out

    def degree(self):
        return len(self._eng.adj[self.me])

    def is_neighbor(self, v):
        return v in self._eng.adj[self.me]

    def is_original(self, v):
        return edge(self.me, v) in self._eng.original

    def uid_of(self, v):
        eng = self._eng
        if eng.strict and v != self.me and v not in eng.adj[self.me] and v not in self.n2:
            raise LocalityError(f"node {self.me} asked for the uid of non-local node {v}")
        return eng.uids[v]

    def send(self, v, payload):
        eng = self._eng
        if v not in eng.adj[self.me]:
            raise LocalityError(f"node {self.me} sent to {v}, which is not in N1")
        box = eng._inbox.get(v)
        if box is None:
            eng._inbox[v] = [(self.me, payload)]
        else:
            box.append((self.me, payload))
        eng._msgc += 1

    def activate(self, v):
        if self._acts is None:
            self._acts = [v]
        else:
            self._acts.append(v)

    def deactivate(self, v):
        if self._deacts is None:
            self._deacts = [v]
        else:
            self._deacts.append(v)

    def sleep(self, until=None):
        """Go dormant until a message, an incident edge change or round `until`."""
        self._sleep = True
        self._wake_at = until

    def terminate(self):
        self._eng._set_done(self.me)

    def phase(self, k):
        if k > self._eng.ledger.phases:
            self._eng.ledger.phases = k

    def annotate(self, key, value):
        self._eng._notes.append((self.me, key, value))


# ----------------------------------------------------------------------------
# engine


class Engine:
    def __init__(self, program, g_s: TemporalSnapshot, uids, round_cap=None,
                 strict=False, check_connectivity=True, keep_trace=True):
        if len(uids) != g_s.n or len(set(uids)) != g_s.n:
            raise UsageError("uid assignment must be injective over all nodes")
        if not g_s.is_connected():
            raise UsageError("G_s must be connected")
        self.program = program
        self.n = g_s.n
        self.g_s = g_s
        self.uids = list(uids)
        self.adj = build_adjacency(g_s.n, g_s.active)
        self.original = g_s.original
        self.round_cap = default_round_cap(g_s.n) if round_cap is None else round_cap
        self.strict = strict
        self.check_connectivity = check_connectivity
        self.keep_trace = keep_trace
        self.ledger = MetricsLedger(self.n)
        self.trace = Trace(self.n)
        self.rejections = []
        self.done = [False] * self.n
        self._ndone = 0
        self._inbox = {}
        self._msgc = 0
        self._notes = []
        self._act_deg = _DegreeTracker(self.n)
        self._tot_deg = _DegreeTracker(self.n)
        self._n_act_edges = 0
        self._n_edges = len(g_s.active)
        for u, v in g_s.active:
            self._tot_deg.inc(u)
            self._tot_deg.inc(v)
        self.ctxs = [Ctx(self, u, self.uids[u]) for u in range(self.n)]
        self.procs = [program.node(u, self.uids[u]) for u in range(self.n)]
        self.awake = set(range(self.n))
        self._timers = []
        self.round = 0
        for u in range(self.n):
            c = self.ctxs[u]
            if hasattr(self.procs[u], "init"):
                self.procs[u].init(c)
            self._after_act(u, c)
        self._notes_init = self._notes
        self._notes = []

    # -- helpers
    def _set_done(self, u):
        if not self.done[u]:
            self.done[u] = True
            self._ndone += 1

    def _after_act(self, u, c):
        if c._sleep:
            self.awake.discard(u)
            if c._wake_at is not None:
                heapq.heappush(self._timers, (c._wake_at, u))
            c._sleep = False
            c._wake_at = None
        else:
            self.awake.add(u)

    def _locality_scan(self, u):
        proc = self.procs[u]
        bad = (Engine, Ctx, type(self.procs[u]))
        for name, val in vars(proc).items():
            items = [val]
            if isinstance(val, (list, tuple, set, frozenset)):
                items = list(val)
            elif isinstance(val, dict):
                items = list(val.values()) + list(val.keys())
            for it in items:
                if it is proc:
                    continue
                if isinstance(it, bad) or it is self.adj or it is self.uids:
                    raise LocalityError(f"node {u} holds a reference to shared state in {name!r}")

    def snapshot(self) -> TemporalSnapshot:
        active = frozenset((u, v) for u in range(self.n) for v in self.adj[u] if u < v)
        return TemporalSnapshot(self.n, active, self.original, self.round + 1)

    # -- main loop
    def step(self):
        r = self.round + 1
        self.round = r
        while self._timers and self._timers[0][0] <= r:
            _, u = heapq.heappop(self._timers)
            self.awake.add(u)
        ctxs, procs = self.ctxs, self.procs
        self._inbox = {}
        self._msgc = 0
        senders = sorted(self.awake)
        for u in senders:
            c = ctxs[u]
            c.round = r
            procs[u].send(c)
        inbox = self._inbox
        self._inbox = {}  # sends during act are a bug; Ctx.send would land here
        actors = set(self.awake)
        actors.update(inbox)
        acts, deacts = [], []
        per_node_max = 0
        for u in sorted(actors):
            c = ctxs[u]
            c.round = r
            procs[u].act(c, inbox.get(u, ()))
            if c._acts:
                per_node_max = max(per_node_max, len(set(c._acts)))
                acts.extend((u, v) for v in c._acts)
                c._acts = None
            if c._deacts:
                deacts.extend((u, v) for v in c._deacts)
                c._deacts = None
            self._after_act(u, c)
            if self.strict:
                self._locality_scan(u)
        if self._inbox:
            raise ProtocolBug(f"round {r}: messages sent during the act step", self.trace, self.ledger)
        acc_a, acc_d, rej = plan_round(self.adj, acts, deacts, r)
        if rej:
            self.rejections.extend(rej)
        self._apply(r, acc_a, acc_d, per_node_max)
        return acc_a, acc_d

    def _apply(self, r, acc_a, acc_d, per_node_max):
        adj, led, orig = self.adj, self.ledger, self.original
        ad, td = self._act_deg, self._tot_deg
        for u, v in acc_a:
            adj[u].add(v)
            adj[v].add(u)
            td.inc(u)
            td.inc(v)
            if (u, v) not in orig:
                ad.inc(u)
                ad.inc(v)
                self._n_act_edges += 1
        self._n_edges += len(acc_a)
        led.peak_edges = max(led.peak_edges, self._n_edges)
        led.peak_activated_edges = max(led.peak_activated_edges, self._n_act_edges)
        led.peak_activated_degree = max(led.peak_activated_degree, ad.max)
        led.peak_degree = max(led.peak_degree, td.max)
        for u, v in acc_d:
            adj[u].discard(v)
            adj[v].discard(u)
            td.dec(u)
            td.dec(v)
            if (u, v) not in orig:
                ad.dec(u)
                ad.dec(v)
                self._n_act_edges -= 1
        self._n_edges -= len(acc_d)
        led.rounds = r
        led.total_activations += len(acc_a)
        led.messages += self._msgc
        led.max_node_activations = max(led.max_node_activations, per_node_max)
        led.history_activations.append(len(acc_a))
        led.history_activated_edges.append(self._n_act_edges)
        led.history_activated_degree.append(ad.max)
        led.max_activated_edges = max(led.max_activated_edges, self._n_act_edges)
        led.max_activated_degree = max(led.max_activated_degree, ad.max)
        if acc_a or acc_d:
            led.last_change_round = r
        if self.keep_trace:
            self.trace.records.append(RoundRecord(r, list(acc_a), list(acc_d), self._msgc, self._notes))
        self._notes = []
        for u, v in acc_a:
            self.awake.add(u)
            self.awake.add(v)
        for u, v in acc_d:
            self.awake.add(u)
            self.awake.add(v)
        if acc_d and self.check_connectivity and not is_connected_adj(adj):
            raise ProtocolBug(f"round {r}: the active graph became disconnected", self.trace, led)

    def _empty_round(self):
        self.round += 1
        self._msgc = 0
        self._apply(self.round, [], [], 0)

    def run(self):
        if self.keep_trace and self._notes_init:
            # annotations made during init belong to round 0; fold them into round 1
            pending = self._notes_init
        else:
            pending = []
        while self._ndone < self.n:
            if self.round >= self.round_cap:
                self.ledger.terminated = False
                raise NonTermination(
                    f"no termination within {self.round_cap} rounds", self.trace, self.ledger)
            if not self.awake:
                if not self._timers:
                    raise NonTermination(
                        f"round {self.round}: every unfinished node is dormant with nothing pending",
                        self.trace, self.ledger)
                nxt = self._timers[0][0]
                while self.round + 1 < nxt and self.round < self.round_cap:
                    self._empty_round()
                if self.round >= self.round_cap:
                    continue
            if pending:
                self._notes = pending + self._notes
                pending = []
            self.step()
        if self.round == 0:
            # even a trivial instance spends one round deciding it is done
            self._notes = pending
            self._empty_round()
        self.ledger.terminated = True
        return self.snapshot(), self.ledger, self.trace


def run(program, g_s: TemporalSnapshot, uids, limits=None, **kw):
    """Run `program` on G_s until every node terminates.

    Returns (final snapshot, MetricsLedger, Trace).  `limits` is the round
    cap (default 64 * ceil(log2 n)^2).
    """
    eng = Engine(program, g_s, uids, round_cap=limits, **kw)
    return eng.run()
