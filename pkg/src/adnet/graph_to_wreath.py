"""GraphToWreath: committees are wreaths (a ring plus a complete tree over it).

Every committee keeps a ring, with a clockwise sense shared by its members,
and a complete binary tree rooted at its leader, the member with the largest
UID.  Phases are aligned: every phase has the same length, fixed from n, and
is split into windows:

  info       every node tells its neighbours its leader
  up         the best foreign committee is convergecast to the leader
  down       the leader's decision (select, stay, terminate) is broadcast
  request    the contact x of a selecting committee asks its neighbour y
  cancel     a singleton that heads a line of singletons withdraws its request
  incoming   incoming points tell their ring predecessor about it
  splice     accepted committees are spliced into the target's ring
  cut        the root of every merged group opens its ring into a line
  rebuild    the line-to-tree subroutine builds the new tree; the root
             broadcasts the new leader and the far end of the line walks up
             the tree to close the ring again

A committee that is both selected and selecting is spliced into its target
with its own incoming committees already inside it, so a whole tree of
committees becomes one ring in O(1) rounds.  Singletons have no ring to open;
chains of singletons form a plain line instead (each keeps its largest
singleton child), and a singleton that selected someone takes no ring
children.  Incoming points use the gap before them, or the gap after them when
they are the committee's own contact; a group that would land in the gap
already used by the neighbour is turned away for this phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import Engine, ProtocolBug
from .subroutines import LineTreeCore

SELECTION = "selection"
RING_MERGING = "ring-merging"
TREE_MERGING = "tree-merging"
TERMINATION = "termination"


class Schedule:
    """Round offsets inside a phase.  `window` bounds the depth of any committee tree."""

    def __init__(self, window, arity=2, rebuild=0):
        self.window = window
        self.arity = arity
        self.rebuild = rebuild
        self.up = 1
        self.down = 1 + window
        self.request = 1 + 2 * window
        self.cancel = self.request + 1
        self.incoming = self.request + 2
        self.splice = self.request + 3
        self.cut = max(self.splice + window, self.splice + 3)
        self.length = self.cut + 1 + rebuild

    def __repr__(self):
        return f"Schedule(window={self.window}, arity={self.arity}, rebuild={self.rebuild})"

    @classmethod
    def for_n(cls, n, arity=2, depth=None):
        if depth is None:
            depth = math.ceil(math.log2(max(n, 2)))
        w = depth + 1
        lg = math.ceil(math.log2(max(n, 2)))
        # line-to-tree needs about 5 rounds per doubling, then the new leader
        # goes down the tree and the far end walks up it
        return cls(w, arity, 6 * lg + 2 * w + 8)


def splice_plan(y, a, b, before, group):
    """Ring pointer changes when the segments in `group` enter the ring at y.

    `group` lists (x, e) per committee in splice order: its segment runs
    clockwise from its contact x to e (e == x for a singleton).  With
    `before` the segments go into the gap (a, y), a = ccw(y); otherwise
    into (y, b), b = cw(y).  A singleton y passes a = y.  Returns
    {node: {"cw": .., "ccw": ..}} with only the pointers that change.
    """
    upd = {}

    def put(u, k, v):
        upd.setdefault(u, {})[k] = v

    first, last = group[0][0], group[-1][1]
    if before:
        put(a, "cw", first)
        put(first, "ccw", a)
        put(last, "cw", y)
        put(y, "ccw", last)
    else:
        put(y, "cw", first)
        put(first, "ccw", y)
        put(last, "cw", b)
        put(b, "ccw", last)
    for (_, e1), (x2, _) in zip(group, group[1:]):
        put(e1, "cw", x2)
        put(x2, "ccw", e1)
    return upd


class WreathNode:
    def __init__(self, me, uid, sched: Schedule):
        self.me = me
        self.uid = uid
        self.sched = sched
        self.leader = me
        self.leader_uid = uid
        self.cw = None            # ring successor (None while a singleton)
        self.ccw = None
        self.tparent = None       # committee tree
        self.tkids = set()
        self.mode = SELECTION
        self.phase_no = 0
        self._reset()

    def _reset(self):
        self.nbr_single = {}
        self.best = None          # (uid, -y, x, y, leader)
        self.any_foreign = False
        self.reported = set()
        self.sent_up = False
        self.decision = None      # ("T",) / ("N",) / ("S", x, y, uid)
        self.down_pending = False
        self.out = None           # (y, target is a singleton) when I am the contact
        self.seg_end = None       # ccw end of my committee's segment
        self.accepted = None      # fate of my request
        self.out_accepted = False  # leader: my committee was taken by its target
        self.acc_up = None
        self.reqs = {}            # incoming point: x -> (uid, single, e)
        self.canceled = False
        self.line_child = None
        self.cw_inc = False
        self.replies = []         # (target, msg) to send in the splice round
        self.helper = None
        self.fwd_end = None       # (e, z): tell the end of my segment its successor
        self.core = None
        self.lct_own = set()
        self.root = False
        self.new_sent = False
        self.new_pending = None
        self.got_new = False
        self.walk = None          # ancestors still to climb, nearest first
        self.walk_edge = None
        self.close_pending = False
        self.closed = False

    # -- helpers
    def single(self):
        return self.cw is None and self.ccw is None and self.tparent is None and not self.tkids

    def _offset(self, ctx):
        r = ctx.round - 1
        L = self.sched.length
        return r // L + 1, r % L

    def _role_nbrs(self):
        keep = {self.cw, self.ccw, self.tparent}
        keep |= self.tkids
        keep.discard(None)
        return keep

    def _cleanup(self, ctx, keep):
        for v in list(ctx.n1):
            if v not in keep and not ctx.is_original(v):
                ctx.deactivate(v)

    def _set_leader(self, ctx, ld, ld_uid):
        if ld != self.leader:
            ctx.annotate("leader", ld)
        self.leader = ld
        self.leader_uid = ld_uid

    # -- engine hooks
    def init(self, ctx):
        # alone in the network: no neighbouring committee, ever
        if not ctx.n1:
            self.mode = TERMINATION
            ctx.terminate()
            ctx.sleep()

    def send(self, ctx):
        ph, k = self._offset(ctx)
        s = self.sched
        if k == 0:
            msg = ("I", self.leader, self.leader_uid, self.single())
            for v in ctx.n1:
                ctx.send(v, msg)
        elif s.up <= k < s.down:
            if (not self.sent_up and self.tparent is not None
                    and self.reported >= self.tkids):
                ctx.send(self.tparent, ("U", self.best, self.any_foreign))
                self.sent_up = True
        elif s.down <= k < s.request:
            if self.down_pending:
                for c in self.tkids:
                    ctx.send(c, ("D", self.decision))
                self.down_pending = False
        elif k == s.request:
            if self.out is not None:
                e = self.ccw if self.ccw is not None else self.me
                self.seg_end = e
                ctx.send(self.out[0], ("Q", self.leader_uid, self.single(), e))
        elif k == s.cancel:
            if self.canceled:
                ctx.send(self.out[0], ("C",))
        elif k == s.incoming:
            if self.reqs and self.cw is not None:
                ctx.send(self.ccw, ("INC",))
        elif s.splice <= k < s.cut:
            self._send_splice(ctx, k)
        elif k == s.cut:
            if self.root:
                if self.ccw is not None:
                    ctx.send(self.ccw, ("CUT",))
                if self.cw is not None:
                    ctx.send(self.cw, ("RK",))
        elif k > s.cut:
            self._send_rebuild(ctx)

    def act(self, ctx, inbox):
        ph, k = self._offset(ctx)
        s = self.sched
        if k == 0:
            self._phase_end(ctx)
            self._reset()
            self.phase_no = ph
            self.mode = SELECTION
            ctx.phase(ph)
            self._info(inbox)
            return
        if s.up <= k < s.down:
            self._up(ctx, inbox, k)
        elif s.down <= k < s.request:
            for _, m in inbox:
                if m[0] == "D":
                    self._take_decision(m[1])
        elif k == s.request:
            if self.decision[0] == "T":
                self._terminate(ctx)
                return
            self._requests(inbox)
        elif k == s.cancel:
            for x, m in inbox:
                if m[0] == "C":
                    self.reqs.pop(x, None)
        elif k == s.incoming:
            self.cw_inc = any(m[0] == "INC" and v == self.cw for v, m in inbox)
            self._decide(ctx)
        elif s.splice <= k < s.cut:
            self._act_splice(ctx, inbox, k)
        elif k == s.cut:
            self._act_cut(ctx, inbox)
        else:
            self._act_rebuild(ctx, inbox)
        self._doze(ctx, ph, k)

    def _doze(self, ctx, ph, k):
        """Sleep through rounds in which I have nothing to send; messages wake me."""
        s = self.sched
        base = (ph - 1) * s.length + 1
        if k < s.down:
            if self.tparent is not None and not self.sent_up:
                if self.reported >= self.tkids:
                    return
                ctx.sleep(base + s.request)
            elif self.leader == self.me and k < s.down - 1:
                ctx.sleep(base + s.down - 1)
            elif self.leader != self.me:
                ctx.sleep(base + s.request)
        elif k < s.request:
            if not self.down_pending:
                ctx.sleep(base + s.request)
        elif k > s.cut:
            core = self.core
            if (core.has_work() or self.new_pending is not None or self.walk
                    or self.close_pending):
                return
            if self.root and core.quiet and not self.got_new:
                return
            ctx.sleep(base + s.length)

    # -- selection
    def _info(self, inbox):
        best = None
        for v, m in inbox:
            if m[0] != "I":
                continue
            _, ld, luid, sg = m
            self.nbr_single[v] = sg
            if ld == self.leader:
                continue
            self.any_foreign = True
            cand = (luid, -v, self.me, v, ld)
            if best is None or cand > best:
                best = cand
        self.best = best

    def _up(self, ctx, inbox, k):
        for v, m in inbox:
            if m[0] != "U":
                continue
            _, b, anyf = m
            self.reported.add(v)
            self.any_foreign = self.any_foreign or anyf
            if b is not None and (self.best is None or b > self.best):
                self.best = b
        if self.leader == self.me and k == self.sched.down - 1:
            if self.reported < self.tkids:
                raise ProtocolBug(f"node {self.me}: convergecast did not finish in the window")
            if not self.any_foreign:
                dec = ("T",)
            elif self.best is not None and self.best[0] > self.leader_uid:
                dec = ("S", self.best[2], self.best[3], self.best[0])
            else:
                dec = ("N",)
            self._take_decision(dec)

    def _take_decision(self, dec):
        self.decision = dec
        self.down_pending = bool(self.tkids)
        if dec[0] == "S" and dec[1] == self.me:
            self.out = (dec[2], self.nbr_single.get(dec[2], False))
        if dec[0] == "T":
            self.mode = TERMINATION

    def _terminate(self, ctx):
        # only the tree survives, original edges included
        keep = {self.tparent} | self.tkids
        for v in list(ctx.n1):
            if v not in keep:
                ctx.deactivate(v)
        ctx.terminate()
        ctx.sleep()

    def _requests(self, inbox):
        for x, m in inbox:
            if m[0] == "Q":
                _, luid, sg, e = m
                self.reqs[x] = (luid, sg, e)
        if self.single():
            kids = [(luid, x) for x, (luid, sg, _) in self.reqs.items() if sg]
            if kids:
                self.line_child = max(kids)[1]
            if self.out is not None and self.line_child is not None and not self.out[1]:
                # heading a line of singletons beats joining a ring
                self.canceled = True

    def _decide(self, ctx):
        """Incoming point: accept or turn away the committees that asked me."""
        if not self.reqs:
            return
        order = sorted(self.reqs, key=lambda x: (self.reqs[x][0], x))
        rep = self.replies
        if self.single():
            if self.line_child is not None:
                c = self.line_child
                rep.append((c, ("A", self.me, None, True)))
                self.cw = c
                rep.extend((x, ("R",)) for x in order if x != c)
                return
            if self.out is not None:
                rep.extend((x, ("R",)) for x in order)
                return
            before, a, b = True, self.me, None
        else:
            before = self.out is None
            if not before and self.cw_inc:
                rep.extend((x, ("R",)) for x in order)
                return
            a, b = self.ccw, self.cw
        group = [(x, self.reqs[x][2]) for x in order]
        upd = splice_plan(self.me, a, b, before, group)
        for x, e in group:
            rep.append((x, ("A", upd[x]["ccw"], upd[e]["cw"], False)))
        mine = upd.pop(self.me)
        self.cw = mine.get("cw", self.cw)
        self.ccw = mine.get("ccw", self.ccw)
        if before and a != self.me:
            rep.append((a, ("SW", upd[a]["cw"])))
        elif not before:
            rep.append((b, ("SC", upd[b]["ccw"])))
        self.mode = RING_MERGING

    # -- splice
    def _send_splice(self, ctx, k):
        s = self.sched
        if k == s.splice:
            for t, m in self.replies:
                ctx.send(t, m)
            self.replies = []
        elif k == s.splice + 1:
            if self.fwd_end is not None:
                e, z = self.fwd_end
                ctx.send(e, ("SW2", z))
                self.fwd_end = None
        if self.acc_up is not None and self.tparent is not None:
            ctx.send(self.tparent, ("AU", self.acc_up))
            self.acc_up = None

    def _act_splice(self, ctx, inbox, k):
        s = self.sched
        for v, m in inbox:
            tag = m[0]
            if tag == "A":
                _, prev, nxt, line = m
                self.accepted = True
                self.ccw = prev
                if not line:
                    self._splice_self(ctx, nxt)
            elif tag == "R":
                self.accepted = False
            elif tag == "SW":
                self.cw = m[1]
                if m[1] != self.me and not ctx.is_neighbor(m[1]):
                    ctx.activate(m[1])
            elif tag == "SC":
                self.ccw = m[1]
            elif tag == "SW2":
                self.cw = m[1]
                if m[1] != self.me and not ctx.is_neighbor(m[1]):
                    ctx.activate(m[1])
            elif tag == "AU":
                self._acc_report(m[1])
        if k == s.splice and self.out is not None:
            self._acc_report(bool(self.accepted))
        if k == s.splice + 1 and self.helper is not None:
            ctx.deactivate(self.helper)
            self.helper = None
        if k == s.splice + 2:
            self._cleanup(ctx, self._role_nbrs())
        if k == s.cut - 1:
            self.root = self.leader == self.me and not self.out_accepted

    def _splice_self(self, ctx, nxt):
        """I am the contact x of an accepted committee; my segment ends at e."""
        self.mode = RING_MERGING
        e = self.seg_end
        if e == self.me:
            self.cw = nxt
            if nxt != self.me and not ctx.is_neighbor(nxt):
                ctx.activate(nxt)
            return
        if not ctx.is_neighbor(nxt):
            ctx.activate(nxt)
            self.helper = nxt
        self.fwd_end = (e, nxt)

    def _acc_report(self, ok):
        if self.leader == self.me:
            self.out_accepted = ok
        else:
            self.acc_up = ok

    # -- cut and rebuild
    def _act_cut(self, ctx, inbox):
        rk = False
        for v, m in inbox:
            if m[0] == "CUT":
                self.cw = None
            elif m[0] == "RK":
                rk = True
        if self.root:
            self.ccw = None
        self.tparent = None
        self.tkids = set()
        self._cleanup(ctx, self._role_nbrs())
        self.mode = TREE_MERGING
        kids = [self.cw] if self.cw is not None else []
        self.core = LineTreeCore(self.me, self.ccw, kids, self.me if self.root else None,
                                 self.sched.arity, parent_is_root=rk)
        self.core.wake()

    def _send_rebuild(self, ctx):
        core = self.core
        if core is None:
            return
        core.pre_send()
        out, core.outbox = core.outbox, []
        for target, msg in out:
            if ctx.is_neighbor(target):
                ctx.send(target, ("L", msg))
        if self.new_pending is not None:
            for c in self.tkids:
                ctx.send(c, self.new_pending)
            self.new_pending = None
        if self.close_pending:
            ctx.send(self.cw, ("CLOSE",))
            self.close_pending = False
            self.closed = True

    def _act_rebuild(self, ctx, inbox):
        core = self.core
        if core is None:
            return
        for v, m in inbox:
            tag = m[0]
            if tag == "L":
                core.on_message(v, m[1])
            elif tag == "NEW":
                _, ld, ld_uid, anc = m
                self._adopt(ctx, ld, ld_uid, anc)
            elif tag == "CLOSE":
                self.ccw = v
                self.closed = True
        core.execute()
        core.advance()
        for v in core.links:
            if not ctx.is_neighbor(v):
                ctx.activate(v)
                self.lct_own.add(v)
        for v in core.unlinks:
            if v in self.lct_own:
                self.lct_own.discard(v)
                if v not in (self.cw, self.ccw):
                    ctx.deactivate(v)
        core.links, core.unlinks = [], []
        if self.root and core.quiet and not self.got_new:
            self._adopt(ctx, self.me, self.uid, [])
        if self.walk:
            self._step_walk(ctx)

    def _adopt(self, ctx, ld, ld_uid, anc):
        core = self.core
        self.got_new = True
        self._set_leader(ctx, ld, ld_uid)
        self.tparent = core.parent
        self.tkids = set(core.kids)
        self.lct_own &= self._role_nbrs()
        path = anc + [self.me]
        if self.tkids:
            self.new_pending = ("NEW", ld, ld_uid, path)
        if self.cw is None and not self.root:
            # far end of the line: climb to the root to close the ring
            self.walk = list(reversed(anc[:-1]))
            self.walk_edge = None
            if not self.walk:
                self.cw = ld
                self.close_pending = True
        if not self.root and self.walk is None:
            self.closed = True
        elif self.root and not self.tkids:
            self.closed = True

    def _step_walk(self, ctx):
        t = self.walk.pop(0)
        if not ctx.is_neighbor(t):
            ctx.activate(t)
            new_edge = t
        else:
            new_edge = None
        old = self.walk_edge
        if old is not None and old not in self._role_nbrs():
            ctx.deactivate(old)
        self.walk_edge = new_edge
        if not self.walk:
            self.cw = t
            self.walk_edge = None
            self.close_pending = True

    def _phase_end(self, ctx):
        if self.core is None:
            return
        if not self.got_new or not self.closed or self.walk or self.close_pending:
            raise ProtocolBug(f"node {self.me}: tree rebuild did not finish within the phase")
        self.core = None
        # for the shape check at phase boundaries
        ctx.annotate("wreath", (self.ccw, self.cw, self.tparent))


class GraphToWreath:
    """Program object; `arity` 2 gives the binary wreath."""

    def __init__(self, n=None, arity=2, schedule=None):
        self.n = n
        self.arity = arity
        self.schedule = schedule
        self.nodes = {}

    def node(self, u, uid):
        if self.schedule is None:
            raise ProtocolBug("GraphToWreath needs n (or a schedule) before the run")
        nd = WreathNode(u, uid, self.schedule)
        self.nodes[u] = nd
        return nd

    def bind(self, n):
        self.n = n
        if self.schedule is None:
            self.schedule = Schedule.for_n(n, self.arity)
        return self

    def leaders(self):
        return {u for u, nd in self.nodes.items() if nd.leader == u}

    def leader_map(self):
        return {u: nd.leader for u, nd in self.nodes.items()}


@dataclass
class RunResult:
    snapshot: object
    ledger: object
    trace: object
    program: object
    engine: object


def run_graph_to_wreath(g_s, uids, **kw) -> RunResult:
    prog = GraphToWreath().bind(g_s.n)
    eng = Engine(prog, g_s, uids, **kw)
    snap, led, tr = eng.run()
    return RunResult(snap, led, tr, prog, eng)
