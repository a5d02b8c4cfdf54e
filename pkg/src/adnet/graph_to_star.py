"""GraphToStar: committees are stars that merge towards larger UIDs.

Every committee is a star around its leader (the member with the largest
UID).  The protocol runs in phases of five rounds:

  slot 0  leaders announce (parent, activated-last-phase) to their neighbours;
          a committee hanging off another one either hops to its grandparent
          (pulling) or, when the parent is a root, prepares to merge into it;
          a root stays waiting while some committee attached itself to it in
          the previous phase
  slot 1  leaders tell their members the mode; members of a merging
          committee re-attach to the new leader
  slot 2  every node tells its neighbours its leader and whether that
          committee may be selected (only roots may)
  slot 3  members report the best foreign committee they see; a root in
          selection mode picks the largest UID above its own and starts
          linking to that leader (directly or over a bridge edge), or
          terminates when no foreign committee is left
  slot 4  bridge edges are swapped for the leader edge; terminating
          members drop everything but their star edge

Committee modes: selection, waiting, pulling, merging, termination.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Engine, ProtocolBug

PHASE = 5

SELECTION = "selection"
WAITING = "waiting"
PULLING = "pulling"
MERGING = "merging"
TERMINATION = "termination"
FOLLOWER = "follower"


class StarNode:
    def __init__(self, me, uid):
        self.me = me
        self.uid = uid
        self.leader = me
        self.leader_uid = uid
        self.is_leader = True
        self.parent = None        # leader this committee is attached to
        self.parent_uid = None
        self.act_prev = False     # leader linked to a parent in the previous phase
        self.act_now = False
        self.mode = SELECTION
        self.selectable = True    # my committee may be selected
        self.move_to = None       # (leader, uid) when merging
        self.best = None          # (uid, leader, contact)
        self.any_foreign = False
        self.bridge = None        # (contact, target leader) during a selection
        self.term = False

    # -- helpers
    def _phase_slot(self, ctx):
        r = ctx.round - 1
        return r // PHASE + 1, r % PHASE

    def _follow(self, ctx, ld, ld_uid):
        self.leader = ld
        self.leader_uid = ld_uid
        self.selectable = True
        ctx.annotate("leader", ld)

    # -- engine hooks
    def init(self, ctx):
        # alone in the network: no neighbouring committee, ever
        if not ctx.n1:
            self.mode = TERMINATION
            ctx.terminate()
            ctx.sleep()

    def send(self, ctx):
        phase, slot = self._phase_slot(ctx)
        if slot == 0:
            if self.is_leader:
                msg = ("S", self.parent, self.parent_uid, self.act_prev)
            else:
                # a committee that pointed at me now points at my leader
                msg = ("F", self.leader, self.leader_uid, False)
            for v in ctx.n1:
                ctx.send(v, msg)
        elif slot == 1:
            if self.is_leader:
                tgt = self.move_to
                msg = ("M", self.parent is None, tgt)
                for v in ctx.n1:
                    ctx.send(v, msg)
        elif slot == 2:
            msg = ("I", self.leader, self.leader_uid, self.selectable)
            for v in ctx.n1:
                ctx.send(v, msg)
        elif slot == 3:
            if not self.is_leader:
                ctx.send(self.leader, ("R", self.best, self.any_foreign, self.uid))
        elif slot == 4:
            if self.term:
                for v in ctx.n1:
                    ctx.send(v, ("T",))

    def act(self, ctx, inbox):
        phase, slot = self._phase_slot(ctx)
        if slot == 0:
            ctx.phase(phase)
            if self.is_leader:
                self._slot0(ctx, inbox)
        elif slot == 1:
            self._slot1(ctx, inbox)
        elif slot == 2:
            self._slot2(ctx, inbox)
        elif slot == 3:
            if self.is_leader:
                self._slot3(ctx, inbox)
        else:
            self._slot4(ctx, inbox)

    def _slot0(self, ctx, inbox):
        self.act_now = False
        self.move_to = None
        states = {s: m for s, m in inbox if m[0] in ("S", "F")}
        if self.parent is not None:
            p = self.parent
            st = states.get(p)
            if st is None:
                raise ProtocolBug(f"node {self.me}: no state from parent committee {p}")
            kind, gp, gp_uid, _ = st
            if gp is not None:
                # pulling: hop to the grandparent committee's leader
                if not ctx.is_neighbor(gp):
                    ctx.activate(gp)
                if not ctx.is_original(p):
                    ctx.deactivate(p)
                self.parent = gp
                self.parent_uid = gp_uid
                self.act_now = True
                self.mode = PULLING
            else:
                self.mode = MERGING
                self.move_to = (p, self.parent_uid)
            self.selectable = False
        else:
            attached = any(m[0] == "S" and m[1] == self.me and m[3] for m in states.values())
            self.mode = WAITING if attached else SELECTION
            self.selectable = True

    def _slot1(self, ctx, inbox):
        if self.is_leader:
            if self.mode == MERGING:
                p, p_uid = self.move_to
                self.is_leader = False
                self.mode = FOLLOWER
                self.parent = self.parent_uid = None
                self._follow(ctx, p, p_uid)
                self.move_to = None
            return
        for s, m in inbox:
            if s == self.leader and m[0] == "M":
                _, sel, tgt = m
                if tgt is not None:
                    t, t_uid = tgt
                    if not ctx.is_neighbor(t):
                        ctx.activate(t)
                    if not ctx.is_original(s):
                        ctx.deactivate(s)
                    self._follow(ctx, t, t_uid)
                else:
                    self.selectable = sel

    def _slot2(self, ctx, inbox):
        best = None
        foreign = False
        for s, m in inbox:
            if m[0] != "I":
                continue
            _, ld, ld_uid, sel = m
            if ld == self.leader:
                continue
            foreign = True
            if sel and (best is None or ld_uid > best[0] or (ld_uid == best[0] and s < best[2])):
                best = (ld_uid, ld, s)
        self.best = best
        self.any_foreign = foreign

    def _slot3(self, ctx, inbox):
        if self.mode != SELECTION:
            return
        foreign = self.any_foreign
        # candidates: (uid, prefer-direct, reporter uid, leader, contact, reporter)
        cands = []
        if self.best is not None:
            b = self.best
            cands.append((b[0], 1, 0, b[1], b[2], None))
        for s, m in inbox:
            if m[0] != "R":
                continue
            _, best, anyf, f_uid = m
            foreign = foreign or anyf
            if best is not None:
                cands.append((best[0], 0, -f_uid, best[1], best[2], s))
        if not foreign:
            self.term = True
            self.mode = TERMINATION
            return
        if not cands:
            return
        top = max(cands)
        if top[0] < self.uid:
            return
        v_uid, _, _, v, y, via = top
        self.parent = v
        self.parent_uid = v_uid
        self.act_now = True
        if ctx.is_neighbor(v):
            return
        if y == v or ctx.is_neighbor(y):
            # witness: the reporting member, or the contact itself
            ctx.activate(v)
            return
        ctx.activate(y)
        self.bridge = (y, v)

    def _slot4(self, ctx, inbox):
        if self.bridge is not None:
            y, v = self.bridge
            ctx.activate(v)
            ctx.deactivate(y)
            self.bridge = None
        if self.is_leader:
            self.act_prev = self.act_now
            if self.term:
                ctx.terminate()
                ctx.sleep()
            return
        for s, m in inbox:
            if m[0] == "T" and s == self.leader:
                for v in list(ctx.n1):
                    if v != self.leader:
                        ctx.deactivate(v)
                ctx.terminate()
                ctx.sleep()
                return


class GraphToStar:
    def __init__(self):
        self.nodes = {}

    def node(self, u, uid):
        nd = StarNode(u, uid)
        self.nodes[u] = nd
        return nd

    def leaders(self):
        return {u for u, nd in self.nodes.items() if nd.is_leader}

    def leader_map(self):
        return {u: nd.leader for u, nd in self.nodes.items()}


@dataclass
class RunResult:
    snapshot: object
    ledger: object
    trace: object
    program: object
    engine: object


def run_graph_to_star(g_s, uids, **kw) -> RunResult:
    prog = GraphToStar()
    eng = Engine(prog, g_s, uids, **kw)
    snap, led, tr = eng.run()
    return RunResult(snap, led, tr, prog, eng)
