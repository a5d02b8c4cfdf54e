"""Tree and line reconfiguration subroutines.

TreeToStar: every node hops to its grandparent until it hangs off the root.

LineToCompleteBinaryTree / LineToCompletePolylogarithmicTree: every node
hops to its grandparent until it reaches the root or its grandparent
already has `arity` children.  The synchronous and asynchronous variants
share one node core.  The core simulates the synchronous schedule step by
step; a node computes step t+1 as soon as the step-t facts it depends on
have reached it (its parent's child count, its grandparent's child count
relayed by the parent, and its children's reports).  With every node awake
from round 0 this is the synchronous algorithm; with staggered wake-up it is
the asynchronous one, and the final edge set is the same either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .engine import ProtocolBug


@dataclass
class OrientedTreeState:
    parent: int | None
    children: set = field(default_factory=set)
    root: bool = False


def orient_tree(n, edges, root):
    """Parent/children views for a tree given as an edge list."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    states = [OrientedTreeState(None) for _ in range(n)]
    states[root].root = True
    seen = [False] * n
    seen[root] = True
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                states[y].parent = x
                states[x].children.add(y)
                stack.append(y)
    if not all(seen):
        raise ValueError("edges do not span a tree")
    return states


# ----------------------------------------------------------------------------
# TreeToStar


class _TreeToStarNode:
    def __init__(self, me, parent, root):
        self.me = me
        self.parent = parent
        self.root = root

    def init(self, ctx):
        if self.parent is None:
            ctx.terminate()
            ctx.sleep()

    def send(self, ctx):
        # tell the children who my parent is; they hop there this round
        if self.parent is None:
            return
        for v in ctx.n1:
            if v != self.parent:
                ctx.send(v, ("gp", self.parent))

    def act(self, ctx, inbox):
        if self.parent is None:
            ctx.sleep()
            return
        if self.parent == self.root:
            ctx.terminate()
            ctx.sleep()
            return
        gp = None
        for sender, msg in inbox:
            if sender == self.parent and msg[0] == "gp":
                gp = msg[1]
        if gp is None:
            raise ProtocolBug(f"node {self.me}: no word from parent {self.parent}")
        ctx.activate(gp)
        ctx.deactivate(self.parent)
        self.parent = gp
        if gp == self.root:
            ctx.terminate()
            ctx.sleep()


class TreeToStar:
    """Program turning an oriented rooted tree into a star at the root.

    Nodes know the root's id (it is the tree's leader); this lets a node
    stop in the very round it attaches to the root.
    """

    def __init__(self, states, root):
        self.states = states
        self.root = root

    @classmethod
    def from_edges(cls, n, edges, root):
        return cls(orient_tree(n, edges, root), root)

    def node(self, u, uid):
        return _TreeToStarNode(u, self.states[u].parent, self.root)


tree_to_star_step = _TreeToStarNode


# ----------------------------------------------------------------------------
# line to complete tree: the shared node core


class LineTreeCore:
    """One node of the (a)synchronous line-to-complete-tree subroutine.

    Notation: after step t a node has parent P_t, child count cnt_t, is
    `active` if it may still hop, and `a_t` of its children are active.
    Messages (all along current tree edges):
      HELLO(t)          sender woke up, or just arrived as a child at step t
      CNT(t, c)         parent -> children: my child count after step t
      PAR(t, g, cg, r)  parent -> children: my parent after step t, its count,
                        and whether it is the root
      REP(t, a, quiet)  child -> parent: a_t, and whether my subtree is final
      HOP(t)            child -> old parent: I move to your parent this round
    The host owns the physical edges: after each call it applies `links`
    and `unlinks` and delivers `outbox` in its next send step.
    """

    def __init__(self, me, parent, kids, root, arity, parent_is_root=None):
        self.me = me
        self.arity = arity
        self.is_root = me == root
        self.s = 0
        self.parent = parent
        if parent_is_root is None:
            parent_is_root = parent is not None and parent == root
        self.parent_is_root = parent_is_root
        self.active = parent is not None and not parent_is_root
        self.settled_at = None if self.active else 0
        self.kids = {k: (not self.is_root) for k in kids}
        self.cnt = len(self.kids)
        self.a = sum(1 for v in self.kids.values() if v)
        self.frozen_kids = set()
        self.reps = {}      # t -> {kid: a}
        self.cnts = {}      # (sender, t) -> child count of sender
        self.pars = {}      # (sender, t) -> (sender's parent, its child count)
        self.early = {}     # t -> kids that arrived before we computed step t
        self.hop_msgs = {}  # t -> number of HOP(t) received
        self.quiet = False
        self.awake = False
        self.pending_link = None
        self.old_parent = None
        self.hops_expected = 0
        self.outbox = []
        self.links = []
        self.unlinks = []
        self.hops = 0

    # ---- messages
    def _to_kids(self, msg):
        for k in self.kids:
            if k not in self.frozen_kids:
                self.outbox.append((k, msg))

    def _cnt_msg(self):
        return ("CNT", self.s, self.cnt)

    def _par_msg(self):
        if self.is_root:
            return ("PAR", self.s, None, 0, False)
        c = self.cnts.get((self.parent, self.s))
        if c is None:
            return None
        return ("PAR", self.s, self.parent, c, self.parent_is_root)

    def _rep_msg(self):
        return ("REP", self.s, self.a, self.quiet)

    def _publish(self):
        self._to_kids(self._cnt_msg())
        par = self._par_msg()
        if par is not None:
            self._to_kids(par)
        if self.parent is not None and self.pending_link is None:
            self.outbox.append((self.parent, self._rep_msg()))

    def _greet(self, target):
        self.outbox.append((target, self._cnt_msg()))
        par = self._par_msg()
        if par is not None:
            self.outbox.append((target, par))

    # ---- lifecycle
    def wake(self):
        self.awake = True
        if self.parent is not None:
            self.outbox.append((self.parent, ("HELLO", -1)))
            self.outbox.append((self.parent, self._rep_msg()))
        for k in self.kids:
            self.outbox.append((k, ("HELLO", -1)))
            self._greet(k)

    def on_message(self, sender, msg):
        kind = msg[0]
        if kind == "REP":
            _, t, a, quiet = msg
            self.reps.setdefault(t, {})[sender] = a
            if quiet:
                self.frozen_kids.add(sender)
        elif kind == "CNT":
            _, t, c = msg
            self.cnts[(sender, t)] = c
            if sender == self.parent and t == self.s and self.pending_link is None:
                par = self._par_msg()
                self._to_kids(par)
        elif kind == "PAR":
            _, t, g, cg, g_root = msg
            self.pars[(sender, t)] = (g, cg, g_root)
        elif kind == "HELLO":
            t = msg[1]
            if sender == self.parent:
                if self.pending_link is None:
                    self.outbox.append((sender, self._rep_msg()))
            elif sender in self.kids:
                self._greet(sender)
            elif t > self.s:
                self.early.setdefault(t, set()).add(sender)
            elif t >= 0:
                self.kids[sender] = not self.is_root
                self._greet(sender)
        elif kind == "HOP":
            t = msg[1]
            self.hop_msgs[t] = self.hop_msgs.get(t, 0) + 1
        else:
            raise ProtocolBug(f"unknown line-tree message {msg!r}")

    # ---- simulated steps
    def _kids_ready(self):
        reps = self.reps.get(self.s, {})
        have = 0
        for k in self.kids:
            if k in reps or k in self.frozen_kids:
                have += 1
        return have >= self.cnt

    def _try_step(self):
        s = self.s
        if self.old_parent is not None or self.pending_link is not None:
            return False
        if len(self.kids) < self.cnt or not self._kids_ready():
            return False
        A = self.arity
        p = self.parent
        pc = None
        if self.a > 0:
            pc = self.cnts.get((p, s))
            if pc is None:
                return False
        if self.active:
            par = self.pars.get((p, s))
            if par is None:
                return False
            g, cg, g_root = par
        reps = self.reps.pop(s, {})
        kid_a = sum(reps.get(k, 0) for k in self.kids)
        leaving = []
        if self.a > 0 and pc < A:
            leaving = [k for k, act in self.kids.items() if act]
        arrivals = kid_a if self.cnt < A else 0
        for k in leaving:
            del self.kids[k]
        for k in self.kids:
            self.kids[k] = False
        self.s = s + 1
        self.cnt = self.cnt - len(leaving) + arrivals
        self.a = 0 if self.is_root else arrivals
        for k in self.early.pop(self.s, ()):
            self.kids[k] = not self.is_root
        if self.active:
            if g is None:
                # the parent turned out to be the root
                self.parent_is_root = True
                self.active = False
                self.settled_at = s
            elif cg >= A:
                self.active = False
                self.settled_at = self.s
            else:
                self.old_parent = p
                self.parent = g
                self.parent_is_root = g_root
                self.pending_link = g
                self.hops_expected = len(leaving)
                if g_root:
                    self.active = False
                    self.settled_at = self.s
        for key in [k for k in self.cnts if k[1] < s]:
            del self.cnts[key]
        for key in [k for k in self.pars if k[1] < s]:
            del self.pars[key]
        self._publish()
        return True

    def _check_quiet(self):
        if self.quiet or self.active or self.a or self.early:
            return
        if self.pending_link is not None or self.old_parent is not None:
            return
        if len(self.kids) < self.cnt:
            return
        for k in self.kids:
            if k not in self.frozen_kids:
                return
        self.quiet = True
        if self.parent is not None:
            self.outbox.append((self.parent, self._rep_msg()))

    def advance(self):
        """Compute as many simulated steps as the known facts allow."""
        if not self.awake:
            return
        self._check_quiet()
        while not self.quiet and self._try_step():
            self._check_quiet()

    def pre_send(self):
        if self.pending_link is not None:
            self.outbox.append((self.old_parent, ("HOP", self.s)))

    def execute(self):
        """Physical side of a hop decided in an earlier round."""
        if self.pending_link is not None:
            self.links.append(self.pending_link)
            self.pending_link = None
            self.hops += 1
            self.outbox.append((self.parent, ("HELLO", self.s)))
            self.outbox.append((self.parent, self._rep_msg()))
        if self.old_parent is not None and self.hop_msgs.get(self.s, 0) >= self.hops_expected:
            self.unlinks.append(self.old_parent)
            self.old_parent = None

    def has_work(self):
        if self.outbox or self.pending_link is not None:
            return True
        return self.old_parent is not None and self.hop_msgs.get(self.s, 0) >= self.hops_expected


class _LineTreeNode:
    def __init__(self, core, wake_round):
        self.core = core
        self.wake_round = wake_round

    def init(self, ctx):
        if self.wake_round > 0:
            ctx.sleep(until=self.wake_round)

    def send(self, ctx):
        core = self.core
        if not core.awake:
            return
        core.pre_send()
        out, core.outbox = core.outbox, []
        for target, msg in out:
            # a neighbour that dropped our edge has moved on with all it needed
            if ctx.is_neighbor(target):
                ctx.send(target, msg)

    def act(self, ctx, inbox):
        core = self.core
        if not core.awake:
            if ctx.round < self.wake_round:
                ctx.sleep(until=self.wake_round)
                return
            core.wake()
        for sender, msg in inbox:
            core.on_message(sender, msg)
        core.execute()
        core.advance()
        for v in core.links:
            ctx.activate(v)
        for v in core.unlinks:
            ctx.deactivate(v)
        core.links, core.unlinks = [], []
        if core.quiet:
            ctx.terminate()
        if not core.has_work():
            ctx.sleep()


class LineToTree:
    """Program for the line-to-complete-tree family.

    `order` lists the line from the far endpoint to the root (the root is
    order[-1]).  `arity` is 2 for the binary tree; `wake_rounds` (one per
    node, indexed by node id) staggers the start.
    """

    def __init__(self, order, arity=2, wake_rounds=None):
        self.order = list(order)
        self.root = self.order[-1]
        self.arity = arity
        n = len(self.order)
        self.wake_rounds = list(wake_rounds) if wake_rounds is not None else [0] * n
        self.parent = {}
        self.kid = {}
        for i, u in enumerate(self.order[:-1]):
            self.parent[u] = self.order[i + 1]
            self.kid[self.order[i + 1]] = u
        self.cores = {}

    def node(self, u, uid):
        kids = [self.kid[u]] if u in self.kid else []
        core = LineTreeCore(u, self.parent.get(u), kids, self.root, self.arity)
        self.cores[u] = core
        return _LineTreeNode(core, self.wake_rounds[u])

    def steps(self):
        """Index of the simulated step in which the last node settled."""
        return max((c.settled_at or 0) for c in self.cores.values())

    def final_parents(self):
        return {u: c.parent for u, c in self.cores.items() if c.parent is not None}


def polylog_arity(n):
    """Largest power of two not above ceil(log2 n), and at least 2.

    With a power-of-two arity the grandparent rule never overfills a node.
    """
    L = max(2, math.ceil(math.log2(max(n, 2))))
    return 1 << (L.bit_length() - 1)


def LineToCBT(order):
    return LineToTree(order, 2)


def AsyncLineToCBT(order, wake_rounds):
    return LineToTree(order, 2, wake_rounds)


def AsyncLineToPolylogTree(order, wake_rounds=None, n=None):
    n = len(order) if n is None else n
    return LineToTree(order, polylog_arity(n), wake_rounds)


line_to_cbt_step = _LineTreeNode
async_line_to_cbt_step = _LineTreeNode
async_line_to_polylog_tree_step = _LineTreeNode
