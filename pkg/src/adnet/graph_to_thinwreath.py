"""GraphToThinWreath: wreaths whose tree has polylogarithmic arity.

The committee gadget is the wreath ring together with a complete tree of
arity A = polylog_arity(n) (a power of two not above ceil(log2 n)).  A tree of
that arity has depth ceil(log_A n) = O(log n / log log n), so every window of a
phase that walks the committee tree (convergecast, broadcast, acceptance
report, the new-leader broadcast and the closing walk) shrinks accordingly.
Nodes know n, which fixes A and the phase schedule.

Merging itself is the wreath's: contacts are spliced into the target's ring,
the merged ring is opened into a line at the winning leader and the line is
folded into a complete A-ary tree by the line-to-tree subroutine.
"""

from __future__ import annotations

import math

from .engine import Engine
from .graph_to_wreath import GraphToWreath, RunResult, Schedule
from .subroutines import polylog_arity

# activated degree stays within ceil(log2 n) + DEGREE_SLACK: tree children,
# a parent, two ring edges, and a transient hop or walk edge
DEGREE_SLACK = 4


def tree_depth_bound(n, arity):
    """Depth of a complete arity-ary tree on n nodes, rounded up to ceil(log_A n)."""
    d = 0
    while arity ** d < n:
        d += 1
    return d


def thin_schedule(n):
    a = polylog_arity(n)
    depth = tree_depth_bound(n, a)
    w = depth + 1
    lg = math.ceil(math.log2(max(n, 2)))
    # folding a line takes about log2 n steps whatever the arity; the
    # broadcast and the closing walk only climb the shallow tree
    return Schedule(w, a, 6 * lg + 2 * w + 8)


class GraphToThinWreath(GraphToWreath):
    def __init__(self, n=None):
        super().__init__(n, arity=polylog_arity(n) if n else 2)

    def bind(self, n):
        self.n = n
        self.arity = polylog_arity(n)
        self.schedule = thin_schedule(n)
        return self


def run_graph_to_thinwreath(g_s, uids, **kw) -> RunResult:
    prog = GraphToThinWreath().bind(g_s.n)
    eng = Engine(prog, g_s, uids, **kw)
    snap, led, tr = eng.run()
    return RunResult(snap, led, tr, prog, eng)
