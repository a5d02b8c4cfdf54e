import pytest

from adnet.engine import (
    Engine,
    LocalityError,
    NonTermination,
    ProtocolBug,
    Trace,
    TraceMismatch,
    default_round_cap,
    ledger_from_trace,
    replay,
    run,
)
from adnet.generators import InstanceSpec, generate
from adnet.graph_to_star import run_graph_to_star
from adnet.model import TemporalSnapshot, UsageError


class _Prog:
    def __init__(self, cls, *args):
        self.cls = cls
        self.args = args
        self.nodes = {}

    def node(self, u, uid):
        nd = self.nodes[u] = self.cls(u, uid, *self.args)
        return nd


class Flood:
    """Max-uid flooding; everyone stops after a fixed number of rounds."""

    def __init__(self, me, uid, stop):
        self.best = uid
        self.stop = stop

    def send(self, ctx):
        for v in ctx.n1:
            ctx.send(v, self.best)

    def act(self, ctx, inbox):
        for _, b in inbox:
            self.best = max(self.best, b)
        if ctx.round >= self.stop:
            ctx.terminate()
            ctx.sleep()


class Sleeper:
    """Node 0 sleeps until round 5; node 1 pokes it in round 3."""

    def __init__(self, me, uid, log):
        self.me = me
        self.log = log

    def init(self, ctx):
        if self.me == 0:
            ctx.sleep(until=5)

    def send(self, ctx):
        self.log.append(("send", self.me, ctx.round))
        if self.me == 1 and ctx.round == 3:
            ctx.send(0, "poke")

    def act(self, ctx, inbox):
        self.log.append(("act", self.me, ctx.round, len(inbox)))
        if self.me == 0 and ctx.round < 5:
            ctx.sleep(until=5)
            return
        if ctx.round >= 6:
            ctx.terminate()
            ctx.sleep()


class Hopper:
    """On a path 0-1-2, node 0 activates 0-2 in round 1 and drops it in round 2."""

    def __init__(self, me, uid):
        self.me = me

    def send(self, ctx):
        pass

    def act(self, ctx, inbox):
        if self.me == 0 and ctx.round == 1:
            ctx.activate(2)
        if self.me == 0 and ctx.round == 2:
            ctx.deactivate(2)
        if ctx.round >= 2:
            ctx.terminate()
            ctx.sleep()


class Spy:
    def __init__(self, me, uid, eng_box):
        self.box = eng_box

    def send(self, ctx):
        pass

    def act(self, ctx, inbox):
        self.stolen = ctx._eng
        ctx.terminate()
        ctx.sleep()


class Forever:
    def __init__(self, me, uid):
        pass

    def send(self, ctx):
        pass

    def act(self, ctx, inbox):
        pass


class LateSender:
    def __init__(self, me, uid):
        pass

    def send(self, ctx):
        pass

    def act(self, ctx, inbox):
        for v in ctx.n1:
            ctx.send(v, 1)


class Cutter:
    def __init__(self, me, uid):
        self.me = me

    def send(self, ctx):
        pass

    def act(self, ctx, inbox):
        if self.me == 0:
            ctx.deactivate(1)
        ctx.terminate()


def _path(n):
    return TemporalSnapshot.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_flooding_reaches_everyone():
    g = _path(6)
    uids = [4, 9, 1, 7, 3, 2]
    prog = _Prog(Flood, 5)
    _, led, _ = run(prog, g, uids)
    assert {nd.best for nd in prog.nodes.values()} == {9}
    assert led.rounds == 5 and led.terminated
    assert led.messages == 5 * 10


def test_flooding_needs_distance_rounds():
    # after r rounds only nodes within distance r know the max
    g = _path(6)
    uids = [9, 1, 2, 3, 4, 5]
    prog = _Prog(Flood, 3)
    run(prog, g, uids)
    assert [prog.nodes[u].best == 9 for u in range(6)] == [True] * 4 + [False] * 2


def test_sleep_timer_and_message_wake():
    log = []
    g = _path(2)
    run(_Prog(Sleeper, log), g, [1, 2])
    sends0 = [e[2] for e in log if e[:2] == ("send", 0)]
    acts0 = [(e[2], e[3]) for e in log if e[:2] == ("act", 0)]
    # woken by the message in round 3 (acts, did not send), then by the timer in round 5
    assert 3 not in sends0 and 5 in sends0
    assert acts0[0] == (3, 1)
    assert [r for r, _ in acts0][:2] == [3, 5]


def test_edge_change_wakes_endpoints():
    g = _path(3)
    eng = Engine(_Prog(Hopper), g, [1, 2, 3])
    snap, led, tr = eng.run()
    assert tr.records[0].acts == [(0, 2)]
    assert tr.records[1].deacts == [(0, 2)]
    assert snap.active == g.active
    assert led.total_activations == 1 and led.max_activated_edges == 1
    assert led.max_activated_degree == 1


def test_round_cap():
    assert default_round_cap(16) == 64 * 16
    with pytest.raises(NonTermination):
        run(_Prog(Forever), _path(4), [1, 2, 3, 4], limits=10)


def test_messages_in_act_are_a_bug():
    with pytest.raises(ProtocolBug):
        run(_Prog(LateSender), _path(3), [1, 2, 3])


def test_disconnection_is_a_bug():
    with pytest.raises(ProtocolBug):
        run(_Prog(Cutter), _path(3), [1, 2, 3])


def test_strict_locality_scan():
    with pytest.raises(LocalityError):
        Engine(_Prog(Spy, None), _path(2), [1, 2], strict=True).run()


def test_bad_inputs():
    with pytest.raises(UsageError):
        Engine(_Prog(Forever), _path(3), [1, 1, 2])
    g = TemporalSnapshot.from_edges(3, [(0, 1)])
    with pytest.raises(UsageError):
        Engine(_Prog(Forever), g, [1, 2, 3])


def test_trace_round_trip_and_independent_ledger():
    g, uids = generate(InstanceSpec("random-connected", 60, 3))
    r = run_graph_to_star(g, uids)
    text = r.trace.to_text()
    back = Trace.from_text(text, g.n)
    assert back.to_text() == text
    snaps = replay(back, g)
    assert snaps[-1].active == r.snapshot.active
    led = ledger_from_trace(back, g)
    for key in ("rounds", "total_activations", "max_activated_edges", "max_activated_degree"):
        assert getattr(led, key) == getattr(r.ledger, key), key
    assert led.messages == r.ledger.messages


def test_replay_rejects_foreign_trace():
    g, uids = generate(InstanceSpec("random-connected", 30, 1))
    r = run_graph_to_star(g, uids)
    other, _ = generate(InstanceSpec("random-connected", 30, 2))
    with pytest.raises(TraceMismatch):
        replay(r.trace, other)
    with pytest.raises(TraceMismatch):
        replay(r.trace, _path(5))
    with pytest.raises(TraceMismatch):
        Trace.from_text("1 | JUMP 0 1\n", 30)


def test_runs_are_deterministic():
    g, uids = generate(InstanceSpec("random-connected", 80, 7))
    a = run_graph_to_star(g, uids).trace.to_text()
    b = run_graph_to_star(g, uids).trace.to_text()
    assert a == b
