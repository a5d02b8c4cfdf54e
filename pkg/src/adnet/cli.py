"""Command line: single runs and sweeps.

  adnet simulate --algo wreath --family random-connected --n 128 --max-degree 3
  adnet sweep --algo star --family line --ns 16,32,64 --seeds 5

Outputs go under --out, or $ADNET_OUT, or ./adnet-out.  Exit codes: 0 all
validators pass, 2 a validator failed, 3 no termination, 64 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .centralized import ConstructionBug, euler_ring_then_cut
from .engine import (
    Engine,
    NonTermination,
    ProtocolBug,
    RoundRecord,
    Trace,
    ledger_from_trace,
    replay,
)
from .generators import FAMILIES, UID_POLICIES, InstanceSpec, generate
from .graph_to_star import run_graph_to_star
from .graph_to_thinwreath import DEGREE_SLACK, run_graph_to_thinwreath, tree_depth_bound
from .graph_to_wreath import run_graph_to_wreath
from .model import UsageError
from .subroutines import LineToTree, TreeToStar, polylog_arity
from .validators import (
    Verdict,
    disseminate,
    validate_complete_tree,
    validate_depth_d_tree,
    validate_token_dissemination,
)

ENV_OUT = "ADNET_OUT"
ALGOS = ("star", "wreath", "thinwreath", "centralized", "tree-to-star",
         "line-to-cbt", "async-line-to-cbt", "line-to-polylog")
EXIT_PASS, EXIT_FAIL, EXIT_NONTERM, EXIT_USAGE = 0, 2, 3, 64

# algorithms that solve Depth-d Tree from any connected graph
GRAPH_ALGOS = ("star", "wreath", "thinwreath", "centralized")


def lg(n):
    return math.ceil(math.log2(max(n, 2)))


@dataclass
class Cell:
    algo: str
    spec: InstanceSpec
    status: str = "pass"          # pass / fail / nontermination
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    reasons: list = field(default_factory=list)
    trace: Trace | None = None

    @property
    def exit_code(self):
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(self.status, EXIT_NONTERM)

    def meta(self):
        s = self.spec
        m = {"algo": self.algo, "family": s.family, "n": s.n, "seed": s.seed,
             "uid_policy": s.uid_policy, "max_degree": s.max_degree}
        if self.algo in ("wreath", "thinwreath"):
            m["n_known"] = True
        return m

    def report(self):
        return {**self.meta(), "status": self.status, "metrics": self.metrics,
                "checks": self.checks, "reasons": self.reasons}


def _check(cell, name, ok, why=""):
    cell.checks[name] = bool(ok)
    if not ok:
        cell.reasons.append(f"{name}: {why}" if why else name)


def _verdict(cell, name, v: Verdict):
    cell.checks[name] = v.ok
    cell.reasons.extend(f"{name}: {r}" for r in v.reasons)


def _line_order(g, uids):
    """Nodes of a line from the far end to the endpoint with the larger UID."""
    adj = g.adjacency()
    n = g.n
    ends = [u for u in range(n) if len(adj[u]) <= 1]
    start = min(ends, key=lambda u: uids[u])
    order, prev, x = [start], None, start
    while len(order) < n:
        nxt = [y for y in adj[x] if y != prev]
        prev, x = x, nxt[0]
        order.append(x)
    return order


def _is_tree(g):
    return len(g.active) == g.n - 1


def _run_centralized(g, uids):
    schedule, root = euler_ring_then_cut(g, uids)
    tr = Trace(g.n)
    for i, rnd in enumerate(schedule):
        tr.records.append(RoundRecord(g.round + i, list(rnd.activate), list(rnd.deactivate), 0))
    led = ledger_from_trace(tr, g)
    led.terminated = True
    return replay(tr, g)[-1], led, tr, root


def run_cell(algo, spec: InstanceSpec, tokens=False, keep_trace=True, strict=False) -> Cell:
    if algo not in ALGOS:
        raise UsageError(f"unknown algorithm {algo!r}; pick one of {', '.join(ALGOS)}")
    g, uids = generate(spec)
    n = g.n
    cell = Cell(algo, spec)
    kw = {"keep_trace": keep_trace, "strict": strict}
    root = max(range(n), key=lambda u: uids[u])
    leaders = None
    try:
        if algo == "star":
            r = run_graph_to_star(g, uids, **kw)
            snap, led, tr, leaders = r.snapshot, r.ledger, r.trace, r.program.leaders()
        elif algo == "wreath":
            r = run_graph_to_wreath(g, uids, **kw)
            snap, led, tr, leaders = r.snapshot, r.ledger, r.trace, r.program.leaders()
        elif algo == "thinwreath":
            r = run_graph_to_thinwreath(g, uids, **kw)
            snap, led, tr, leaders = r.snapshot, r.ledger, r.trace, r.program.leaders()
        elif algo == "centralized":
            snap, led, tr, root = _run_centralized(g, uids)
        elif algo == "tree-to-star":
            if not _is_tree(g):
                raise UsageError("tree-to-star needs a tree family (line or random-tree)")
            prog = TreeToStar.from_edges(n, sorted(g.active), root)
            snap, led, tr = Engine(prog, g, uids, **kw).run()
        else:
            if spec.family != "line":
                raise UsageError(f"{algo} runs on the line family")
            order = _line_order(g, uids) if n > 1 else [0]
            root = order[-1]
            arity = polylog_arity(n) if algo == "line-to-polylog" else 2
            wakes = None
            if algo == "async-line-to-cbt":
                rng = random.Random(spec.seed)
                wakes = [rng.randint(0, lg(n)) for _ in range(n)]
            prog = LineToTree(order, arity, wakes)
            snap, led, tr = Engine(prog, g, uids, **kw).run()
    except NonTermination as e:
        cell.status = "nontermination"
        cell.reasons.append(str(e))
        if e.ledger is not None:
            cell.metrics = e.ledger.to_json()
        return cell
    except (ProtocolBug, ConstructionBug) as e:
        cell.status = "fail"
        cell.reasons.append(f"{type(e).__name__}: {e}")
        return cell

    cell.metrics = led.to_json()
    cell.trace = tr if keep_trace else None
    _validate(cell, algo, snap, led, uids, root, leaders)
    if tokens and algo in GRAPH_ALGOS:
        received, used = disseminate(snap, root, uids)
        cell.metrics["epilogue_rounds"] = used
        _verdict(cell, "token_dissemination", validate_token_dissemination(received, uids))
    if cell.reasons:
        cell.status = "fail"
    return cell


def _validate(cell, algo, snap, led, uids, root, leaders):
    n = snap.n
    if algo == "star":
        _verdict(cell, "depth_1_tree", validate_depth_d_tree(snap, 1, uids=uids, leaders=leaders))
        _check(cell, "active_edges_le_2n", led.max_activated_edges <= 2 * n,
               f"{led.max_activated_edges} > {2 * n}")
    elif algo == "wreath":
        _verdict(cell, "depth_log_tree",
                 validate_depth_d_tree(snap, lg(n) + 1, uids=uids, leaders=leaders))
        _verdict(cell, "complete_binary_tree", validate_complete_tree(snap, root, 2))
        _check(cell, "activated_degree_le_8", led.max_activated_degree <= 8,
               f"degree {led.max_activated_degree}")
    elif algo == "thinwreath":
        a = polylog_arity(n)
        _verdict(cell, "shallow_tree",
                 validate_depth_d_tree(snap, tree_depth_bound(n, a), uids=uids, leaders=leaders))
        _verdict(cell, "complete_polylog_tree", validate_complete_tree(snap, root, a))
        cap = lg(n) + DEGREE_SLACK
        _check(cell, "activated_degree_le_log_n_plus_c0", led.max_activated_degree <= cap,
               f"degree {led.max_activated_degree} > {cap}")
    elif algo == "centralized":
        # CutInHalf over the 2n-1 positions of the tour, seen from its first node
        _verdict(cell, "depth_log_tree", validate_depth_d_tree(snap, lg(2 * n - 1), root=root))
        _check(cell, "activations_le_2n", led.total_activations <= 2 * n,
               f"{led.total_activations} > {2 * n}")
    elif algo == "tree-to-star":
        _verdict(cell, "star_at_root", validate_depth_d_tree(snap, 1, root=root))
    else:
        arity = polylog_arity(n) if algo == "line-to-polylog" else 2
        _verdict(cell, "complete_tree", validate_complete_tree(snap, root, arity))
        if arity == 2:
            _check(cell, "activated_degree_le_4", led.max_activated_degree <= 4,
                   f"degree {led.max_activated_degree}")


# ----------------------------------------------------------------------------
# output


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def default_out():
    return Path(os.environ.get(ENV_OUT) or "adnet-out")


def write_cell(cell: Cell, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(dumps({**cell.meta(), **cell.metrics}))
    (out / "verdict.json").write_text(dumps(cell.report()))
    if cell.trace is not None:
        (out / "trace.txt").write_text(cell.trace.to_text())


SCALES = {
    "rounds/log n": lambda n: lg(n),
    "rounds/log^2 n": lambda n: lg(n) ** 2,
}
ACT_SCALES = {
    "activations/(n log n)": lambda n: max(n, 1) * lg(n),
    "activations/(n log^2 n)": lambda n: max(n, 1) * lg(n) ** 2,
}


def fit_report(cells):
    """Ratios of the mean metrics per n against the bound shapes."""
    by_n = {}
    for c in cells:
        if c.status == "pass":
            by_n.setdefault(c.spec.n, []).append(c.metrics)
    ns = sorted(by_n)
    points = []
    for n in ns:
        ms = by_n[n]
        k = len(ms)
        points.append({
            "n": n, "runs": k,
            "rounds": sum(m["rounds"] for m in ms) / k,
            "total_activations": sum(m["total_activations"] for m in ms) / k,
            "max_activated_edges": max(m["max_activated_edges"] for m in ms),
            "max_activated_degree": max(m["max_activated_degree"] for m in ms),
        })
    fits = {}
    for name, f in SCALES.items():
        fits[name] = [p["rounds"] / f(p["n"]) for p in points]
    for name, f in ACT_SCALES.items():
        fits[name] = [p["total_activations"] / f(p["n"]) for p in points]
    report = {"points": points, "ratios": fits, "constants": {}, "non_increasing": {}}
    for name, vals in fits.items():
        report["constants"][name] = max(vals, default=0.0)
        report["non_increasing"][name] = all(b <= a for a, b in zip(vals, vals[1:]))
    return report


def run_sweep(algo, family, ns, seeds, uid_policy="random", max_degree=4, workers=1, tokens=False):
    specs = [InstanceSpec(family, n, s, uid_policy=uid_policy, max_degree=max_degree)
             for n in ns for s in range(seeds)]

    def one(spec):
        return run_cell(algo, spec, tokens=tokens, keep_trace=False)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            cells = list(pool.map(one, specs))
    else:
        cells = [one(s) for s in specs]
    return cells, fit_report(cells)


def write_sweep(cells, report, out: Path, meta):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "rows.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "seed", "status", "rounds", "phases", "total_activations",
                    "max_edges", "max_degree"])
        for c in cells:
            m = c.metrics
            w.writerow([c.spec.n, c.spec.seed, c.status, m.get("rounds", ""), m.get("phases", ""),
                        m.get("total_activations", ""), m.get("max_activated_edges", ""),
                        m.get("max_activated_degree", "")])
    failed = [c.report() for c in cells if c.status != "pass"]
    (out / "fit.json").write_text(dumps({**meta, **report, "failed": failed}))


# ----------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def build_parser():
    p = _Parser(prog="adnet", description="Actively dynamic network simulator.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--algo", required=True, choices=ALGOS)
        sp.add_argument("--family", default="random-connected", choices=FAMILIES)
        sp.add_argument("--uid-policy", default="random", choices=UID_POLICIES[:2])
        sp.add_argument("--max-degree", type=int, default=4)
        sp.add_argument("--tokens", action="store_true",
                        help="add the token-dissemination epilogue and check it")
        sp.add_argument("--n-known", action="store_true",
                        help="nodes know n (always the case here; recorded for the record)")
        sp.add_argument("--out", type=Path, default=None)

    sim = sub.add_parser("simulate", help="one run, with metrics, trace and verdicts")
    common(sim)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--strict", action="store_true", help="check node locality after every act")

    sw = sub.add_parser("sweep", help="a grid of runs with bound fits and a CSV")
    common(sw)
    sw.add_argument("--ns", type=_int_list, required=True)
    sw.add_argument("--seeds", type=int, default=3)
    sw.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        out = args.out or default_out()
        if args.cmd == "simulate":
            spec = InstanceSpec(args.family, args.n, args.seed, uid_policy=args.uid_policy,
                                max_degree=args.max_degree)
            cell = run_cell(args.algo, spec, tokens=args.tokens, strict=args.strict)
            dest = out / f"{args.algo}-{args.family}-n{args.n}-s{args.seed}"
            write_cell(cell, dest)
            print(dumps(cell.report()), end="")
            return cell.exit_code
        if args.seeds < 1:
            raise UsageError("--seeds must be at least 1")
        cells, report = run_sweep(args.algo, args.family, args.ns, args.seeds, args.uid_policy,
                                  args.max_degree, args.workers, args.tokens)
        meta = {"algo": args.algo, "family": args.family, "seeds": args.seeds,
                "uid_policy": args.uid_policy, "max_degree": args.max_degree}
        dest = out / f"sweep-{args.algo}-{args.family}"
        write_sweep(cells, report, dest, meta)
        print(dumps({**meta, "constants": report["constants"],
                     "non_increasing": report["non_increasing"],
                     "failed": sum(c.status != "pass" for c in cells)}), end="")
        if any(c.status == "nontermination" for c in cells):
            return EXIT_NONTERM
        return EXIT_FAIL if any(c.status != "pass" for c in cells) else EXIT_PASS
    except UsageError as e:
        print(f"adnet: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
