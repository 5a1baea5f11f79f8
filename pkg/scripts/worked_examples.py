#!/usr/bin/env python3
"""Walk through the library's worked examples on the console: encoding a
two-state automaton round by round, reconciling two partial views, running
the decentralized reference semantics, and checking placement compatibility.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from demon import analysis as an
from demon import ehe as eh
from demon import engine as en
from demon import expr as ex
from demon import ltl as lt
from demon.automaton import DecentralizedTrace, decentralized_run, make_spec
from demon.store import Event, Memory


def banner(title: str) -> None:
    print(f"\n=== {title} {'=' * max(0, 60 - len(title))}")


def main() -> int:
    T, B = ex.TOP, ex.BOTTOM

    banner("Encoding F(a || b) for two rounds")
    f_or = make_spec(
        ["q0", "q1"], "q0",
        [("q0", "a || b", "q1"), ("q0", "!a && !b", "q0"), ("q1", "true", "q1")],
        {"q0": "unknown", "q1": "top"},
    )
    table = eh.mov(eh.init(f_or), 0, 2)
    print(eh.dump(table))
    memory = Memory({ex.timed(1, "a"): T, ex.timed(1, "b"): B})
    print("state at round 1 given <1,a>=T, <1,b>=F:", eh.sreach(table, memory, 1))
    print("verdict:", eh.verdict_at(table, memory, 1).value)

    banner("Reconciling two partial views of F(a && b)")
    f_and = make_spec(
        ["q0", "q1"], "q0",
        [("q0", "a && b", "q1"), ("q0", "!a || !b", "q0"), ("q1", "true", "q1")],
        {"q0": "unknown", "q1": "top"},
    )
    shared = eh.mov(eh.init(f_and), 0, 1)
    left = eh.inc(shared, Memory({ex.timed(1, "a"): T}))
    right = eh.inc(shared, Memory({ex.timed(1, "b"): B}))
    merged = eh.merge(left, right)
    for name, view in (("observer of a", left), ("observer of b", right),
                       ("merged", merged)):
        print(f"-- {name}")
        print(eh.dump(view))
    print("merged view resolves round 1 to:", eh.sreach(merged, Memory(), 1))

    banner("Decentralized specification with a monitor reference")
    checker = make_spec(
        ["s0", "s1", "s2"], "s0",
        [("s0", "b0", "s1"), ("s0", "!b0", "s2"),
         ("s1", "true", "s1"), ("s2", "true", "s2")],
        {"s0": "unknown", "s1": "top", "s2": "bottom"},
    )
    root = make_spec(
        ["q0", "q1"], "q0",
        [("q0", "a0 || m1", "q1"), ("q0", "!a0 && !m1", "q0"), ("q1", "true", "q1")],
        {"q0": "unknown", "q1": "top"},
    )
    from demon.automaton import DecentralizedSpec

    dspec = DecentralizedSpec(
        ("m0", "m1"), {"m0": root, "m1": checker}, ("c0", "c1"),
        {"m0": "c0", "m1": "c1"}, "m0", {"a0": "c0", "b0": "c1"},
    )
    tr = DecentralizedTrace(
        ("c0", "c1"), 2,
        {(1, "c0"): Event.of(("a0", B)), (1, "c1"): Event.of(("b0", B)),
         (2, "c0"): Event.of(("a0", B)), (2, "c1"): Event.of(("b0", T))},
    )
    print("reference verdict:", decentralized_run(dspec, tr).value)
    sim = en.simulate(en.SimConfig("chor"), lt.parse_ltl("F (a0 || b0)"),
                      an.complete_graph(("c0", "c1")), tr)
    print("choreography simulation:", sim.verdict.value, "at round", sim.stop_round)

    banner("Placement compatibility on a path-shaped system")
    net = an.Graph.of(["m0", "m1", "m2"], [("m0", "m1"), ("m2", "m1")])
    system = an.Graph.of(["c0", "c1", "c2", "c3"],
                         [("c0", "c1"), ("c1", "c2"), ("c2", "c3")])
    ok, assignment = an.compatible(net, system, {"m0": "c0", "m2": "c2"})
    print("compatible:", ok, "assignment:", assignment)
    return 0


if __name__ == "__main__":
    sys.exit(main())
