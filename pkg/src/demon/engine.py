"""Round-based simulation of decentralized monitoring.

Monitors execute in rounds under a bulk-synchronous model: every monitor
reads its component's observations for the round, processes delivered
messages, computes, and emits messages that become available ``comm_delay``
rounds later.  Four algorithms are provided: orchestration, migration with
the earliest-obligation and round-robin heuristics, and choreography.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Union

from . import analysis, ehe as eh, ltl as lt, metrics as mt
from . import expr as ex
from .automaton import DecentralizedSpec, DecentralizedTrace, Specification
from .errors import IncompatiblePlacement, InvalidParameters, SpecificationError
from .expr import UNKNOWN, Verdict
from .store import EMPTY_MEMORY, Event, Memory, mem_from_event, memory_merge

ALGORITHMS = ("orch", "migr", "migrr", "chor")


@dataclass(frozen=True)
class SimConfig:
    algorithm: str
    comm_delay: int = 1
    initial_active: int = 1
    timeout_slack: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameters(f"unknown algorithm {self.algorithm!r}")
        if self.comm_delay < 1:
            raise InvalidParameters("comm_delay must be >= 1")
        if self.initial_active < 1:
            raise InvalidParameters("initial_active must be >= 1")
        if self.timeout_slack < 0:
            raise InvalidParameters("timeout_slack must be >= 0")


@dataclass(frozen=True)
class Message:
    kind: str  # "mem" | "ehe" | "verdict" | "kill"
    sender: str
    receiver: str
    sent_at: int
    memory: Optional[Memory] = None
    ehe: Optional[eh.EHE] = None
    verdict_round: int = 0
    verdict: Optional[Verdict] = None
    seq: int = 0  # FIFO tiebreaker within one sender


# ---------------------------------------------------------------------------
# Monitor states


@dataclass
class ForwarderState:
    name: str
    component: str
    main: str


@dataclass
class MainState:
    name: str
    component: str
    t_kn: int
    memory: Memory
    ehe: eh.EHE


@dataclass
class MigrationState:
    name: str
    component: str
    is_active: bool
    memory: Memory
    ehe: eh.EHE
    t_kn: int = 0


@dataclass
class ChorState:
    name: str
    component: str
    t_mon: int
    memory: Memory
    ehe: eh.EHE
    refs: frozenset[str]  # parents notified of verdicts
    corefs: frozenset[str]  # children sending verdicts here
    respawn: bool
    kill_set: set[str] = field(default_factory=set)
    terminated: bool = False
    t_kn: int = 0


MonitorState = Union[ForwarderState, MainState, MigrationState, ChorState]


@dataclass
class Setup:
    network: analysis.Graph
    placements: dict[str, str]
    states: dict[str, MonitorState]
    spec: Optional[Specification] = None
    dspec: Optional[DecentralizedSpec] = None
    ap_owner: dict[str, str] = field(default_factory=dict)
    monitor_names: frozenset[str] = frozenset()


@dataclass
class RunContext:
    cfg: SimConfig
    record: mt.MetricsRecord
    setup: Setup

    def sample_delay(self, gap: int) -> None:
        self.record.delay_samples.append(gap)

    def sample_gc(self, p: eh.EHE) -> None:
        rounds = p.rounds()
        span = rounds[-1] - rounds[0] + 1 if rounds else 0
        self.record.gc_samples.append((len(p.entries), span, len(p.automaton.states)))


@dataclass(frozen=True)
class SimRun:
    algorithm: str
    verdict: Verdict
    stop_round: int
    record: mt.MetricsRecord

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "verdict": self.verdict.value,
            "stop_round": self.stop_round,
            "summary": mt.summarize(self.record).as_dict(),
        }


# ---------------------------------------------------------------------------
# Setup


def _migration_ranking(spec: Specification, ap_owner: Mapping[str, str]) -> list[str]:
    """Components ranked by the earliest-obligation preference after one move
    from the initial encoding."""
    probe = eh.mov(eh.init(spec), 0, 1)
    ranked: list[str] = []
    atoms = sorted(
        {a for (_, _), cond in probe.entries.items() for a in ex.atoms_of(cond)},
        key=lambda a: (a.t, a.name),
    )
    for atom in atoms:
        comp = ap_owner.get(atom.name)
        if comp is not None and comp not in ranked:
            ranked.append(comp)
    return ranked


def setup(
    cfg: SimConfig,
    spec_input: Union[Specification, lt.Ltl],
    system: analysis.Graph,
    ap_owner: Mapping[str, str],
) -> Setup:
    """Create the monitor network, placements, and initial monitor states.

    Raises IncompatiblePlacement when the produced placement fails the
    compatibility check against the system graph.
    """
    comps = sorted(system.nodes)
    if cfg.algorithm == "orch":
        spec = _expect_spec(spec_input)
        main_comp = comps[0]
        placements = {"m0": main_comp}
        states: dict[str, MonitorState] = {
            "m0": MainState("m0", main_comp, t_kn=0, memory=EMPTY_MEMORY, ehe=eh.init(spec))
        }
        edges = set()
        for comp in comps[1:]:
            name = f"f_{comp}"
            placements[name] = comp
            states[name] = ForwarderState(name, comp, "m0")
            edges.add((name, "m0"))
        network = analysis.Graph.of(sorted(placements), edges)
        result = Setup(network, placements, states, spec=spec, ap_owner=dict(ap_owner))
    elif cfg.algorithm in ("migr", "migrr"):
        spec = _expect_spec(spec_input)
        placements = {f"m_{comp}": comp for comp in comps}
        network = analysis.complete_graph(tuple(sorted(placements)))
        if cfg.algorithm == "migr":
            ranked = _migration_ranking(spec, ap_owner)
        else:
            ranked = []
        for comp in comps:  # fill up deterministically
            if comp not in ranked:
                ranked.append(comp)
        active = set(ranked[: min(cfg.initial_active, len(comps))])
        states = {
            f"m_{comp}": MigrationState(
                f"m_{comp}", comp, is_active=comp in active,
                memory=EMPTY_MEMORY, ehe=eh.init(spec),
            )
            for comp in comps
        }
        result = Setup(network, placements, states, spec=spec, ap_owner=dict(ap_owner))
    else:  # choreography
        phi = _expect_ltl(spec_input)
        tree = lt.net_chor(phi, ap_owner)
        dspec = assemble_choreography(tree, comps, ap_owner)
        placements = {f"m{m.id}": m.component for m in tree.all_monitors()}
        edges = {(f"m{child}", f"m{parent}") for child, parent in tree.edges}
        network = analysis.Graph.of(sorted(placements), edges)
        refs: dict[str, set[str]] = {name: set() for name in placements}
        corefs: dict[str, set[str]] = {name: set() for name in placements}
        for child, parent in tree.edges:
            refs[f"m{child}"].add(f"m{parent}")
            corefs[f"m{parent}"].add(f"m{child}")
        states = {}
        for m in tree.all_monitors():
            name = f"m{m.id}"
            states[name] = ChorState(
                name=name,
                component=m.component,
                t_mon=1,
                memory=EMPTY_MEMORY,
                ehe=eh.init(dspec.monitors[name]),
                refs=frozenset(refs[name]),
                corefs=frozenset(corefs[name]),
                respawn=(m.id != 0),
            )
        result = Setup(
            network,
            placements,
            states,
            dspec=dspec,
            ap_owner=dict(ap_owner),
            monitor_names=frozenset(placements),
        )
    rm = analysis.compute_reach(result.network)
    rs = analysis.compute_reach(system)
    if not analysis.verify_compatible(result.placements, rm, rs):
        raise IncompatiblePlacement(
            "generated monitor network cannot be deployed on the system graph"
        )
    return result


def _expect_spec(spec_input) -> Specification:
    if not isinstance(spec_input, Specification):
        raise SpecificationError("this algorithm requires a centralized specification")
    return spec_input


def _expect_ltl(spec_input) -> lt.Ltl:
    if not isinstance(spec_input, lt.Ltl):
        raise SpecificationError("choreography requires an LTL formula input")
    return spec_input


def assemble_choreography(
    tree: lt.MonitorDataTree, components: Iterable[str], ap_owner: Mapping[str, str]
) -> DecentralizedSpec:
    """Synthesize one automaton per tree node and wrap them as a
    decentralized specification rooted at monitor m0."""
    monitors = {}
    attach = {}
    for m in tree.all_monitors():
        name = f"m{m.id}"
        monitors[name] = lt.synthesize(m.formula)
        attach[name] = m.component
    used_aps = {
        atom.name
        for spec in monitors.values()
        for t in spec.transitions
        for atom in ex.atoms_of(t.label)
        if atom.name not in monitors
    }
    missing = sorted(ap for ap in used_aps if ap not in ap_owner)
    if missing:
        raise SpecificationError(f"no owning component for propositions {missing}")
    return DecentralizedSpec(
        monitor_labels=tuple(sorted(monitors)),
        monitors=monitors,
        components=tuple(sorted(components)),
        attach=attach,
        root="m0",
        ap_owner={ap: ap_owner[ap] for ap in sorted(used_aps)},
    )


# ---------------------------------------------------------------------------
# Per-round monitor behavior


def orchestration_round(
    state: MonitorState,
    t: int,
    obs: Event,
    inbox: list[Message],
    stats: Optional[mt.OpStats] = None,
    ctx: Optional[RunContext] = None,
) -> tuple[MonitorState, list[Message], Optional[Verdict]]:
    if isinstance(state, ForwarderState):
        outbox = []
        if not obs.is_empty:
            outbox.append(
                Message(
                    "mem",
                    sender=state.name,
                    receiver=state.main,
                    sent_at=t,
                    memory=mem_from_event(obs, ex.ts(t)),
                )
            )
        return state, outbox, None

    assert isinstance(state, MainState)
    for msg in inbox:
        state.memory = memory_merge(state.memory, msg.memory)
    if not obs.is_empty:
        state.memory = memory_merge(state.memory, mem_from_event(obs, ex.ts(t)))
    end = state.ehe.rounds()[-1]
    if end < t:
        state.ehe = eh.mov(state.ehe, end, t)
    memo: dict[int, ex.Expr] = {}
    verdict: Optional[Verdict] = None
    for r in range(state.t_kn, t + 1):
        q = eh.sreach(state.ehe, state.memory, r, stats=stats, memo=memo)
        if q is None:
            break
        if r > state.t_kn:
            if ctx is not None:
                ctx.sample_delay(t - r)
            state.t_kn = r
        if state.ehe.automaton.verdict_of(q).is_final:
            verdict = state.ehe.automaton.verdict_of(q)
            break
    if verdict is None:
        state.ehe = eh.drop_resolved(state.ehe, state.memory, stats=stats)
        if ctx is not None:
            ctx.sample_gc(state.ehe)
    return state, [], verdict


def _earliest_obligation(p: eh.EHE, ap_owner: Mapping[str, str], own: str) -> str:
    atoms = sorted(
        {a for cond in p.entries.values() for a in ex.atoms_of(cond) if a.kind == "tap"},
        key=lambda a: (a.t, a.name),
    )
    for atom in atoms:
        owner = ap_owner.get(atom.name)
        if owner is not None:
            return owner
    return own


def _round_robin(components: list[str], own: str) -> str:
    i = components.index(own)
    return components[(i + 1) % len(components)]


def migration_round(
    state: MonitorState,
    t: int,
    obs: Event,
    inbox: list[Message],
    stats: Optional[mt.OpStats] = None,
    ctx: Optional[RunContext] = None,
    heuristic: str = "migr",
) -> tuple[MonitorState, list[Message], Optional[Verdict]]:
    assert isinstance(state, MigrationState)
    if not obs.is_empty:
        state.memory = memory_merge(state.memory, mem_from_event(obs, ex.ts(t)))
    for msg in inbox:
        if state.is_active:
            state.ehe = eh.merge(state.ehe, msg.ehe)
        else:
            state.ehe = msg.ehe
            state.is_active = True
        state.t_kn = max(state.t_kn, msg.ehe.rounds()[0])
    if not state.is_active:
        return state, [], None
    end = state.ehe.rounds()[-1]
    if end < t:
        state.ehe = eh.mov(state.ehe, end, t)
    state.ehe = eh.inc(state.ehe, state.memory, stats=stats)
    memo: dict[int, ex.Expr] = {}
    for r in state.ehe.rounds():
        q = eh.sreach(state.ehe, state.memory, r, stats=stats, memo=memo)
        if q is None:
            break
        if r > state.t_kn:
            if ctx is not None:
                ctx.sample_delay(t - r)
            state.t_kn = r
        v = state.ehe.automaton.verdict_of(q)
        if v.is_final:
            return state, [], v
    state.ehe = eh.drop_resolved(state.ehe, state.memory, stats=stats)
    if ctx is not None:
        ctx.sample_gc(state.ehe)
    assert ctx is not None
    components = sorted(set(ctx.setup.placements.values()))
    if heuristic == "migr":
        target = _earliest_obligation(state.ehe, ctx.setup.ap_owner, state.component)
    else:
        target = _round_robin(components, state.component)
    outbox: list[Message] = []
    if target != state.component:
        state.is_active = False
        outbox.append(
            Message(
                "ehe",
                sender=state.name,
                receiver=f"m_{target}",
                sent_at=t,
                ehe=state.ehe,
            )
        )
    return state, outbox, None


def choreography_round(
    state: MonitorState,
    t: int,
    obs: Event,
    inbox: list[Message],
    stats: Optional[mt.OpStats] = None,
    ctx: Optional[RunContext] = None,
) -> tuple[MonitorState, list[Message], Optional[Verdict]]:
    assert isinstance(state, ChorState)
    assert ctx is not None and ctx.setup.dspec is not None
    name = state.name
    if state.terminated:
        return state, [], None
    outbox: list[Message] = []
    for msg in inbox:
        if msg.kind == "kill":
            state.kill_set.add(msg.sender)
        elif msg.kind == "verdict":
            state.memory = memory_merge(
                state.memory,
                Memory({ex.monref(msg.verdict_round, msg.sender): msg.verdict}),
            )
    if state.refs and state.kill_set >= state.refs:
        # Every referring monitor dropped this one: cascade and stop.
        for child in sorted(state.corefs):
            outbox.append(Message("kill", sender=name, receiver=child, sent_at=t))
        state.terminated = True
        return state, outbox, None
    if not obs.is_empty:
        state.memory = memory_merge(state.memory, mem_from_event(obs, ex.ts(t)))

    mon_names = ctx.setup.monitor_names
    while True:
        base = state.ehe.rounds()[0]
        if base > t:
            break  # instance anchored past the current round: nothing to do yet
        end = state.ehe.rounds()[-1]
        if end < t:
            state.ehe = eh.mov(state.ehe, end, t, monitor_names=mon_names)
        state.ehe = eh.inc(state.ehe, state.memory, stats=stats)
        found: Optional[Verdict] = None
        memo: dict[int, ex.Expr] = {}
        for r in state.ehe.rounds():
            q = eh.sreach(state.ehe, state.memory, r, stats=stats, memo=memo)
            if q is None:
                break
            if r > state.t_kn:
                ctx.sample_delay(t - r)
                state.t_kn = r
            v = state.ehe.automaton.verdict_of(q)
            if v.is_final:
                found = v
                break
        if found is None:
            break
        if not state.respawn:
            # The root reports the system verdict and stops monitoring.
            for child in sorted(state.corefs):
                outbox.append(Message("kill", sender=name, receiver=child, sent_at=t))
            state.terminated = True
            return state, outbox, found
        for parent in sorted(state.refs - state.kill_set):
            outbox.append(
                Message(
                    "verdict",
                    sender=name,
                    receiver=parent,
                    sent_at=t,
                    verdict_round=state.t_mon,
                    verdict=found,
                )
            )
        anchor = state.t_mon
        state.t_mon = anchor + 1
        state.ehe = eh.EHE(state.ehe.automaton, {(anchor, state.ehe.automaton.initial): ex.TRUE})
        state.t_kn = anchor
        state.kill_set = set()
        state.memory = Memory(
            {a: v for a, v in state.memory.items() if a.t > anchor}
        )
    return state, outbox, None


# ---------------------------------------------------------------------------
# Simulation loop


def derive_ap_owner(tr: DecentralizedTrace) -> dict[str, str]:
    return tr.observed_owner()


def simulate(
    cfg: SimConfig,
    spec_input: Union[Specification, lt.Ltl],
    system: analysis.Graph,
    tr: DecentralizedTrace,
) -> SimRun:
    """Run one monitoring algorithm over a decentralized trace.

    Rounds proceed to trace length plus the timeout slack; a final verdict
    reported by any monitor stops the run at the end of its round.
    """
    ap_owner = derive_ap_owner(tr)
    st = setup(cfg, spec_input, system, ap_owner)
    record = mt.MetricsRecord(components=tuple(sorted(system.nodes)))
    record.monitor_component = dict(st.placements)
    ctx = RunContext(cfg=cfg, record=record, setup=st)
    horizon = tr.length + cfg.timeout_slack
    pending: list[Message] = []
    seq = itertools.count()
    reported: Optional[Verdict] = None
    stop_round = max(horizon, 1)

    for t in range(1, horizon + 1):
        due = [m for m in pending if m.sent_at + cfg.comm_delay <= t]
        pending = [m for m in pending if m.sent_at + cfg.comm_delay > t]
        inboxes: dict[str, list[Message]] = {}
        for msg in sorted(due, key=lambda m: (m.sender, m.seq)):
            inboxes.setdefault(msg.receiver, []).append(msg)
        for name in sorted(st.states):
            state = st.states[name]
            obs = tr.at(t, st.placements[name])
            stats = mt.OpStats()
            _, outbox, verdict = _round_fn(cfg)(
                state, t, obs, inboxes.get(name, []), stats, ctx
            )
            record.add_stats(t, name, stats)
            for msg in outbox:
                msg = replace(msg, seq=next(seq))
                record.add_message(t, msg.sender, msg.kind, mt.size_of(msg))
                pending.append(msg)
            if verdict is not None and verdict.is_final and reported is None:
                reported = verdict
        if cfg.algorithm in ("migr", "migrr"):
            record.active_counts.append(
                sum(
                    1
                    for s in st.states.values()
                    if isinstance(s, MigrationState) and s.is_active
                )
            )
        if reported is not None:
            stop_round = t
            break

    record.run_length = stop_round
    record.verdict = reported if reported is not None else UNKNOWN
    return SimRun(cfg.algorithm, record.verdict, stop_round, record)


def _round_fn(cfg: SimConfig):
    if cfg.algorithm == "orch":
        return orchestration_round
    if cfg.algorithm == "migr":
        return lambda *a: migration_round(*a, heuristic="migr")
    if cfg.algorithm == "migrr":
        return lambda *a: migration_round(*a, heuristic="migrr")
    return choreography_round
