"""Moore specification automata and their centralized/decentralized semantics.

A specification is a deterministic, complete Moore automaton whose
transitions carry Boolean expressions over plain atoms and whose states
carry verdicts.  A decentralized specification attaches one such automaton
per monitor to a component; labels may reference other monitors by name.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import expr as ex
from .errors import (
    ConflictingObservation,
    RoundBudgetExceeded,
    SpecificationError,
    ThresholdExceeded,
)
from .expr import BOTTOM, IDENTITY, TOP, UNKNOWN, Expr, Verdict
from .store import EMPTY_EVENT, Event, Memory, mem_from_event, memory_merge

VERDICT_NAMES = {"top": TOP, "bottom": BOTTOM, "unknown": UNKNOWN}


@dataclass(frozen=True)
class Transition:
    src: str
    label: Expr
    dst: str


@dataclass(frozen=True, eq=False)
class Specification:
    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...]
    verdicts: Mapping[str, Verdict]

    def __post_init__(self) -> None:
        if self.initial not in self.states:
            raise SpecificationError(f"initial state {self.initial!r} not in states")
        for q in self.states:
            if q not in self.verdicts:
                raise SpecificationError(f"state {q!r} has no verdict")
        for tr in self.transitions:
            if tr.src not in self.states or tr.dst not in self.states:
                raise SpecificationError(f"transition {tr.src}->{tr.dst} uses unknown state")

    def verdict_of(self, q: str) -> Verdict:
        return self.verdicts[q]

    def outgoing(self, q: str) -> list[Transition]:
        return [t for t in self.transitions if t.src == q]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Specification)
            and self.states == other.states
            and self.initial == other.initial
            and self.transitions == other.transitions
            and dict(self.verdicts) == dict(other.verdicts)
        )


def make_spec(
    states: Iterable[str],
    initial: str,
    transitions: Iterable[tuple[str, str, str]],
    verdicts: Mapping[str, str | Verdict],
) -> Specification:
    """Convenience constructor: transitions as (src, label text, dst)."""
    vmap = {
        q: v if isinstance(v, Verdict) else VERDICT_NAMES[v] for q, v in verdicts.items()
    }
    trs = tuple(Transition(src, ex.parse_expr(label), dst) for src, label, dst in transitions)
    return Specification(tuple(states), initial, trs, vmap)


@dataclass
class ValidationReport:
    determinism: list[tuple[str, Expr, Expr]] = field(default_factory=list)
    completeness: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.determinism and not self.completeness


def validate(a: Specification) -> ValidationReport:
    """Check determinism (no two co-satisfiable labels per state) and
    completeness (outgoing labels disjoin to a tautology) by enumeration."""
    report = ValidationReport()
    threshold = ex.exact_atom_threshold()
    for q in a.states:
        out = a.outgoing(q)
        state_atoms = sorted(
            {atom for t in out for atom in ex.atoms_of(t.label)}, key=ex.Atom.sort_key
        )
        if len(state_atoms) > threshold:
            raise ThresholdExceeded(
                f"state {q!r} labels use {len(state_atoms)} atoms (threshold {threshold})"
            )
        tables = [ex.truth_table(t.label, state_atoms) for t in out]
        full = (1 << (1 << len(state_atoms))) - 1
        for (t1, b1), (t2, b2) in itertools.combinations(zip(out, tables), 2):
            if b1 & b2:
                report.determinism.append((q, t1.label, t2.label))
        combined = 0
        for b in tables:
            combined |= b
        if combined != full:
            report.completeness.append(q)
    return report


def normalize(a: Specification) -> Specification:
    """Disjoin parallel edges so each ordered state pair has at most one label."""
    grouped: dict[tuple[str, str], Expr] = {}
    for t in a.transitions:
        key = (t.src, t.dst)
        grouped[key] = ex.disj(grouped[key], t.label) if key in grouped else t.label
    transitions = tuple(
        Transition(src, label, dst) for (src, dst), label in sorted(grouped.items())
    )
    return Specification(a.states, a.initial, transitions, dict(a.verdicts))


def max_label_size(a: Specification) -> int:
    """Largest atom count over the labels of the normalized automaton."""
    n = normalize(a)
    return max((ex.leaf_count(t.label) for t in n.transitions), default=0)


def step(
    a: Specification,
    q: str,
    evt: Event,
    diagnostics: Optional[list[str]] = None,
) -> str:
    """One transition over an event; empty events (and events satisfying no
    label) leave the state unchanged, the latter flagged as "stuck"."""
    if evt.is_empty:
        return q
    memory = mem_from_event(evt, IDENTITY)
    satisfied = [
        t for t in a.outgoing(q) if ex.eval_expr(t.label, memory) is TOP
    ]
    if len(satisfied) > 1:
        raise SpecificationError(
            f"state {q!r}: several labels satisfied at once (automaton not deterministic)"
        )
    if not satisfied:
        if diagnostics is not None:
            diagnostics.append(f"stuck at {q!r}: no label satisfied")
        return q
    return satisfied[0].dst


def run(a: Specification, events: Sequence[Event]) -> str:
    """Left fold of ``step`` from the initial state."""
    q = a.initial
    for evt in events:
        q = step(a, q, evt)
    return q


# ---------------------------------------------------------------------------
# Decentralized specifications


@dataclass(frozen=True, eq=False)
class DecentralizedSpec:
    monitor_labels: tuple[str, ...]
    monitors: Mapping[str, Specification]
    components: tuple[str, ...]
    attach: Mapping[str, str]
    root: str
    ap_owner: Mapping[str, str]

    def __post_init__(self) -> None:
        labels = set(self.monitor_labels)
        if self.root not in labels:
            raise SpecificationError(f"root {self.root!r} is not a declared monitor")
        if set(self.monitors) != labels:
            raise SpecificationError("monitor map does not match declared labels")
        collisions = labels & set(self.ap_owner)
        if collisions:
            raise SpecificationError(
                f"names used both as monitor and proposition: {sorted(collisions)}"
            )
        for name, comp in self.attach.items():
            if comp not in self.components:
                raise SpecificationError(f"monitor {name!r} attached to unknown component")
        for ap, comp in self.ap_owner.items():
            if comp not in self.components:
                raise SpecificationError(f"proposition {ap!r} owned by unknown component")
        for name in self.monitor_labels:
            spec = self.monitors[name]
            comp = self.attach[name]
            for t in spec.transitions:
                for atom in ex.atoms_of(t.label):
                    if atom.kind != "ap":
                        raise SpecificationError(
                            f"monitor {name!r} label uses encoded atom {atom}"
                        )
                    if atom.name in labels:
                        if atom.name == name:
                            raise SpecificationError(f"monitor {name!r} references itself")
                    elif self.ap_owner.get(atom.name) != comp:
                        raise SpecificationError(
                            f"monitor {name!r} on {comp!r} uses proposition "
                            f"{atom.name!r} it cannot observe"
                        )


def centralized_as_decentralized(a: Specification, component: str = "sys") -> DecentralizedSpec:
    """Wrap a centralized specification as the one-monitor special case."""
    aps = sorted(
        {atom.name for t in a.transitions for atom in ex.atoms_of(t.label)}
    )
    return DecentralizedSpec(
        monitor_labels=("g",),
        monitors={"g": a},
        components=(component,),
        attach={"g": component},
        root="g",
        ap_owner={ap: component for ap in aps},
    )


@dataclass(frozen=True)
class DecentralizedTrace:
    """Events per (round, component); rounds run from 1 to ``length``."""

    components: tuple[str, ...]
    length: int
    events: Mapping[tuple[int, str], Event]

    def __post_init__(self) -> None:
        owner: dict[str, str] = {}
        for (t, comp), evt in self.events.items():
            if not 1 <= t <= self.length:
                raise SpecificationError(f"event at round {t} outside [1, {self.length}]")
            if comp not in self.components:
                raise SpecificationError(f"event for unknown component {comp!r}")
            for ap in evt.propositions():
                if owner.setdefault(ap, comp) != comp:
                    raise ConflictingObservation(
                        f"proposition {ap!r} observed by {owner[ap]!r} and {comp!r}"
                    )

    def at(self, t: int, component: str) -> Event:
        return self.events.get((t, component), EMPTY_EVENT)

    def observed_owner(self) -> dict[str, str]:
        owner: dict[str, str] = {}
        for (_, comp), evt in sorted(self.events.items()):
            for ap in sorted(evt.propositions()):
                owner.setdefault(ap, comp)
        return owner

    def prefix(self, k: int) -> "DecentralizedTrace":
        return DecentralizedTrace(
            self.components,
            min(k, self.length),
            {(t, c): e for (t, c), e in self.events.items() if t <= k},
        )


def reconstruct_global(tr: DecentralizedTrace) -> list[Event]:
    """Per-round union of all components' events (the trace seen by a
    centralized observer)."""
    out = []
    for t in range(1, tr.length + 1):
        evt = EMPTY_EVENT
        seen: dict[str, str] = {}
        for comp in tr.components:
            local = tr.at(t, comp)
            for ap in local.propositions():
                if seen.setdefault(ap, comp) != comp:
                    raise ConflictingObservation(
                        f"round {t}: proposition {ap!r} reported by two components"
                    )
            evt = evt.union(local)
        out.append(evt)
    return out


def decentralized_run(
    d: DecentralizedSpec,
    tr: DecentralizedTrace,
    round_budget: Optional[int] = None,
) -> Verdict:
    """Reference semantics: evaluate the trace from the root monitor.

    Monitor references in a label at round ``i`` denote the referenced
    monitor's run over the trace suffix starting at ``i``; those runs are
    memoized on (monitor, round) since they are deterministic.  A cyclic
    reference chain raises RoundBudgetExceeded.
    """
    n = tr.length
    memo: dict[tuple[str, int], str] = {}
    in_progress: set[tuple[str, int]] = set()
    steps_left = [round_budget] if round_budget is not None else None

    def run_from(label: str, i: int) -> str:
        key = (label, i)
        if key in memo:
            return memo[key]
        if key in in_progress:
            raise RoundBudgetExceeded(
                f"cyclic monitor references while evaluating {label!r} at round {i}"
            )
        in_progress.add(key)
        spec = d.monitors[label]
        q = spec.initial
        j = i
        while True:
            q = step_one(label, spec, q, j)
            if j >= n:
                break
            j += 1
        in_progress.discard(key)
        memo[key] = q
        return q

    def step_one(label: str, spec: Specification, q: str, i: int) -> str:
        if steps_left is not None:
            steps_left[0] -= 1
            if steps_left[0] < 0:
                raise RoundBudgetExceeded("round budget exhausted")
        evt = tr.at(i, d.attach[label])
        if evt.is_empty:
            return q
        memory = mem_from_event(evt, IDENTITY)
        refs: set[str] = set()
        for t in spec.outgoing(q):
            refs |= ex.dep(t.label, d.monitor_labels)
        for ref in sorted(refs):
            q_final = run_from(ref, i)
            verdict = d.monitors[ref].verdict_of(q_final)
            memory = memory_merge(memory, Memory({ex.plain(ref): verdict}))
        satisfied = [
            t for t in spec.outgoing(q) if ex.eval_expr(t.label, memory) is TOP
        ]
        if len(satisfied) > 1:
            raise SpecificationError(f"monitor {label!r}: non-deterministic at {q!r}")
        return satisfied[0].dst if satisfied else q

    final = run_from(d.root, 1)
    return d.monitors[d.root].verdict_of(final)


def verdict_equivalent(
    d1: DecentralizedSpec,
    d2: DecentralizedSpec,
    traces: Iterable[DecentralizedTrace],
) -> Optional[DecentralizedTrace]:
    """First trace on which the two specifications disagree, or None."""
    for tr in traces:
        if decentralized_run(d1, tr) is not decentralized_run(d2, tr):
            return tr
    return None


def enumerate_full_traces(
    ap_owner: Mapping[str, str],
    components: Sequence[str],
    max_len: int,
) -> Iterator[DecentralizedTrace]:
    """All decentralized traces up to ``max_len`` in which every proposition
    is observed every round."""
    aps = sorted(ap_owner)
    assignments = list(itertools.product((TOP, BOTTOM), repeat=len(aps)))
    comps = tuple(components)
    for n in range(0, max_len + 1):
        for rounds in itertools.product(assignments, repeat=n):
            events: dict[tuple[int, str], Event] = {}
            for t, assign in enumerate(rounds, start=1):
                per_comp: dict[str, set[tuple[str, Verdict]]] = {}
                for ap, value in zip(aps, assign):
                    per_comp.setdefault(ap_owner[ap], set()).add((ap, value))
                for comp, obs in per_comp.items():
                    events[(t, comp)] = Event(frozenset(obs))
            yield DecentralizedTrace(comps, n, events)


# ---------------------------------------------------------------------------
# JSON file formats


def spec_to_dict(a: Specification) -> dict:
    return {
        "states": list(a.states),
        "initial": a.initial,
        "verdicts": {q: a.verdicts[q].value for q in a.states},
        "transitions": [
            {"from": t.src, "to": t.dst, "label": ex.to_text(t.label)}
            for t in a.transitions
        ],
    }


def spec_from_dict(data: dict) -> Specification:
    try:
        return make_spec(
            data["states"],
            data["initial"],
            [(t["from"], t["label"], t["to"]) for t in data["transitions"]],
            data["verdicts"],
        )
    except (KeyError, TypeError) as exc:
        raise SpecificationError(f"malformed specification object: {exc}") from exc


def dspec_to_dict(d: DecentralizedSpec) -> dict:
    return {
        "monitors": {name: spec_to_dict(d.monitors[name]) for name in d.monitor_labels},
        "attach": dict(d.attach),
        "root": d.root,
        "components": list(d.components),
        "ap_owner": dict(d.ap_owner),
    }


def dspec_from_dict(data: dict) -> DecentralizedSpec:
    try:
        monitors = {name: spec_from_dict(spec) for name, spec in data["monitors"].items()}
        components = data.get("components")
        if components is None:
            components = sorted(set(data["attach"].values()) | set(data["ap_owner"].values()))
        return DecentralizedSpec(
            monitor_labels=tuple(sorted(monitors)),
            monitors=monitors,
            components=tuple(components),
            attach=dict(data["attach"]),
            root=data["root"],
            ap_owner=dict(data["ap_owner"]),
        )
    except (KeyError, TypeError) as exc:
        raise SpecificationError(f"malformed decentralized specification: {exc}") from exc


def load_spec_file(path: str) -> Specification | DecentralizedSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "monitors" in data:
        return dspec_from_dict(data)
    return spec_from_dict(data)
