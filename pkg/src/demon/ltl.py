"""LTL formulas, one-step progression, progression-based automaton synthesis,
and the choreography network-setup procedure.

States of synthesized automata are canonically simplified formulas, where the
Boolean level is normalized over its temporal/atomic leaves via a truth-table
cover; this keeps the progression closure finite for the supported fragment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from . import expr as ex
from .automaton import Specification, Transition
from .errors import (
    IncompleteEvent,
    NoAtomicPropositions,
    ParseError,
    SpecificationError,
    StateCapExceeded,
)
from .expr import BOTTOM, TOP, Verdict
from .store import Memory

_BOOL_TABLE_CAP = 12


@dataclass(frozen=True)
class Ltl:
    pass


@dataclass(frozen=True)
class LTrue(Ltl):
    pass


@dataclass(frozen=True)
class LFalse(Ltl):
    pass


@dataclass(frozen=True)
class Prop(Ltl):
    name: str


@dataclass(frozen=True)
class MonPlaceholder(Ltl):
    """Reference to the monitor delegated a split-off subformula."""

    ref: int


@dataclass(frozen=True)
class LNot(Ltl):
    operand: Ltl


@dataclass(frozen=True)
class Next(Ltl):
    operand: Ltl


@dataclass(frozen=True)
class Finally(Ltl):
    operand: Ltl


@dataclass(frozen=True)
class Globally(Ltl):
    operand: Ltl


@dataclass(frozen=True)
class LAnd(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True)
class LOr(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True)
class Until(Ltl):
    left: Ltl
    right: Ltl


LTRUE = LTrue()
LFALSE = LFalse()

_BOOL_NODES = (LNot, LAnd, LOr)
_UNARY = {Next: "X", Finally: "F", Globally: "G"}


def leaf_name(node: Ltl) -> str:
    if isinstance(node, Prop):
        return node.name
    if isinstance(node, MonPlaceholder):
        return f"m{node.ref}"
    raise TypeError(f"{node!r} is not an atomic leaf")


def atomic_leaves(phi: Ltl) -> list[str]:
    """Distinct proposition and placeholder names, sorted."""
    out: set[str] = set()

    def go(n: Ltl) -> None:
        if isinstance(n, (Prop, MonPlaceholder)):
            out.add(leaf_name(n))
        elif isinstance(n, (LNot, Next, Finally, Globally)):
            go(n.operand)
        elif isinstance(n, (LAnd, LOr, Until)):
            go(n.left)
            go(n.right)

    go(phi)
    return sorted(out)


def prop_occurrences(phi: Ltl) -> list[str]:
    """Proposition names, one entry per occurrence (placeholders excluded)."""
    out: list[str] = []

    def go(n: Ltl) -> None:
        if isinstance(n, Prop):
            out.append(n.name)
        elif isinstance(n, (LNot, Next, Finally, Globally)):
            go(n.operand)
        elif isinstance(n, (LAnd, LOr, Until)):
            go(n.left)
            go(n.right)

    go(phi)
    return out


# ---------------------------------------------------------------------------
# Text form: true false ! && || X F G U, precedence !,X,F,G > && > U > ||.


def ltl_text(phi: Ltl) -> str:
    def go(n: Ltl, parent: int) -> str:
        if isinstance(n, LTrue):
            return "true"
        if isinstance(n, LFalse):
            return "false"
        if isinstance(n, Prop):
            return n.name
        if isinstance(n, MonPlaceholder):
            return f"m{n.ref}"
        if isinstance(n, LNot):
            return "!" + go(n.operand, 4)
        if isinstance(n, (Next, Finally, Globally)):
            return _UNARY[type(n)] + " " + go(n.operand, 4)
        if isinstance(n, LAnd):
            s = f"{go(n.left, 3)} && {go(n.right, 3)}"
            return f"({s})" if parent > 3 else s
        if isinstance(n, Until):
            s = f"{go(n.left, 3)} U {go(n.right, 2)}"
            return f"({s})" if parent > 2 else s
        assert isinstance(n, LOr)
        s = f"{go(n.left, 1)} || {go(n.right, 1)}"
        return f"({s})" if parent > 1 else s

    return go(phi, 0)


_KEYWORDS = {"X": Next, "F": Finally, "G": Globally}


def parse_ltl(text: str) -> Ltl:
    tokens = _tokenize(text)
    pos = [0]

    def peek() -> Optional[str]:
        return tokens[pos[0]] if pos[0] < len(tokens) else None

    def take(expected: Optional[str] = None) -> str:
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected!r}, found {tok!r}")
        pos[0] += 1
        return tok

    def parse_or() -> Ltl:
        left = parse_until()
        while peek() == "||":
            take()
            left = LOr(left, parse_until())
        return left

    def parse_until() -> Ltl:
        left = parse_and()
        if peek() == "U":
            take()
            return Until(left, parse_until())
        return left

    def parse_and() -> Ltl:
        left = parse_unary()
        while peek() == "&&":
            take()
            left = LAnd(left, parse_unary())
        return left

    def parse_unary() -> Ltl:
        tok = peek()
        if tok == "!":
            take()
            return LNot(parse_unary())
        if tok in _KEYWORDS:
            take()
            return _KEYWORDS[tok](parse_unary())
        if tok == "(":
            take()
            inner = parse_or()
            take(")")
            return inner
        if tok == "true":
            take()
            return LTRUE
        if tok == "false":
            take()
            return LFALSE
        if tok is not None and (tok[0].isalpha() or tok[0] == "_") and tok not in ("U",):
            take()
            return Prop(tok)
        raise ParseError(f"expected a formula, found {tok!r}")

    result = parse_or()
    if peek() is not None:
        raise ParseError(f"trailing input {peek()!r} in formula")
    return result


def _tokenize(text: str) -> list[str]:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "!()":
            out.append(ch)
            i += 1
        elif text.startswith("&&", i):
            out.append("&&")
            i += 2
        elif text.startswith("||", i):
            out.append("||")
            i += 2
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(text[i:j])
            i = j
        else:
            raise ParseError(f"unexpected character {ch!r} in formula")
    return out


# ---------------------------------------------------------------------------
# Canonical simplification


def simplify_ltl(phi: Ltl) -> Ltl:
    """Equivalence-preserving simplification with a canonical Boolean level.

    Temporal operands are simplified recursively; constant temporal cases
    collapse (F/G/U of constants); the Boolean structure over the remaining
    leaves is rebuilt as a deterministic irredundant sum of products.
    """
    if isinstance(phi, (LTrue, LFalse, Prop, MonPlaceholder)):
        return phi
    if isinstance(phi, Next):
        return Next(simplify_ltl(phi.operand))
    if isinstance(phi, Finally):
        x = simplify_ltl(phi.operand)
        if isinstance(x, (LTrue, LFalse)):
            return x
        if isinstance(x, Finally):
            return x
        return Finally(x)
    if isinstance(phi, Globally):
        x = simplify_ltl(phi.operand)
        if isinstance(x, (LTrue, LFalse)):
            return x
        if isinstance(x, Globally):
            return x
        return Globally(x)
    if isinstance(phi, Until):
        left = simplify_ltl(phi.left)
        right = simplify_ltl(phi.right)
        if isinstance(right, (LTrue, LFalse)):
            return right
        if isinstance(left, LFalse):
            return right
        if isinstance(left, LTrue):
            return Finally(right) if not isinstance(right, Finally) else right
        return Until(left, right)
    return _bool_canonical(phi)


def _bool_canonical(phi: Ltl) -> Ltl:
    leaves: dict[str, Ltl] = {}

    def collect(n: Ltl) -> None:
        if isinstance(n, _BOOL_NODES):
            if isinstance(n, LNot):
                collect(n.operand)
            else:
                collect(n.left)
                collect(n.right)
        elif not isinstance(n, (LTrue, LFalse)):
            s = simplify_ltl(n)
            if isinstance(s, (LTrue, LFalse)) or isinstance(s, _BOOL_NODES):
                collect(s)
            else:
                leaves.setdefault(ltl_text(s), s)

    collect(phi)
    ordered = sorted(leaves)
    if len(ordered) > _BOOL_TABLE_CAP:
        return _bool_fold(phi)
    index = {text: i for i, text in enumerate(ordered)}
    atoms = [ex.plain(f"v{i:03d}") for i in range(len(ordered))]

    def skeleton(n: Ltl) -> ex.Expr:
        if isinstance(n, LTrue):
            return ex.TRUE
        if isinstance(n, LFalse):
            return ex.FALSE
        if isinstance(n, LNot):
            return ex.Not(skeleton(n.operand))
        if isinstance(n, LAnd):
            return ex.And(skeleton(n.left), skeleton(n.right))
        if isinstance(n, LOr):
            return ex.Or(skeleton(n.left), skeleton(n.right))
        s = simplify_ltl(n)
        if isinstance(s, (LTrue, LFalse)) or isinstance(s, _BOOL_NODES):
            return skeleton(s)
        return ex.Var(atoms[index[ltl_text(s)]])

    table = ex.truth_table(skeleton(phi), atoms)
    rows = 1 << len(ordered)
    if table == (1 << rows) - 1:
        return LTRUE
    if table == 0:
        return LFALSE
    terms = ex.qm_cover(table, len(ordered))
    built_terms = []
    for term in sorted(terms, key=lambda t: sorted(t)):
        literals = []
        for i, positive in sorted(term):
            leaf = leaves[ordered[i]]
            literals.append(leaf if positive else LNot(leaf))
        built_terms.append(_and_chain(literals))
    return _or_chain(built_terms)


def _and_chain(parts: list[Ltl]) -> Ltl:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = LAnd(p, out)
    return out


def _or_chain(parts: list[Ltl]) -> Ltl:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = LOr(p, out)
    return out


def _bool_fold(phi: Ltl) -> Ltl:
    if isinstance(phi, LNot):
        x = _bool_fold(phi.operand)
        if isinstance(x, LTrue):
            return LFALSE
        if isinstance(x, LFalse):
            return LTRUE
        if isinstance(x, LNot):
            return x.operand
        return LNot(x)
    if isinstance(phi, LAnd):
        l, r = _bool_fold(phi.left), _bool_fold(phi.right)
        if isinstance(l, LFalse) or isinstance(r, LFalse):
            return LFALSE
        if isinstance(l, LTrue):
            return r
        if isinstance(r, LTrue):
            return l
        return LAnd(l, r)
    if isinstance(phi, LOr):
        l, r = _bool_fold(phi.left), _bool_fold(phi.right)
        if isinstance(l, LTrue) or isinstance(r, LTrue):
            return LTRUE
        if isinstance(l, LFalse):
            return r
        if isinstance(r, LFalse):
            return l
        return LOr(l, r)
    return simplify_ltl(phi)


# ---------------------------------------------------------------------------
# Progression and synthesis


def progress(phi: Ltl, m: Memory) -> Ltl:
    """One-step LTL progression under a memory that must assign a final
    verdict to every atomic leaf of ``phi``; the result is simplified."""

    def value_of(name: str) -> Verdict:
        v = m.get(ex.plain(name))
        if v is None or not v.is_final:
            raise IncompleteEvent(f"no final verdict for {name!r}")
        return v

    def go(n: Ltl) -> Ltl:
        if isinstance(n, (LTrue, LFalse)):
            return n
        if isinstance(n, (Prop, MonPlaceholder)):
            return LTRUE if value_of(leaf_name(n)) is TOP else LFALSE
        if isinstance(n, LNot):
            return LNot(go(n.operand))
        if isinstance(n, LAnd):
            return LAnd(go(n.left), go(n.right))
        if isinstance(n, LOr):
            return LOr(go(n.left), go(n.right))
        if isinstance(n, Next):
            return n.operand
        if isinstance(n, Finally):
            return LOr(go(n.operand), n)
        if isinstance(n, Globally):
            return LAnd(go(n.operand), n)
        assert isinstance(n, Until)
        return LOr(go(n.right), LAnd(go(n.left), n))

    return simplify_ltl(go(phi))


def synthesize(phi: Ltl, state_cap: int = 512) -> Specification:
    """Build a deterministic, complete Moore automaton whose states are the
    simplified formulas reachable by progression.

    Transition labels disjoin the truth assignments (over the state's own
    leaves) that select each successor; the TRUE/FALSE states carry the
    final verdicts.
    """
    start = simplify_ltl(phi)
    names: dict[Ltl, str] = {}
    order: list[Ltl] = []

    texts: dict[str, Ltl] = {}

    def register(f: Ltl) -> str:
        if f not in names:
            if len(names) >= state_cap:
                raise StateCapExceeded(f"more than {state_cap} progression states")
            text = ltl_text(f)
            if texts.setdefault(text, f) != f:
                raise SpecificationError(f"ambiguous state rendering {text!r}")
            names[f] = text
            order.append(f)
        return names[f]

    register(start)
    transitions: list[Transition] = []
    i = 0
    while i < len(order):
        f = order[i]
        i += 1
        leaves = atomic_leaves(f)
        successors: dict[str, tuple[Ltl, list[tuple[Verdict, ...]]]] = {}
        for bits in itertools.product((TOP, BOTTOM), repeat=len(leaves)):
            memory = Memory({ex.plain(nm): v for nm, v in zip(leaves, bits)})
            succ = progress(f, memory)
            register(succ)
            entry = successors.setdefault(names[succ], (succ, []))
            entry[1].append(bits)
        for succ_name in sorted(successors):
            _, assignments = successors[succ_name]
            label = ex.disj_all(
                ex.conj_all(
                    ex.Var(ex.plain(nm)) if v is TOP else ex.Not(ex.Var(ex.plain(nm)))
                    for nm, v in zip(leaves, bits)
                )
                for bits in assignments
            )
            transitions.append(Transition(names[f], ex.simplify(label), succ_name))

    verdicts = {
        names[f]: TOP if isinstance(f, LTrue) else BOTTOM if isinstance(f, LFalse) else ex.UNKNOWN
        for f in order
    }
    return Specification(
        states=tuple(names[f] for f in order),
        initial=names[start],
        transitions=tuple(transitions),
        verdicts=verdicts,
    )


# ---------------------------------------------------------------------------
# Choreography network setup


def score(phi: Ltl, component: str, ap_owner: Mapping[str, str]) -> int:
    """Occurrences of propositions owned by ``component`` in ``phi``."""
    total = 0
    for name in prop_occurrences(phi):
        owner = ap_owner.get(name)
        if owner is None:
            raise SpecificationError(f"proposition {name!r} has no owning component")
        if owner == component:
            total += 1
    return total


def choose(phi: Ltl, ap_owner: Mapping[str, str]) -> str:
    """Component with the highest score; ties break lexicographically."""
    props = prop_occurrences(phi)
    if not props:
        raise NoAtomicPropositions(f"{ltl_text(phi)!r} has no atomic propositions")
    candidates = sorted({ap_owner[name] for name in props if name in ap_owner})
    if not candidates:
        raise SpecificationError("no proposition of the formula has a known owner")
    return min(candidates, key=lambda c: (-score(phi, c, ap_owner), c))


def split(
    phi: Ltl, phiprime: Ltl, cb: str, ap_owner: Mapping[str, str]
) -> tuple[str, str]:
    """Hosts for the two operands of a binary operator, one side staying on
    the base component ``cb``."""
    c1 = choose(phi, ap_owner)
    c2 = choose(phiprime, ap_owner)
    s1 = score(phi, cb, ap_owner)
    s2 = score(phiprime, cb, ap_owner)
    if c1 == cb and c2 == cb:
        return cb, cb
    if c1 != cb and (c2 == cb or s2 > s1):
        return c1, cb
    return cb, c2


@dataclass(frozen=True)
class MonitorData:
    id: int
    formula: Ltl
    component: str


@dataclass(frozen=True)
class MonitorDataTree:
    root: MonitorData
    extras: tuple[MonitorData, ...]
    edges: tuple[tuple[int, int], ...]  # (child id, parent id)

    def all_monitors(self) -> list[MonitorData]:
        return [self.root, *self.extras]


def net_chor(phi: Ltl, ap_owner: Mapping[str, str]) -> MonitorDataTree:
    """Split a formula into a tree of monitors, one subformula each.

    Binary operators whose operands prefer different components delegate one
    operand to a fresh monitor, leaving a placeholder behind; ids are
    allocated in traversal order with 0 for the root.
    """
    if not prop_occurrences(phi):
        raise NoAtomicPropositions(f"{ltl_text(phi)!r} has no atomic propositions")
    host = choose(phi, ap_owner)
    counter = itertools.count(1)

    def rebuild_unary(n: Ltl, child: Ltl) -> Ltl:
        return type(n)(child)

    def rebuild_binary(n: Ltl, left: Ltl, right: Ltl) -> Ltl:
        return type(n)(left, right)

    def netx(f: Ltl, id_c: int, c_h: str) -> tuple[Ltl, list[MonitorData], list[tuple[int, int]]]:
        if isinstance(f, (LTrue, LFalse, Prop, MonPlaceholder)):
            return f, [], []
        if isinstance(f, (LNot, Next, Finally, Globally)):
            inner, extras, edges = netx(f.operand, id_c, c_h)
            return rebuild_unary(f, inner), extras, edges
        assert isinstance(f, (LAnd, LOr, Until))
        left_props = bool(prop_occurrences(f.left))
        right_props = bool(prop_occurrences(f.right))
        if left_props and right_props:
            c1, c2 = split(f.left, f.right, c_h, ap_owner)
        else:
            c1 = c2 = c_h  # an operand without propositions cannot move
        if c1 == c_h and c2 == c_h:
            lf, ln, le = netx(f.left, id_c, c_h)
            rf, rn, re_ = netx(f.right, id_c, c_h)
            return rebuild_binary(f, lf, rf), ln + rn, le + re_
        if c1 == c_h:  # delegate the right operand
            id_n = next(counter)
            lf, ln, le = netx(f.left, id_c, c_h)
            rf, rn, re_ = netx(f.right, id_n, c2)
            child = MonitorData(id_n, rf, c2)
            return (
                rebuild_binary(f, lf, MonPlaceholder(id_n)),
                ln + rn + [child],
                le + re_ + [(id_n, id_c)],
            )
        # delegate the left operand
        id_n = next(counter)
        lf, ln, le = netx(f.left, id_n, c1)
        rf, rn, re_ = netx(f.right, id_c, c_h)
        child = MonitorData(id_n, lf, c1)
        return (
            rebuild_binary(f, MonPlaceholder(id_n), rf),
            ln + rn + [child],
            le + re_ + [(id_n, id_c)],
        )

    formula, extras, edges = netx(phi, 0, host)
    return MonitorDataTree(
        root=MonitorData(0, formula, host),
        extras=tuple(sorted(extras, key=lambda m: m.id)),
        edges=tuple(sorted(edges)),
    )
