"""Boolean expressions over atoms: encoding, rewriting, simplification, evaluation.

Expressions are immutable trees that may share subtrees; every traversal here
memoizes on node identity so shared structure is visited once.  Exact
tautology/contradiction decisions use bitmask truth tables up to a
configurable atom threshold and fall back to a branching satisfiability
check above it.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .errors import ParseError, ThresholdExceeded

DEFAULT_EXACT_ATOMS = 16
_DNF_ATOM_CAP = 8
_SAT_NODE_BUDGET = 200_000


def exact_atom_threshold() -> int:
    """Atom limit for truth-table decisions; env DEMON_EXACT_ATOMS overrides."""
    raw = os.environ.get("DEMON_EXACT_ATOMS")
    if raw is None:
        return DEFAULT_EXACT_ATOMS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ParseError(f"DEMON_EXACT_ATOMS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ParseError("DEMON_EXACT_ATOMS must be >= 1")
    return value


class Verdict(enum.Enum):
    TOP = "top"
    BOTTOM = "bottom"
    UNKNOWN = "unknown"

    @property
    def is_final(self) -> bool:
        return self is not Verdict.UNKNOWN

    def __repr__(self) -> str:  # compact in test output
        return {"top": "T", "bottom": "F", "unknown": "?"}[self.value]


TOP = Verdict.TOP
BOTTOM = Verdict.BOTTOM
UNKNOWN = Verdict.UNKNOWN

# Replace-merge order for memories: UNKNOWN < BOTTOM < TOP.
VERDICT_RANK = {Verdict.UNKNOWN: 0, Verdict.BOTTOM: 1, Verdict.TOP: 2}

_KIND_RANK = {"ap": 0, "tap": 1, "mon": 2}


@dataclass(frozen=True)
class Atom:
    """An encoded observable.

    kind "ap" is a bare proposition, "tap" a (round, proposition) pair and
    "mon" a (round, monitor-id) reference.  Atoms are totally ordered by
    (kind, round, name).
    """

    kind: str
    t: int
    name: str

    def sort_key(self) -> tuple[int, int, str]:
        return (_KIND_RANK[self.kind], self.t, self.name)

    def __str__(self) -> str:
        if self.kind == "ap":
            return self.name
        if self.kind == "tap":
            return f"<{self.t},{self.name}>"
        return f"<{self.t},&{self.name}>"


@lru_cache(maxsize=None)
def plain(ap: str) -> Atom:
    return Atom("ap", 0, ap)


@lru_cache(maxsize=None)
def timed(t: int, ap: str) -> Atom:
    return Atom("tap", t, ap)


@lru_cache(maxsize=None)
def monref(t: int, mon_id: str) -> Atom:
    return Atom("mon", t, mon_id)


class Expr:
    """Base of the expression node hierarchy."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: Verdict  # TOP or BOTTOM only


@dataclass(frozen=True)
class Var(Expr):
    atom: Atom


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr


TRUE = Const(TOP)
FALSE = Const(BOTTOM)


def var(atom: Atom) -> Expr:
    return Var(atom)


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return FALSE if e.value is TOP else TRUE
    if isinstance(e, Not):
        return e.operand
    return Not(e)


def conj(left: Expr, right: Expr) -> Expr:
    if isinstance(left, Const):
        return right if left.value is TOP else FALSE
    if isinstance(right, Const):
        return left if right.value is TOP else FALSE
    if left is right:
        return left
    return And(left, right)


def disj(left: Expr, right: Expr) -> Expr:
    if isinstance(left, Const):
        return TRUE if left.value is TOP else right
    if isinstance(right, Const):
        return TRUE if right.value is TOP else left
    if left is right:
        return left
    return Or(left, right)


def conj_all(parts: Iterable[Expr]) -> Expr:
    out: Expr = TRUE
    for p in parts:
        out = conj(out, p)
    return out


def disj_all(parts: Iterable[Expr]) -> Expr:
    out: Expr = FALSE
    for p in parts:
        out = disj(out, p)
    return out


# ---------------------------------------------------------------------------
# Encoders


@dataclass(frozen=True)
class Encoder:
    """Maps plain atoms into the atom alphabet used by a monitoring algorithm.

    The identity encoder leaves propositions untouched.  The timestamping
    encoder tags propositions with a round number and turns names listed in
    ``monitor_names`` into monitor references.
    """

    kind: str  # "identity" | "timestamp"
    t: int = 0
    monitor_names: frozenset[str] = frozenset()

    def apply(self, atom: Atom) -> Atom:
        if self.kind == "identity":
            return atom
        if atom.kind != "ap":
            raise ValueError(f"timestamp encoder expects plain atoms, got {atom}")
        if atom.name in self.monitor_names:
            return monref(self.t, atom.name)
        return timed(self.t, atom.name)


IDENTITY = Encoder("identity")


def ts(t: int, monitor_names: Iterable[str] = ()) -> Encoder:
    return Encoder("timestamp", t, frozenset(monitor_names))


def encode(e: Expr, enc: Encoder) -> Expr:
    """Re-encode every leaf of ``e`` with ``enc``; structure is unchanged."""
    if enc.kind == "identity":
        return e
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out: Expr = node
        elif isinstance(node, Var):
            out = Var(enc.apply(node.atom))
        elif isinstance(node, Not):
            out = Not(go(node.operand))
        elif isinstance(node, And):
            out = And(go(node.left), go(node.right))
        else:
            assert isinstance(node, Or)
            out = Or(go(node.left), go(node.right))
        memo[key] = out
        return out

    return go(e)


# ---------------------------------------------------------------------------
# Structural traversals


def atoms_of(e: Expr) -> list[Atom]:
    """Distinct atoms of ``e`` in atom order."""
    seen: set[Atom] = set()
    visited: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in visited:
            continue
        visited.add(id(node))
        if isinstance(node, Var):
            seen.add(node.atom)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
    return sorted(seen, key=Atom.sort_key)


def dep(e: Expr, monitor_labels: Iterable[str] = ()) -> set[str]:
    """Names of all monitors referenced by ``e``.

    Monitor-reference atoms are always reported; plain atoms are reported
    when their name appears in ``monitor_labels`` (decentralized labels use
    bare monitor names).
    """
    labels = set(monitor_labels)
    out: set[str] = set()
    for atom in atoms_of(e):
        if atom.kind == "mon":
            out.add(atom.name)
        elif atom.kind == "ap" and atom.name in labels:
            out.add(atom.name)
    return out


def bottom_up(e: Expr, memo: dict, var_value, const_value, not_value, bin_value):
    """Iterative post-order evaluation over the expression DAG."""
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if isinstance(node, Const):
            memo[id(node)] = const_value(node)
        elif isinstance(node, Var):
            memo[id(node)] = var_value(node)
        elif isinstance(node, Not):
            if not ready:
                stack.append((node, True))
                stack.append((node.operand, False))
                continue
            memo[id(node)] = not_value(memo[id(node.operand)])
        else:
            assert isinstance(node, (And, Or))
            if not ready:
                stack.append((node, True))
                stack.append((node.left, False))
                stack.append((node.right, False))
                continue
            memo[id(node)] = bin_value(
                node, memo[id(node.left)], memo[id(node.right)]
            )
    return memo[id(e)]


def leaf_count(e: Expr) -> int:
    """Number of atom leaves counting repeats (tree size, sharing expanded)."""
    return bottom_up(
        e, {}, lambda _: 1, lambda _: 0, lambda n: n, lambda _, l, r: l + r
    )


def operator_count(e: Expr) -> int:
    """Number of NOT/AND/OR nodes (tree size, sharing expanded)."""
    return bottom_up(
        e, {}, lambda _: 0, lambda _: 0, lambda n: 1 + n, lambda _, l, r: 1 + l + r
    )


def const_leaf_count(e: Expr) -> int:
    return bottom_up(
        e, {}, lambda _: 0, lambda _: 1, lambda n: n, lambda _, l, r: l + r
    )


# ---------------------------------------------------------------------------
# Rewriting and folding


def rewrite(e: Expr, memory) -> Expr:
    """Replace every atom that ``memory`` maps to a final verdict by its constant.

    Atoms absent from the memory or mapped to UNKNOWN are preserved; the
    structure is otherwise untouched (no simplification).
    """
    memo: dict[int, Expr] = {}
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if isinstance(node, Const):
            memo[id(node)] = node
        elif isinstance(node, Var):
            v = memory.get(node.atom)
            memo[id(node)] = (
                (TRUE if v is TOP else FALSE) if v is not None and v.is_final else node
            )
        elif isinstance(node, Not):
            if not ready:
                stack.append((node, True))
                stack.append((node.operand, False))
                continue
            child = memo[id(node.operand)]
            memo[id(node)] = node if child is node.operand else Not(child)
        else:
            assert isinstance(node, (And, Or))
            if not ready:
                stack.append((node, True))
                stack.append((node.left, False))
                stack.append((node.right, False))
                continue
            l, r = memo[id(node.left)], memo[id(node.right)]
            if l is node.left and r is node.right:
                memo[id(node)] = node
            else:
                memo[id(node)] = And(l, r) if isinstance(node, And) else Or(l, r)
    return memo[id(e)]


def fold(e: Expr, memo: Optional[dict[int, Expr]] = None) -> Expr:
    """Bottom-up constant folding, double negation and identical-child collapse.

    Returns the original node whenever nothing changed underneath it, so
    shared subtrees stay shared across calls.  Iterative: encodings can
    nest thousands of levels deep.
    """
    if memo is None:
        memo = {}
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if isinstance(node, (Const, Var)):
            memo[id(node)] = node
        elif isinstance(node, Not):
            if not ready:
                stack.append((node, True))
                stack.append((node.operand, False))
                continue
            child = memo[id(node.operand)]
            if isinstance(child, (Const, Not)):
                memo[id(node)] = neg(child)
            else:
                memo[id(node)] = node if child is node.operand else Not(child)
        else:
            assert isinstance(node, (And, Or))
            if not ready:
                stack.append((node, True))
                stack.append((node.left, False))
                stack.append((node.right, False))
                continue
            l, r = memo[id(node.left)], memo[id(node.right)]
            if isinstance(l, Const) or isinstance(r, Const) or l is r:
                out = conj(l, r) if isinstance(node, And) else disj(l, r)
            elif l is node.left and r is node.right:
                out = node
            else:
                out = And(l, r) if isinstance(node, And) else Or(l, r)
            memo[id(node)] = out
    return memo[id(e)]


def rewrite_fold(e: Expr, memory, memo: Optional[dict[int, Expr]] = None) -> Expr:
    """Fused rewrite-then-fold pass, identity-preserving like :func:`fold`;
    ``memo`` may be shared across expressions evaluated against the same
    memory.  Iterative, and short-circuits a branch once the other one
    determines the connective."""
    if memo is None:
        memo = {}
    get = memory.get
    # phase 0: expand left child; 1: maybe expand right; 2: combine
    stack: list[tuple[Expr, int]] = [(e, 0)]
    while stack:
        node, phase = stack.pop()
        if id(node) in memo:
            continue
        if isinstance(node, Const):
            memo[id(node)] = node
        elif isinstance(node, Var):
            v = get(node.atom)
            memo[id(node)] = (
                (TRUE if v is TOP else FALSE) if v is not None and v.is_final else node
            )
        elif isinstance(node, Not):
            if phase == 0:
                stack.append((node, 2))
                stack.append((node.operand, 0))
                continue
            child = memo[id(node.operand)]
            if isinstance(child, (Const, Not)):
                memo[id(node)] = neg(child)
            else:
                memo[id(node)] = node if child is node.operand else Not(child)
        else:
            assert isinstance(node, (And, Or))
            if phase == 0:
                stack.append((node, 1))
                stack.append((node.left, 0))
                continue
            l = memo[id(node.left)]
            if phase == 1:
                if isinstance(node, And) and l is FALSE:
                    memo[id(node)] = FALSE
                    continue
                if isinstance(node, Or) and l is TRUE:
                    memo[id(node)] = TRUE
                    continue
                stack.append((node, 2))
                stack.append((node.right, 0))
                continue
            r = memo[id(node.right)]
            if isinstance(l, Const) or isinstance(r, Const) or l is r:
                out = conj(l, r) if isinstance(node, And) else disj(l, r)
            elif l is node.left and r is node.right:
                out = node
            else:
                out = And(l, r) if isinstance(node, And) else Or(l, r)
            memo[id(node)] = out
    return memo[id(e)]


# ---------------------------------------------------------------------------
# Truth tables and exact decisions


def truth_table(e: Expr, atoms: list[Atom]) -> int:
    """Truth column of ``e`` over ``atoms`` packed into an int (bit j = row j)."""
    k = len(atoms)
    rows = 1 << k
    full = (1 << rows) - 1
    columns: dict[Atom, int] = {}
    for i, a in enumerate(atoms):
        width = 1 << (i + 1)
        col = ((1 << (1 << i)) - 1) << (1 << i)  # upper half of one period
        while width < rows:
            col |= col << width
            width <<= 1
        columns[a] = col

    return bottom_up(
        e,
        {},
        lambda node: columns[node.atom],
        lambda node: full if node.value is TOP else 0,
        lambda n: full ^ n,
        lambda node, l, r: (l & r) if isinstance(node, And) else (l | r),
    )


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n


class _BudgetExhausted(Exception):
    pass


def _satisfiable(e: Expr, budget: _Budget) -> bool:
    """Branching satisfiability with folding as unit propagation; ``e`` must
    already be folded.  Branches on the chronologically first atom, which
    collapses the per-round structure of execution encodings quickly."""
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Const):
            if node.value is TOP:
                return True
            continue
        if budget.left <= 0:
            raise _BudgetExhausted
        budget.left -= 1
        atom = atoms_of(node)[0]
        stack.append(rewrite_fold(node, {atom: BOTTOM}))
        stack.append(rewrite_fold(node, {atom: TOP}))
    return False


def decide_constant(e: Expr) -> Optional[Verdict]:
    """Tautology/contradiction decision for a folded, constant-free ``e``.

    Returns TOP for tautologies, BOTTOM for unsatisfiable expressions, and
    None otherwise.  Exact (truth table) up to the atom threshold; above it
    a budgeted branching check runs, and blowing the budget reports None,
    so oversized undetermined conditions resolve later instead of stalling.
    """
    atoms = atoms_of(e)
    k = len(atoms)
    if k <= exact_atom_threshold():
        table = truth_table(e, atoms)
        full = (1 << (1 << k)) - 1
        if table == full:
            return TOP
        if table == 0:
            return BOTTOM
        return None
    budget = _Budget(_SAT_NODE_BUDGET)
    try:
        if not _satisfiable(e, budget):
            return BOTTOM
        if not _satisfiable(fold(Not(e)), budget):
            return TOP
    except _BudgetExhausted:
        return None
    return None


def qm_cover(table: int, k: int) -> list[list[tuple[int, bool]]]:
    """Irredundant sum-of-products cover of a truth table over k variables.

    Quine-McCluskey prime implicants followed by a deterministic greedy
    cover.  Each returned term is a list of (variable index, polarity).
    """
    rows = 1 << k
    minterms = [j for j in range(rows) if (table >> j) & 1]
    if not minterms or len(minterms) == rows:
        raise ValueError("constant function has no cover")
    # Implicant = (values, mask) where mask bits are "don't care".
    current: set[tuple[int, int]] = {(m, 0) for m in minterms}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        nxt: set[tuple[int, int]] = set()
        grouped: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for values, mask in current:
            grouped.setdefault((mask, bin(values).count("1")), []).append((values, mask))
        for (mask, ones), members in grouped.items():
            partners = grouped.get((mask, ones + 1), [])
            for values, _ in members:
                for pv, _ in partners:
                    diff = values ^ pv
                    if diff and (diff & (diff - 1)) == 0:
                        nxt.add((values & ~diff, mask | diff))
                        merged.add((values, mask))
                        merged.add((pv, mask))
        primes |= current - merged
        current = nxt

    def covers(imp: tuple[int, int], m: int) -> bool:
        values, mask = imp
        return (m & ~mask) == values

    ordered = sorted(primes)
    chosen: list[tuple[int, int]] = []
    uncovered = set(minterms)
    # Essential primes first.
    for m in sorted(uncovered):
        hits = [p for p in ordered if covers(p, m)]
        if len(hits) == 1 and hits[0] not in chosen:
            chosen.append(hits[0])
    for p in chosen:
        uncovered -= {m for m in uncovered if covers(p, m)}
    while uncovered:
        best = max(
            ordered,
            key=lambda p: (len({m for m in uncovered if covers(p, m)}), [-v for v in p]),
        )
        chosen.append(best)
        uncovered -= {m for m in uncovered if covers(best, m)}

    terms = []
    for values, mask in chosen:
        term = [(i, bool((values >> i) & 1)) for i in range(k) if not (mask >> i) & 1]
        terms.append(term)
    return terms


def _dnf_from_cover(terms: list[list[tuple[int, bool]]], atoms: list[Atom]) -> Expr:
    parts = []
    for term in terms:
        lits = [Var(atoms[i]) if pos else Not(Var(atoms[i])) for i, pos in sorted(term)]
        parts.append(conj_all(lits) if lits else TRUE)
    return disj_all(parts)


def simplify(e: Expr, light: bool = False) -> Expr:
    """Return an expression Boolean-equivalent to ``e``.

    Tautologies within the atom threshold become TRUE and contradictions
    FALSE (above it a budgeted check is attempted, skipped entirely when
    ``light``); other results are constant-free.  Small expressions are
    additionally rebuilt as an irredundant sum of products when that is no
    larger.
    """
    f = fold(e)
    if isinstance(f, Const):
        return f
    if isinstance(f, Var) or (isinstance(f, Not) and isinstance(f.operand, Var)):
        return f
    atoms = atoms_of(f)
    k = len(atoms)
    if k <= exact_atom_threshold():
        table = truth_table(f, atoms)
        full = (1 << (1 << k)) - 1
        if table == full:
            return TRUE
        if table == 0:
            return FALSE
        if k <= _DNF_ATOM_CAP:
            dnf = _dnf_from_cover(qm_cover(table, k), atoms)
            if (leaf_count(dnf), operator_count(dnf)) <= (leaf_count(f), operator_count(f)):
                return dnf
        return f
    if light:
        return f
    verdict = decide_constant(f)
    if verdict is TOP:
        return TRUE
    if verdict is BOTTOM:
        return FALSE
    return f


def eval_expr(e: Expr, memory, stats=None, memo: Optional[dict[int, Expr]] = None) -> Verdict:
    """Verdict of ``e`` under ``memory``: TOP/BOTTOM iff the rewritten
    expression is a tautology/contradiction, UNKNOWN otherwise."""
    if stats is not None:
        stats.evaluations += 1
    r = rewrite_fold(e, memory, memo)
    if isinstance(r, Const):
        return r.value
    verdict = decide_constant(r)
    return verdict if verdict is not None else UNKNOWN


def equivalent(e1: Expr, e2: Expr) -> bool:
    """Exact Boolean-function equality over the union of both atom sets."""
    atoms = sorted(set(atoms_of(e1)) | set(atoms_of(e2)), key=Atom.sort_key)
    if len(atoms) > exact_atom_threshold():
        raise ThresholdExceeded(
            f"equivalence over {len(atoms)} atoms exceeds threshold {exact_atom_threshold()}"
        )
    return truth_table(e1, atoms) == truth_table(e2, atoms)


# ---------------------------------------------------------------------------
# Text format: identifiers, true/false, !, &&, ||, parentheses.


def to_text(e: Expr) -> str:
    def go(node: Expr, parent_prec: int) -> str:
        if isinstance(node, Const):
            return "true" if node.value is TOP else "false"
        if isinstance(node, Var):
            return str(node.atom)
        if isinstance(node, Not):
            return "!" + go(node.operand, 3)
        if isinstance(node, And):
            s = f"{go(node.left, 2)} && {go(node.right, 2)}"
            return f"({s})" if parent_prec > 2 else s
        assert isinstance(node, Or)
        s = f"{go(node.left, 1)} || {go(node.right, 1)}"
        return f"({s})" if parent_prec > 1 else s

    return go(e, 0)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(self.text):
            return ""
        ch = self.text[self.pos]
        if ch in "!()":
            return ch
        if self.text.startswith("&&", self.pos):
            return "&&"
        if self.text.startswith("||", self.pos):
            return "||"
        if ch.isalpha() or ch == "_":
            end = self.pos
            while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                end += 1
            return self.text[self.pos : end]
        raise ParseError(f"unexpected character {ch!r} in expression")

    def take(self, tok: str) -> None:
        got = self.peek()
        if got != tok:
            raise ParseError(f"expected {tok!r}, found {got!r}")
        self.pos += len(tok)


def parse_expr(text: str) -> Expr:
    """Parse the expression grammar (precedence: ! > && > ||) over plain atoms."""
    toks = _Tokens(text)

    def parse_or() -> Expr:
        left = parse_and()
        while toks.peek() == "||":
            toks.take("||")
            left = Or(left, parse_and())
        return left

    def parse_and() -> Expr:
        left = parse_unary()
        while toks.peek() == "&&":
            toks.take("&&")
            left = And(left, parse_unary())
        return left

    def parse_unary() -> Expr:
        tok = toks.peek()
        if tok == "!":
            toks.take("!")
            return Not(parse_unary())
        if tok == "(":
            toks.take("(")
            inner = parse_or()
            toks.take(")")
            return inner
        if tok == "true":
            toks.take("true")
            return TRUE
        if tok == "false":
            toks.take("false")
            return FALSE
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            toks.take(tok)
            return Var(plain(tok))
        raise ParseError(f"expected an expression, found {tok!r}")

    result = parse_or()
    if toks.peek():
        raise ParseError(f"trailing input {toks.peek()!r} in expression")
    return result
