import random

import pytest
from hypothesis import given, settings, strategies as st

from demon import expr as ex
from demon.errors import ParseError, ThresholdExceeded
from demon.store import Memory

from conftest import random_expr, random_memory

A, B, C = ex.Var(ex.plain("a")), ex.Var(ex.plain("b")), ex.Var(ex.plain("c"))


def mem(**kv):
    return Memory({ex.plain(k): v for k, v in kv.items()})


class TestEncode:
    def test_identity(self):
        e = ex.Or(A, B)
        assert ex.encode(e, ex.IDENTITY) is e

    def test_timestamp(self):
        e = ex.Or(A, B)
        enc = ex.encode(e, ex.ts(1))
        assert enc == ex.Or(ex.Var(ex.timed(1, "a")), ex.Var(ex.timed(1, "b")))

    def test_timestamp_negated(self):
        assert ex.encode(ex.Not(B), ex.ts(2)) == ex.Not(ex.Var(ex.timed(2, "b")))

    def test_monitor_reference(self):
        e = ex.And(ex.Var(ex.plain("m1")), A)
        enc = ex.encode(e, ex.ts(3, {"m1"}))
        assert enc == ex.And(ex.Var(ex.monref(3, "m1")), ex.Var(ex.timed(3, "a")))

    def test_distinct_rounds_share_no_atoms(self):
        e = ex.Or(A, ex.Not(B))
        a1 = set(ex.atoms_of(ex.encode(e, ex.ts(1))))
        a2 = set(ex.atoms_of(ex.encode(e, ex.ts(2))))
        assert not a1 & a2


class TestRewrite:
    def test_partial_memory_keeps_unknown_atom(self):
        e = ex.And(ex.Or(A, B), C)
        r = ex.rewrite(e, mem(a=ex.TOP, b=ex.BOTTOM))
        assert r == ex.And(ex.Or(ex.TRUE, ex.FALSE), C)

    def test_empty_memory_is_identity(self):
        e = ex.And(ex.Or(A, B), C)
        assert ex.rewrite(e, Memory()) is e

    def test_negated_atom(self):
        assert ex.rewrite(ex.Not(A), mem(a=ex.TOP)) == ex.Not(ex.TRUE)

    def test_unknown_verdict_not_substituted(self):
        assert ex.rewrite(A, mem(a=ex.UNKNOWN)) is A

    def test_idempotent(self):
        rng = random.Random(7)
        atoms = [ex.plain(n) for n in "abcd"]
        for _ in range(200):
            e = random_expr(rng, atoms)
            m = random_memory(rng, atoms)
            once = ex.rewrite(e, m)
            assert ex.rewrite(once, m) == once


class TestSimplify:
    def test_tautology(self):
        assert ex.simplify(ex.Or(B, ex.Not(B))) == ex.TRUE

    def test_fold_constants(self):
        e = ex.And(ex.Or(ex.TRUE, ex.FALSE), C)
        assert ex.simplify(e) == C

    def test_contradiction(self):
        assert ex.simplify(ex.And(A, ex.Not(A))) == ex.FALSE

    def test_no_constant_leaves(self):
        rng = random.Random(13)
        atoms = [ex.plain(n) for n in "abc"]
        for _ in range(300):
            s = ex.simplify(random_expr(rng, atoms))
            if s not in (ex.TRUE, ex.FALSE):
                assert ex.const_leaf_count(s) == 0

    def test_preserves_function(self):
        rng = random.Random(29)
        atoms = [ex.plain(n) for n in "abcd"]
        for _ in range(300):
            e = random_expr(rng, atoms)
            assert ex.equivalent(e, ex.simplify(e))


class TestEval:
    def test_unresolved(self):
        e = ex.And(ex.Or(A, B), C)
        assert ex.eval_expr(e, mem(a=ex.TOP, b=ex.BOTTOM)) is ex.UNKNOWN

    def test_timed(self):
        e = ex.Or(ex.Var(ex.timed(1, "a")), ex.Var(ex.timed(1, "b")))
        m = Memory({ex.timed(1, "a"): ex.TOP, ex.timed(1, "b"): ex.BOTTOM})
        assert ex.eval_expr(e, m) is ex.TOP

    def test_constant(self):
        assert ex.eval_expr(ex.TRUE, Memory()) is ex.TOP

    def test_soundness_under_extensions(self):
        # A final eval verdict must agree with every total extension.
        rng = random.Random(3)
        atoms = [ex.plain(n) for n in "abc"]
        checked = 0
        for _ in range(300):
            e = random_expr(rng, atoms)
            m = random_memory(rng, atoms, density=0.5)
            v = ex.eval_expr(e, m)
            if v is ex.UNKNOWN:
                continue
            checked += 1
            free = [a for a in ex.atoms_of(e) if m.get(a) is None]
            import itertools

            for bits in itertools.product((ex.TOP, ex.BOTTOM), repeat=len(free)):
                full = Memory({**dict(m.items()), **dict(zip(free, bits))})
                assert ex.eval_expr(e, full) is v
        assert checked > 20


class TestAtomsDep:
    def test_atoms_sorted_dedup(self):
        e = ex.And(A, ex.Or(A, B))
        assert ex.atoms_of(e) == [ex.plain("a"), ex.plain("b")]

    def test_constants_have_no_atoms(self):
        assert ex.atoms_of(ex.TRUE) == []

    def test_timed_atoms(self):
        e = ex.Or(ex.Var(ex.timed(1, "a")), ex.Var(ex.timed(1, "b")))
        assert ex.atoms_of(e) == [ex.timed(1, "a"), ex.timed(1, "b")]

    def test_dep_with_monitor_context(self):
        e = ex.And(ex.Var(ex.plain("m1")), ex.Var(ex.plain("a0")))
        assert ex.dep(e, {"m1"}) == {"m1"}

    def test_dep_plain_only(self):
        assert ex.dep(ex.Or(A, B)) == set()

    def test_dep_union(self):
        e = ex.Or(ex.Not(ex.Var(ex.plain("m1"))),
                  ex.And(ex.Var(ex.plain("m2")), ex.Var(ex.plain("m1"))))
        assert ex.dep(e, {"m1", "m2"}) == {"m1", "m2"}

    def test_dep_monref_needs_no_context(self):
        assert ex.dep(ex.Var(ex.monref(2, "m7"))) == {"m7"}


class TestEquivalent:
    def test_commutativity(self):
        assert ex.equivalent(ex.Or(A, B), ex.Or(B, A))

    def test_absorption(self):
        assert ex.equivalent(A, ex.And(A, ex.Or(A, B)))

    def test_complement(self):
        assert not ex.equivalent(A, ex.Not(A))

    def test_threshold(self):
        wide = ex.conj_all(ex.Var(ex.plain(f"x{i}")) for i in range(20))
        with pytest.raises(ThresholdExceeded):
            ex.equivalent(wide, wide)


class TestParser:
    def test_precedence(self):
        e = ex.parse_expr("!a && b || c")
        assert e == ex.Or(ex.And(ex.Not(A), B), C)

    def test_parens(self):
        assert ex.parse_expr("!(a || b)") == ex.Not(ex.Or(A, B))

    def test_roundtrip(self):
        # parse . text is the identity on rendered text (structure may
        # re-associate) and preserves the Boolean function
        rng = random.Random(11)
        atoms = [ex.plain(n) for n in "abc"]
        for _ in range(200):
            e = random_expr(rng, atoms)
            back = ex.parse_expr(ex.to_text(e))
            assert ex.to_text(back) == ex.to_text(e)
            assert ex.equivalent(back, e)

    @pytest.mark.parametrize("bad", ["", "a &&", "a || || b", "(a", "a b", "1x"])
    def test_errors(self, bad):
        with pytest.raises(ParseError):
            ex.parse_expr(bad)


@st.composite
def exprs(draw):
    atoms = [ex.plain(n) for n in "abcd"]
    node = draw(
        st.recursive(
            st.sampled_from([ex.Var(a) for a in atoms] + [ex.TRUE, ex.FALSE]),
            lambda kids: st.one_of(
                kids.map(ex.Not),
                st.tuples(kids, kids).map(lambda lr: ex.And(*lr)),
                st.tuples(kids, kids).map(lambda lr: ex.Or(*lr)),
            ),
            max_leaves=12,
        )
    )
    return node


@given(exprs())
@settings(max_examples=150, deadline=None)
def test_simplify_equivalence_property(e):
    assert ex.equivalent(e, ex.simplify(e))


@given(exprs(), st.integers(0, 3))
@settings(max_examples=150, deadline=None)
def test_rewrite_idempotence_property(e, seed):
    m = random_memory(random.Random(seed), [ex.plain(n) for n in "abcd"])
    once = ex.rewrite(e, m)
    assert ex.rewrite(once, m) == once


def test_env_threshold_override(monkeypatch):
    wide = ex.conj_all(ex.Var(ex.plain(f"x{i}")) for i in range(5))
    assert ex.equivalent(wide, wide)
    monkeypatch.setenv("DEMON_EXACT_ATOMS", "4")
    assert ex.exact_atom_threshold() == 4
    with pytest.raises(ThresholdExceeded):
        ex.equivalent(wide, wide)
    monkeypatch.setenv("DEMON_EXACT_ATOMS", "banana")
    with pytest.raises(ParseError):
        ex.exact_atom_threshold()


def test_deep_expressions_do_not_overflow():
    # chains far deeper than the interpreter recursion limit
    deep = ex.Var(ex.plain("x0"))
    for i in range(1, 5000):
        deep = ex.Or(ex.And(deep, ex.Var(ex.plain(f"x{i % 40}"))), ex.Var(ex.plain("y")))
    assert ex.leaf_count(deep) > 0
    assert ex.rewrite(deep, Memory()) is deep
    m = mem(y=ex.TOP)
    assert ex.eval_expr(deep, m) is ex.TOP  # y short-circuits every level
    folded = ex.fold(deep)
    assert ex.eval_expr(folded, m) is ex.TOP
