"""Expression evaluation, closure, satisfaction, restriction, updates."""
import random

import pytest

from _gen import rand_env, rand_pred, rand_subst

from abclang.evaluator import (
    EvalError,
    RandomChooser,
    ScriptedChooser,
    all_runs,
    apply_updates,
    close,
    evaluate,
    is_closed,
    restrict,
    satisfies,
    substitute,
)
from abclang.parser import parse_expr_str, parse_pred_str
from abclang.terms import (
    Apply,
    Attr,
    Compare,
    EnumDomain,
    Env,
    FalsePred,
    Literal,
    Subst,
    TableFn,
    ThisAttr,
    UNDEF,
    Update,
    VBool,
    VFloat,
    VInt,
    VSet,
    VStr,
    VTuple,
    Var,
)


def env_of(**kw):
    return Env.of({k: v for k, v in kw.items()})


class TestEvaluate:
    def test_attr_lookup(self):
        assert evaluate(Attr("price", ()), env_of(price=VInt(100))) == VInt(100)

    def test_commission_arithmetic(self):
        # p * 0.10 over p bound to 200 must yield the float 20.0
        e = Apply("*", (Var("p"), Literal(VFloat(0.10))))
        v = evaluate(e, Env(), Subst.of({"p": VInt(200)}))
        assert v == VFloat(20.0)

    def test_indexed_decrement(self):
        e = parse_expr_str("room[3] - 1")
        env = Env.of({("room", (VInt(3),)): VInt(2)})
        assert evaluate(e, env) == VInt(1)

    def test_table_extern_lookup(self):
        tbl = TableFn.of({(VStr("rome"),): VInt(2)})
        e = Apply("get_hotels", (Literal(VStr("rome")),))
        assert evaluate(e, Env(), externs={"get_hotels": tbl}) == VInt(2)

    def test_table_extern_missing_entry_errors(self):
        tbl = TableFn.of({(VStr("rome"),): VInt(2)})
        e = Apply("get_hotels", (Literal(VStr("paris")),))
        with pytest.raises(EvalError):
            evaluate(e, Env(), externs={"get_hotels": tbl})

    def test_unbound_variable_errors(self):
        with pytest.raises(EvalError):
            evaluate(Var("q"), Env())

    def test_absent_attribute_errors(self):
        with pytest.raises(EvalError):
            evaluate(Attr("gone", ()), Env())

    def test_ordered_comparison_with_undef_errors(self):
        e = Apply("<", (Attr("a", ()), Literal(VInt(3))))
        with pytest.raises(EvalError):
            evaluate(e, env_of(a=UNDEF))

    def test_equality_with_undef_is_total(self):
        eq = Apply("=", (Attr("a", ()), Literal(UNDEF)))
        assert evaluate(eq, env_of(a=UNDEF)) == VBool(True)
        ne = Apply("!=", (Attr("a", ()), Literal(UNDEF)))
        assert evaluate(ne, env_of(a=VInt(1))) == VBool(True)

    def test_int_division_gives_float(self):
        assert evaluate(parse_expr_str("7 / 2"), Env()) == VFloat(3.5)

    def test_division_by_zero_errors(self):
        with pytest.raises(EvalError):
            evaluate(parse_expr_str("1 / 0"), Env())

    def test_diff_builtin(self):
        assert evaluate(parse_expr_str("diff(3, 10)"), Env()) == VInt(7)

    def test_set_membership(self):
        env = env_of(blist=VSet.of([VStr("b1")]))
        member = lambda s: Apply("in", (Literal(VStr(s)), Attr("blist", ())))
        assert evaluate(member("b1"), env) == VBool(True)
        assert evaluate(member("b2"), env) == VBool(False)

    def test_tuple_projection(self):
        e = Apply("proj", (Literal(VTuple((VInt(7), VInt(8)))), Literal(VInt(1))))
        assert evaluate(e, Env()) == VInt(8)

    def test_enum_domain_draw_via_chooser(self):
        dom = EnumDomain.of([VInt(1), VInt(2), VInt(3)])
        e = Apply("pick", ())
        results = all_runs(lambda ch: evaluate(e, Env(), externs={"pick": dom}, chooser=ch))
        assert sorted(results, key=lambda v: v.v) == [VInt(1), VInt(2), VInt(3)]
        # a seeded chooser draws deterministically
        v1 = evaluate(e, Env(), externs={"pick": dom}, chooser=RandomChooser(random.Random(3)))
        v2 = evaluate(e, Env(), externs={"pick": dom}, chooser=RandomChooser(random.Random(3)))
        assert v1 == v2

    def test_enum_domain_without_chooser_errors(self):
        dom = EnumDomain.of([VInt(1)])
        with pytest.raises(EvalError):
            evaluate(Apply("pick", ()), Env(), externs={"pick": dom})


class TestClose:
    def test_freezes_this_attr(self):
        p = Compare("=", Attr("id", ()), ThisAttr("favh", ()))
        c = close(p, env_of(favh=VStr("h1")))
        assert c == Compare("=", Attr("id", ()), Literal(VStr("h1")))
        assert is_closed(c)

    def test_leaves_bare_attr_symbolic(self):
        p = parse_pred_str('type = "Broker"')
        assert close(p, Env()) == p

    def test_identity_on_constants(self):
        assert close(FalsePred(), Env()) == FalsePred()

    def test_absent_this_attribute_errors(self):
        with pytest.raises(EvalError):
            close(parse_pred_str("this.gone = 1"), Env())

    def test_unbound_var_errors(self):
        # a Var node (as produced by binder bookkeeping, not by the
        # surface syntax) with no binding cannot be closed
        with pytest.raises(EvalError):
            close(Compare("=", Var("x"), Literal(VInt(1))), Env(), Subst())

    def test_resolves_vars_from_subst(self):
        p = parse_pred_str("id = x")
        c = close(p, Env(), Subst.of({"x": VInt(9)}))
        assert c == Compare("=", Attr("id", ()), Literal(VInt(9)))


class TestSatisfies:
    def test_matching_attr(self):
        assert satisfies(env_of(type=VStr("Broker")), parse_pred_str('type = "Broker"'))

    def test_failing_conjunct(self):
        env = env_of(type=VStr("Hotel"), locality=VStr("rome"))
        assert not satisfies(env, parse_pred_str('type = "Hotel" && locality = "paris"'))

    def test_absent_attribute_makes_atom_false(self):
        assert not satisfies(Env(), parse_pred_str("price <= 100"))
        # ... and negation of the false atom is true
        assert satisfies(Env(), parse_pred_str("!(price <= 100)"))

    def test_undef_ordered_comparison_is_false_not_error(self):
        assert not satisfies(env_of(a=UNDEF), parse_pred_str("a < 3"))

    def test_connectives(self):
        env = env_of(a=VInt(1))
        assert satisfies(env, parse_pred_str("a = 1 || a = 2"))
        assert not satisfies(env, parse_pred_str("ff"))
        assert satisfies(env, parse_pred_str("tt"))

    def test_atom_apply_via_boolean_table(self):
        near = TableFn.of({(VStr("rome"), VStr("rome")): VBool(True)})
        p = parse_pred_str('near(loc, "rome")')
        assert satisfies(env_of(loc=VStr("rome")), p, externs={"near": near})
        assert not satisfies(env_of(loc=VStr("paris")), p, externs={"near": near})


class TestSubstitute:
    def test_spec_example(self):
        p = parse_pred_str('x = "offer" && op <= p')
        s = Subst.of({"x": VStr("offer"), "op": VInt(90), "p": VInt(100)})
        expected = parse_pred_str('"offer" = "offer" && 90 <= 100')
        assert substitute(p, s) == expected

    def test_empty_substitution_is_identity(self):
        p = parse_pred_str("a < b && this.c = 1")
        assert substitute(p, Subst()) is p

    def test_unbound_stay_symbolic(self):
        p = parse_pred_str("a = x")
        assert substitute(p, Subst.of({"y": VInt(1)})) == p


class TestRestrict:
    def test_keeps_named_entries(self):
        env = env_of(id=VStr("h1"), roomPrice=VInt(80), secret=VInt(1))
        r = restrict(env, {"id", "roomPrice"})
        assert r == env_of(id=VStr("h1"), roomPrice=VInt(80))

    def test_empty_interface(self):
        assert restrict(env_of(a=VInt(1)), set()) == Env()

    def test_full_interface_is_identity(self):
        env = env_of(a=VInt(1), b=VInt(2))
        assert restrict(env, {"a", "b"}) == env

    def test_keeps_all_indices_of_a_name(self):
        env = Env.of({("room", (VInt(1),)): VInt(4), ("room", (VInt(2),)): VInt(5), ("x", ()): VInt(0)})
        r = restrict(env, {"room"})
        assert r.lookup("room", (VInt(1),)) == VInt(4)
        assert r.lookup("room", (VInt(2),)) == VInt(5)
        assert not r.has("x")


class TestApplyUpdates:
    def test_counter_increment(self):
        env = Env.of({("cnt", (VStr("c1"),)): VInt(0)})
        up = Update("cnt", (Literal(VStr("c1")),), parse_expr_str('cnt["c1"] + 1'))
        assert apply_updates(env, (up,)) == Env.of({("cnt", (VStr("c1"),)): VInt(1)})

    def test_flag_flip(self):
        env = env_of(send=VBool(True))
        up = Update("send", (), Literal(VBool(False)))
        assert apply_updates(env, (up,)) == env_of(send=VBool(False))

    def test_left_to_right_visibility(self):
        env = env_of(a=VInt(1))
        ups = (
            Update("a", (), Literal(VInt(2))),
            Update("b", (), Attr("a", ())),
        )
        assert apply_updates(env, ups) == env_of(a=VInt(2), b=VInt(2))

    def test_new_keys_created(self):
        out = apply_updates(Env(), (Update("fresh", (), Literal(VInt(7))),))
        assert out.lookup("fresh") == VInt(7)


class TestAlgebraicProperties:
    """Randomized closure/substitution laws (the large-count versions
    live in the acceptance suite)."""

    def test_close_idempotent(self):
        rng = random.Random(101)
        for _ in range(200):
            env, subst = rand_env(rng), rand_subst(rng)
            p = rand_pred(rng, env, subst)
            try:
                c = close(p, env, subst)
            except EvalError:
                continue
            assert close(c, env, subst) == c
            assert is_closed(c)

    def test_close_substitute_commute(self):
        rng = random.Random(102)
        for _ in range(200):
            env, subst = rand_env(rng), rand_subst(rng)
            p = rand_pred(rng, env, subst)
            try:
                lhs = close(substitute(p, subst), env, Subst())
                rhs = close(p, env, subst)
            except EvalError:
                continue
            assert lhs == rhs

    def test_satisfies_total_on_random_closed_predicates(self):
        rng = random.Random(103)
        for _ in range(200):
            env, subst = rand_env(rng), rand_subst(rng)
            p = rand_pred(rng, env, subst)
            try:
                c = close(p, env, subst)
            except EvalError:
                continue
            judge = rand_env(rng)
            assert satisfies(judge, c) in (True, False)
