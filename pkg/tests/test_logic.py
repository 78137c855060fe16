import pytest
from hypothesis import given, strategies as st

from henkin_dichotomy.enumeration import SentenceEnumeration, alpha_normal, pack, unpack
from henkin_dichotomy.logic import (All, And, Const, Eq, Ex, FormulaError, Not, ParseError, Rel,
                                    Var, close_existential, conj, conjuncts, fresh_vars,
                                    lift_binders, parse_formula, print_formula, quantifier_rank,
                                    rename_free_safe, substitute_constants, walk)

from strategies import LANG, formulas, sentences


# --- parsing and printing ---------------------------------------------------

def test_parse_stage_zero_sentence():
    f = parse_formula("(= (c 0) (c 0))")
    assert f == Eq(Const(0), Const(0))
    assert print_formula(f) == "(= (c 0) (c 0))"


def test_parse_indexed_relation():
    f = parse_formula("(ex (v 0) (rel R 3 (v 0)))")
    assert f == Ex(0, Rel("R", (3,), (Var(0),)))


def test_parse_universal_implication():
    text = "(all (v 1) (imp (rel U 2 (v 1)) (= (v 1) (v 1))))"
    f = parse_formula(text)
    assert isinstance(f, All) and f.var == 1
    assert print_formula(f) == text


@pytest.mark.parametrize("text", ["(= (c 0) (c 0)", "(and (= (v 0) (v 0)))", "(rel)", "(= (x 0) (c 0))",
                                  "(= (c 0) (c 0)) extra"])
def test_syntax_errors_report_offset(text):
    with pytest.raises(ParseError) as exc:
        parse_formula(text)
    assert "byte" in str(exc.value)


def test_loose_whitespace_prints_canonically():
    assert print_formula(parse_formula("(=  (c 0)\n (c 0))")) == "(= (c 0) (c 0))"


def test_unknown_family_and_arity():
    with pytest.raises(FormulaError):
        parse_formula("(rel Q (v 0))", LANG)
    with pytest.raises(FormulaError):
        parse_formula("(rel L (v 0))", LANG)
    with pytest.raises(FormulaError):
        parse_formula("(rel R (v 0))", LANG)


def test_clashing_binder_is_renamed():
    f = parse_formula("(and (= (v 0) (v 0)) (ex (v 0) (= (v 0) (v 0))))")
    inner = f.right
    assert inner.var != 0 and f.free_vars == {0}


@given(formulas)
def test_print_parse_round_trip(f):
    text = print_formula(f)
    once = print_formula(parse_formula(text, LANG))
    assert print_formula(parse_formula(once, LANG)) == once


@given(formulas)
def test_parse_preserves_free_variables_and_constants(f):
    g = parse_formula(print_formula(f), LANG)
    assert g.free_vars == f.free_vars and g.constants == f.constants


# --- substitution -----------------------------------------------------------

def test_substitute_constants_example():
    f = And(Rel("R", (1,), (Const(2),)), Eq(Const(2), Const(0)))
    g = substitute_constants(f, [2], [1])
    assert g == And(Rel("R", (1,), (Var(1),)), Eq(Var(1), Const(0)))


def test_vacuous_substitution():
    f = Rel("R", (1,), (Const(2),))
    assert substitute_constants(f, [5], [0]) == f


def test_substitution_rejects_bad_arguments():
    f = Ex(0, Rel("R", (1,), (Const(2),)))
    with pytest.raises(FormulaError):
        substitute_constants(f, [2], [0])
    with pytest.raises(FormulaError):
        substitute_constants(f, [2, 2], [3, 4])


@given(formulas)
def test_substitution_never_captures(f):
    consts = sorted(f.constants)
    vs = fresh_vars(len(consts), f)
    g = substitute_constants(f, consts, vs)
    assert not g.constants
    assert g.free_vars == f.free_vars | set(vs)


def test_split_of_theta_into_disjoint_tuples():
    theta = conj([Rel("R", (0,), (Const(1),)), Not(Eq(Const(1), Const(3))), Eq(Const(0), Const(0))])
    outs, others = [3], [0, 1]
    vs = fresh_vars(3, theta)
    g = substitute_constants(theta, outs + others, vs)
    assert not g.constants and g.free_vars == set(vs)


@given(formulas, st.integers(0, 3), st.integers(0, 3))
def test_rename_free_safe_avoids_capture(f, a, b):
    g = rename_free_safe(f, {a: b})
    expected = (f.free_vars - {a}) | ({b} if a in f.free_vars else set())
    assert g.free_vars == expected


def test_lift_binders():
    f = Ex(0, All(1, Rel("L", (), (Var(0), Var(1)))))
    g = lift_binders(f, 5)
    assert print_formula(g) == "(ex (v 5) (all (v 6) (rel L (v 5) (v 6))))"


# --- quantifier blocks ------------------------------------------------------

def test_close_existential_orders_ascending():
    f = Eq(Var(0), Var(1))
    assert close_existential(f, [1]) == Ex(1, f)
    assert close_existential(f, []) == f
    assert print_formula(close_existential(f, [1, 0])) == "(ex (v 0) (ex (v 1) (= (v 0) (v 1))))"
    with pytest.raises(FormulaError):
        close_existential(f, [7])


def test_conj_is_right_nested():
    parts = [Eq(Const(i), Const(i)) for i in range(4)]
    f = conj(parts)
    assert isinstance(f.right, And) and conjuncts(f) == parts


def test_quantifier_rank():
    f = parse_formula("(and (ex (v 0) (all (v 1) (= (v 0) (v 1)))) (ex (v 2) (= (v 2) (v 2))))")
    assert quantifier_rank(f) == 2


# --- enumeration ------------------------------------------------------------

EN = SentenceEnumeration(LANG)


def test_constants_bounded_by_index_first_hundred():
    for e in range(101):
        s = EN(e)
        assert s.is_sentence()
        assert all(c <= e for c in s.constants)


@given(st.integers(0, 10**12))
def test_constants_bounded_by_index_sampled(e):
    assert all(c <= e for c in EN(e).constants)


def test_index_inverts_enumeration():
    for e in range(1001):
        assert EN.index(EN(e)) == e


def test_covers_equality_of_two_constants():
    target = parse_formula("(= (c 0) (c 1))")
    # exhaustive scan of the coding up to the claimed index
    found = next(e for e in range(10**6) if print_formula(EN(e)) == print_formula(target))
    assert EN.index(target) == found


@given(sentences)
def test_enumeration_is_surjective(s):
    e = EN.index(s)
    assert print_formula(EN(e)) == print_formula(alpha_normal(s))


def test_prefix_comes_first():
    pre = [parse_formula("(ex (v 0) (rel R 0 (v 0)))", LANG)]
    en = SentenceEnumeration(LANG, pre)
    assert en(0) == pre[0] and en.index(pre[0]) == 0
    assert len({print_formula(en(e)) for e in range(200)}) == 200
    for e in range(200):
        assert en.index(en(e)) == e


def test_prefix_respects_constant_bound():
    with pytest.raises(FormulaError):
        SentenceEnumeration(LANG, [parse_formula("(= (c 3) (c 3))")])


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=4))
def test_pack_round_trip(vals):
    assert unpack(pack(vals), len(vals)) == vals


def test_walk_visits_every_node():
    f = parse_formula("(and (not (= (v 0) (v 0))) (ex (v 1) (rel L (v 1) (v 0))))")
    assert len(list(walk(f))) == 5
