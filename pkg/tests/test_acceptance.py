"""End-to-end acceptance checks, one group per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
``criterion n: PASS|FAIL`` line per criterion.
"""
import io
import itertools
import json
import random
import time

import pytest

from henkin_dichotomy.atomic import (OpenFormula, Verdict, back_and_forth, canonical_witness,
                                     complete_check_via_atomic, dlo_witness, embedding_table,
                                     finite_theta, holds, is_complete, unary_witness,
                                     witness_from_h)
from henkin_dichotomy.construction import (DIAGRAM_VIOLATION, NOT_ONE_ONE,
                                           Construction, HEntry, RemarkParameters,
                                           split_constants, uniform_witness)
from henkin_dichotomy.counterexamples import PsiBehavior, lemma4_structure
from henkin_dichotomy.enumeration import SentenceEnumeration
from henkin_dichotomy.functionals import IDENTITY, LOOP, MachineFunctional, TableFunctional
from henkin_dichotomy.logic import (And, Const, Eq, Ex, Not, Rel, Var, close_existential, conj,
                                    instantiate, print_formula, trivial_eq)
from henkin_dichotomy.models import HenkinModelView, UNARY_LANGUAGE, dlo_model, finite_model, pair_model
from henkin_dichotomy.structures import ColoredStructureSpec, HaltingPredicate
from henkin_dichotomy.theories import (dlo_oracle, finite_oracle, finite_unary_spec_structure,
                                       is_quantifier_free, pair_theory, qe_eliminate, unary_oracle)

from oracles import (brute_truth, dlo_atom, dlo_truth, pair_corpus, random_formula,
                     random_sentence, table_holds, unary_atom, weak_orders)


def R(i, v=0):
    return Rel("R", (i,), (Var(v),))


def _consistent(run, s):
    th = run.theta(s)
    if th is None:
        return True
    g, _, _ = split_constants(th, ())
    return not run.oracle.proves(Not(close_existential(g, sorted(g.free_vars))))


# ---------------------------------------------------------------------- 1

@pytest.mark.acceptance(1)
def test_henkin_soundness():
    start = time.perf_counter()
    o = dlo_oracle()
    run = Construction(o, o.canonical, budget=200).run()
    assert all(_consistent(run, s) for s in range(201))
    for e in range(50):
        st = run.decision(e)
        assert st is not None and st[0] <= 4 * e + 4, e
    witnessed = 0
    for e, (k, positive) in run.decided.items():
        sigma = run.enumeration(e)
        if not positive or not isinstance(sigma, Ex) or 2 * k + 1 > 200:
            continue
        # δ_k = σ_e ∧ (c_k = c_k), so stage 2k+1 must instantiate it
        assert run.deltas[k].left == sigma
        want = And(instantiate(sigma.body, {sigma.var: Const(2 * k + 1)}), trivial_eq(2 * k + 1))
        assert run.deltas[2 * k + 1] == want
        witnessed += 1
    assert witnessed > 0
    assert time.perf_counter() - start <= 60


# ---------------------------------------------------------------------- 2

@pytest.mark.acceptance(2)
def test_gamma_complete_over_theory():
    o = dlo_oracle()
    run = Construction(o, o.canonical, budget=400)
    view = HenkinModelView(run)
    pure = [e for e in range(300) if not run.enumeration(e).constants][:10]
    assert len(pure) == 10
    verdicts = [view.satisfies(run.enumeration(e)) for e in pure]
    assert verdicts == [o.proves(run.enumeration(e)) for e in pure]
    assert any(verdicts) and not all(verdicts)


# ---------------------------------------------------------------------- 3

@pytest.mark.acceptance(3)
def test_hostile_dichotomy():
    pt = pair_theory()
    funcs = [TableFunctional([(0, 1, 3), (1, 1, 3)]), TableFunctional([(2, 0, 1)]),
             MachineFunctional(IDENTITY)]
    run = Construction(pt.oracle, pt.model, None, funcs, 150).run()
    non11, diag, ident = run.reqs
    c = non11.certificate
    assert c.kind == NOT_ONE_ONE
    a, b = c.inputs
    assert a != b and funcs[0].eval(a, c.stage) == funcs[0].eval(b, c.stage)
    c = diag.certificate
    assert c.kind == DIAGRAM_VIOLATION
    # recompute ∃ȳ θ_s(ȳ, x̄) at the certificate stage and evaluate it
    f, xv = run.h_formula(run.theta(c.stage), c.outputs)
    assert f == c.formula and xv == c.xvars
    assert not pt.model.satisfies_env(f, dict(zip(xv, c.inputs)))
    if ident.certificate is not None and ident.certificate.kind == DIAGRAM_VIOLATION:
        c = ident.certificate
        assert not pt.model.satisfies_env(c.formula, dict(zip(c.xvars, c.inputs)))
    for req in run.reqs:
        for ent in req.history:
            assert pt.model.satisfies_env(ent.formula, dict(zip(ent.xvars, ent.inputs)))


# ---------------------------------------------------------------------- 4

def _pair_sentence(i):
    return Ex(0, Ex(1, conj([R(i, 0), R(i, 1), Not(Eq(Var(0), Var(1)))])))


@pytest.fixture(scope="module")
def genuine():
    pt = pair_theory(HaltingPredicate())
    en = SentenceEnumeration(pt.oracle.language, [_pair_sentence(i) for i in range(3)])
    pre = Construction(pt.oracle, pt.model, en, [], 300).run()
    rows = embedding_table(pre, 6)
    funcs = [TableFunctional(rows), MachineFunctional(LOOP)]
    run = Construction(pt.oracle, pt.model, en, funcs, 300).run()
    return pt, en, funcs, pre, run


@pytest.mark.acceptance(4)
def test_genuine_embedding(genuine):
    pt, en, funcs, pre, run = genuine
    # the correct map never steers the construction
    assert run.deltas == pre.deltas
    req = run.reqs[0]
    assert req.certificate is None
    assert any(ent.inputs == tuple(range(6)) for ent in req.h)
    for ent in req.h:
        of = OpenFormula(ent.formula, ent.xvars)
        assert holds(pt.model, of, ent.inputs)
        assert is_complete(pt.oracle, of).verdict is Verdict.COMPLETE
    tuples = itertools.chain(itertools.product(range(6), repeat=1),
                             itertools.product(range(6), repeat=2))
    for a in tuples:
        w = witness_from_h(req.h, a)
        assert holds(pt.model, w, a), a
        assert is_complete(pt.oracle, w).verdict is Verdict.COMPLETE, a


@pytest.mark.acceptance(4)
def test_genuine_uniform_witness(genuine):
    pt, en, funcs, pre, run = genuine
    req = run.reqs[0]
    s_star = run.decision(0)[0] + 1
    s = next(ent.stage for ent in req.history if ent.stage >= s_star)
    code = RemarkParameters(0, s_star, s).encode()
    items = list(uniform_witness(pt.oracle, pt.model, code, en, funcs, 300))
    assert items and all(isinstance(x, HEntry) for x in items)
    for ent in items:
        assert is_complete(pt.oracle, OpenFormula(ent.formula, ent.xvars)).verdict is Verdict.COMPLETE


# ---------------------------------------------------------------------- 5

@pytest.mark.acceptance(5)
def test_pi01_labeling():
    pt = pair_theory(HaltingPredicate.of([(1, 3), (4, 2)]))
    for i in range(9):
        assert bool(is_complete(pt.oracle, R(i))) == (i not in {1, 4}), i
    g = canonical_witness(pt.model)
    corpus = pair_corpus()
    assert len(corpus) == 40
    for f in corpus:
        assert bool(is_complete(pt.oracle, f)) == complete_check_via_atomic(pt.oracle, pt.model, g, f)


# ---------------------------------------------------------------------- 6

def _all_u_empty(model, upto=12, elems=10):
    return not any(model.satisfies(Rel("U", (i,), (Var(0),)), (a,))
                   for i in range(upto) for a in range(elems))


@pytest.mark.acceptance(6)
def test_lemma4_harness():
    for b in (PsiBehavior.diverges(), PsiBehavior.nonformula(5)):
        r = lemma4_structure(b)
        assert r.l is None and r.verdict is None
        assert _all_u_empty(r.model)
        assert r.witness((0,)).formula == Eq(Var(0), Var(0))
    phi = Rel("U", (2,), (Var(0),))
    r = lemma4_structure(PsiBehavior.halts_with(7, phi, 2))
    assert r.l == 7
    for i in range(12):
        members = [a for a in range(10) if r.model.satisfies(Rel("U", (i,), (Var(0),)), (a,))]
        assert members == ([0, 2, 4, 6, 8] if i == 8 else [])
    v = r.verdict
    assert v.refuted
    assert r.model.satisfies(phi, (0,)) == r.model.satisfies(phi, (1,))
    assert v.u_at_0 and not v.u_at_1


# ---------------------------------------------------------------------- 7

@pytest.mark.acceptance(7)
def test_back_and_forth():
    A, B = dlo_model(), dlo_model(-1, 0)
    pairs = list(itertools.islice(back_and_forth(A, dlo_witness(A), B, dlo_witness(B)), 30))
    assert len(pairs) == 30
    assert len({a for a, _ in pairs}) == 30 and len({b for _, b in pairs}) == 30
    for (a1, b1), (a2, b2) in itertools.combinations(pairs, 2):
        assert (A.value(a1) < A.value(a2)) == (B.value(b1) < B.value(b2))
    H = HaltingPredicate()
    P, S = pair_model(H), pair_model(H, swap=True)
    pairs = list(itertools.islice(back_and_forth(P, unary_witness(P), S, unary_witness(S)), 30))
    for i in range(6):
        src = {a for a, _ in pairs if P.satisfies(R(i), (a,))}
        dst = {b for a, b in pairs if a in src}
        assert dst == {b for _, b in pairs if S.satisfies(R(i), (b,))}
        assert len(src) == 2


# ---------------------------------------------------------------------- 8

_COLOURS = [(), (("U", (0,)),), (("U", (1,)),), (("U", (0,)), ("U", (1,)))]
_U_ATOMS = [("U", (0,)), ("U", (1,))]


@pytest.mark.acceptance(8)
def test_oracle_cross_validation():
    start = time.perf_counter()
    rng = random.Random(2024)
    for _ in range(200):
        cols = rng.sample(_COLOURS, rng.randint(1, 4))
        spec = ColoredStructureSpec.of([(c, rng.randint(1, 6)) for c in cols])
        f = random_sentence(rng, unary_atom(rng, _U_ATOMS), rng.randint(1, 3))
        fs = finite_unary_spec_structure(spec)
        assert unary_oracle(spec, UNARY_LANGUAGE).proves(f) == \
            brute_truth(f, range(fs.size), table_holds(fs.relations)), print_formula(f)
    for _ in range(200):
        n = rng.randint(1, 6)
        free = list(range(n))
        f = random_formula(rng, dlo_atom(rng), free, rng.randint(0, 3), depth=4)
        g = qe_eliminate(f)
        if isinstance(g, bool):
            g = Eq(Var(0), Var(0)) if g else Not(Eq(Var(0), Var(0)))
        assert is_quantifier_free(g)
        used = sorted(f.free_vars | g.free_vars)
        for order in weak_orders(len(used)):
            env = dict(zip(used, order))
            assert dlo_truth(f, env) == dlo_truth(g, env), print_formula(f)
    assert time.perf_counter() - start <= 120


# ---------------------------------------------------------------------- 9

@pytest.mark.acceptance(9)
def test_finite_theta():
    A = finite_model(3, {("P", ()): [(0,)]})
    r = finite_theta(A, 3, 2)
    assert r.verified
    assert is_complete(finite_oracle(A), r.theta, xvars=r.xvars).verdict is Verdict.COMPLETE
    surviving = [p for p in itertools.permutations(range(3))
                 if holds(A, OpenFormula(r.theta, r.xvars), p)]
    assert surviving == [(0, 1, 2), (0, 2, 1)]
    for n, l in ((3, 1), (3, 6), (2, 2), (4, 2)):
        assert not finite_theta(A, n, l, cap=3000).verified, (n, l)


# ---------------------------------------------------------------------- 10

@pytest.mark.acceptance(10)
def test_resume_is_byte_identical():
    o = dlo_oracle()
    fresh = io.StringIO()
    Construction(o, o.canonical, budget=100, trace=fresh).run()
    half = io.StringIO()
    Construction(o, o.canonical, budget=50, trace=half).run()
    records = [json.loads(line) for line in half.getvalue().splitlines()]
    rest = io.StringIO()
    o2 = dlo_oracle()
    Construction.from_records(o2, o2.canonical, None, [], records, budget=100, trace=rest).run()
    assert half.getvalue() + rest.getvalue() == fresh.getvalue()
    assert len(fresh.getvalue().splitlines()) == 101
