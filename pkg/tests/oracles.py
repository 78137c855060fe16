"""Reference semantics written independently of the package's evaluator.

Plain Tarskian recursion: finite structures enumerate the whole universe,
dense orders enumerate the current points, one point in every gap and one
beyond each end (enough for any order-type question).
"""
from fractions import Fraction
import random

from henkin_dichotomy.atomic import consistent
from henkin_dichotomy.logic import All, And, Eq, Ex, Imp, Not, Or, Rel, Var
from henkin_dichotomy.structures import HaltingPredicate
from henkin_dichotomy.theories import pair_theory


def _val(t, env, consts):
    return env[t.index] if isinstance(t, Var) else consts[t.index]


def brute_truth(f, universe, holds, env=None, consts=None):
    """``holds(name, indices, values)`` gives the atomic diagram."""
    env = dict(env or {})
    consts = consts or {}

    def go(g, env):
        if isinstance(g, Rel):
            return holds(g.name, tuple(g.indices), tuple(_val(t, env, consts) for t in g.args))
        if isinstance(g, Eq):
            return _val(g.left, env, consts) == _val(g.right, env, consts)
        if isinstance(g, Not):
            return not go(g.body, env)
        if isinstance(g, And):
            return go(g.left, env) and go(g.right, env)
        if isinstance(g, Or):
            return go(g.left, env) or go(g.right, env)
        if isinstance(g, Imp):
            return (not go(g.left, env)) or go(g.right, env)
        if isinstance(g, Ex):
            return any(go(g.body, {**env, g.var: u}) for u in universe)
        if isinstance(g, All):
            return all(go(g.body, {**env, g.var: u}) for u in universe)
        raise TypeError(g)

    return go(f, env)


def table_holds(relations):
    def holds(name, ix, values):
        return values in relations.get((name, ix), ())
    return holds


def dlo_truth(f, env=None):
    """Truth in (Q, <) with ``L`` read as <."""
    env = {k: Fraction(v) for k, v in (env or {}).items()}

    def candidates(env):
        pts = sorted(set(env.values()))
        if not pts:
            return [Fraction(0)]
        out = [pts[0] - 1, pts[-1] + 1] + pts
        out += [(a + b) / 2 for a, b in zip(pts, pts[1:])]
        return out

    def go(g, env):
        if isinstance(g, Rel):
            a, b = (env[t.index] for t in g.args)
            return a < b
        if isinstance(g, Eq):
            return env[g.left.index] == env[g.right.index]
        if isinstance(g, Not):
            return not go(g.body, env)
        if isinstance(g, And):
            return go(g.left, env) and go(g.right, env)
        if isinstance(g, Or):
            return go(g.left, env) or go(g.right, env)
        if isinstance(g, Imp):
            return (not go(g.left, env)) or go(g.right, env)
        if isinstance(g, Ex):
            return any(go(g.body, {**env, g.var: u}) for u in candidates(env))
        if isinstance(g, All):
            return all(go(g.body, {**env, g.var: u}) for u in candidates(env))
        raise TypeError(g)

    return go(f, env)


def weak_orders(n):
    """Every assignment of n variables to points 0..k-1 that uses each point
    (all order types of an n-tuple)."""
    def rec(prefix):
        if len(prefix) == n:
            if set(prefix) == set(range(max(prefix, default=-1) + 1)):
                yield tuple(prefix)
            return
        top = max(prefix, default=-1) + 2
        for v in range(top):
            yield from rec(prefix + [v])
    return list(rec([]))


def random_formula(rng: random.Random, atoms, free, quantifiers, depth=3):
    """A random formula whose free variables lie in ``free``; ``atoms(vars)``
    returns a random atom over the given variable list."""
    def go(vars_, q, d):
        if d == 0 or (rng.random() < 0.3 and q == 0):
            return atoms(vars_)
        r = rng.random()
        if q > 0 and r < 0.35:
            v = max(vars_ + [-1]) + 1
            body = go(vars_ + [v], q - 1, d - 1)
            return (Ex if rng.random() < 0.5 else All)(v, body)
        if r < 0.5:
            return Not(go(vars_, q, d - 1))
        op = rng.choice([And, Or, Imp])
        return op(go(vars_, q, d - 1), go(vars_, q, d - 1))
    return go(list(free), quantifiers, depth)


def dlo_atom(rng):
    def atom(vars_):
        a, b = rng.choice(vars_), rng.choice(vars_)
        return Rel("L", (), (Var(a), Var(b))) if rng.random() < 0.6 else Eq(Var(a), Var(b))
    return atom


def unary_atom(rng, symbols):
    def atom(vars_):
        a = rng.choice(vars_)
        if rng.random() < 0.25:
            return Eq(Var(a), Var(rng.choice(vars_)))
        name, ix = rng.choice(symbols)
        return Rel(name, ix, (Var(a),))
    return atom


def random_sentence(rng, atom_factory, quantifiers, depth=4):
    """Closed: starts with a quantifier so every atom has a variable."""
    v = 0
    body = random_formula(rng, atom_factory, [v], quantifiers - 1, depth)
    return (Ex if rng.random() < 0.5 else All)(v, body)


def pair_corpus(n=40, seed=7):
    """Corpus, not an oracle: consistent one-variable pair formulas, symbols index <= 4, rank <= 2."""
    rng = random.Random(seed)
    syms = [("R", (i,)) for i in range(5)] + [("RS", (i, s)) for i in range(5) for s in range(5)]
    pt = pair_theory(HaltingPredicate.of([(1, 3), (4, 2)]))
    out = []
    while len(out) < n:
        f = random_formula(rng, unary_atom(rng, syms), [0], rng.randint(0, 2), depth=3)
        if 0 in f.free_vars and consistent(pt.oracle, f, (0,)):
            out.append(f)
    return out
