"""Satisfaction checking over structures with finite witness sets.

A structure only has to answer atomic queries and, given the values already
in play, offer a finite list of candidate witnesses that covers every type
over those values.  For (Q, <) that is the values plus one point in each
gap; for unary structures it is the values plus one fresh element per
colour class; for finite structures it is the whole universe.

Existential blocks are split into independent components on the bound
variables and solved by backtracking, checking each conjunct as soon as its
variables are bound.  Universal blocks are handled as negated existential
ones.
"""
from __future__ import annotations

from typing import Any, Hashable, Iterable, Protocol, Sequence

from .logic import (All, And, Eq, Ex, Formula, FormulaError, Imp, Not, Or,
                    Quant, Rel, Var, symbols)


class Structure(Protocol):
    def holds(self, name: str, indices: tuple[int, ...], values: tuple) -> bool: ...

    def witnesses(self, ctx: frozenset, values: Sequence) -> Iterable: ...

    def memo_key(self, values: tuple) -> Hashable: ...


class _Plan:
    __slots__ = ("closed", "components")

    def __init__(self, closed, components):
        self.closed = closed
        self.components = components


class _Component:
    __slots__ = ("order", "checks", "forced", "outer", "key")

    def __init__(self, order, checks, forced, outer, key):
        self.key = key          # the component's conjuncts, shared across plans
        self.order = order      # block variables in assignment order
        self.checks = checks    # checks[i]: conjuncts decidable once order[i] is bound
        self.forced = forced    # forced[i]: a term order[i] must equal, or None
        self.outer = outer      # free variables of the component bound outside the block


class Evaluator:
    """Decides ``structure ⊨ f[env]``."""

    max_memo = 2_000_000

    def __init__(self, structure: Structure):
        self.structure = structure
        self._memo: dict = {}
        self._plans: dict = {}
        self._neg: dict = {}
        self._ctx: dict = {}
        self._top: Formula | None = None

    def _scope(self, f: Formula):
        # caches hold formula objects, and θ-sized ones are expensive to keep;
        # they only live while the same top-level formula is being asked about
        if self._top is not None and self._top == f:
            return
        self._memo.clear()
        self._plans.clear()
        self._neg.clear()
        self._ctx.clear()
        self._top = f

    def truth(self, f: Formula, env: dict[int, Any] | None = None) -> bool:
        env = dict(env or {})
        missing = f.free_vars - env.keys()
        if missing:
            raise FormulaError(f"no value for free variables {sorted(missing)}")
        if f.constants:
            raise FormulaError("Henkin constants have no interpretation in this structure")
        self._scope(f)
        ctx = self._ctx.get(f)
        if ctx is None:
            ctx = symbols(f)
            self._ctx[f] = ctx
        return self._eval(f, env, ctx)

    # ------------------------------------------------------------------

    def _value(self, t, env):
        if isinstance(t, Var):
            return env[t.index]
        raise FormulaError("Henkin constants have no interpretation in this structure")

    def _eval(self, f: Formula, env: dict, ctx) -> bool:
        if isinstance(f, Eq):
            return self._value(f.left, env) == self._value(f.right, env)
        if isinstance(f, Rel):
            return self.structure.holds(f.name, f.indices, tuple(self._value(t, env) for t in f.args))
        if isinstance(f, Not):
            return not self._eval(f.body, env, ctx)
        if isinstance(f, And):
            return self._eval(f.left, env, ctx) and self._eval(f.right, env, ctx)
        if isinstance(f, Or):
            return self._eval(f.left, env, ctx) or self._eval(f.right, env, ctx)
        if isinstance(f, Imp):
            return (not self._eval(f.left, env, ctx)) or self._eval(f.right, env, ctx)
        if isinstance(f, Quant):
            free = sorted(f.free_vars)
            key = (f, self.structure.memo_key(tuple(env[v] for v in free)))
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            plan = self._plan(f)
            result = self._run(plan, env, ctx)
            if isinstance(f, All):
                result = not result
            if len(self._memo) > self.max_memo:
                self._memo.clear()
            self._memo[key] = result
            return result
        raise TypeError(f)

    # ------------------------------------------------------------------
    # planning

    def negate(self, f: Formula) -> Formula:
        hit = self._neg.get(f)
        if hit is None:
            hit = f.body if isinstance(f, Not) else Not(f)
            self._neg[f] = hit
        return hit

    def _expand(self, f: Formula, out: list):
        if isinstance(f, And):
            self._expand(f.left, out)
            self._expand(f.right, out)
        elif isinstance(f, Not):
            b = f.body
            if isinstance(b, Not):
                self._expand(b.body, out)
            elif isinstance(b, Or):
                self._expand(self.negate(b.left), out)
                self._expand(self.negate(b.right), out)
            elif isinstance(b, Imp):
                self._expand(b.left, out)
                self._expand(self.negate(b.right), out)
            else:
                out.append(f)
        elif isinstance(f, Eq) and f.left == f.right:
            pass
        else:
            out.append(f)

    def _plan(self, f: Quant) -> _Plan:
        plan = self._plans.get(f)
        if plan is not None:
            return plan
        kind = type(f)
        block = []
        body = f
        while isinstance(body, kind):
            block.append(body.var)
            body = body.body
        if kind is All:
            body = self.negate(body)
        # an inner binder of the same variable shadows the outer one
        seen = set()
        vars_ = []
        for v in reversed(block):
            if v not in seen:
                seen.add(v)
                vars_.append(v)
        bset = frozenset(vars_)
        parts: list[Formula] = []
        self._expand(body, parts)
        closed = [c for c in parts if not (c.free_vars & bset)]
        closed.sort(key=lambda c: not isinstance(c, (Eq, Rel, Not)))
        open_ = [c for c in parts if c.free_vars & bset]

        # union-find over block variables
        parent = {v: v for v in bset}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for c in open_:
            vs = list(c.free_vars & bset)
            for w in vs[1:]:
                ra, rb = find(vs[0]), find(w)
                if ra != rb:
                    parent[ra] = rb
        groups: dict[int, list[Formula]] = {}
        for c in open_:
            r = find(next(iter(c.free_vars & bset)))
            groups.setdefault(r, []).append(c)
        comps = [self._component(cs, bset) for _, cs in sorted(groups.items())]
        # cheapest components first
        comps.sort(key=lambda c: len(c.order))
        plan = _Plan(closed, comps)
        self._plans[f] = plan
        return plan

    def _component(self, cs: list[Formula], bset: frozenset) -> _Component:
        cvars = set()
        for c in cs:
            cvars |= c.free_vars & bset
        outer = set()
        for c in cs:
            outer |= c.free_vars - bset

        def eq_partner(c, v):
            if isinstance(c, Eq):
                l, r = c.left, c.right
                if isinstance(l, Var) and l.index == v and isinstance(r, Var) and r.index != v:
                    return r.index
                if isinstance(r, Var) and r.index == v and isinstance(l, Var) and l.index != v:
                    return l.index
            return None

        order: list[int] = []
        placed: set[int] = set()
        remaining = set(cvars)
        while remaining:
            best = None
            best_score = None
            for v in sorted(remaining):
                done = placed | {v}
                completes = 0
                touches = 0
                forced = 0
                for c in cs:
                    fv = c.free_vars & bset
                    if v in fv:
                        touches += 1
                        if fv <= done:
                            completes += 1
                        p = eq_partner(c, v)
                        if p is not None and (p in placed or p not in bset):
                            forced = 1
                score = (forced, completes, touches)
                if best_score is None or score > best_score:
                    best, best_score = v, score
            order.append(best)
            placed.add(best)
            remaining.discard(best)

        pos = {v: i for i, v in enumerate(order)}
        checks: list[list[Formula]] = [[] for _ in order]
        for c in cs:
            last = max(pos[v] for v in c.free_vars & bset)
            checks[last].append(c)
        for lst in checks:
            lst.sort(key=lambda c: not isinstance(c, (Eq, Rel, Not)))
        forced: list = [None] * len(order)
        for i, v in enumerate(order):
            for c in checks[i]:
                p = eq_partner(c, v)
                if p is not None and (p not in bset or pos.get(p, len(order)) < i):
                    forced[i] = p
                    break
        return _Component(tuple(order), checks, forced, tuple(sorted(outer)), frozenset(cs))

    # ------------------------------------------------------------------
    # search

    def _run(self, plan: _Plan, env: dict, ctx) -> bool:
        for c in plan.closed:
            if not self._eval(c, env, ctx):
                return False
        for comp in plan.components:
            key = (comp.key, comp.outer, self.structure.memo_key(tuple(env[v] for v in comp.outer)))
            hit = self._memo.get(key)
            if hit is None:
                hit = self._search(comp, env, ctx)
                self._memo[key] = hit
            if not hit:
                return False
        return True

    def _search(self, comp: _Component, env: dict, ctx) -> bool:
        order = comp.order
        n = len(order)
        saved = {v: env[v] for v in order if v in env}
        outer_vals = [env[v] for v in comp.outer]
        assigned: list = []
        stack: list = []
        structure = self.structure
        ok = False
        i = 0
        try:
            while True:
                if i == n:
                    ok = True
                    break
                if len(stack) == i:
                    fv = comp.forced[i]
                    if fv is not None:
                        stack.append(iter((env[fv],)))
                    else:
                        stack.append(iter(structure.witnesses(ctx, outer_vals + assigned)))
                    if len(assigned) > i:
                        del assigned[i:]
                moved = False
                for val in stack[i]:
                    env[order[i]] = val
                    good = True
                    for c in comp.checks[i]:
                        if not self._eval(c, env, ctx):
                            good = False
                            break
                    if good:
                        del assigned[i:]
                        assigned.append(val)
                        i += 1
                        moved = True
                        break
                if not moved:
                    stack.pop()
                    if i == 0:
                        break
                    i -= 1
                    del assigned[i:]
        finally:
            for v in order:
                if v in saved:
                    env[v] = saved[v]
                else:
                    env.pop(v, None)
        return ok

    # ------------------------------------------------------------------

    def solutions(self, xvars: Sequence[int], f: Formula, env: dict | None = None, limit: int | None = None):
        """Yield assignments (tuples aligned with ``xvars``) of canonical
        witnesses for which ``f`` holds.  Different tuples realise different
        types over the structure's witness discipline."""
        env = dict(env or {})
        if f.constants:
            raise FormulaError("Henkin constants have no interpretation in this structure")
        self._scope(f)
        ctx = symbols(f)
        body = f
        inner: list[int] = []
        while isinstance(body, Ex):
            inner.append(body.var)
            body = body.body
        xs = list(xvars)
        if set(xs) & set(inner):
            raise FormulaError("output variables must be free in the formula")
        parts: list[Formula] = []
        self._expand(body, parts)
        xset = set(xs)
        pre = [[] for _ in xs]
        post = []
        for c in parts:
            fv = c.free_vars
            if inner and fv & set(inner):
                post.append(c)
            elif fv & xset:
                pre[max(xs.index(v) for v in fv & xset)].append(c)
            else:
                post.append(c)
        rest = conj_or_none(post)
        rest_f = None
        if rest is not None:
            rest_f = rest
            for v in reversed(inner):
                if v in rest_f.free_vars:
                    rest_f = Ex(v, rest_f)
        count = 0
        outer_vals = [env[v] for v in sorted(f.free_vars - xset)]

        def rec(i, assigned):
            if i == len(xs):
                if rest_f is None or self._eval(rest_f, env, ctx):
                    yield tuple(assigned)
                return
            for val in self.structure.witnesses(ctx, outer_vals + assigned):
                env[xs[i]] = val
                if all(self._eval(c, env, ctx) for c in pre[i]):
                    yield from rec(i + 1, assigned + [val])
            env.pop(xs[i], None)

        for sol in rec(0, []):
            yield sol
            count += 1
            if limit is not None and count >= limit:
                return


def conj_or_none(parts: list[Formula]) -> Formula | None:
    if not parts:
        return None
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out
