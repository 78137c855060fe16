"""Decision procedures for the complete theories the construction runs on.

Every theory here is complete, so ``T ⊢ σ`` is the same as truth of ``σ`` in
any one model of T.  The oracles evaluate in a canonical model with exact
witness sets (see ``evaluate``).  For dense linear orders a symbolic
quantifier elimination is provided as an independent second decider.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from typing import Iterable

from .evaluate import Evaluator
from .logic import (All, And, Const, Eq, Ex, Formula, FormulaError, Imp, Language, Not,
                    Or, Quant, Rel, Var, conj, disj, print_formula, symbols, walk)
from .models import (DLO_LANGUAGE, PAIR_LANGUAGE, DecidableModel, colored_model, dlo_model,
                     pair_model)
from .structures import (PAIR, ColoredStructureSpec, FiniteStructure, HaltingPredicate,
                         RationalOrder)


class TheoryOracle:
    """``proves(σ)`` for closed sentences of the theory's language.

    Verdicts are memoized on a digest of the canonical printed form.  The memo is guarded
    by a lock, so an oracle can be shared between threads.
    """

    def __init__(self, name: str, language: Language, structure, *, kind: str,
                 canonical: DecidableModel | None = None):
        self.name = name
        self.kind = kind
        self.language = language
        self.structure = structure
        self.canonical = canonical
        self.evaluator = Evaluator(structure)
        self._memo: dict[bytes, bool] = {}
        self._lock = threading.Lock()
        self.calls = 0

    def __repr__(self):
        return f"TheoryOracle({self.name})"

    def check(self, f: Formula):
        if f.constants:
            raise FormulaError("Henkin constants are not symbols of the theory")
        for name, ix in symbols(f):
            if name not in self.language:
                raise FormulaError(f"symbol {name} is not in the language of {self.name}")
            fam = self.language.family(name)
            if len(ix) != fam.rank:
                raise FormulaError(f"{name} takes {fam.rank} indices")

    def proves(self, sentence: Formula) -> bool:
        if sentence.free_vars:
            raise FormulaError("only sentences can be decided")
        # θ-sized keys would keep every long conjunction alive
        key = hashlib.blake2b(print_formula(sentence).encode(), digest_size=20).digest()
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        self.check(sentence)
        with self._lock:
            self.calls += 1
            verdict = self.evaluator.truth(sentence)
            self._memo[key] = verdict
        return verdict

    def consistent(self, sentence: Formula) -> bool:
        return not self.proves(Not(sentence))


# --------------------------------------------------------------------------
# dense linear orders


def dlo_oracle() -> TheoryOracle:
    return TheoryOracle("dlo", DLO_LANGUAGE, RationalOrder(), kind="dlo", canonical=dlo_model())


def _tkey(t):
    return (0, t.index) if isinstance(t, Var) else (1, t.index)


def _lt(a, b):
    return ("<", a, b)


def _eq(a, b):
    return ("=",) + tuple(sorted((a, b), key=_tkey))


def _clause_ok(clause: frozenset) -> bool:
    """Whether a conjunction of order atoms has a model (acyclic after
    collapsing equalities)."""
    parent: dict = {}

    def find(t):
        parent.setdefault(t, t)
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for op, a, b in clause:
        if op == "=":
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    edges: dict = {}
    for op, a, b in clause:
        if op == "<":
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            edges.setdefault(ra, set()).add(rb)
    state: dict = {}

    def cyclic(n):
        state[n] = 1
        for m in edges.get(n, ()):
            s = state.get(m, 0)
            if s == 1 or (s == 0 and cyclic(m)):
                return True
        state[n] = 2
        return False

    return not any(state.get(n, 0) == 0 and cyclic(n) for n in list(edges))


def _simplify(clauses: Iterable[frozenset]) -> list[frozenset]:
    good = {c for c in clauses if _clause_ok(c)}
    # drop clauses subsumed by a smaller one
    out = [c for c in good if not any(d < c for d in good)]
    return sorted(out, key=lambda c: (len(c), sorted(map(repr, c))))


def _dnf_and(a: list, b: list) -> list:
    return _simplify(x | y for x in a for y in b)


def _neg_literal(lit) -> list:
    op, a, b = lit
    if op == "<":
        return [frozenset([_lt(b, a)]), frozenset([_eq(a, b)])]
    return [frozenset([_lt(a, b)]), frozenset([_lt(b, a)])]


def _dnf_not(d: list) -> list:
    out = [frozenset()]
    for clause in d:
        alts = []
        for lit in clause:
            alts.extend(_neg_literal(lit))
        out = _dnf_and(out, alts)
        if not out:
            break
    return out


def _eliminate(x: Var, clause: frozenset) -> list:
    """∃x clause as a DNF over the remaining terms."""
    for op, a, b in clause:
        if op == "=" and (a == x) != (b == x):
            t = b if a == x else a
            rest = []
            for op2, p, q in clause:
                p = t if p == x else p
                q = t if q == x else q
                if op2 == "=":
                    if p != q:
                        rest.append(_eq(p, q))
                else:
                    rest.append(_lt(p, q))
            return _simplify([frozenset(rest)])
    lows, highs, rest = [], [], []
    for lit in clause:
        op, a, b = lit
        if op == "=" and a == x and b == x:
            continue
        if op == "<" and a == x and b == x:
            return []
        if op == "<" and b == x:
            lows.append(a)
        elif op == "<" and a == x:
            highs.append(b)
        else:
            rest.append(lit)
    rest.extend(_lt(l, h) for l in lows for h in highs)
    return _simplify([frozenset(rest)])


def _qe(f: Formula) -> list:
    if isinstance(f, Rel):
        if f.name != "L" or f.indices or len(f.args) != 2:
            raise FormulaError(f"{f.name} is not the order symbol")
        a, b = f.args
        return [] if a == b else [frozenset([_lt(a, b)])]
    if isinstance(f, Eq):
        return [frozenset()] if f.left == f.right else [frozenset([_eq(f.left, f.right)])]
    if isinstance(f, Not):
        return _dnf_not(_qe(f.body))
    if isinstance(f, And):
        return _dnf_and(_qe(f.left), _qe(f.right))
    if isinstance(f, Or):
        return _simplify(_qe(f.left) + _qe(f.right))
    if isinstance(f, Imp):
        return _simplify(_dnf_not(_qe(f.left)) + _qe(f.right))
    if isinstance(f, Ex):
        x = Var(f.var)
        out = []
        for clause in _qe(f.body):
            out.extend(_eliminate(x, clause))
        return _simplify(out)
    if isinstance(f, All):
        return _dnf_not(_qe(Ex(f.var, Not(f.body))))
    raise TypeError(f)


def _literal_formula(lit) -> Formula:
    op, a, b = lit
    return Rel("L", (), (a, b)) if op == "<" else Eq(a, b)


def qe_eliminate(f: Formula) -> Formula | bool:
    """A quantifier-free formula equivalent to ``f`` over dense linear orders
    without endpoints.

    Constant verdicts come back as ``(x = x)`` / ``¬(x = x)`` on the least
    free variable, or as the Python booleans when ``f`` has no free variables.
    """
    for name, _ in symbols(f):
        if name != "L":
            raise FormulaError(f"{name} is not in the order language")
    dnf = _qe(f)
    if not dnf or dnf == [frozenset()]:
        verdict = bool(dnf)
        if not f.free_vars and not f.constants:
            return verdict
        v = Var(min(f.free_vars)) if f.free_vars else Const(min(f.constants))
        return Eq(v, v) if verdict else Not(Eq(v, v))
    return disj([conj([_literal_formula(l) for l in sorted(c, key=lambda l: (l[0], _tkey(l[1]), _tkey(l[2])))])
                 for c in dnf])


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, Quant) for g in walk(f))


# --------------------------------------------------------------------------
# unary theories


def unary_oracle(spec: ColoredStructureSpec, language: Language | None = None) -> TheoryOracle:
    m = colored_model(spec, language)
    return TheoryOracle("unary", m.language, m.structure, kind="unary", canonical=m)


@dataclass(frozen=True)
class PairTheory:
    oracle: TheoryOracle
    model: DecidableModel
    H: HaltingPredicate

    def labeling(self, i: int) -> Formula:
        return Rel(PAIR, (i,), (Var(0),))

    def __iter__(self):
        return iter((self.oracle, self.model, self.labeling))


def pair_theory(H: HaltingPredicate | None = None) -> PairTheory:
    """T_H: R_i pairwise disjoint with exactly two elements each; R_{i,s}
    empty unless H(i, s), when it picks out exactly one element of R_i."""
    H = H or HaltingPredicate()
    m = pair_model(H)
    oracle = TheoryOracle(f"pair{sorted(H.halts.items())}", PAIR_LANGUAGE, m.structure,
                          kind="pair", canonical=m)
    return PairTheory(oracle, m, H)


def finite_oracle(model: DecidableModel) -> TheoryOracle:
    if not isinstance(model.structure, FiniteStructure):
        raise TypeError("finite_oracle needs a finite table structure")
    return TheoryOracle(model.name, model.language, model.structure, kind="finite", canonical=model)


def finite_unary_spec_structure(spec: ColoredStructureSpec) -> FiniteStructure:
    """The literal finite structure of an all-finite colour spec."""
    if spec.size is None:
        raise ValueError("spec has an infinite colour class")
    rel: dict = {}
    e = 0
    for col, card in spec.colors:
        for _ in range(card):
            for sym in col:
                rel.setdefault(sym, set()).add((e,))
            e += 1
    return FiniteStructure(spec.size, rel)
