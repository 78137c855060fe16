"""A computable bijection between naturals and sentences of L ∪ C.

The coding works on closed formulas with binders named by depth (the binder
at nesting depth d binds x_d), which is a canonical representative of each
alpha-equivalence class.  Every component code extracted from ``n`` is at
most ``n`` and a constant c_i costs at least ``i``, so every constant in
sentence number ``e`` has index <= e.
"""
from __future__ import annotations

from bisect import bisect_left
from math import isqrt
from typing import Sequence

from .logic import (All, And, Const, Eq, Ex, Formula, FormulaError, Imp, Language, Not, Or,
                    Rel, Var, print_formula)

_TAGS = 7  # atom, not, and, or, imp, all, ex


def pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def unpair(z: int) -> tuple[int, int]:
    w = (isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def pack(values: Sequence[int]) -> int:
    if not values:
        raise ValueError("cannot pack an empty tuple")
    if len(values) == 1:
        return values[0]
    return pair(values[0], pack(values[1:]))


def unpack(z: int, k: int) -> list[int]:
    out = []
    while k > 1:
        a, z = unpair(z)
        out.append(a)
        k -= 1
    out.append(z)
    return out


def _decode_term(t: int, depth: int):
    if t < depth:
        return Var(t)
    return Const(t - depth)


def _encode_term(term, binders: dict[int, int], depth: int) -> int:
    if isinstance(term, Const):
        return term.index + depth
    if term.index not in binders:
        raise FormulaError(f"free variable x_{term.index}: not a sentence")
    return binders[term.index]


class SentenceEnumeration:
    """e ↦ σ_e over a language, optionally with a finite list of sentences
    placed first (each must only mention constants with index <= its position).
    """

    def __init__(self, language: Language, prefix: Sequence[Formula] = ()):
        self.language = language
        self._arity = [2] + [f.rank + f.arity for f in language.families]
        prefix = [self.normalize(p) for p in prefix]
        codes = [self.code(p) for p in prefix]
        if len(set(codes)) != len(codes):
            raise FormulaError("prefix sentences must be pairwise distinct")
        for pos, p in enumerate(prefix):
            if p.constants and max(p.constants) > pos:
                raise FormulaError(f"prefix sentence {pos} mentions a constant above c_{pos}")
        self.prefix = tuple(prefix)
        self._prefix_pos = {c: i for i, c in enumerate(codes)}
        self._prefix_sorted = sorted(codes)

    # -- the base coding

    def decode(self, n: int, depth: int = 0) -> Formula:
        tag, m = n % _TAGS, n // _TAGS
        if tag == 0:
            nfam = len(self._arity)
            which, rest = m % nfam, m // nfam
            parts = unpack(rest, self._arity[which])
            if which == 0:
                return Eq(_decode_term(parts[0], depth), _decode_term(parts[1], depth))
            fam = self.language.families[which - 1]
            idx, args = parts[:fam.rank], parts[fam.rank:]
            return Rel(fam.name, idx, [_decode_term(t, depth) for t in args])
        if tag == 1:
            return Not(self.decode(m, depth))
        if tag in (2, 3, 4):
            a, b = unpair(m)
            op = {2: And, 3: Or, 4: Imp}[tag]
            return op(self.decode(a, depth), self.decode(b, depth))
        q = All if tag == 5 else Ex
        return q(depth, self.decode(m, depth + 1))

    def code(self, f: Formula) -> int:
        return self._code(f, {}, 0)

    def _code(self, f: Formula, binders: dict[int, int], depth: int) -> int:
        if isinstance(f, Eq):
            rest = pack([_encode_term(f.left, binders, depth), _encode_term(f.right, binders, depth)])
            return _TAGS * (rest * len(self._arity))
        if isinstance(f, Rel):
            if f.name not in self.language:
                raise FormulaError(f"unknown family {f.name!r}")
            which = 1 + [x.name for x in self.language.families].index(f.name)
            fam = self.language.families[which - 1]
            if len(f.indices) != fam.rank or len(f.args) != fam.arity:
                raise FormulaError(f"ill-formed atom for family {f.name}")
            rest = pack([*f.indices, *(_encode_term(t, binders, depth) for t in f.args)])
            return _TAGS * (rest * len(self._arity) + which)
        if isinstance(f, Not):
            return _TAGS * self._code(f.body, binders, depth) + 1
        if isinstance(f, (And, Or, Imp)):
            tag = {And: 2, Or: 3, Imp: 4}[type(f)]
            m = pair(self._code(f.left, binders, depth), self._code(f.right, binders, depth))
            return _TAGS * m + tag
        if isinstance(f, (All, Ex)):
            inner = {**binders, f.var: depth}
            tag = 5 if isinstance(f, All) else 6
            return _TAGS * self._code(f.body, inner, depth + 1) + tag
        raise TypeError(f)

    def normalize(self, sentence: Formula) -> Formula:
        """Alpha-normal form: binders renamed by depth."""
        return alpha_normal(sentence)

    # -- the enumeration proper

    def __call__(self, e: int) -> Formula:
        return self.sentence(e)

    def sentence(self, e: int) -> Formula:
        if e < 0:
            raise ValueError("sentence index must be >= 0")
        if e < len(self.prefix):
            return self.prefix[e]
        n = e - len(self.prefix)
        for p in self._prefix_sorted:
            if p <= n:
                n += 1
            else:
                break
        return self.decode(n)

    def index(self, sentence: Formula) -> int:
        n = self.code(sentence)
        if n in self._prefix_pos:
            return self._prefix_pos[n]
        below = bisect_left(self._prefix_sorted, n)
        return len(self.prefix) + n - below

    def same_sentence(self, a: Formula, b: Formula) -> bool:
        return print_formula(self.normalize(a)) == print_formula(self.normalize(b))


def alpha_normal(sentence: Formula) -> Formula:
    """Rename every binder to its nesting depth (the form ``decode`` yields)."""
    if sentence.free_vars:
        raise FormulaError("only sentences have an alpha-normal form here")

    def term(t, ren):
        return Var(ren[t.index]) if isinstance(t, Var) else t

    def go(f: Formula, ren: dict[int, int], depth: int) -> Formula:
        if isinstance(f, Eq):
            return Eq(term(f.left, ren), term(f.right, ren))
        if isinstance(f, Rel):
            return Rel(f.name, f.indices, [term(t, ren) for t in f.args])
        if isinstance(f, Not):
            return Not(go(f.body, ren, depth))
        if isinstance(f, (And, Or, Imp)):
            return type(f)(go(f.left, ren, depth), go(f.right, ren, depth))
        if isinstance(f, (All, Ex)):
            return type(f)(depth, go(f.body, {**ren, f.var: depth}, depth + 1))
        raise TypeError(f)

    return go(sentence, {}, 0)


def enumerate_sentence(language: Language, e: int) -> Formula:
    return SentenceEnumeration(language).sentence(e)


def sentence_index(language: Language, sentence: Formula) -> int:
    return SentenceEnumeration(language).index(sentence)
