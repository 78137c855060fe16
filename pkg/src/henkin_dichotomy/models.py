"""Decidable models: presented universes with a computable satisfaction relation."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .evaluate import Evaluator
from .logic import (Const, Eq, Family, Formula, FormulaError, Language, fresh_vars, instantiate,
                    substitute_constants, symbols)
from .structures import (PAIR, PAIR_STAGE, ColoredStructure, ColoredStructureSpec,
                         FiniteStructure, HaltingPredicate, PairStructure, RationalOrder,
                         nat_to_rational, rational_to_nat)

DLO_LANGUAGE = Language([Family("L", 2, 0)])
PAIR_LANGUAGE = Language([Family(PAIR, 1, 1), Family(PAIR_STAGE, 1, 2)])
UNARY_LANGUAGE = Language([Family("U", 1, 1)])


class DecidableModel:
    """A structure whose universe is presented as 0, 1, 2, ... (or 0..n-1).

    ``decode`` maps a presented element to the value the underlying
    structure works with; for most models it is the identity.
    """

    def __init__(self, language: Language, structure, *, name: str,
                 size: int | None = None,
                 decode: Callable[[int], object] | None = None,
                 encode: Callable[[object], int] | None = None):
        self.language = language
        self.structure = structure
        self.name = name
        self.size = size
        self._decode = decode
        self._encode = encode
        self.evaluator = Evaluator(structure)

    def __repr__(self):
        return f"DecidableModel({self.name})"

    @property
    def finite(self) -> bool:
        return self.size is not None

    def elements(self) -> Iterator[int]:
        return iter(range(self.size)) if self.finite else itertools.count()

    def check_element(self, a: int):
        if not isinstance(a, int) or a < 0 or (self.finite and a >= self.size):
            raise IndexError(f"{a} is not an element of {self.name}")

    def value(self, a: int):
        self.check_element(a)
        return a if self._decode is None else self._decode(a)

    def element(self, value) -> int:
        return value if self._encode is None else self._encode(value)

    def _check_symbols(self, f: Formula):
        for name, ix in symbols(f):
            if name not in self.language:
                raise FormulaError(f"symbol {name} is not in the language of {self.name}")

    def satisfies(self, f: Formula, a: Sequence[int] = ()) -> bool:
        """``self ⊨ f[a]``; the free variables of ``f`` take the entries of
        ``a`` in ascending variable order."""
        free = sorted(f.free_vars)
        if len(free) != len(a):
            raise FormulaError(f"formula has {len(free)} free variables, got {len(a)} elements")
        self._check_symbols(f)
        env = {v: self.value(x) for v, x in zip(free, a)}
        return self.evaluator.truth(f, env)

    def satisfies_env(self, f: Formula, env: Mapping[int, int]) -> bool:
        """Like ``satisfies`` but with an explicit variable assignment."""
        self._check_symbols(f)
        return self.evaluator.truth(f, {v: self.value(x) for v, x in env.items()})

    def satisfies_constants(self, f: Formula, assignment: Mapping[int, int]) -> bool:
        """Truth of a formula whose Henkin constants c_i denote ``assignment[i]``.

        Constants are swapped for fresh variables first so the evaluator
        never sees them.
        """
        consts = sorted(f.constants)
        missing = [c for c in consts if c not in assignment]
        if missing:
            raise FormulaError(f"no element for constants {missing}")
        fresh = fresh_vars(len(consts), f)
        g = substitute_constants(f, consts, fresh)
        env = {x: assignment[c] for x, c in zip(fresh, consts)}
        free = g.free_vars - set(fresh)
        if free:
            raise FormulaError(f"free variables {sorted(free)} left unassigned")
        return self.satisfies_env(g, env)


# --------------------------------------------------------------------------
# canonical models and alternative presentations


def dlo_model(scale: Fraction | int = 1, shift: Fraction | int = 0) -> DecidableModel:
    """(Q, <) presented through the signed Calkin-Wilf bijection; element n
    denotes ``scale * q_n + shift``."""
    scale, shift = Fraction(scale), Fraction(shift)
    if scale == 0:
        raise ValueError("scale must be non-zero")
    name = "dlo" if (scale, shift) == (1, 0) else f"dlo[{scale}*q+{shift}]"
    return DecidableModel(
        DLO_LANGUAGE, RationalOrder(), name=name,
        decode=lambda n: scale * nat_to_rational(n) + shift,
        encode=lambda q: rational_to_nat((Fraction(q) - shift) / scale))


def colored_model(spec: ColoredStructureSpec, language: Language | None = None,
                  name: str = "unary") -> DecidableModel:
    if language is None:
        fams = {}
        for n, ix in sorted(spec.symbols()):
            fams.setdefault(n, len(ix))
        language = Language([Family(n, 1, r) for n, r in fams.items()]) if fams else UNARY_LANGUAGE
    s = ColoredStructure(spec)
    return DecidableModel(language, s, name=name, size=s.size)


def pair_model(H: HaltingPredicate, extras: int = 0, swap: bool = False) -> DecidableModel:
    tag = "pair-prime" if not extras and not swap else f"pair[extras={extras},swap={swap}]"
    return DecidableModel(PAIR_LANGUAGE, PairStructure(H, extras, swap), name=tag)


def finite_model(size: int, relations: Mapping, language: Language | None = None,
                 name: str = "finite") -> DecidableModel:
    s = FiniteStructure(size, relations)
    if language is None:
        fams = {}
        for (n, ix), rows in s.relations.items():
            arity = len(next(iter(rows))) if rows else 1
            fams.setdefault(n, (arity, len(ix)))
        language = Language([Family(n, a, r) for n, (a, r) in fams.items()])
    return DecidableModel(language, s, name=name, size=size)


# --------------------------------------------------------------------------
# the term model of a construction run


class HenkinModelView:
    """The model built by a construction run: equivalence classes of Henkin
    constants, with truth read off the decided sentences.

    Queries drive the underlying run lazily, so a view must not be shared
    between threads.
    """

    def __init__(self, state):
        self.state = state

    def sentence_for(self, f: Formula, reps: Sequence[int]) -> Formula:
        free = sorted(f.free_vars)
        if len(free) != len(reps):
            raise FormulaError(f"formula has {len(free)} free variables, got {len(reps)} constants")
        return instantiate(f, {v: Const(c) for v, c in zip(free, reps)})

    def satisfies(self, f: Formula, reps: Sequence[int] = ()) -> bool:
        return self.state.decide_sentence(self.state.enumeration.index(self.sentence_for(f, reps)))

    def representative(self, i: int) -> int:
        """Least j with (c_j = c_i) in Γ."""
        for j in range(i):
            if self.satisfies(Eq(Const(j), Const(i))):
                return j
        return i


def henkin_satisfies(view: HenkinModelView, f: Formula, reps: Sequence[int] = ()) -> bool:
    return view.satisfies(f, reps)


def quotient_representative(view: HenkinModelView, i: int) -> int:
    return view.representative(i)
