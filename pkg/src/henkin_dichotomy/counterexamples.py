"""The two negative constructions at desk scale.

``lemma4_structure`` consumes the observed behaviour of a would-be uniform
witness Ψ on input 0 and builds the structure that defeats it.  The fixed
point that would let Ψ run on its own index is not simulated; the harness
is parametrized by the behaviour directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .atomic import AtomicWitness, is_complete, unary_witness
from .logic import Formula, FormulaError, Rel, Var, parse_formula, symbols
from .models import UNARY_LANGUAGE, DecidableModel, colored_model
from .structures import ColoredStructureSpec, HaltingPredicate
from .theories import pair_theory


class Behavior(Enum):
    DIVERGES = "diverges"
    HALTS_NONFORMULA = "nonformula"
    HALTS_FORMULA = "formula"


@dataclass(frozen=True)
class PsiBehavior:
    kind: Behavior
    stage: int | None = None
    formula: Formula | None = None
    j: int | None = None

    def __post_init__(self):
        if self.kind is Behavior.DIVERGES:
            if self.stage is not None or self.formula is not None:
                raise ValueError("a divergent Ψ has no stage or formula")
            return
        if self.stage is None or self.stage < 0:
            raise ValueError("a halting Ψ needs a stage")
        if self.kind is Behavior.HALTS_NONFORMULA:
            if self.formula is not None:
                raise ValueError("no formula in the non-formula case")
            return
        if self.formula is None or len(self.formula.free_vars) != 1 or self.formula.constants:
            raise ValueError("Ψ must output a formula in one free variable")
        top = max((ix[0] for n, ix in symbols(self.formula) if n == "U"), default=0)
        if self.j is None or self.j < top:
            raise ValueError(f"j must bound the U-indices of the formula (found {top})")
        if any(n != "U" for n, _ in symbols(self.formula)):
            raise FormulaError("only the U family is available")

    @classmethod
    def diverges(cls):
        return cls(Behavior.DIVERGES)

    @classmethod
    def nonformula(cls, stage: int):
        return cls(Behavior.HALTS_NONFORMULA, stage)

    @classmethod
    def halts_with(cls, stage: int, formula: Formula, j: int | None = None):
        if j is None:
            j = max((ix[0] for n, ix in symbols(formula) if n == "U"), default=0)
        return cls(Behavior.HALTS_FORMULA, stage, formula, j)

    @classmethod
    def parse(cls, text: str) -> PsiBehavior:
        """``diverges`` | ``nonformula:S`` | ``formula:S:FORMULA`` | ``formula:S:J:FORMULA``."""
        head, _, rest = text.partition(":")
        if head == "diverges" and not rest:
            return cls.diverges()
        if head == "nonformula":
            return cls.nonformula(int(rest))
        if head == "formula":
            s, _, rest = rest.partition(":")
            j = None
            if not rest.startswith("("):
                jt, _, rest = rest.partition(":")
                j = int(jt)
            return cls.halts_with(int(s), parse_formula(rest, UNARY_LANGUAGE), j)
        raise ValueError(f"unrecognized behaviour {text!r}")


@dataclass(frozen=True)
class Lemma4Verdict:
    """What goes wrong with Ψ's answer for element 0."""
    formula: Formula
    holds_at_0: bool
    holds_at_1: bool
    u_at_0: bool
    u_at_1: bool

    @property
    def refuted(self) -> bool:
        # 0 and 1 look alike to the formula but U_{l+1} tells them apart
        return self.holds_at_0 == self.holds_at_1 and self.u_at_0 != self.u_at_1


@dataclass(frozen=True)
class Lemma4Result:
    model: DecidableModel
    witness: AtomicWitness
    l: int | None
    verdict: Lemma4Verdict | None

    @property
    def marked(self) -> int | None:
        """Index of the one non-empty U, if any."""
        return None if self.l is None else self.l + 1


def lemma4_structure(b: PsiBehavior) -> Lemma4Result:
    if b.kind is not Behavior.HALTS_FORMULA:
        spec = ColoredStructureSpec.of([((), None)])
        m = colored_model(spec, UNARY_LANGUAGE, name="lemma4-empty")
        return Lemma4Result(m, unary_witness(m), None, None)
    l = max(b.stage, b.j)
    u = ("U", (l + 1,))
    # infinite colours are interleaved, so the evens land in U_{l+1}
    spec = ColoredStructureSpec.of([((u,), None), ((), None)])
    m = colored_model(spec, UNARY_LANGUAGE, name=f"lemma4-U{l + 1}")
    mark = Rel("U", (l + 1,), (Var(0),))
    phi = b.formula
    verdict = Lemma4Verdict(phi, m.satisfies(phi, (0,)), m.satisfies(phi, (1,)),
                            m.satisfies(mark, (0,)), m.satisfies(mark, (1,)))
    return Lemma4Result(m, unary_witness(m), l, verdict)


def pi01_labeling_check(H: HaltingPredicate, i: int) -> bool:
    """Whether R_i(x) is complete in T_H; raises if that disagrees with
    "i never halts" on the given predicate."""
    pt = pair_theory(H)
    verdict = bool(is_complete(pt.oracle, pt.labeling(i)))
    if verdict != (H.stage(i) is None):
        raise AssertionError(f"labeling fails at i={i}")
    return verdict
