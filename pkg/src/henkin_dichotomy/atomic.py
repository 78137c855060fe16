"""Atomic witnesses, deciding complete formulas, back-and-forth, and the
finite-model Θ procedure."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Sequence

from .enumeration import SentenceEnumeration, alpha_normal
from .logic import (All, Const, Eq, Formula, FormulaError, Imp, Not, Rel, Var,
                    close_existential, close_universal, conj, disj, fresh_vars, lift_binders,
                    rename_free_safe, substitute_constants, symbols)
from .models import DecidableModel
from .structures import PAIR, PAIR_STAGE, ColoredStructure, FiniteStructure, PairStructure
from .theories import TheoryOracle


@dataclass(frozen=True)
class OpenFormula:
    """A formula together with the variable tuple its arguments bind to."""
    formula: Formula
    xvars: tuple[int, ...]

    def __post_init__(self):
        extra = self.formula.free_vars - set(self.xvars)
        if extra:
            raise FormulaError(f"free variables {sorted(extra)} are not among x̄")

    def __str__(self):
        return f"{list(self.xvars)} {self.formula}"


AtomicWitness = Callable[[Sequence[int]], OpenFormula]


def _pad(f: Formula, xvars: Sequence[int]) -> Formula:
    missing = [x for x in xvars if x not in f.free_vars]
    return conj([f] + [Eq(Var(x), Var(x)) for x in missing]) if missing else f


def realign(of: OpenFormula, target: Sequence[int]) -> Formula:
    """The formula with its x̄ renamed to ``target`` (capture-free)."""
    if len(target) != len(of.xvars):
        raise FormulaError("variable tuples differ in length")
    mapping = {x: t for x, t in zip(of.xvars, target) if x != t}
    return rename_free_safe(of.formula, mapping)


def holds(model: DecidableModel, of: OpenFormula, a: Sequence[int]) -> bool:
    if len(a) != len(of.xvars):
        raise FormulaError("tuple length does not match x̄")
    env = {x: v for x, v in zip(of.xvars, a)}
    seen: dict[int, int] = {}
    for x, v in zip(of.xvars, a):
        if seen.setdefault(x, v) != v:
            return False
    return model.satisfies_env(of.formula, {x: v for x, v in env.items() if x in of.formula.free_vars})


# --------------------------------------------------------------------------
# witnesses from h


def witness_from_h(h: Sequence, a: Sequence[int]) -> OpenFormula:
    """From the first h entry whose domain covers ``a``, quantify away the
    other positions.  Repeated entries of ``a`` become equalities."""
    need = set(a)
    for ent in h:
        if need <= set(ent.inputs):
            break
    else:
        raise LookupError(f"no h entry covers {tuple(a)}")
    if tuple(a) == tuple(ent.inputs):
        return OpenFormula(ent.formula, tuple(ent.xvars))
    pos = {v: i for i, v in enumerate(ent.inputs)}
    keep = [ent.xvars[pos[v]] for v in dict.fromkeys(a)]
    drop = [x for x in ent.xvars if x not in keep]
    f = close_existential(ent.formula, [x for x in drop if x in ent.formula.free_vars])
    f = _pad(f, keep)
    out: list[int] = []
    extra: list[Formula] = []
    first: dict[int, int] = {}
    spare = iter(fresh_vars(len(a), f))
    for v in a:
        x = ent.xvars[pos[v]]
        if v in first:
            y = next(spare)
            extra.append(Eq(Var(y), Var(first[v])))
            out.append(y)
        else:
            first[v] = x
            out.append(x)
    if extra:
        f = conj([f] + extra)
    return OpenFormula(f, tuple(out))


# --------------------------------------------------------------------------
# complete formulas


class Verdict(Enum):
    COMPLETE = "COMPLETE"
    INCOMPLETE = "INCOMPLETE"
    UNKNOWN = "UNKNOWN"
    INCONSISTENT = "INCONSISTENT"


@dataclass(frozen=True)
class Completeness:
    verdict: Verdict
    witness: Formula | None = None

    def __bool__(self):
        return self.verdict is Verdict.COMPLETE

    def __str__(self):
        return self.verdict.value if self.witness is None else f"{self.verdict.value} {self.witness}"


def _xvars_of(phi: Formula | OpenFormula, xvars) -> tuple[Formula, tuple[int, ...]]:
    if isinstance(phi, OpenFormula):
        return phi.formula, phi.xvars
    if xvars is None:
        xvars = tuple(sorted(phi.free_vars))
    return phi, tuple(xvars)


def consistent(oracle: TheoryOracle, phi: Formula, xvars: Sequence[int]) -> bool:
    return oracle.proves(close_existential(phi, [x for x in dict.fromkeys(xvars) if x in phi.free_vars]))


def implies(oracle: TheoryOracle, phi: Formula, psi: Formula, xvars: Sequence[int]) -> bool:
    body = Imp(phi, psi)
    return oracle.proves(close_universal(body, sorted(body.free_vars)))


def describe_config(oracle: TheoryOracle, xvars: Sequence[int], values: Sequence, ctx) -> Formula:
    """A quantifier-free description of a tuple of structure values: its
    equality pattern plus every ctx atom, true or negated."""
    s = oracle.structure
    parts: list[Formula] = []
    for i, j in itertools.combinations(range(len(xvars)), 2):
        e = Eq(Var(xvars[i]), Var(xvars[j]))
        parts.append(e if values[i] == values[j] else Not(e))
    fams = {n: oracle.language.family(n) for n, _ in ctx}
    for (name, ix) in sorted(ctx):
        ar = fams[name].arity
        for combo in itertools.product(range(len(xvars)), repeat=ar):
            atom = Rel(name, ix, [Var(xvars[k]) for k in combo])
            truth = s.holds(name, ix, tuple(values[k] for k in combo))
            parts.append(atom if truth else Not(atom))
    return conj(parts) if parts else Eq(Var(xvars[0]), Var(xvars[0]))


def _finite_type_formula(structure: FiniteStructure, language, xvars: Sequence[int],
                         values: Sequence[int]) -> Formula:
    """Isolates the orbit of ``values``: the whole atomic diagram with the
    remaining elements existentially quantified and the universe closed off."""
    n = structure.size
    rest = [v for v in range(n) if v not in values]
    yv = fresh_vars(len(rest) + 1, list(xvars))
    ys, z = yv[:-1], yv[-1]
    name = {}
    for x, v in zip(xvars, values):
        name.setdefault(v, x)
    for y, v in zip(ys, rest):
        name[v] = y
    parts: list[Formula] = []
    for x, v in zip(xvars, values):
        if name[v] != x:
            parts.append(Eq(Var(x), Var(name[v])))
    elems = sorted(name)
    for i, j in itertools.combinations(elems, 2):
        parts.append(Not(Eq(Var(name[i]), Var(name[j]))))
    for fam in language.families:
        syms = [s for s in structure.relations if s[0] == fam.name]
        for sym in sorted(syms):
            for combo in itertools.product(elems, repeat=fam.arity):
                atom = Rel(sym[0], sym[1], [Var(name[c]) for c in combo])
                parts.append(atom if structure.holds(sym[0], sym[1], combo) else Not(atom))
    parts.append(All(z, disj([Eq(Var(z), Var(name[v])) for v in elems])))
    return close_existential(conj(parts), [y for y in ys])


def is_complete(oracle: TheoryOracle, phi: Formula | OpenFormula, budget: int | None = None,
                xvars: Sequence[int] | None = None, exact: bool = True,
                enumeration: SentenceEnumeration | None = None) -> Completeness:
    """Decide whether φ(x̄) is a complete formula of the oracle's theory.

    Exact mode works by analysing which configurations of x̄ satisfy φ in
    the canonical model; the budgeted mode searches for a splitting ψ among
    the first ``budget`` sentences and may answer UNKNOWN.
    """
    phi, xs = _xvars_of(phi, xvars)
    if not xs:
        raise FormulaError("a complete formula needs at least one variable")
    if not consistent(oracle, phi, xs):
        return Completeness(Verdict.INCONSISTENT)
    if exact and oracle.kind in ("dlo", "unary", "pair", "finite"):
        return _exact(oracle, phi, xs)
    if budget is None:
        raise ValueError("budgeted mode needs a budget")
    return _search(oracle, phi, xs, budget, enumeration or SentenceEnumeration(oracle.language))


def _exact(oracle: TheoryOracle, phi: Formula, xs: tuple[int, ...]) -> Completeness:
    s = oracle.structure
    ev = oracle.evaluator
    distinct = list(dict.fromkeys(xs))
    if oracle.kind == "finite":
        sols = list(ev.solutions(distinct, phi))
        autos = s.automorphisms()
        first = sols[0]
        orbit = {tuple(p[v] for v in first) for p in autos}
        for other in sols[1:]:
            if other not in orbit:
                psi = _finite_type_formula(s, oracle.language, distinct, first)
                return Completeness(Verdict.INCOMPLETE, psi)
        return Completeness(Verdict.COMPLETE)
    ctx = symbols(phi)
    if oracle.kind == "dlo":
        ctx = ctx | {("L", ())}
    sols = list(ev.solutions(distinct, phi, limit=2))
    if len(sols) > 1:
        return Completeness(Verdict.INCOMPLETE, describe_config(oracle, distinct, sols[0], ctx))
    if oracle.kind == "dlo":
        return Completeness(Verdict.COMPLETE)
    for x, v in zip(distinct, sols[0]):
        sym = s.split_symbol(v, ctx)
        if sym is not None:
            return Completeness(Verdict.INCOMPLETE, Rel(sym[0], sym[1], [Var(x)]))
    return Completeness(Verdict.COMPLETE)


def instantiate_sentence(sentence: Formula, xs: Sequence[int]) -> Formula | None:
    """Read c_i as x_{xs[i]}; None if the sentence names a constant beyond x̄."""
    if sentence.constants and max(sentence.constants) >= len(xs):
        return None
    base = 1 + max([*xs, -1])
    lifted = lift_binders(sentence, base)
    consts = sorted(lifted.constants)
    return substitute_constants(lifted, consts, [xs[c] for c in consts])


def _search(oracle, phi, xs, budget, enumeration) -> Completeness:
    for e in range(budget):
        psi = instantiate_sentence(enumeration(e), xs)
        if psi is None:
            continue
        if implies(oracle, phi, psi, xs) or implies(oracle, phi, Not(psi), xs):
            continue
        return Completeness(Verdict.INCOMPLETE, psi)
    return Completeness(Verdict.UNKNOWN)


def complete_check_via_atomic(oracle: TheoryOracle, model: DecidableModel, g: AtomicWitness,
                              phi: Formula | OpenFormula, xvars: Sequence[int] | None = None,
                              search_limit: int = 10_000) -> bool:
    """φ is complete iff it implies the complete formula g(ā) of some ā
    satisfying it."""
    phi, xs = _xvars_of(phi, xvars)
    if not consistent(oracle, phi, xs):
        raise FormulaError("formula is inconsistent with the theory")
    of = OpenFormula(phi, xs)
    for a in _tuples(model, len(xs), search_limit):
        if holds(model, of, a):
            psi = realign(g(a), xs)
            return implies(oracle, phi, psi, xs)
    raise LookupError("no satisfying tuple found within the search limit")


def _tuples(model: DecidableModel, n: int, limit: int) -> Iterator[tuple[int, ...]]:
    """All n-tuples, ordered by their largest entry."""
    count = 0
    for top in model.elements():
        for t in itertools.product(range(top + 1), repeat=n):
            if top in t:
                yield t
                count += 1
                if count >= limit:
                    return


# --------------------------------------------------------------------------
# canonical atomic witnesses


def equality_pattern(a: Sequence[int], xs: Sequence[int]) -> list[Formula]:
    out = []
    for i, j in itertools.combinations(range(len(a)), 2):
        e = Eq(Var(xs[i]), Var(xs[j]))
        out.append(e if a[i] == a[j] else Not(e))
    return out


def dlo_witness(model: DecidableModel) -> AtomicWitness:
    """The order type of the tuple."""
    def g(a):
        xs = tuple(range(len(a)))
        vals = [model.value(x) for x in a]
        parts: list[Formula] = []
        for i, j in itertools.combinations(range(len(a)), 2):
            if vals[i] == vals[j]:
                parts.append(Eq(Var(i), Var(j)))
            elif vals[i] < vals[j]:
                parts.append(Rel("L", (), (Var(i), Var(j))))
            else:
                parts.append(Rel("L", (), (Var(j), Var(i))))
        return OpenFormula(_pad(conj(parts) if parts else Eq(Var(0), Var(0)), xs), xs)
    return g


def colour_literals(model: DecidableModel, x: int, e: int) -> list[Formula]:
    s = model.structure
    if isinstance(s, PairStructure):
        pi = s.pair_of(e)
        if pi is None:
            raise ValueError(f"element {e} realizes a non-isolated type")
        i, first = pi
        lits: list[Formula] = [Rel(PAIR, (i,), (Var(x),))]
        st = s.H.stage(i)
        if st is not None:
            atom = Rel(PAIR_STAGE, (i, st), (Var(x),))
            lits.append(atom if first else Not(atom))
        return lits
    if isinstance(s, ColoredStructure):
        col = s.color(e)
        return [Rel(n, ix, (Var(x),)) if (n, ix) in col else Not(Rel(n, ix, (Var(x),)))
                for n, ix in sorted(s.spec.symbols())]
    raise TypeError("colour literals need a unary structure")


def unary_witness(model: DecidableModel) -> AtomicWitness:
    """Each element's full colour plus the equality pattern."""
    def g(a):
        xs = tuple(range(len(a)))
        parts = equality_pattern(a, xs)
        for x, e in zip(xs, a):
            parts.extend(colour_literals(model, x, e))
        return OpenFormula(_pad(conj(parts) if parts else Eq(Var(0), Var(0)), xs), xs)
    return g


def finite_witness(model: DecidableModel) -> AtomicWitness:
    def g(a):
        xs = tuple(range(len(a)))
        f = _finite_type_formula(model.structure, model.language, xs, list(a))
        return OpenFormula(_pad(f, xs), xs)
    return g


def canonical_witness(model: DecidableModel) -> AtomicWitness:
    s = model.structure
    if isinstance(s, FiniteStructure):
        return finite_witness(model)
    if isinstance(s, (PairStructure, ColoredStructure)):
        return unary_witness(model)
    return dlo_witness(model)


# --------------------------------------------------------------------------
# back-and-forth


class SearchFailure(RuntimeError):
    pass


def _find(model: DecidableModel, psi: OpenFormula, prefix: list[int], taken: set, limit: int) -> int:
    for k, b in enumerate(model.elements()):
        if k >= limit:
            break
        if b in taken:
            continue
        if holds(model, psi, prefix + [b]):
            return b
    raise SearchFailure("no element realizes the complete formula within the search limit")


def back_and_forth(A: DecidableModel, gA: AtomicWitness, B: DecidableModel, gB: AtomicWitness,
                   search_limit: int = 100_000) -> Iterator[tuple[int, int]]:
    """Even steps extend from A, odd steps from B, always with the least
    element of that side not yet mapped."""
    left: list[int] = []
    right: list[int] = []
    used_a: set[int] = set()
    used_b: set[int] = set()
    ia, ib = A.elements(), B.elements()
    step = 0
    while True:
        if step % 2 == 0:
            a = next((x for x in ia if x not in used_a), None)
            if a is None:
                if B.finite and len(used_b) == B.size:
                    return
                step += 1
                continue
            b = _find(B, gA(left + [a]), right, used_b, search_limit)
        else:
            b = next((x for x in ib if x not in used_b), None)
            if b is None:
                if A.finite and len(used_a) == A.size:
                    return
                step += 1
                continue
            a = _find(A, gB(right + [b]), left, used_a, search_limit)
        left.append(a)
        right.append(b)
        used_a.add(a)
        used_b.add(b)
        step += 1
        yield a, b


def embed_atomic(A: DecidableModel, gA: AtomicWitness, M: DecidableModel,
                 search_limit: int = 100_000) -> Iterator[tuple[int, int]]:
    left: list[int] = []
    right: list[int] = []
    used: set[int] = set()
    for a in A.elements():
        b = _find(M, gA(left + [a]), right, used, search_limit)
        left.append(a)
        right.append(b)
        used.add(b)
        yield a, b


# --------------------------------------------------------------------------
# finite models


@dataclass(frozen=True)
class ThetaResult:
    theta: Formula
    xvars: tuple[int, ...]
    verified: bool
    examined: int
    reason: str = ""


def finite_theta(A: DecidableModel, n: int, l: int, cap: int = 20_000,
                 enumeration: SentenceEnumeration | None = None) -> ThetaResult:
    """Walk the true sentences about c_0..c_{n-1} (c_i naming i) in
    enumeration order until exactly ``l`` maps {0..n-1} → A survive, and
    conjoin the ones that refuted something.  With correct guesses the
    survivors are the automorphisms, so Θ pins down the type of 0..n-1."""
    if not isinstance(A.structure, FiniteStructure):
        raise TypeError("finite_theta needs a finite model")
    en = enumeration or SentenceEnumeration(A.language)
    size = A.structure.size
    interp = {i: i for i in range(min(n, size))}
    xs = tuple(range(n))
    maps = list(itertools.product(range(size), repeat=min(n, size))) if n <= size else []
    alive = set(range(len(maps)))
    kept: list[Formula] = []
    examined = 0
    reason = ""
    while True:
        if len(alive) == l:
            break
        if examined >= cap:
            reason = "enumeration cap reached before the guessed count"
            break
        sigma = en(examined)
        examined += 1
        if sigma.constants and max(sigma.constants) >= n:
            continue
        if n > size:
            reason = "more constants than elements"
            break
        if not A.satisfies_constants(sigma, interp):
            continue
        dead = {k for k in alive if not A.satisfies_constants(sigma, dict(enumerate(maps[k])))}
        # only sentences that refute a surviving map are kept
        if dead:
            kept.append(sigma)
            alive -= dead
    if not kept:
        kept.append(Eq(Const(0), Const(0)))
    body = conj([instantiate_sentence(alpha_normal(s), xs) for s in kept])
    body = _pad(body, xs)
    true_l = len(A.structure.automorphisms())
    verified = not reason and n == size and l == true_l
    if not reason and not verified:
        reason = "guessed size or automorphism count is wrong"
    return ThetaResult(body, xs, verified, examined, reason)


# --------------------------------------------------------------------------
# a correct embedding, read off a finished run


def embedding_table(run, elements: int, search_limit: int = 50_000) -> list[tuple[int, int, int]]:
    """Rows (a, c, stage) mapping 0..elements-1 injectively to constants of
    ``run`` so that ∃ȳ θ_t(ȳ, x̄) is complete and true in 𝒜 at the mapped
    prefix, with ``stage`` the first t at which that holds.

    Fed back as a table functional into a run with the same enumeration,
    the map never steers a choice: any γ that 𝒜 would refute is already
    refuted by θ_t, so the forced step fires first.
    """
    model = run.model
    last = run.stage
    consts = sorted({c for d in run.deltas for c in d.constants if c > 0} | {0})
    theta = run.theta(last)

    def ok(outs, ins, s):
        th = run.theta(s)
        if th is None:
            return True
        f, xv = run.h_formula(th, outs)
        if not model.satisfies_env(f, dict(zip(xv, ins))):
            return False
        return bool(is_complete(run.oracle, OpenFormula(f, xv)))

    tried = 0

    def extend(outs):
        nonlocal tried
        a = len(outs)
        if a == elements:
            return outs
        for c in consts:
            if c in outs:
                continue
            tried += 1
            if tried > search_limit:
                raise SearchFailure("embedding search limit reached")
            if theta is None or ok(outs + [c], list(range(a + 1)), last):
                got = extend(outs + [c])
                if got is not None:
                    return got
        return None

    outs = extend([])
    if outs is None:
        raise SearchFailure("the run has too few constants for the requested prefix")
    rows = []
    for a in range(elements):
        ins, prefix = list(range(a + 1)), outs[: a + 1]
        first = next(t for t in range(max(prefix) + 1, last + 1) if ok(prefix, ins, t))
        rows.append((a, outs[a], max(first, a + 1)))
    # convergence must also respect the earlier elements' stages
    for k in range(1, len(rows)):
        a, c, t = rows[k]
        rows[k] = (a, c, max(t, rows[k - 1][2]))
    return rows
