"""Formula syntax for relational first-order languages with Henkin constants.

Formulas are immutable trees.  The canonical text form is an s-expression::

    (ex (v 0) (and (rel R 3 (v 0)) (not (= (v 0) (c 2)))))

``(v i)`` is the variable x_i and ``(c i)`` is the Henkin constant c_i.
Binary connectives only; long conjunctions are right-nested chains.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Family:
    """A family of relation symbols, e.g. ``R`` with rank 1 gives R_0, R_1, ..."""
    name: str
    arity: int
    rank: int = 0

    def __post_init__(self):
        if self.arity < 1:
            raise FormulaError(f"family {self.name}: arity must be >= 1")
        if self.rank not in (0, 1, 2):
            raise FormulaError(f"family {self.name}: index rank must be 0, 1 or 2")
        if not self.name or self.name in ("=", "v", "c") or not self.name.isidentifier():
            raise FormulaError(f"bad family name {self.name!r}")


class Language:
    """Finite list of relation families; equality is always available."""

    def __init__(self, families: Iterable[Family]):
        self.families: tuple[Family, ...] = tuple(families)
        self._by_name = {f.name: f for f in self.families}
        if len(self._by_name) != len(self.families):
            raise FormulaError("family names must be unique")

    def family(self, name: str) -> Family:
        try:
            return self._by_name[name]
        except KeyError:
            raise FormulaError(f"unknown family {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __eq__(self, other):
        return isinstance(other, Language) and self.families == other.families

    def __hash__(self):
        return hash(self.families)

    def __repr__(self):
        return f"Language({list(self.families)!r})"


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True, slots=True)
class Var:
    index: int

    def __str__(self):
        return f"(v {self.index})"


@dataclass(frozen=True, slots=True)
class Const:
    index: int

    def __str__(self):
        return f"(c {self.index})"


Term = Var | Const


# --------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ("_hash", "_text", "_free", "_consts", "_vars")

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Formula, ...]:
        return ()

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        # printed forms are cached per node, so deep trees compare in O(1)
        # after the first time
        return print_formula(self) == print_formula(other)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return print_formula(self)

    def __repr__(self):
        return f"<{print_formula(self)}>"

    @property
    def free_vars(self) -> frozenset[int]:
        try:
            return self._free
        except AttributeError:
            self._free = self._compute_free()
            return self._free

    @property
    def constants(self) -> frozenset[int]:
        try:
            return self._consts
        except AttributeError:
            out = set()
            for t in _terms(self):
                if isinstance(t, Const):
                    out.add(t.index)
            self._consts = frozenset(out)
            return self._consts

    @property
    def all_vars(self) -> frozenset[int]:
        """Every variable index occurring anywhere, free or bound."""
        try:
            return self._vars
        except AttributeError:
            out = set()
            for node in walk(self):
                if isinstance(node, Quant):
                    out.add(node.var)
                elif isinstance(node, (Rel, Eq)):
                    out.update(t.index for t in node.terms() if isinstance(t, Var))
            self._vars = frozenset(out)
            return self._vars

    def is_sentence(self) -> bool:
        return not self.free_vars

    def _compute_free(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for ch in self.children():
            out |= ch.free_vars
        return out

    def _finish(self):
        # children are complete before their parent, so filling the caches
        # here never recurses; deep θ chains rely on this
        self._hash = hash((type(self).__name__, self._key()))
        self._free = self._compute_free()
        kids = self.children()
        if kids:
            out = frozenset()
            for ch in kids:
                out |= ch._consts
            self._consts = out
        else:
            self._consts = frozenset(t.index for t in self.terms() if isinstance(t, Const))


class Rel(Formula):
    __slots__ = ("name", "indices", "args")

    def __init__(self, name: str, indices: Sequence[int], args: Sequence[Term]):
        self.name = name
        self.indices = tuple(indices)
        self.args = tuple(args)
        self._finish()

    def _key(self):
        return (self.name, self.indices, self.args)

    def terms(self):
        return self.args

    def _compute_free(self):
        return frozenset(t.index for t in self.args if isinstance(t, Var))

    @property
    def symbol(self) -> tuple[str, tuple[int, ...]]:
        return (self.name, self.indices)


class Eq(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Term, right: Term):
        self.left = left
        self.right = right
        self._finish()

    def _key(self):
        return (self.left, self.right)

    def terms(self):
        return (self.left, self.right)

    def _compute_free(self):
        return frozenset(t.index for t in (self.left, self.right) if isinstance(t, Var))

    def is_trivial(self) -> bool:
        return self.left == self.right


class Not(Formula):
    __slots__ = ("body",)

    def __init__(self, body: Formula):
        self.body = body
        self._finish()

    def _key(self):
        return (self.body,)

    def children(self):
        return (self.body,)


class Binary(Formula):
    __slots__ = ("left", "right")
    op = ""

    def __init__(self, left: Formula, right: Formula):
        self.left = left
        self.right = right
        self._finish()

    def _key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)


class And(Binary):
    __slots__ = ()
    op = "and"


class Or(Binary):
    __slots__ = ()
    op = "or"


class Imp(Binary):
    __slots__ = ()
    op = "imp"


class Quant(Formula):
    __slots__ = ("var", "body")
    op = ""

    def __init__(self, var: int, body: Formula):
        self.var = var
        self.body = body
        self._finish()

    def _key(self):
        return (self.var, self.body)

    def children(self):
        return (self.body,)

    def _compute_free(self):
        return self.body.free_vars - {self.var}


class All(Quant):
    __slots__ = ()
    op = "all"


class Ex(Quant):
    __slots__ = ()
    op = "ex"


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def _terms(f: Formula) -> Iterator[Term]:
    for node in walk(f):
        if isinstance(node, (Rel, Eq)):
            yield from node.terms()


def symbols(f: Formula) -> frozenset[tuple[str, tuple[int, ...]]]:
    """Relation symbols (family name, indices) mentioned in ``f``."""
    return frozenset(n.symbol for n in walk(f) if isinstance(n, Rel))


def quantifier_rank(f: Formula) -> int:
    if isinstance(f, Quant):
        return 1 + quantifier_rank(f.body)
    return max((quantifier_rank(c) for c in f.children()), default=0)


# --------------------------------------------------------------------------
# printing


def _print_node(f: Formula) -> str:
    if isinstance(f, Rel):
        return "(" + " ".join(["rel", f.name, *map(str, f.indices), *map(str, f.args)]) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {f.body._text})"
    if isinstance(f, Binary):
        return f"({f.op} {f.left._text} {f.right._text})"
    if isinstance(f, Quant):
        return f"({f.op} (v {f.var}) {f.body._text})"
    raise TypeError(f"not a formula: {f!r}")


def print_formula(f: Formula) -> str:
    try:
        return f._text
    except AttributeError:
        pass
    # post-order without recursion; each node caches its text
    stack = [(f, False)]
    while stack:
        node, ready = stack.pop()
        if hasattr(node, "_text"):
            continue
        if ready:
            node._text = _print_node(node)
            continue
        stack.append((node, True))
        stack.extend((ch, False) for ch in node.children() if not hasattr(ch, "_text"))
    return f._text


# --------------------------------------------------------------------------
# parsing


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


class _Parser:
    def __init__(self, text: str, language: Language | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.language = language

    def peek(self):
        if self.pos >= len(self.tokens):
            raise ParseError("unexpected end of input", len(self.text.encode()))
        return self.tokens[self.pos]

    def offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode())

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, want: str):
        tok, at = self.next()
        if tok != want:
            raise ParseError(f"expected {want!r}, got {tok!r}", self.offset(at))

    def nat(self) -> int:
        tok, at = self.next()
        if not tok.isdigit() or not tok.isascii():
            raise ParseError(f"expected a natural number, got {tok!r}", self.offset(at))
        return int(tok)

    def term(self) -> Term:
        self.expect("(")
        tok, at = self.next()
        if tok == "v":
            t: Term = Var(self.nat())
        elif tok == "c":
            t = Const(self.nat())
        else:
            raise ParseError(f"expected term, got {tok!r}", self.offset(at))
        self.expect(")")
        return t

    def formula(self) -> Formula:
        self.expect("(")
        tok, at = self.next()
        if tok == "=":
            left = self.term()
            right = self.term()
            out: Formula = Eq(left, right)
        elif tok == "rel":
            name, name_at = self.next()
            if name in "()":
                raise ParseError("expected family name", self.offset(name_at))
            indices = []
            while self.peek()[0].isdigit():
                indices.append(self.nat())
            args = []
            while self.peek()[0] == "(":
                args.append(self.term())
            if not args:
                raise ParseError("relation needs at least one term", self.offset(at))
            if self.language is not None:
                try:
                    fam = self.language.family(name)
                except FormulaError:
                    raise ParseError(f"unknown family name {name!r}", self.offset(name_at)) from None
                if len(indices) != fam.rank:
                    raise ParseError(
                        f"family {name} takes {fam.rank} indices, got {len(indices)}", self.offset(at))
                if len(args) != fam.arity:
                    raise ParseError(
                        f"arity mismatch for {name}: expected {fam.arity}, got {len(args)}", self.offset(at))
            out = Rel(name, indices, args)
        elif tok == "not":
            out = Not(self.formula())
        elif tok in ("and", "or", "imp"):
            left = self.formula()
            right = self.formula()
            out = {"and": And, "or": Or, "imp": Imp}[tok](left, right)
        elif tok in ("all", "ex"):
            v = self.term()
            if not isinstance(v, Var):
                raise ParseError("quantifier must bind a variable", self.offset(at))
            body = self.formula()
            out = (All if tok == "all" else Ex)(v.index, body)
        else:
            raise ParseError(f"unknown operator {tok!r}", self.offset(at))
        self.expect(")")
        return out


def parse_formula(text: str, language: Language | None = None) -> Formula:
    """Parse canonical-grammar text.  Bound variables that clash with free ones
    (or with enclosing binders) are renamed to the least fresh indices."""
    p = _Parser(text, language)
    f = p.formula()
    if p.pos != len(p.tokens):
        _, at = p.tokens[p.pos]
        raise ParseError("trailing input", p.offset(at))
    return rectify(f)


# --------------------------------------------------------------------------
# variable discipline


def fresh_vars(n: int, *avoid: Formula | Iterable[int]) -> tuple[int, ...]:
    """The ``n`` least variable indices occurring in none of ``avoid``."""
    used: set[int] = set()
    for a in avoid:
        if isinstance(a, Formula):
            used |= a.all_vars
        else:
            used.update(a)
    out = []
    i = 0
    while len(out) < n:
        if i not in used:
            out.append(i)
        i += 1
    return tuple(out)


def rectify(f: Formula) -> Formula:
    """Rename bound variables so no binder reuses a variable that is free in
    the whole formula or bound by an enclosing quantifier."""
    free = f.free_vars
    used = set(f.all_vars)

    def go(g: Formula, scope: frozenset[int], ren: dict[int, int]) -> Formula:
        if isinstance(g, (Rel, Eq)):
            if not ren:
                return g
            return _rename_terms(g, ren)
        if isinstance(g, Quant):
            v = g.var
            if v in free or v in scope:
                nv = min(set(range(len(used) + 1)) - used)
                used.add(nv)
                ren = {**ren, v: nv}
                v = nv
            elif v in ren:
                ren = {k: w for k, w in ren.items() if k != v}
            body = go(g.body, scope | {v}, ren)
            if v == g.var and body is g.body:
                return g
            return type(g)(v, body)
        if isinstance(g, Not):
            b = go(g.body, scope, ren)
            return g if b is g.body else Not(b)
        if isinstance(g, Binary):
            l, r = go(g.left, scope, ren), go(g.right, scope, ren)
            return g if (l is g.left and r is g.right) else type(g)(l, r)
        raise TypeError(g)

    return go(f, frozenset(), {})


def _rename_terms(atom: Formula, ren: dict[int, int]) -> Formula:
    def sub(t: Term) -> Term:
        if isinstance(t, Var) and t.index in ren:
            return Var(ren[t.index])
        return t
    if isinstance(atom, Eq):
        return Eq(sub(atom.left), sub(atom.right))
    return Rel(atom.name, atom.indices, [sub(t) for t in atom.args])


def map_terms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` applying ``fn(term, bound)`` to every term occurrence,
    where ``bound`` is the set of variables bound at that point."""

    def go(g: Formula, bound: frozenset[int]) -> Formula:
        if isinstance(g, Eq):
            l, r = fn(g.left, bound), fn(g.right, bound)
            return g if (l == g.left and r == g.right) else Eq(l, r)
        if isinstance(g, Rel):
            args = tuple(fn(t, bound) for t in g.args)
            return g if args == g.args else Rel(g.name, g.indices, args)
        if isinstance(g, Not):
            b = go(g.body, bound)
            return g if b is g.body else Not(b)
        if isinstance(g, Binary):
            l, r = go(g.left, bound), go(g.right, bound)
            return g if (l is g.left and r is g.right) else type(g)(l, r)
        if isinstance(g, Quant):
            b = go(g.body, bound | {g.var})
            return g if b is g.body else type(g)(g.var, b)
        raise TypeError(g)

    return go(f, frozenset())


def substitute_constants(f: Formula, consts: Sequence[int], vars: Sequence[int]) -> Formula:
    """Replace every occurrence of c_{consts[i]} with x_{vars[i]}.

    The variables must be fresh for ``f`` so nothing can be captured.
    """
    if len(consts) != len(vars):
        raise FormulaError("consts and vars must have the same length")
    if len(set(consts)) != len(consts):
        raise FormulaError("duplicate constants")
    if len(set(vars)) != len(vars):
        raise FormulaError("duplicate variables")
    clash = set(vars) & f.all_vars
    if clash:
        raise FormulaError(f"variables {sorted(clash)} are not fresh")
    table = dict(zip(consts, vars))
    if not table or not (f.constants & table.keys()):
        return f

    def fn(t, bound):
        if isinstance(t, Const) and t.index in table:
            return Var(table[t.index])
        return t

    return map_terms(f, fn)


def instantiate(f: Formula, assignment: dict[int, Term]) -> Formula:
    """Replace free occurrences of variables by terms (used to plug Henkin
    constants into formulas; constants cannot be captured)."""
    if not assignment:
        return f

    def fn(t, bound):
        if isinstance(t, Var) and t.index not in bound and t.index in assignment:
            return assignment[t.index]
        return t

    return map_terms(f, fn)


def rename_free(f: Formula, mapping: dict[int, int]) -> Formula:
    return instantiate(f, {k: Var(v) for k, v in mapping.items()})


def close_existential(f: Formula, vars: Sequence[int]) -> Formula:
    """``∃vars f`` with the quantifiers in ascending variable order
    (the smallest index outermost)."""
    missing = set(vars) - f.free_vars
    if missing:
        raise FormulaError(f"variables {sorted(missing)} are not free in the formula")
    out = f
    for v in sorted(set(vars), reverse=True):
        out = Ex(v, out)
    return out


def close_universal(f: Formula, vars: Sequence[int]) -> Formula:
    out = f
    for v in sorted(set(vars), reverse=True):
        out = All(v, out)
    return out


# --------------------------------------------------------------------------
# small builders


def conj(parts: Sequence[Formula]) -> Formula:
    """Right-nested conjunction; needs at least one part."""
    if not parts:
        raise FormulaError("empty conjunction")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(parts: Sequence[Formula]) -> Formula:
    if not parts:
        raise FormulaError("empty disjunction")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def conjuncts(f: Formula) -> list[Formula]:
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def trivial_eq(i: int) -> Eq:
    """The pacing sentence (c_i = c_i)."""
    return Eq(Const(i), Const(i))


def is_trivial(f: Formula) -> bool:
    return isinstance(f, Eq) and f.left == f.right


def distinct_elements(k: int, start: int = 0) -> Formula:
    """Sentence saying there are at least ``k`` distinct elements."""
    vs = list(range(start, start + k))
    parts: list[Formula] = [Not(Eq(Var(a), Var(b))) for i, a in enumerate(vs) for b in vs[i + 1:]]
    body = conj(parts) if parts else Eq(Var(vs[0]), Var(vs[0])) if vs else None
    if body is None:
        # "at least 0 elements": a valid sentence
        return All(0, Eq(Var(0), Var(0)))
    return close_existential(body, vs) if vs else body


def exactly_k_elements(k: int) -> Formula:
    """There exist k distinct elements and not k+1 distinct elements."""
    return And(distinct_elements(k), Not(distinct_elements(k + 1)))


def lift_binders(f: Formula, base: int) -> Formula:
    """Rename the binder at nesting depth d to x_{base+d}.  ``base`` must
    exceed every free variable of ``f``."""
    if f.free_vars and max(f.free_vars) >= base:
        raise FormulaError("base must exceed every free variable")

    def go(g: Formula, ren: dict[int, int], depth: int) -> Formula:
        if isinstance(g, (Rel, Eq)):
            return _rename_terms(g, ren) if ren else g
        if isinstance(g, Not):
            return Not(go(g.body, ren, depth))
        if isinstance(g, Binary):
            return type(g)(go(g.left, ren, depth), go(g.right, ren, depth))
        if isinstance(g, Quant):
            v = base + depth
            return type(g)(v, go(g.body, {**ren, g.var: v}, depth + 1))
        raise TypeError(g)

    return go(f, {}, 0)


def rename_free_safe(f: Formula, mapping: dict[int, int]) -> Formula:
    """Rename free variables without capture: binders are first moved above
    every variable involved."""
    if not mapping:
        return f
    base = 1 + max([*f.all_vars, *mapping.values(), *mapping.keys(), -1])
    return rename_free(lift_binders(f, base), mapping)
