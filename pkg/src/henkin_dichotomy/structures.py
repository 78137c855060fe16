"""Concrete structures the evaluator runs on.

Each structure answers atomic queries and supplies witness candidates.
Unary structures additionally report whether an element's colour, seen
through the symbols a formula mentions, pins down its full colour
(``split_symbol``), which the exact completeness test needs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Symbol = tuple[str, tuple[int, ...]]
INFINITE = None


# --------------------------------------------------------------------------
# (Q, <)


class RationalOrder:
    """(Q, <) with the single binary relation ``L``."""

    relation = "L"

    def holds(self, name, indices, values):
        if name != self.relation or indices:
            raise KeyError(f"symbol {name}{list(indices)} not in the order language")
        a, b = values
        return a < b

    def witnesses(self, ctx, values):
        vals = sorted(set(values))
        if not vals:
            return [Fraction(0)]
        out = [vals[0] - 1]
        for lo, hi in zip(vals, vals[1:]):
            out.append(lo)
            out.append((lo + hi) / 2)
        out.append(vals[-1])
        out.append(vals[-1] + 1)
        return out

    def memo_key(self, values):
        rank = {v: i for i, v in enumerate(sorted(set(values)))}
        return tuple(rank[v] for v in values)

    def split_symbol(self, value, ctx):
        return None


def fusc(n: int) -> int:
    """Stern's diatomic sequence."""
    a, b = 1, 0
    while n:
        if n & 1:
            b += a
        else:
            a += b
        n >>= 1
    return b


def calkin_wilf(k: int) -> Fraction:
    """k-th positive rational (k >= 1) in Calkin-Wilf order."""
    return Fraction(fusc(k), fusc(k + 1))


def calkin_wilf_index(q: Fraction) -> int:
    p, r = q.numerator, q.denominator
    if p <= 0:
        raise ValueError("positive rationals only")
    bits = []
    while (p, r) != (1, 1):
        if p < r:
            steps = (r - 1) // p if p == 1 else r // p
            steps = max(1, steps if p * steps < r else steps - 1)
            bits.extend([0] * steps)
            r -= steps * p
        else:
            steps = (p - 1) // r if r == 1 else p // r
            steps = max(1, steps if r * steps < p else steps - 1)
            bits.extend([1] * steps)
            p -= steps * r
    k = 1
    for bit in reversed(bits):
        k = 2 * k + bit
    return k


def nat_to_rational(n: int) -> Fraction:
    """0, 1, -1, 1/2, -1/2, 2, -2, ... (Calkin-Wilf order with signs)."""
    if n == 0:
        return Fraction(0)
    k = (n + 1) // 2
    q = calkin_wilf(k)
    return q if n % 2 == 1 else -q


def rational_to_nat(q: Fraction) -> int:
    q = Fraction(q)
    if q == 0:
        return 0
    k = calkin_wilf_index(abs(q))
    return 2 * k - 1 if q > 0 else 2 * k


# --------------------------------------------------------------------------
# unary structures


def _interleave(gens: Sequence[Iterator[int]]) -> Iterator[int]:
    """Merge increasing streams into one increasing stream."""
    import heapq
    heap = []
    for i, g in enumerate(gens):
        first = next(g, None)
        if first is not None:
            heap.append((first, i))
    heapq.heapify(heap)
    while heap:
        v, i = heapq.heappop(heap)
        yield v
        nxt = next(gens[i], None)
        if nxt is not None:
            heapq.heappush(heap, (nxt, i))


class UnaryStructure:
    """Base for structures in a language of unary relations.

    Subclasses provide ``color(e)`` (set of symbols true of ``e``),
    ``_class_members(ctx)`` and ``split_symbol``.
    """

    size: int | None = None

    def __init__(self):
        self._classes: dict = {}

    def color(self, e: int) -> frozenset[Symbol]:
        raise NotImplementedError

    def holds(self, name, indices, values):
        (e,) = values
        return (name, tuple(indices)) in self.color(e)

    def classes(self, ctx) -> list[tuple[frozenset, object]]:
        hit = self._classes.get(ctx)
        if hit is None:
            hit = self._class_members(ctx)
            self._classes[ctx] = hit
        return hit

    def _class_members(self, ctx):
        raise NotImplementedError

    def witnesses(self, ctx, values):
        seen = list(dict.fromkeys(values))
        taken = set(seen)
        out = list(seen)
        for _, members in self.classes(ctx):
            for m in members():
                if m not in taken:
                    out.append(m)
                    break
        return out

    def memo_key(self, values):
        return values


@dataclass(frozen=True)
class ColoredStructureSpec:
    """Colours (sets of unary symbols true) with class sizes; INFINITE = None."""
    colors: tuple[tuple[frozenset, int | None], ...]

    def __post_init__(self):
        seen = set()
        for col, card in self.colors:
            if col in seen:
                raise ValueError("colours must be pairwise distinct")
            seen.add(col)
            if card is not None and card < 1:
                raise ValueError("finite colour classes must be non-empty")
        if not self.colors:
            raise ValueError("a structure needs at least one colour")

    @classmethod
    def of(cls, rows: Iterable[tuple[Iterable[Symbol], int | None]]):
        return cls(tuple((frozenset((n, tuple(ix)) for n, ix in col), card) for col, card in rows))

    @property
    def size(self) -> int | None:
        if any(card is None for _, card in self.colors):
            return None
        return sum(card for _, card in self.colors)

    def symbols(self) -> frozenset[Symbol]:
        out = set()
        for col, _ in self.colors:
            out |= col
        return frozenset(out)


class ColoredStructure(UnaryStructure):
    """Presentation: finite colour classes first, in listed order, each as a
    consecutive block; then the infinite classes round-robin."""

    def __init__(self, spec: ColoredStructureSpec):
        super().__init__()
        self.spec = spec
        self.size = spec.size
        self._finite = [(col, card) for col, card in spec.colors if card is not None]
        self._infinite = [col for col, card in spec.colors if card is None]
        self._nfinite = sum(card for _, card in self._finite)

    def color(self, e):
        if e < 0 or (self.size is not None and e >= self.size):
            raise IndexError(f"element {e} not in the universe")
        if e < self._nfinite:
            for col, card in self._finite:
                if e < card:
                    return col
                e -= card
        k = len(self._infinite)
        return self._infinite[(e - self._nfinite) % k]

    def members_of(self, color) -> Iterator[int]:
        start = 0
        for col, card in self._finite:
            if col == color:
                return iter(range(start, start + card))
            start += card
        k = len(self._infinite)
        j = self._infinite.index(color)
        return itertools.count(self._nfinite + j, k)

    def _class_members(self, ctx):
        groups: dict[frozenset, list] = {}
        for col, _ in self.spec.colors:
            groups.setdefault(col & ctx, []).append(col)
        out = []
        for pat, cols in groups.items():
            out.append((pat, (lambda cols=cols: _interleave([self.members_of(c) for c in cols]))))
        return out

    def split_symbol(self, e, ctx):
        """A symbol outside ``ctx`` on which two full colours with the same
        ``ctx``-pattern as ``e`` differ, or None if the pattern is isolating."""
        mine = self.color(e)
        pat = mine & ctx
        for col, _ in self.spec.colors:
            if col != mine and col & ctx == pat:
                diff = sorted(col ^ mine)
                return diff[0]
        return None

    def universe(self) -> Iterator[int]:
        return iter(range(self.size)) if self.size is not None else itertools.count()


@dataclass(frozen=True)
class HaltingPredicate:
    """H(i, s): machine i on input i converges in exactly s steps."""
    halts: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]):
        table: dict[int, int] = {}
        for i, s in pairs:
            if i in table and table[i] != s:
                raise ValueError(f"machine {i} cannot halt at two different stages")
            table[i] = s
        return cls(dict(sorted(table.items())))

    def __call__(self, i: int, s: int) -> bool:
        return self.halts.get(i) == s

    def stage(self, i: int) -> int | None:
        return self.halts.get(i)

    def __hash__(self):
        return hash(tuple(sorted(self.halts.items())))


PAIR = "R"
PAIR_STAGE = "RS"


class PairStructure(UnaryStructure):
    """Pairs R_i = {2i, 2i+1} (after ``extras`` leading elements that lie in no
    R_i); R_{i,s} holds of the first element of pair i iff H(i, s).
    ``swap`` exchanges the two positions of each pair."""

    def __init__(self, H: HaltingPredicate, extras: int = 0, swap: bool = False):
        super().__init__()
        self.H = H
        self.extras = extras
        self.swap = swap

    def pair_of(self, e: int) -> tuple[int, bool] | None:
        """(pair index, is the R_{i,s} carrier) or None for an extra element."""
        if e < 0:
            raise IndexError(e)
        if e < self.extras:
            return None
        p = e - self.extras
        i, second = divmod(p, 2)
        first = (second == 1) if self.swap else (second == 0)
        return i, first

    def position(self, i: int, first: bool) -> int:
        off = 0 if first else 1
        if self.swap:
            off = 1 - off
        return self.extras + 2 * i + off

    def color(self, e):
        pi = self.pair_of(e)
        if pi is None:
            return frozenset()
        i, first = pi
        col = {(PAIR, (i,))}
        s = self.H.stage(i)
        if first and s is not None:
            col.add((PAIR_STAGE, (i, s)))
        return frozenset(col)

    def _class_members(self, ctx):
        mentioned = sorted({ix[0] for name, ix in ctx if name in (PAIR, PAIR_STAGE)})
        groups: dict[frozenset, list[int]] = {}
        for i in mentioned:
            for first in (True, False):
                e = self.position(i, first)
                pat = self.color(e) & ctx
                if pat:
                    groups.setdefault(pat, []).append(e)
        out = [(pat, (lambda es=sorted(es): iter(es))) for pat, es in groups.items()]

        def blank():
            for e in itertools.count():
                if not (self.color(e) & ctx):
                    yield e
        out.append((frozenset(), blank))
        return out

    def split_symbol(self, e, ctx):
        pi = self.pair_of(e)
        pat = self.color(e) & ctx
        if not pat:
            used = {ix[0] for name, ix in ctx if name in (PAIR, PAIR_STAGE)}
            j = 0
            while j in used:
                j += 1
            return (PAIR, (j,))
        i, _ = pi
        s = self.H.stage(i)
        if s is None:
            return None
        if (PAIR_STAGE, (i, s)) in ctx:
            return None
        return (PAIR_STAGE, (i, s))

    def universe(self):
        return itertools.count()


# --------------------------------------------------------------------------
# finite structures


class FiniteStructure:
    """A finite structure given by its relation tables."""

    def __init__(self, size: int, relations: Mapping[Symbol, Iterable[tuple[int, ...]]]):
        if size < 1:
            raise ValueError("structures are non-empty")
        self.size = size
        self.relations = {sym: frozenset(tuple(t) for t in rows) for sym, rows in relations.items()}
        for sym, rows in self.relations.items():
            for t in rows:
                if any(not 0 <= x < size for x in t):
                    raise ValueError(f"tuple {t} of {sym} leaves the universe")

    def holds(self, name, indices, values):
        return tuple(values) in self.relations.get((name, tuple(indices)), ())

    def witnesses(self, ctx, values):
        return range(self.size)

    def memo_key(self, values):
        return values

    def universe(self):
        return iter(range(self.size))

    def is_automorphism(self, perm: Sequence[int]) -> bool:
        if sorted(perm) != list(range(self.size)):
            return False
        for rows in self.relations.values():
            for t in rows:
                if tuple(perm[x] for x in t) not in rows:
                    return False
        return True

    def automorphisms(self) -> list[tuple[int, ...]]:
        return [p for p in itertools.permutations(range(self.size)) if self.is_automorphism(p)]
