"""The stagewise Henkin construction with diagonalization requirements.

Stage 0 puts (c_0 = c_0) into Γ.  Odd stages add Henkin witnesses, even
stages decide the least undecided sentence, possibly redirected by the
requirements R_Φ (one per functional in the supplied enumeration).  Along
the way each requirement keeps an approximation h to a witness that the
model 𝒜 is effectively atomic.

Every stage emits one JSON record; a run can be rebuilt from its records.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .enumeration import SentenceEnumeration, alpha_normal, pack, unpack
from .functionals import StagedFunctional, dom_tuple
from .logic import (And, Const, Eq, Ex, Formula, Imp, Not, Var, close_existential,
                    close_universal, conj, conjuncts, exactly_k_elements, fresh_vars, instantiate,
                    is_trivial, parse_formula, print_formula, substitute_constants, trivial_eq)
from .models import DecidableModel
from .theories import TheoryOracle


class BudgetExhausted(RuntimeError):
    pass


class TraceError(ValueError):
    pass


NOT_ONE_ONE = "NOT-ONE-ONE"
DIAGRAM_VIOLATION = "DIAGRAM-VIOLATION"


@dataclass(frozen=True)
class Certificate:
    """Why a requirement is completely satisfied.

    NOT-ONE-ONE: ``inputs`` are two elements sent to the same constant.
    DIAGRAM-VIOLATION: 𝒜 ⊭ ``formula`` at ``inputs`` (variables ``xvars``).
    """
    kind: str
    stage: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    formula: Formula | None = None
    xvars: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"kind": self.kind, "inputs": list(self.inputs), "outputs": list(self.outputs),
                "xvars": list(self.xvars),
                "formula": None if self.formula is None else print_formula(self.formula)}


@dataclass(frozen=True)
class HEntry:
    """h_s(ā) = φ(x̄); ``xvars`` lists x̄ aligned with ``inputs``."""
    stage: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    xvars: tuple[int, ...]
    formula: Formula

    def to_json(self) -> dict:
        return {"inputs": list(self.inputs), "outputs": list(self.outputs),
                "xvars": list(self.xvars), "formula": print_formula(self.formula)}


@dataclass
class RequirementState:
    index: int
    phi: StagedFunctional
    certificate: Certificate | None = None
    h: list[HEntry] = field(default_factory=list)
    initialized_at: int | None = None
    history: list[HEntry] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.certificate is not None

    def domain_elements(self) -> set[int]:
        out: set[int] = set()
        for ent in self.h:
            out.update(ent.inputs)
        return out


@dataclass(frozen=True)
class RemarkParameters:
    """(index of Φ, s*, s): the point after which Φ has stabilized."""
    phi_index: int
    s_star: int
    s: int

    def encode(self) -> int:
        return pack([self.phi_index, self.s_star, self.s])

    @classmethod
    def decode(cls, e: int) -> RemarkParameters:
        return cls(*unpack(e, 3))


def split_constants(f: Formula, outs: Sequence[int]) -> tuple[Formula, tuple[int, ...], tuple[int, ...]]:
    """Replace c_{outs[i]} by x_i and every other constant of ``f`` by a y
    variable.  Fresh variables come from the canonical allocator, x̄ first."""
    others = sorted(f.constants - set(outs))
    fresh = fresh_vars(len(outs) + len(others), f)
    xv, yv = fresh[:len(outs)], fresh[len(outs):]
    return substitute_constants(f, list(outs) + others, list(xv) + list(yv)), tuple(xv), tuple(yv)


def _present(vs: Iterable[int], f: Formula) -> list[int]:
    return [v for v in vs if v in f.free_vars]


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


class Construction:
    """A resumable run.  ``advance()`` executes one stage."""

    def __init__(self, oracle: TheoryOracle, model: DecidableModel,
                 enumeration: SentenceEnumeration | None = None,
                 functionals: Sequence[StagedFunctional] = (),
                 budget: int | None = None, trace=None):
        if set(f.name for f in oracle.language.families) != set(f.name for f in model.language.families):
            raise ValueError("theory and model must share a language")
        self.oracle = oracle
        self.model = model
        self.enumeration = enumeration or SentenceEnumeration(oracle.language)
        self.reqs = [RequirementState(i, phi) for i, phi in enumerate(functionals)]
        self.budget = budget
        self.deltas: list[Formula] = []
        self.parts: list[Formula] = []     # non-trivial part of each δ, or None
        self.decided: dict[int, tuple[int, bool]] = {}
        self.records: list[dict] = []
        self._trace = trace
        self._chosen: dict[str, tuple[int, bool]] = {}
        self._theta_cache: dict[int, Formula | None] = {}
        self._next_e = 0

    # ------------------------------------------------------------------
    # basic views

    @property
    def stage(self) -> int:
        """The last completed stage (-1 before stage 0)."""
        return len(self.deltas) - 1

    def theta(self, s: int) -> Formula | None:
        """θ_s without its trivial conjuncts; None when all are trivial."""
        if s in self._theta_cache:
            return self._theta_cache[s]
        parts = [p for p in self.parts[: s + 1] if p is not None]
        out = conj(parts) if parts else None
        if len(self._theta_cache) > 4:
            self._theta_cache.clear()
        self._theta_cache[s] = out
        return out

    def theta_full(self, s: int) -> Formula:
        """θ_s exactly as enumerated, trivial conjuncts included."""
        return conj(self.deltas[: s + 1])

    def _note_choice(self, chosen: Formula, s: int):
        text = print_formula(alpha_normal(chosen))
        self._chosen.setdefault(text, (s, True))
        if isinstance(chosen, Not):
            self._chosen.setdefault(print_formula(alpha_normal(chosen.body)), (s, False))

    def decision(self, e: int) -> tuple[int, bool] | None:
        """(stage, polarity) if σ_e or ¬σ_e was explicitly put into Γ."""
        hit = self.decided.get(e)
        if hit is None:
            hit = self._chosen.get(print_formula(self.enumeration(e)))
            if hit is not None:
                self.decided[e] = hit
        return hit

    def least_undecided(self) -> int:
        e = self._next_e
        while self.decision(e) is not None:
            e += 1
        self._next_e = e
        return e

    # ------------------------------------------------------------------
    # oracle-facing helpers

    def _and(self, a: Formula | None, b: Formula) -> Formula:
        return b if a is None else And(a, b)

    def forced(self, theta: Formula | None, gamma: Formula) -> bool:
        """T ⊢ ∀x̄ (θ(x̄) → γ(x̄))."""
        body = gamma if theta is None else Imp(theta, gamma)
        g, _, _ = split_constants(body, ())
        return self.oracle.proves(close_universal(g, sorted(g.free_vars)))

    def condition_a(self, theta, gamma, ins, outs) -> bool:
        """𝒜 ⊭ ∃ȳ ρ(ȳ, ā) where ρ = θ ∧ γ."""
        rho = self._and(theta, gamma)
        g, xv, yv = split_constants(rho, outs)
        f = close_existential(g, _present(yv, g))
        env = {x: a for x, a in zip(xv, ins) if x in f.free_vars}
        return not self.model.satisfies_env(f, env)

    def condition_b(self, theta, gamma, outs) -> bool:
        """T ⊢ ∃x̄[∃ȳ θ(ȳ,x̄) ∧ ∀ȳ(θ(ȳ,x̄) → γ(ȳ,x̄))]."""
        if theta is None:
            g, xv, yv = split_constants(gamma, outs)
            inner = close_universal(g, _present(yv, g))
        else:
            g, xv, yv = split_constants(And(theta, gamma), outs)
            th, ga = g.left, g.right
            inner = And(close_existential(th, _present(yv, th)),
                        close_universal(Imp(th, ga), _present(yv, Imp(th, ga))))
        return self.oracle.proves(close_existential(inner, _present(xv, inner)))

    def redirect(self, theta, gamma, outs) -> Formula:
        """γ ∧ ∀ȳ(θ(ȳ, Φ(ā)) → γ(ȳ, Φ(ā)))."""
        body = gamma if theta is None else Imp(theta, gamma)
        others = sorted(body.constants - set(outs))
        yv = fresh_vars(len(others), body)
        g = substitute_constants(body, others, yv)
        return And(gamma, close_universal(g, _present(yv, g)))

    def h_formula(self, theta: Formula | None, outs: Sequence[int]) -> tuple[Formula, tuple[int, ...]]:
        """φ(x̄) = ∃ȳ θ(ȳ, x̄), with x̄ aligned to ``outs``.  Variables of x̄
        that θ does not mention get a conjunct (x = x) so φ has exactly x̄
        free."""
        if theta is None:
            xv = tuple(range(len(outs)))
            return conj([Eq(Var(x), Var(x)) for x in xv]), xv
        g, xv, yv = split_constants(theta, outs)
        f = close_existential(g, _present(yv, g))
        missing = [x for x in xv if x not in f.free_vars]
        if missing:
            f = conj([f] + [Eq(Var(x), Var(x)) for x in missing])
        return f, xv

    # ------------------------------------------------------------------
    # requirement bookkeeping

    def domain(self, req: RequirementState, s: int):
        return dom_tuple(req.phi, s, self.model.size)

    def completely_satisfied(self, req: RequirementState, s: int,
                             theta: Formula | None) -> Certificate | None:
        ins, outs = self.domain(req, s)
        first: dict[int, int] = {}
        for a, c in zip(ins, outs):
            if c in first:
                return Certificate(NOT_ONE_ONE, s, (first[c], a), (c, c))
            first[c] = a
        if not ins or theta is None:
            return None
        f, xv = self.h_formula(theta, outs)
        if not self.model.satisfies_env(f, dict(zip(xv, ins))):
            return Certificate(DIAGRAM_VIOLATION, s, ins, outs, f, xv)
        return None

    def requires_attention(self, req: RequirementState, s: int) -> bool:
        if req.satisfied:
            return False
        ins, _ = self.domain(req, s)
        if not ins or ins[0] != 0:
            return False
        fresh = not req.h or req.initialized_at == s
        if fresh:
            return True
        if self.oracle.proves(exactly_k_elements(len(ins))):
            return True
        seg = 0
        while seg < len(ins) and ins[seg] == seg:
            seg += 1
        used = req.domain_elements()
        return all(a < seg for a in used) and seg > len(used)

    def update_h(self, req: RequirementState, s: int) -> HEntry:
        ins, outs = self.domain(req, s)
        f, xv = self.h_formula(self.theta(s), outs)
        ent = HEntry(s, ins, outs, xv, f)
        req.h.append(ent)
        req.history.append(ent)
        return ent

    # ------------------------------------------------------------------
    # stages

    def _emit(self, record: dict):
        self.records.append(record)
        if self._trace is not None:
            self._trace.write(_dump(record) + "\n")
            self._trace.flush()

    def advance(self) -> dict:
        s = self.stage + 1
        if self.budget is not None and s > self.budget:
            raise BudgetExhausted(f"stage budget {self.budget} reached")
        if s == 0:
            delta, part = trivial_eq(0), None
            record = {"stage": 0, "phase": "init", "delta": print_formula(delta)}
            self._push(delta, part)
        elif s % 2 == 1:
            record = self._odd(s)
        else:
            record = self._even(s)
        self._emit(record)
        return record

    def _push(self, delta: Formula, part: Formula | None):
        self.deltas.append(delta)
        self.parts.append(part)

    def _odd(self, s: int) -> dict:
        k = (s - 1) // 2
        cs = conjuncts(self.deltas[k])
        live = [c for c in cs if not is_trivial(c)]
        case = 2
        if len(live) == 1 and isinstance(live[0], Ex):
            ex = live[0]
            gamma = instantiate(ex.body, {ex.var: Const(s)})
            delta, case = And(gamma, trivial_eq(s)), 1
            part = None if is_trivial(gamma) else gamma
        else:
            delta, part = trivial_eq(s), None
        self._push(delta, part)
        return {"stage": s, "phase": "odd", "case": case, "delta": print_formula(delta)}

    def _even(self, s: int) -> dict:
        e = self.least_undecided()
        theta = self.theta(s - 1)
        events: list[dict] = []
        newly: list[int] = []
        for req in self.reqs:
            if req.satisfied:
                continue
            cert = self.completely_satisfied(req, s, theta)
            if cert is not None:
                req.certificate = cert
                newly.append(req.index)
                events.append({"event": "satisfied", "req": req.index, **cert.to_json()})

        sigma = self.enumeration(e)
        istar = e
        algo: list[list[int]] = []
        while True:
            # steps 2-3
            chosen = None
            for gamma in (sigma, Not(sigma)):
                if self.forced(theta, gamma):
                    chosen = gamma
                    break
            if chosen is not None:
                algo.append([istar, 3])
                break
            # steps 4-5
            active = [r for r in self.reqs if r.index <= istar and not r.satisfied]
            if not active:
                algo.append([istar, 5])
                chosen = sigma
                break
            # step 6
            hits = []
            for req in active:
                ins, outs = self.domain(req, s)
                a_gamma = None
                for gamma in (sigma, Not(sigma)):
                    if self.condition_a(theta, gamma, ins, outs):
                        a_gamma = gamma
                        break
                if a_gamma is not None:
                    hits.append((req.index, "a", a_gamma, outs))
                    continue
                for gamma in (sigma, Not(sigma)):
                    if self.condition_b(theta, gamma, outs):
                        hits.append((req.index, "b", gamma, outs))
                        break
            # step 7
            if not hits:
                algo.append([istar, 7])
                chosen = sigma
                break
            # step 8
            idx, how, gamma, outs = min(hits, key=lambda h: h[0])
            istar = idx
            if how == "a":
                algo.append([istar, 9])
                chosen = gamma
                break
            algo.append([istar, 10])
            sigma = self.redirect(theta, gamma, outs)

        delta = And(chosen, trivial_eq(s))
        self._push(delta, None if is_trivial(chosen) else chosen)
        self._note_choice(chosen, s)
        decided = None
        if chosen == self.enumeration(e) or chosen == Not(self.enumeration(e)):
            decided = [e, chosen == self.enumeration(e)]
            self.decided[e] = (s, decided[1])

        theta_s = self.theta(s)
        for req in self.reqs:
            if req.satisfied:
                continue
            cert = self.completely_satisfied(req, s, theta_s)
            if cert is not None:
                req.certificate = cert
                newly.append(req.index)
                events.append({"event": "satisfied", "req": req.index, **cert.to_json()})

        top = [i for i in newly if i <= e]
        if top:
            cut = min(top)
            wiped = [r.index for r in self.reqs if r.index > cut]
        else:
            wiped = [r.index for r in self.reqs if r.index >= e]
        if wiped:
            for i in wiped:
                self.reqs[i].h = []
                self.reqs[i].initialized_at = s
            events.append({"event": "initialized", "reqs": wiped})

        for req in self.reqs:
            if self.requires_attention(req, s):
                ent = self.update_h(req, s)
                events.append({"event": "h-update", "req": req.index, **ent.to_json()})

        return {"stage": s, "phase": "even", "e": e, "delta": print_formula(delta),
                "decided": decided, "algo": algo, "events": events}

    # ------------------------------------------------------------------
    # driving

    def run_to(self, s: int) -> Construction:
        while self.stage < s:
            self.advance()
        return self

    def run(self) -> Construction:
        if self.budget is None:
            raise ValueError("no budget set")
        return self.run_to(self.budget)

    def decide_sentence(self, e: int) -> bool:
        """Whether σ_e (rather than ¬σ_e) went into Γ; drives stages lazily."""
        while self.decision(e) is None:
            self.advance()
        return self.decided[e][1]

    def decision_stage(self, e: int) -> int:
        self.decide_sentence(e)
        return self.decided[e][0]

    # ------------------------------------------------------------------
    # resume

    @classmethod
    def from_records(cls, oracle, model, enumeration, functionals, records: Iterable[dict],
                     budget=None, trace=None) -> Construction:
        """Rebuild a run from its trace, checking the stage sequence and the
        consistency of every θ_s with the theory."""
        run = cls(oracle, model, enumeration, functionals, budget, trace=None)
        lang = oracle.language
        for rec in records:
            s = rec.get("stage")
            if s != run.stage + 1:
                raise TraceError(f"expected stage {run.stage + 1}, found {s}")
            delta = parse_formula(rec["delta"], lang)
            if print_formula(delta) != rec["delta"]:
                raise TraceError(f"stage {s}: delta is not in canonical form")
            if delta.constants and max(delta.constants) > s:
                raise TraceError(f"stage {s}: delta mentions a constant above c_{s}")
            part = delta.left if isinstance(delta, And) and not is_trivial(delta.left) else None
            run._push(delta, part)
            if rec["phase"] == "even":
                run._note_choice(delta.left, s)
            theta = run.theta(s)
            if theta is not None:
                g, xv, _ = split_constants(theta, ())
                if run.oracle.proves(Not(close_existential(g, sorted(g.free_vars)))):
                    raise TraceError(f"stage {s}: θ_s is inconsistent with the theory")
            for ev in rec.get("events", []):
                run._replay_event(s, ev, lang)
            run.records.append(rec)
        run._trace = trace
        return run

    def _replay_event(self, s: int, ev: dict, lang):
        kind = ev["event"]
        if kind == "satisfied":
            req = self.reqs[ev["req"]]
            f = ev.get("formula")
            req.certificate = Certificate(ev["kind"], s, tuple(ev["inputs"]), tuple(ev["outputs"]),
                                          None if f is None else parse_formula(f, lang),
                                          tuple(ev.get("xvars", ())))
        elif kind == "initialized":
            for i in ev["reqs"]:
                self.reqs[i].h = []
                self.reqs[i].initialized_at = s
        elif kind == "h-update":
            req = self.reqs[ev["req"]]
            ent = HEntry(s, tuple(ev["inputs"]), tuple(ev["outputs"]), tuple(ev["xvars"]),
                         parse_formula(ev["formula"], lang))
            req.h.append(ent)
            req.history.append(ent)
        else:
            raise TraceError(f"unknown event {kind!r}")


def run_construction(oracle: TheoryOracle, model: DecidableModel,
                     enumeration: SentenceEnumeration | None = None,
                     functionals: Sequence[StagedFunctional] = (),
                     stage_budget: int = 0, trace=None) -> Construction:
    if stage_budget < 0:
        raise ValueError("budget must be >= 0")
    return Construction(oracle, model, enumeration, functionals, stage_budget, trace).run()


def read_trace(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --------------------------------------------------------------------------
# the uniform witness


@dataclass(frozen=True)
class Invalid:
    reason: str


def check_remark(run: Construction, params: RemarkParameters) -> str | None:
    """None if ``params`` meet the stabilization conditions observable in
    ``run`` (which must have reached ``params.s``), else the reason."""
    p, s_star, s = params.phi_index, params.s_star, params.s
    if not 0 <= p < len(run.reqs):
        return f"no requirement with index {p}"
    if s_star <= p:
        return "s* must exceed the index of Φ"
    if s < s_star:
        return "s must be at least s*"
    run.run_to(s)
    for e in range(p + 1):
        st = run.decision(e)
        if st is None or st[0] >= s_star:
            return f"σ_{e} not decided before s*"
    for req in run.reqs[:p]:
        c = req.certificate
        if c is not None and c.stage >= s_star:
            return f"requirement {req.index} became satisfied at stage {c.stage} >= s*"
    stages = [ent.stage for ent in run.reqs[p].history if s_star <= ent.stage]
    if not stages or stages[0] != s:
        return "s is not the first stage >= s* at which Φ requires attention"
    return None


def uniform_witness(oracle: TheoryOracle, model: DecidableModel, code: int,
                    enumeration: SentenceEnumeration | None = None,
                    functionals: Sequence[StagedFunctional] = (),
                    budget: int = 0) -> Iterator[HEntry | Certificate] | Invalid:
    """Ψ(𝒜, e): replay the construction and stream the h entries of the
    requirement named by ``e`` from stage s on.  The stream ends at the
    budget, or with a certificate if the requirement gets satisfied."""
    params = RemarkParameters.decode(code)
    if params.s > budget:
        return Invalid("parameters lie beyond the budget")
    run = Construction(oracle, model, enumeration, functionals, budget)
    if params.phi_index >= len(run.reqs) or params.s_star <= params.phi_index:
        return Invalid(check_remark(run, params) or "bad parameters")
    reason = check_remark(run, params)
    if reason is not None:
        return Invalid(reason)

    def stream():
        req = run.reqs[params.phi_index]
        seen = 0
        while True:
            for ent in req.history[seen:]:
                if ent.stage >= params.s:
                    yield ent
            seen = len(req.history)
            if req.satisfied:
                yield req.certificate
                return
            if run.stage >= budget:
                return
            run.advance()
            for req_hi in run.reqs[:params.phi_index]:
                c = req_hi.certificate
                if c is not None and c.stage == run.stage:
                    yield Invalid(f"requirement {req_hi.index} became satisfied at stage {run.stage}")
                    return

    return stream()
