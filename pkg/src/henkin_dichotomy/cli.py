"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 oracle or configuration failure,
3 stage budget exhausted.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

from .atomic import (SearchFailure, back_and_forth, canonical_witness, embed_atomic,
                     finite_theta, is_complete)
from .config import ConfigError, load_model, load_run_config, load_theory, parse_halts
from .construction import (BudgetExhausted, Certificate, Construction, Invalid, TraceError,
                           read_trace, uniform_witness)
from .counterexamples import PsiBehavior, lemma4_structure, pi01_labeling_check
from .logic import FormulaError, parse_formula, print_formula

EXIT_OK, EXIT_USAGE, EXIT_FAILURE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(line: str = ""):
    print(line)


# --------------------------------------------------------------------------
# run / decide / witness


def _build(cfg, budget, trace_path, resume_path):
    """A Construction, rebuilt from ``resume_path`` when given, writing new
    records to ``trace_path``."""
    args = (cfg.theory.oracle, cfg.model, cfg.enumeration, cfg.functionals)
    if resume_path:
        records = read_trace(resume_path)
        if records and budget < records[-1]["stage"]:
            raise UsageError("budget lies below the resumed trace")
        same = trace_path and Path(trace_path).resolve() == Path(resume_path).resolve()
        fh = None
        if trace_path:
            fh = open(trace_path, "a" if same else "w", encoding="utf-8")
            if not same:
                for rec in records:
                    fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")
        return Construction.from_records(*args, records, budget=budget, trace=fh), fh
    fh = open(trace_path, "w", encoding="utf-8") if trace_path else None
    return Construction(*args, budget=budget, trace=fh), fh


def _summary(run: Construction):
    _out(f"stages\t{run.stage + 1}")
    _out(f"decided below\t{run.least_undecided()}")
    for req in run.reqs:
        status = req.certificate.kind if req.certificate else "pending"
        _out(f"requirement {req.index}\t{status}\th={len(req.h)}")


def cmd_run(a) -> int:
    cfg = load_run_config(a.config)
    budget = cfg.stage_budget if a.budget is None else a.budget
    if budget < 0:
        raise UsageError("budget must be >= 0")
    run, fh = _build(cfg, budget, a.trace or cfg.trace, a.resume or cfg.resume)
    try:
        run.run()
    finally:
        if fh:
            fh.close()
    _summary(run)
    return EXIT_OK


def cmd_decide(a) -> int:
    cfg = load_run_config(a.config) if a.config else load_run_config({"theory": a.theory or "dlo"})
    budget = a.budget if a.budget is not None else max(cfg.stage_budget, 4 * a.e + 4)
    run = Construction(cfg.theory.oracle, cfg.model, cfg.enumeration, cfg.functionals, budget)
    polarity = run.decide_sentence(a.e)
    stage = run.decision_stage(a.e)
    _out(f"{a.e}\t{'+' if polarity else '-'}\tstage {stage}\t{print_formula(run.enumeration(a.e))}")
    return EXIT_OK


def cmd_witness(a) -> int:
    cfg = load_run_config(a.config)
    budget = cfg.stage_budget if a.budget is None else a.budget
    stream = uniform_witness(cfg.theory.oracle, cfg.model, a.code, cfg.enumeration,
                             cfg.functionals, budget)
    if isinstance(stream, Invalid):
        _out(f"INVALID\t{stream.reason}")
        return EXIT_OK
    for item in stream:
        if isinstance(item, Invalid):
            _out(f"INVALID\t{item.reason}")
        elif isinstance(item, Certificate):
            _out(f"SATISFIED\t{item.kind}")
        else:
            ins = ",".join(map(str, item.inputs))
            xs = ",".join(map(str, item.xvars))
            _out(f"{item.stage}\t{ins}\t{xs}\t{print_formula(item.formula)}")
    return EXIT_OK


# --------------------------------------------------------------------------
# atomic tools


def _theory(a):
    th = load_theory(a.theory)
    if getattr(a, "H", None):
        if th.H is None:
            raise UsageError("--H only applies to the pair theory")
        th = load_theory({"kind": "pair", "halts": sorted(parse_halts(a.H).halts.items())})
    return th


def cmd_complete(a) -> int:
    th = _theory(a)
    f = parse_formula(a.formula, th.oracle.language)
    xvars = [int(x) for x in a.xvars.split(",")] if a.xvars else None
    v = is_complete(th.oracle, f, budget=a.budget, xvars=xvars, exact=a.budget is None)
    _out(str(v))
    return EXIT_OK


def _pairs(stream, count):
    for x, y in itertools.islice(stream, count):
        _out(f"{x}\t{y}")


def cmd_iso(a) -> int:
    th = _theory(a)
    A = load_model(a.model_a, th)
    B = load_model(a.model_b, th)
    _pairs(back_and_forth(A, canonical_witness(A), B, canonical_witness(B), a.search_limit), a.count)
    return EXIT_OK


def cmd_embed(a) -> int:
    th = _theory(a)
    A = load_model(a.model_a, th)
    M = load_model(a.model_b, th)
    _pairs(embed_atomic(A, canonical_witness(A), M, a.search_limit), a.count)
    return EXIT_OK


def cmd_theta(a) -> int:
    th = load_theory(a.model)
    r = finite_theta(th.model, a.n, a.l, cap=a.cap)
    _out(print_formula(r.theta))
    _out("verified" if r.verified else f"unverified\t{r.reason}")
    return EXIT_OK


def cmd_counterexample(a) -> int:
    if a.which == "lemma4":
        if not a.behavior:
            raise UsageError("lemma4 needs --behavior")
        r = lemma4_structure(PsiBehavior.parse(a.behavior))
        if r.l is None:
            _out("structure\tall U_i empty")
            return EXIT_OK
        _out(f"l\t{r.l}")
        _out(f"structure\tU_{r.marked} = evens")
        v = r.verdict
        _out(f"formula\t{print_formula(v.formula)}\tat 0: {v.holds_at_0}\tat 1: {v.holds_at_1}")
        _out(f"U_{r.marked}\tat 0: {v.u_at_0}\tat 1: {v.u_at_1}")
        _out("not complete for 0" if v.refuted else "not refuted")
        return EXIT_OK
    if a.i is None:
        raise UsageError("pair needs --i")
    ok = pi01_labeling_check(parse_halts(a.H or ""), a.i)
    _out("COMPLETE" if ok else "INCOMPLETE")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="henkin", description="Effective Henkin construction toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run the construction from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--budget", type=int)
    r.add_argument("--trace")
    r.add_argument("--resume")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("decide", help="report how sentence e was decided")
    d.add_argument("--e", type=int, required=True)
    d.add_argument("--config")
    d.add_argument("--theory")
    d.add_argument("--budget", type=int)
    d.set_defaults(func=cmd_decide)

    w = sub.add_parser("witness", help="stream Ψ(𝒜, code)")
    w.add_argument("--config", required=True)
    w.add_argument("--code", type=int, required=True)
    w.add_argument("--budget", type=int)
    w.set_defaults(func=cmd_witness)

    c = sub.add_parser("complete", help="decide whether a formula is complete")
    c.add_argument("--theory", default="dlo")
    c.add_argument("--H")
    c.add_argument("--formula", required=True)
    c.add_argument("--xvars", help="comma-separated x̄ (default: free variables ascending)")
    c.add_argument("--budget", type=int, help="search mode with this many sentences")
    c.set_defaults(func=cmd_complete)

    for name, func, helptext in (("iso", cmd_iso, "back-and-forth isomorphism"),
                                 ("embed", cmd_embed, "forth-only embedding")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--theory", default="dlo")
        s.add_argument("--H")
        s.add_argument("--model-a")
        s.add_argument("--model-b")
        s.add_argument("--count", type=int, default=30)
        s.add_argument("--search-limit", type=int, default=100_000)
        s.set_defaults(func=func)

    t = sub.add_parser("theta", help="Θ for a finite model")
    t.add_argument("--model", required=True, help="finite theory spec (JSON or path)")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--l", type=int, required=True)
    t.add_argument("--cap", type=int, default=20_000)
    t.set_defaults(func=cmd_theta)

    x = sub.add_parser("counterexample", help="the negative constructions")
    x.add_argument("which", choices=["lemma4", "pair"])
    x.add_argument("--behavior")
    x.add_argument("--H")
    x.add_argument("--i", type=int)
    x.set_defaults(func=cmd_counterexample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExhausted,) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, FormulaError, TraceError, SearchFailure, LookupError,
            json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
