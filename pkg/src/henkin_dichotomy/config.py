"""JSON run configurations.

A theory spec is one of::

    {"kind": "dlo"}
    {"kind": "pair", "halts": [[1, 3], [4, 2]]}
    {"kind": "unary", "colors": [{"symbols": ["U 1"], "card": null},
                                 {"symbols": [], "card": 2}]}
    {"kind": "finite", "size": 3, "relations": {"P": [[0]]}}

Symbols are written ``"NAME i j ..."``; a ``card`` of null means infinite.
A model spec names a presentation of a model of the theory::

    {"kind": "dlo-canonical", "scale": "1", "shift": "0"}
    {"kind": "pair-prime", "extras": 0, "swap": false}
    {"kind": "unary"}
    {"kind": "finite", "size": 3, "relations": {...}}

A run config bundles a theory, a model, functionals (see
``functionals.functional_from_config``), ``stage_budget``, an optional
``trace`` path and an optional ``prefix`` of formula strings that the
sentence enumeration should list first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .enumeration import SentenceEnumeration
from .functionals import StagedFunctional, functional_from_config
from .logic import Family, Language, parse_formula
from .models import DecidableModel, colored_model, dlo_model, finite_model, pair_model
from .structures import ColoredStructureSpec, HaltingPredicate
from .theories import TheoryOracle, dlo_oracle, finite_oracle, pair_theory, unary_oracle


class ConfigError(ValueError):
    pass


def parse_symbol(text: str) -> tuple[str, tuple[int, ...]]:
    name, *ix = text.split()
    try:
        return name, tuple(int(i) for i in ix)
    except ValueError as exc:
        raise ConfigError(f"bad symbol {text!r}") from exc


def parse_halts(text: str) -> HaltingPredicate:
    """``"1:3,4:2"`` → H with H(1,3) and H(4,2)."""
    pairs = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        i, _, s = item.partition(":")
        try:
            pairs.append((int(i), int(s)))
        except ValueError as exc:
            raise ConfigError(f"bad halting pair {item!r}") from exc
    return HaltingPredicate.of(pairs)


def load_json(value) -> dict:
    """A dict, a JSON literal, or a path to a JSON file."""
    if isinstance(value, dict):
        return value
    text = str(value)
    if text.lstrip().startswith("{"):
        return json.loads(text)
    p = Path(text)
    if not p.exists():
        raise ConfigError(f"no such config file: {text}")
    return json.loads(p.read_text(encoding="utf-8"))


@dataclass
class Theory:
    oracle: TheoryOracle
    model: DecidableModel
    spec: dict
    H: HaltingPredicate | None = None
    colors: ColoredStructureSpec | None = None


def _colors(spec: dict) -> ColoredStructureSpec:
    rows = []
    for row in spec.get("colors", []):
        rows.append(([parse_symbol(s) for s in row.get("symbols", [])], row.get("card")))
    try:
        return ColoredStructureSpec.of(rows)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _unary_language(spec: dict) -> Language | None:
    fams = spec.get("families")
    if not fams:
        return None
    return Language([Family(f["name"], 1, f.get("rank", 1)) for f in fams])


def _relations(spec: dict) -> dict:
    out = {}
    for key, rows in spec.get("relations", {}).items():
        out[parse_symbol(key)] = [tuple(r) for r in rows]
    return out


def load_theory(value) -> Theory:
    if value in ("dlo", "pair"):
        value = {"kind": value}
    spec = load_json(value)
    kind = spec.get("kind")
    try:
        if kind == "dlo":
            o = dlo_oracle()
            return Theory(o, o.canonical, spec)
        if kind == "pair":
            H = HaltingPredicate.of(tuple(p) for p in spec.get("halts", []))
            pt = pair_theory(H)
            return Theory(pt.oracle, pt.model, spec, H=H)
        if kind == "unary":
            colors = _colors(spec)
            o = unary_oracle(colors, _unary_language(spec))
            return Theory(o, o.canonical, spec, colors=colors)
        if kind == "finite":
            m = finite_model(int(spec["size"]), _relations(spec))
            return Theory(finite_oracle(m), m, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad theory spec: {exc}") from exc
    raise ConfigError(f"unknown theory kind {kind!r}")


def load_model(value, theory: Theory) -> DecidableModel:
    if value is None:
        return theory.model
    if value in ("dlo-canonical", "pair-prime", "unary", "finite"):
        value = {"kind": value}
    spec = load_json(value)
    kind = spec.get("kind")
    try:
        if kind == "dlo-canonical":
            return dlo_model(Fraction(spec.get("scale", 1)), Fraction(spec.get("shift", 0)))
        if kind == "pair-prime":
            if theory.H is None:
                raise ConfigError("a pair model needs the pair theory")
            return pair_model(theory.H, int(spec.get("extras", 0)), bool(spec.get("swap", False)))
        if kind == "unary":
            colors = _colors(spec) if "colors" in spec else theory.colors
            if colors is None:
                raise ConfigError("a unary model needs colours")
            return colored_model(colors, theory.oracle.language)
        if kind == "finite":
            if "size" not in spec:
                return theory.model
            return finite_model(int(spec["size"]), _relations(spec), theory.oracle.language)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad model spec: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


@dataclass
class RunConfig:
    theory: Theory
    model: DecidableModel
    functionals: list[StagedFunctional]
    enumeration: SentenceEnumeration
    stage_budget: int = 0
    trace: str | None = None
    resume: str | None = None
    seed: int = 0
    raw: dict = field(default_factory=dict)


def load_run_config(value) -> RunConfig:
    spec = load_json(value)
    theory = load_theory(spec.get("theory", "dlo"))
    model = load_model(spec.get("model"), theory)
    try:
        funcs = [functional_from_config(f) for f in spec.get("functionals", [])]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad functional: {exc}") from exc
    lang = theory.oracle.language
    prefix = [parse_formula(t, lang) for t in spec.get("prefix", [])]
    budget = int(spec.get("stage_budget", 0))
    if budget < 0:
        raise ConfigError("stage_budget must be >= 0")
    return RunConfig(theory, model, funcs, SentenceEnumeration(lang, prefix),
                     budget, spec.get("trace"), spec.get("resume"), int(spec.get("seed", 0)), spec)
