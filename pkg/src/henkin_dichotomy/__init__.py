"""Effective Henkin constructions over decidable complete theories.

The central object is ``construction.Construction``: a stagewise Henkin
construction that either diagonalizes against candidate computable
elementary embeddings of a decidable model 𝒜 or, along the way, builds
witnesses that 𝒜 is effectively atomic.
"""
from .atomic import (OpenFormula, Verdict, back_and_forth, complete_check_via_atomic,
                     embed_atomic, finite_theta, is_complete, witness_from_h)
from .construction import Construction, run_construction
from .enumeration import SentenceEnumeration
from .functionals import MachineFunctional, TableFunctional, eval_stage, run_machine
from .logic import Language, parse_formula, print_formula
from .models import DecidableModel, HenkinModelView
from .theories import TheoryOracle, dlo_oracle, pair_theory, qe_eliminate, unary_oracle

__all__ = [
    "Construction", "DecidableModel", "HenkinModelView", "Language", "MachineFunctional",
    "OpenFormula", "SentenceEnumeration", "TableFunctional", "TheoryOracle", "Verdict",
    "back_and_forth", "complete_check_via_atomic", "dlo_oracle", "embed_atomic", "eval_stage",
    "finite_theta", "is_complete", "pair_theory", "parse_formula", "print_formula",
    "qe_eliminate", "run_construction", "run_machine", "unary_oracle", "witness_from_h",
]
