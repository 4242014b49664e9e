"""Verification of bounded situation-calculus action theories."""

from .model import (
    BoundViolation, BscError, EnumerationGuard, EvalError, FiniteTS,
    Interpretation, Theory, UnboundedEffect, ValidationError,
    reset_fresh_counter,
)
from .parser import ParseError, parse_mu_formula, parse_theory, parse_theory_file
from .foeval import INFINITE, answer, eval_fo
from .regression import bounded_all, next_orig_bounded, regress_one_step
from .abstraction import build_abstract_ts, build_concrete_ts, find_iso
from .mucheck import check
from .bisim import bisimilar, compute_bisimulation
from .transforms import (
    blocking_transform, check_bounded, enumerate_initial_models,
    fading_transform, parse_atm, atm_theory, verify_incomplete,
)

__all__ = [
    "BoundViolation", "BscError", "EnumerationGuard", "EvalError", "FiniteTS",
    "Interpretation", "Theory", "UnboundedEffect", "ValidationError",
    "reset_fresh_counter", "ParseError", "parse_mu_formula", "parse_theory",
    "parse_theory_file", "INFINITE", "answer", "eval_fo", "bounded_all",
    "next_orig_bounded", "regress_one_step", "build_abstract_ts",
    "build_concrete_ts", "find_iso", "check", "bisimilar",
    "compute_bisimulation", "blocking_transform", "check_bounded",
    "enumerate_initial_models", "fading_transform", "parse_atm", "atm_theory",
    "verify_incomplete",
]

__version__ = "0.1.0"
