"""Shared plumbing for the tests: corpus loading and a session-wide cache of
the expensive abstraction builds (interning makes reuse across the
fresh-counter resets safe)."""

from pathlib import Path

from bsc.abstraction import build_abstract_ts, build_concrete_ts
from bsc.model import reset_fresh_counter
from bsc.parser import parse_theory_file

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_path(name: str) -> str:
    return str(CORPUS / name)


def load(name: str):
    return parse_theory_file(corpus_path(name))


_abstract_cache: dict = {}
_concrete_cache: dict = {}


def abstraction(name: str, bound: int):
    """Cached build_abstract_ts of a corpus theory, numbering reset first so
    every cached result is the deterministic canonical build."""
    key = (name, bound)
    if key not in _abstract_cache:
        reset_fresh_counter()
        _abstract_cache[key] = build_abstract_ts(load(name), bound)
    return _abstract_cache[key]


def concrete(name: str, bound: int, pool_size: int):
    key = (name, bound, pool_size)
    if key not in _concrete_cache:
        reset_fresh_counter()
        _concrete_cache[key] = build_concrete_ts(load(name), bound, pool_size=pool_size)
    return _concrete_cache[key]
