"""Persistence-preserving bisimulation between finite transition systems.

A relation of triples (q1, h, q2), with h an isomorphism between the state
labelings mapping constants by name, refined to the greatest fixpoint: every
transition on one side must be matched on the other by a successor pair
whose surviving isomorphism g agrees with h on the persisting objects, the
union h ∪ g staying injective.  Object identity is thus preserved across
steps while purely fresh objects may be renamed.
"""

from __future__ import annotations

from typing import Optional

from .model import FiniteTS, ObjectId
from .abstraction import find_isos

Iso = dict[ObjectId, ObjectId]
Relation = dict[tuple[int, int], list[Iso]]


def _extension_compatible(h: Iso, g: Iso) -> bool:
    """Can h (over the source state's adom) and g (over the successor's) be
    merged into one injective map?  Agreement on shared objects plus global
    injectivity is exactly the bijection-between-unions condition."""
    merged: dict[ObjectId, ObjectId] = dict(h)
    for d, e in g.items():
        old = merged.get(d)
        if old is not None and old is not e:
            return False
        merged[d] = e
    images = set()
    for e in merged.values():
        if e in images:
            return False
        images.add(e)
    return True


def compute_bisimulation(ts1: FiniteTS, ts2: FiniteTS) -> Relation:
    """The greatest persistence-preserving bisimulation, as surviving
    isomorphism lists per state pair."""
    rel: Relation = {}
    by_sig: dict[tuple, list[int]] = {}
    for q2, i2 in ts2.labels.items():
        by_sig.setdefault(i2.iso_key, []).append(q2)
    for q1, i1 in ts1.labels.items():
        for q2 in by_sig.get(i1.iso_key, []):
            isos = list(find_isos(i1, ts2.labels[q2]))
            if isos:
                rel[(q1, q2)] = isos

    def h_survives(q1: int, q2: int, h: Iso) -> bool:
        for q1p in ts1.successors(q1):
            if not any(
                _extension_compatible(h, g)
                for q2p in ts2.successors(q2)
                for g in rel.get((q1p, q2p), ())
            ):
                return False
        for q2p in ts2.successors(q2):
            if not any(
                _extension_compatible(h, g)
                for q1p in ts1.successors(q1)
                for g in rel.get((q1p, q2p), ())
            ):
                return False
        return True

    changed = True
    while changed:
        changed = False
        for pair in sorted(rel.keys()):
            q1, q2 = pair
            survivors = [h for h in rel[pair] if h_survives(q1, q2, h)]
            if len(survivors) != len(rel[pair]):
                changed = True
                if survivors:
                    rel[pair] = survivors
                else:
                    del rel[pair]
    return rel


def bisimilar(ts1: FiniteTS, ts2: FiniteTS) -> bool:
    """Are the initial states related by some surviving isomorphism?"""
    rel = compute_bisimulation(ts1, ts2)
    return bool(rel.get((ts1.initial, ts2.initial)))
