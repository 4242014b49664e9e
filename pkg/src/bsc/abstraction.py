"""Finite abstract transition system construction.

A FIFO worklist expands states by all ground actions whose parameters range
over the state's active domain plus a fixed-size pool of extra objects
(reused from earlier states where possible, fresh otherwise).  A successor
folds onto an existing state when an isomorphism exists that fixes the
predecessor's active domain pointwise; otherwise it becomes a new state.
Per-fluent tuple counts are checked against the bound at every step.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import (
    ActionInstance, BoundViolation, FiniteTS, Interpretation, ObjectId,
    Theory, ValidationError, fresh_object, named_object, sorted_objects,
)
from .foeval import Evaluator
from .regression import apply_ssa, executable_instances, poss_holds


def max_action_arity(t: Theory) -> int:
    return max((len(a.params) for a in t.actions), default=0)


def adom_bounds(t: Theory, bound: int) -> tuple[int, int]:
    """(b_prime, cap): per-state object budget and overall adom budget.

    b_prime counts bound tuples per fluent times arity, plus the constants;
    cap = 2 * b_prime + max action arity.
    """
    b_prime = sum(bound * f.arity for f in t.fluents) + len(t.constants)
    return b_prime, 2 * b_prime + max_action_arity(t)


def choose_object_pool(
    state_adom: frozenset[ObjectId],
    known: Iterable[ObjectId],
    n: int,
) -> list[ObjectId]:
    """n objects disjoint from the state's adom: reuse known objects first
    (canonical order), then mint fresh ones."""
    pool = sorted_objects(set(known) - set(state_adom))[:n]
    while len(pool) < n:
        pool.append(fresh_object())
    return pool


# ---------------------------------------------------------------------------
# Isomorphism search


def find_isos(
    i1: Interpretation,
    i2: Interpretation,
    fix: frozenset[ObjectId] = frozenset(),
):
    """Yield every isomorphism from i1 onto i2 (constants to same-named
    constants) that extends to a bijection of the whole object universe
    acting as the identity on fix.

    Concretely: fix ∩ adom(i1) maps identically, and no other object maps
    into fix; an object of fix present only on the i2 side therefore rules
    the isomorphism out."""
    if i1.iso_key != i2.iso_key:
        return
    a1, a2 = i1.adom, i2.adom
    h: dict[ObjectId, ObjectId] = {}
    used: set[ObjectId] = set()
    for c in sorted(i1.const_map):
        o1, o2 = i1.const_map[c], i2.const_map[c]
        if o1 in h:
            if h[o1] is not o2:
                return
            continue
        if o1 in fix and o2 is not o1:
            return
        if o2 in used:
            return
        h[o1] = o2
        used.add(o2)
    for d in sorted_objects(a1):
        if d in fix and d not in h:
            if d not in a2 or d in used:
                return
            h[d] = d
            used.add(d)
    inc1, inc2 = i1.incidences, i2.incidences
    sig2: dict[tuple, list[ObjectId]] = {}
    for o in sorted_objects(a2 - used):
        if o in fix:
            # identity on fix leaves no legal preimage for this object
            return
        sig2.setdefault(inc2[o], []).append(o)
    free1 = sorted_objects(a1 - set(h))
    order: list[tuple[ObjectId, list[ObjectId]]] = []
    for o in free1:
        cands = sig2.get(inc1[o])
        if not cands:
            return
        order.append((o, cands))
    order.sort(key=lambda pair: len(pair[1]))

    def backtrack(k: int):
        if k == len(order):
            if _relations_match(i1, i2, h):
                yield dict(h)
            return
        o, cands = order[k]
        for e in cands:
            if e in used:
                continue
            h[o] = e
            used.add(e)
            yield from backtrack(k + 1)
            del h[o]
            used.discard(e)

    yield from backtrack(0)


def find_iso(
    i1: Interpretation,
    i2: Interpretation,
    fix: frozenset[ObjectId] = frozenset(),
) -> Optional[dict[ObjectId, ObjectId]]:
    """First isomorphism from i1 onto i2, or None."""
    return next(find_isos(i1, i2, fix), None)


def _relations_match(
    i1: Interpretation, i2: Interpretation, h: dict[ObjectId, ObjectId]
) -> bool:
    for f, tups in i1.relations.items():
        mapped = {tuple(h[o] for o in tup) for tup in tups}
        if mapped != set(i2.relations.get(f, frozenset())):
            return False
    return True


def find_match(
    i: Interpretation,
    states: Iterable[tuple[int, Interpretation]],
    fix: frozenset[ObjectId],
) -> Optional[int]:
    """First state (ascending id) isomorphic to i fixing `fix` pointwise."""
    for sid, cand in sorted(states, key=lambda p: p[0]):
        if find_iso(i, cand, fix) is not None:
            return sid
    return None


# ---------------------------------------------------------------------------
# Procedure: abstract transition system


@dataclass
class AbstractionResult:
    ts: FiniteTS
    bound: int
    b_prime: int
    cap: int
    edge_actions: dict[tuple[int, int], ActionInstance] = field(default_factory=dict)
    parents: dict[int, Optional[tuple[int, ActionInstance]]] = field(
        default_factory=dict
    )

    def action_trace(self, q: int) -> tuple[ActionInstance, ...]:
        out: list[ActionInstance] = []
        cur = q
        while True:
            parent = self.parents[cur]
            if parent is None:
                break
            cur, a = parent
            out.append(a)
        return tuple(reversed(out))


def _check_state_bound(
    i: Interpretation, t: Theory, bound: int
) -> Optional[str]:
    for f in t.fluents:
        if i.tuple_count(f.name) > bound:
            return f.name
    return None


def build_abstract_ts(
    t: Theory,
    bound: Optional[int] = None,
    init_interp: Optional[Interpretation] = None,
) -> AbstractionResult:
    """Build the finite abstraction of the theory's situation tree.

    init_interp overrides the theory's own initial data (needed when initial
    models are enumerated from constraints and contain unnamed objects).
    Raises BoundViolation (with a replayable action trace) if any reachable
    state holds more than `bound` tuples in some fluent.
    """
    if bound is None:
        bound = t.bound
    if bound is None:
        raise BoundViolation("no bound declared or supplied", (), "")
    i0 = init_interp if init_interp is not None else t.initial_interpretation()
    bad = _check_state_bound(i0, t, bound)
    if bad is not None:
        raise BoundViolation(
            f"initial state exceeds bound {bound} on fluent {bad}", (), bad
        )
    b_prime, cap = adom_bounds(t, bound)
    n = max_action_arity(t)

    labels: dict[int, Interpretation] = {0: i0}
    parents: dict[int, Optional[tuple[int, ActionInstance]]] = {0: None}
    transitions: set[tuple[int, int]] = set()
    edge_actions: dict[tuple[int, int], ActionInstance] = {}
    by_key: dict[tuple, list[int]] = {i0.iso_key: [0]}
    adom_q: set[ObjectId] = set(i0.adom)
    worklist: deque[int] = deque([0])

    def trace_of(q: int, extra: ActionInstance) -> tuple[ActionInstance, ...]:
        out: list[ActionInstance] = [extra]
        cur = q
        while parents[cur] is not None:
            cur, a = parents[cur]  # type: ignore[misc]
            out.append(a)
        return tuple(reversed(out))

    while worklist:
        q = worklist.popleft()
        iq = labels[q]
        ev = Evaluator(iq)
        pool = choose_object_pool(iq.adom, adom_q, n)
        candidates = sorted_objects(set(iq.adom) | set(pool))
        for decl in t.actions:
            for a in executable_instances(iq, t, decl.name, candidates, ev):
                succ = apply_ssa(iq, t, a, ev)
                bad = _check_state_bound(succ, t, bound)
                if bad is not None:
                    raise BoundViolation(
                        f"reachable state exceeds bound {bound} on fluent {bad} "
                        f"after {a!r}",
                        trace_of(q, a),
                        bad,
                    )
                cands = [
                    (sid, labels[sid]) for sid in by_key.get(succ.iso_key, [])
                ]
                match = find_match(succ, cands, fix=iq.adom)
                if match is None:
                    nid = len(labels)
                    labels[nid] = succ
                    parents[nid] = (q, a)
                    by_key.setdefault(succ.iso_key, []).append(nid)
                    adom_q |= succ.adom
                    worklist.append(nid)
                    match = nid
                edge = (q, match)
                if edge not in transitions:
                    transitions.add(edge)
                    edge_actions[edge] = a

    ts = FiniteTS(labels, transitions, 0)
    result = AbstractionResult(ts, bound, b_prime, cap, edge_actions, parents)
    return result


# ---------------------------------------------------------------------------
# Concrete transition system over a fixed object pool (oracle route)


def build_concrete_ts(
    t: Theory,
    bound: Optional[int] = None,
    pool_size: Optional[int] = None,
) -> FiniteTS:
    """Ground transition system over a fixed finite universe, no folding.

    States are deduplicated by equality only.  Used as an independent
    reference for bisimulation tests against the abstract construction.
    """
    if bound is None:
        bound = t.bound
    if bound is None:
        raise BoundViolation("no bound declared or supplied", (), "")
    b_prime, _ = adom_bounds(t, bound)
    size = pool_size if pool_size is not None else b_prime
    universe: list[ObjectId] = [named_object(c) for c in t.constants]
    if size < len(universe):
        raise ValidationError(
            f"pool of size {size} cannot cover the {len(universe)} "
            "objects of the initial state"
        )
    while len(universe) < size:
        universe.append(fresh_object())
    universe = sorted_objects(universe)

    i0 = t.initial_interpretation()
    bad = _check_state_bound(i0, t, bound)
    if bad is not None:
        raise BoundViolation(
            f"initial state exceeds bound {bound} on fluent {bad}", (), bad
        )
    ids: dict[Interpretation, int] = {i0: 0}
    labels: dict[int, Interpretation] = {0: i0}
    transitions: set[tuple[int, int]] = set()
    worklist: deque[int] = deque([0])
    while worklist:
        q = worklist.popleft()
        iq = labels[q]
        ev = Evaluator(iq)
        for decl in t.actions:
            for combo in itertools.product(universe, repeat=len(decl.params)):
                a = ActionInstance(decl.name, combo)
                if not poss_holds(iq, t, a, ev):
                    continue
                succ = apply_ssa(iq, t, a, ev)
                bad = _check_state_bound(succ, t, bound)
                if bad is not None:
                    raise BoundViolation(
                        f"reachable state exceeds bound {bound} on fluent {bad} "
                        f"after {a!r}",
                        (),
                        bad,
                    )
                sid = ids.get(succ)
                if sid is None:
                    sid = len(labels)
                    ids[succ] = sid
                    labels[sid] = succ
                    worklist.append(sid)
                transitions.add((q, sid))
    return FiniteTS(labels, transitions, 0)
