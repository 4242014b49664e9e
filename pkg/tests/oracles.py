"""Independent oracles the test suite checks the main code paths against.

Nothing here goes through regression, abstraction, or the mu-calculus
machinery: the machine oracle walks configurations directly, the query
oracle enumerates padded candidate tuples against eval_fo, and the
isomorphism quotient reuses only the structure matcher.
"""

import itertools

from bsc.abstraction import find_iso
from bsc.foeval import INFINITE, eval_fo
from bsc.model import Interpretation, fresh_object, sorted_objects
from bsc.transforms import ATM


# ---------------------------------------------------------------------------
# Alternating-machine acceptance, computed on raw configurations.
#
# A configuration is (state, head, tape).  head == cells means the head ran
# off the right end: nothing can be read there, so no move applies and the
# gate of the state decides alone (and-gates accept vacuously, or-gates
# reject).  Moving left at cell 0 stays put.  These conventions mirror the
# action encoding, which is the point: the two routes must agree on every
# machine, including stuck ones.


def atm_successors(m: ATM, cfg):
    state, head, tape = cfg
    if head >= m.cells:
        return []
    out = []
    read = tape[head]
    for q, c, q2, c2, move in m.trans:
        if q != state or c != read:
            continue
        written = list(tape)
        written[head] = c2
        if move == "L":
            nxt = head - 1 if head > 0 else 0
        else:
            nxt = head + 1
        out.append((q2, nxt, tuple(written)))
    return out


def atm_reachable(m: ATM):
    tape0 = tuple((m.input + [ATM.BLANK] * m.cells)[: m.cells])
    root = (m.start, 0, tape0)
    seen = {root}
    frontier = [root]
    while frontier:
        step = []
        for cfg in frontier:
            for s in atm_successors(m, cfg):
                if s not in seen:
                    seen.add(s)
                    step.append(s)
        frontier = step
    return root, seen


def atm_accepts(m: ATM) -> bool:
    """Least-fixpoint acceptance by fuel-bounded memoized recursion.

    acc(cfg, k) is the k-th Kleene iterate; the fixpoint is reached by
    k = number of reachable configurations, so starting with one more unit
    of fuel gives the exact least-fixpoint answer.  (Plain memoization with
    cycles treated as False would be unsound for and-gates on cycles.)
    """
    root, configs = atm_reachable(m)
    memo = {}

    def acc(cfg, fuel):
        gate = m.gates[cfg[0]]
        if gate == "accept":
            return True
        if fuel == 0:
            return False
        key = (cfg, fuel)
        if key not in memo:
            succs = atm_successors(m, cfg)
            if gate == "and":
                memo[key] = all(acc(s, fuel - 1) for s in succs)
            else:
                memo[key] = any(acc(s, fuel - 1) for s in succs)
        return memo[key]

    return acc(root, len(configs) + 1)


# ---------------------------------------------------------------------------
# Query answering by brute enumeration.


def brute_answer(i: Interpretation, phi, out_vars, fixed=None):
    """Enumerate (adom + fixed + one pad per position)^n through eval_fo.

    A satisfying tuple touching a pad witnesses infinitely many answers in
    the unbounded universe, by genericity.
    """
    fixed = dict(fixed or {})
    base = set(i.adom) | set(fixed.values())
    pads = [fresh_object() for _ in out_vars]
    padset = set(pads)
    found = set()
    for combo in itertools.product(sorted_objects(base) + pads, repeat=len(out_vars)):
        v = dict(fixed)
        v.update(zip(out_vars, combo))
        if eval_fo(i, phi, v):
            if any(o in padset for o in combo):
                return INFINITE
            found.add(combo)
    return frozenset(found)


# ---------------------------------------------------------------------------
# Isomorphism classes of a family of interpretations (constants pinned by
# name inside find_iso).


def iso_classes(interps):
    reps = []
    for i in interps:
        for rep in reps:
            if find_iso(i, rep) is not None:
                break
        else:
            reps.append(i)
    return reps
