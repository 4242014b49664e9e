"""Model checking of first-order mu-calculus formulas over finite systems.

Extensions are state sets computed bottom-up.  Individual quantifiers range
over each state's active domain; modalities additionally require the
valuation of the body's free variables to stay active (objects that fall out
of the active domain stop being trackable across transitions).  Fixpoints
iterate from the empty (least) or full (greatest) state set; monotonicity is
checked syntactically up front.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .model import (
    EvalError, FiniteTS, MAnd, MBox, MDia, MExists, MFo, MForall, MImplies,
    MLive, MMu, MNot, MNu, MOr, MuFormula, MVar, ObjectId, Theory,
    ValidationError, mu_free_ivars, mu_pred_vars_free, sorted_objects,
    validate_mu,
)
from .foeval import Evaluator


@dataclass
class CheckReport:
    holds: bool
    kind: Optional[str] = None  # "witness" or "counterexample"
    path: Optional[list[int]] = None


class MuChecker:
    def __init__(self, ts: FiniteTS, theory: Optional[Theory] = None):
        self.ts = ts
        self.theory = theory
        self.all_states = frozenset(ts.labels.keys())
        self._evals = {q: Evaluator(i) for q, i in ts.labels.items()}
        self._adoms = {q: i.adom for q, i in ts.labels.items()}
        self._domain = sorted_objects(
            set().union(*self._adoms.values()) if self._adoms else set()
        )
        self._ext_memo: dict = {}
        self._fv_memo: dict[int, frozenset[str]] = {}
        self._pv_memo: dict[int, frozenset[str]] = {}

    # -- per-node variable bookkeeping

    def _free_ivars(self, phi: MuFormula, fv_env: dict[str, frozenset[str]]):
        key = id(phi)
        hit = self._fv_memo.get(key)
        if hit is None:
            hit = mu_free_ivars(phi, dict(fv_env))
            self._fv_memo[key] = hit
        return hit

    def _free_pvars(self, phi: MuFormula) -> frozenset[str]:
        key = id(phi)
        hit = self._pv_memo.get(key)
        if hit is None:
            hit = mu_pred_vars_free(phi)
            self._pv_memo[key] = hit
        return hit

    # -- extension function

    def extension(
        self,
        phi: MuFormula,
        v: dict[str, ObjectId],
        env: dict[str, frozenset[int]],
        fv_env: Optional[dict[str, frozenset[str]]] = None,
    ) -> frozenset[int]:
        if fv_env is None:
            fv_env = {}
        key = (
            id(phi),
            frozenset(
                (x, v[x]) for x in self._free_ivars(phi, fv_env) if x in v
            ),
            frozenset(
                (z, env[z]) for z in self._free_pvars(phi) if z in env
            ),
        )
        hit = self._ext_memo.get(key)
        if hit is not None:
            return hit
        result = self._extension(phi, v, env, fv_env)
        self._ext_memo[key] = result
        return result

    def _require(self, v: dict[str, ObjectId], vars_needed) -> list[ObjectId]:
        out = []
        for x in vars_needed:
            if x not in v:
                raise EvalError(f"unbound variable {x} in temporal formula")
            out.append(v[x])
        return out

    def _extension(
        self,
        phi: MuFormula,
        v: dict[str, ObjectId],
        env: dict[str, frozenset[int]],
        fv_env: dict[str, frozenset[str]],
    ) -> frozenset[int]:
        if isinstance(phi, MFo):
            fv = sorted(self._free_ivars(phi, fv_env))
            needed = dict(zip(fv, self._require(v, fv)))
            return frozenset(
                q for q in self.all_states if self._evals[q].eval(phi.fo, needed)
            )
        if isinstance(phi, MLive):
            objs = self._require(v, phi.vars)
            return frozenset(
                q
                for q in self.all_states
                if all(o in self._adoms[q] for o in objs)
            )
        if isinstance(phi, MNot):
            return self.all_states - self.extension(phi.sub, v, env, fv_env)
        if isinstance(phi, MAnd):
            return self.extension(phi.left, v, env, fv_env) & self.extension(
                phi.right, v, env, fv_env
            )
        if isinstance(phi, MOr):
            return self.extension(phi.left, v, env, fv_env) | self.extension(
                phi.right, v, env, fv_env
            )
        if isinstance(phi, MImplies):
            return (
                self.all_states - self.extension(phi.left, v, env, fv_env)
            ) | self.extension(phi.right, v, env, fv_env)
        if isinstance(phi, MExists):
            result: set[int] = set()
            v2 = dict(v)
            for d in self._domain:
                v2[phi.var] = d
                sub = self.extension(phi.sub, v2, env, fv_env)
                for q in sub:
                    if q not in result and d in self._adoms[q]:
                        result.add(q)
            return frozenset(result)
        if isinstance(phi, MForall):
            result = set(self.all_states)
            v2 = dict(v)
            for d in self._domain:
                v2[phi.var] = d
                sub = self.extension(phi.sub, v2, env, fv_env)
                for q in list(result):
                    if d in self._adoms[q] and q not in sub:
                        result.discard(q)
            return frozenset(result)
        if isinstance(phi, (MDia, MBox)):
            guards = self._require(v, sorted(self._free_ivars(phi.sub, fv_env)))
            sub = self.extension(phi.sub, v, env, fv_env)
            out = set()
            for q in self.all_states:
                if not all(o in self._adoms[q] for o in guards):
                    continue
                succs = self.ts.successors(q)
                if isinstance(phi, MDia):
                    if any(s in sub for s in succs):
                        out.add(q)
                else:
                    if all(s in sub for s in succs):
                        out.add(q)
            return frozenset(out)
        if isinstance(phi, MVar):
            if phi.name not in env:
                raise ValidationError(f"unbound predicate variable {phi.name}")
            return env[phi.name]
        if isinstance(phi, (MMu, MNu)):
            fv_env2 = {**fv_env, phi.var: self._free_ivars(phi, fv_env)}
            cur = frozenset() if isinstance(phi, MMu) else self.all_states
            env2 = dict(env)
            while True:
                env2[phi.var] = cur
                nxt = self.extension(phi.sub, v, env2, fv_env2)
                if nxt == cur:
                    return cur
                cur = nxt
        raise TypeError(f"not a mu-formula: {phi!r}")


def check(
    ts: FiniteTS, phi: MuFormula, theory: Optional[Theory] = None
) -> CheckReport:
    """Does the initial state satisfy the closed formula?

    For top-level reachability/invariance sugar the report carries a state
    path: a witness run to a satisfying state, or a counterexample run to a
    violating one.
    """
    validate_mu(phi, theory)
    open_vars = mu_free_ivars(phi, {})
    if open_vars:
        raise ValidationError(
            f"formula must be closed; free variables {sorted(open_vars)}"
        )
    checker = MuChecker(ts, theory)
    ext = checker.extension(phi, {}, {})
    holds = ts.initial in ext
    kind = path = None
    if isinstance(phi, MMu) and phi.sugar == "EF" and isinstance(phi.sub, MOr):
        target = checker.extension(phi.sub.left, {}, {})
        if holds:
            kind = "witness"
            path = _shortest_path(ts, ts.initial, target, within=ext)
    elif isinstance(phi, MNu) and phi.sugar == "AG" and isinstance(phi.sub, MAnd):
        good = checker.extension(phi.sub.left, {}, {})
        if not holds:
            kind = "counterexample"
            path = _shortest_path(ts, ts.initial, frozenset(ts.labels) - good)
    return CheckReport(holds, kind, path)


def _shortest_path(
    ts: FiniteTS,
    start: int,
    targets: frozenset[int],
    within: Optional[frozenset[int]] = None,
) -> Optional[list[int]]:
    if start in targets:
        return [start]
    seen = {start}
    queue = deque([(start, [start])])
    while queue:
        q, path = queue.popleft()
        for s in ts.successors(q):
            if s in seen:
                continue
            if within is not None and s not in within and s not in targets:
                continue
            p2 = path + [s]
            if s in targets:
                return p2
            seen.add(s)
            queue.append((s, p2))
    return None
