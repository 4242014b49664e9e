"""Active-domain evaluation of first-order formulas over a finite structure.

Quantifiers conceptually range over an infinite object universe; by
genericity it suffices to range over the active domain, the valuation image,
and one fresh padding object per quantifier (minted lazily per node).  Query
answering range-restricts first: positive fluent atoms and resolvable
equalities bind output variables, disjunctions split, and only the residue is
enumerated over the active domain padded with one fresh object per remaining
output position; a satisfying tuple that touches a padding object witnesses
an infinite answer.
"""

from __future__ import annotations

import itertools
from typing import Mapping, Optional, Union

from .model import (
    ActEq, And, Const, CountLess, Eq, EvalError, Exists, ExistsAct, FalseF,
    FAtom, Forall, Formula, Iff, Implies, Interpretation, Not, Obj, ObjectId,
    Or, Term, Theory, TrueF, Var, and_all, free_vars, fresh_object, gensym,
    has_act, obj_literals, or_all, sorted_objects,
)


class _Infinite:
    """Marker: the answer set is infinite."""

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = _Infinite()

Valuation = Mapping[str, ObjectId]


class Evaluator:
    """Evaluation session over one interpretation; memoizes quantified nodes."""

    def __init__(self, i: Interpretation, extra_padding: int = 0):
        self.i = i
        self.extra = tuple(fresh_object() for _ in range(extra_padding))
        self._memo: dict = {}
        self._fv: dict[int, frozenset[str]] = {}
        self._objs: dict[int, frozenset[ObjectId]] = {}
        self._node_pad: dict[int, ObjectId] = {}
        # caches are keyed by node id; pin every root so ids stay unique
        self._roots: dict[int, Formula] = {}

    def _pin(self, phi: Formula) -> None:
        if id(phi) not in self._roots:
            self._roots[id(phi)] = phi

    def _free(self, phi: Formula) -> frozenset[str]:
        key = id(phi)
        fv = self._fv.get(key)
        if fv is None:
            fv = free_vars(phi)
            self._fv[key] = fv
        return fv

    def _named(self, phi: Formula) -> frozenset[ObjectId]:
        key = id(phi)
        objs = self._objs.get(key)
        if objs is None:
            objs = obj_literals(phi)
            self._objs[key] = objs
        return objs

    def _term(self, t: Term, v: Valuation) -> ObjectId:
        if isinstance(t, Var):
            try:
                return v[t.name]
            except KeyError:
                raise EvalError(f"unbound variable {t.name} during evaluation")
        if isinstance(t, Const):
            try:
                return self.i.const_map[t.name]
            except KeyError:
                raise EvalError(f"constant {t.name} has no denotation here")
        return t.obj

    def eval(self, phi: Formula, v: Valuation) -> bool:
        self._pin(phi)
        return self._eval(phi, v)

    def _eval(self, phi: Formula, v: Valuation) -> bool:
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, FalseF):
            return False
        if isinstance(phi, FAtom):
            tup = tuple(self._term(t, v) for t in phi.args)
            return tup in self.i.relations.get(phi.fluent, frozenset())
        if isinstance(phi, Eq):
            return self._term(phi.left, v) is self._term(phi.right, v)
        if isinstance(phi, Not):
            return not self._eval(phi.sub, v)
        if isinstance(phi, And):
            return self._eval(phi.left, v) and self._eval(phi.right, v)
        if isinstance(phi, Or):
            return self._eval(phi.left, v) or self._eval(phi.right, v)
        if isinstance(phi, Implies):
            return (not self._eval(phi.left, v)) or self._eval(phi.right, v)
        if isinstance(phi, Iff):
            return self._eval(phi.left, v) == self._eval(phi.right, v)
        if isinstance(phi, (Exists, Forall)):
            key = (
                id(phi),
                frozenset((x, v[x]) for x in self._free(phi) if x in v),
            )
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            base = set(self.i.adom) | self._named(phi)
            for x in self._free(phi):
                if x in v:
                    base.add(v[x])
            pad = self._node_pad.get(id(phi))
            if pad is None:
                pad = fresh_object()
                self._node_pad[id(phi)] = pad
            existential = isinstance(phi, Exists)
            result = not existential
            v2 = dict(v)
            for d in sorted_objects(base) + list(self.extra) + [pad]:
                v2[phi.var] = d
                if self._eval(phi.sub, v2) == existential:
                    result = existential
                    break
            self._memo[key] = result
            return result
        if isinstance(phi, CountLess):
            key = (
                id(phi),
                frozenset((x, v[x]) for x in self._free(phi) if x in v),
            )
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            fixed = {
                x: v[x] for x in free_vars(phi.sub) - set(phi.vars) if x in v
            }
            ans = self.answer(phi.sub, phi.vars, fixed)
            result = (ans is not INFINITE) and len(ans) < phi.bound
            self._memo[key] = result
            return result
        if isinstance(phi, (ActEq, ExistsAct)):
            raise EvalError(
                "formula mentions the action variable; suppress actions first"
            )
        raise EvalError(f"cannot evaluate node {type(phi).__name__}")

    def answer(
        self,
        phi: Formula,
        out_vars: tuple[str, ...],
        fixed: Valuation,
    ) -> Union[frozenset[tuple[ObjectId, ...]], _Infinite]:
        self._pin(phi)
        missing = free_vars(phi) - set(out_vars) - set(fixed)
        if missing:
            raise EvalError(f"answer: unbound parameters {sorted(missing)}")
        fixed_part = {
            x: fixed[x] for x in free_vars(phi) - set(out_vars)
        }
        return self._answer_rec([phi], out_vars, fixed_part, frozenset())

    def _answer_rec(
        self,
        conjs: list[Formula],
        out_vars: tuple[str, ...],
        v: dict,
        aux: frozenset[str],
    ) -> Union[frozenset[tuple[ObjectId, ...]], _Infinite]:
        """Answers of a conjunction; binds output variables through positive
        atoms and resolvable equalities before enumerating the rest.

        Variables in aux are unfolded existentials: extra output columns that
        the caller projects away, so padding witnesses there do not make the
        answer infinite.

        Keeps the conjunction as a list so only parser-/caller-built nodes are
        ever evaluated (the memo tables key on node identity)."""
        flat: list[Formula] = []
        stack = list(reversed(conjs))
        while stack:
            c = stack.pop()
            if isinstance(c, And):
                stack.append(c.right)
                stack.append(c.left)
            elif isinstance(c, TrueF):
                continue
            elif isinstance(c, FalseF):
                return frozenset()
            else:
                flat.append(c)
        if all(x in v for x in out_vars):
            if all(self._eval(c, v) for c in flat):
                return frozenset({tuple(v[x] for x in out_vars)})
            return frozenset()

        for idx, c in enumerate(flat):
            if isinstance(c, Eq):
                for side, other in ((c.left, c.right), (c.right, c.left)):
                    if (
                        isinstance(side, Var)
                        and side.name in out_vars
                        and side.name not in v
                        and (not isinstance(other, Var) or other.name in v)
                    ):
                        v2 = dict(v)
                        v2[side.name] = self._term(other, v)
                        rest = flat[:idx] + flat[idx + 1 :]
                        return self._answer_rec(rest, out_vars, v2, aux)
            if isinstance(c, FAtom):
                fresh_positions = [
                    a
                    for a in c.args
                    if isinstance(a, Var) and a.name not in v
                ]
                usable = fresh_positions and all(
                    a.name in out_vars for a in fresh_positions
                )
                if usable:
                    rest = flat[:idx] + flat[idx + 1 :]
                    results: set[tuple[ObjectId, ...]] = set()
                    for tup in self.i.relations.get(c.fluent, frozenset()):
                        v2 = dict(v)
                        good = True
                        for arg, obj in zip(c.args, tup):
                            if isinstance(arg, Var) and arg.name not in v2:
                                v2[arg.name] = obj
                            elif self._term(arg, v2) is not obj:
                                good = False
                                break
                        if not good:
                            continue
                        sub = self._answer_rec(rest, out_vars, v2, aux)
                        if sub is INFINITE:
                            return INFINITE
                        results |= sub
                    return frozenset(results)

        for idx, c in enumerate(flat):
            if (
                isinstance(c, Exists)
                and c.var not in v
                and c.var not in out_vars
            ):
                rest = flat[:idx] + flat[idx + 1 :]
                sub = self._answer_rec(
                    rest + [c.sub], out_vars + (c.var,), v, aux | {c.var}
                )
                if sub is INFINITE:
                    return INFINITE
                return frozenset(tup[:-1] for tup in sub)

        for idx, c in enumerate(flat):
            if isinstance(c, Or):
                rest = flat[:idx] + flat[idx + 1 :]
                a = self._answer_rec(rest + [c.left], out_vars, v, aux)
                if a is INFINITE:
                    return INFINITE
                b = self._answer_rec(rest + [c.right], out_vars, v, aux)
                if b is INFINITE:
                    return INFINITE
                return a | b

        return self._answer_product(flat, out_vars, v, aux)

    def _answer_product(
        self,
        flat: list[Formula],
        out_vars: tuple[str, ...],
        v: dict,
        aux: frozenset[str],
    ) -> Union[frozenset[tuple[ObjectId, ...]], _Infinite]:
        unbound = [x for x in out_vars if x not in v]
        base: set[ObjectId] = set(self.i.adom) | set(v.values())
        for c in flat:
            base |= self._named(c)
        pads = [fresh_object() for _ in range(len(unbound))]
        padset = set(pads)
        candidates = sorted_objects(base) + list(self.extra) + pads
        results: set[tuple[ObjectId, ...]] = set()
        for combo in itertools.product(candidates, repeat=len(unbound)):
            v2 = dict(v)
            v2.update(zip(unbound, combo))
            if all(self._eval(c, v2) for c in flat):
                if any(
                    (o in padset or o in self.extra) and x not in aux
                    for x, o in zip(unbound, combo)
                ):
                    return INFINITE
                results.add(tuple(v2[x] for x in out_vars))
        return frozenset(results)


def eval_fo(
    i: Interpretation,
    phi: Formula,
    v: Optional[Valuation] = None,
    extra_padding: int = 0,
) -> bool:
    """Truth of phi in i under valuation v (infinite-universe semantics)."""
    if has_act(phi):
        raise EvalError("formula mentions the action variable; suppress actions first")
    ev = Evaluator(i, extra_padding)
    return ev.eval(phi, dict(v or {}))


def answer(
    i: Interpretation,
    phi: Formula,
    out_vars: tuple[str, ...],
    fixed: Optional[Valuation] = None,
    extra_padding: int = 0,
) -> Union[frozenset[tuple[ObjectId, ...]], _Infinite]:
    """All tuples for out_vars satisfying phi, or INFINITE.

    The answer is INFINITE exactly when some tuple involving an object outside
    adom(i) and the fixed parameters satisfies phi.
    """
    if has_act(phi):
        raise EvalError("formula mentions the action variable; suppress actions first")
    ev = Evaluator(i, extra_padding)
    return ev.answer(phi, tuple(out_vars), dict(fixed or {}))


def suppress_actions(
    phi: Formula, t: Theory, action: str, args: tuple[Term, ...]
) -> Formula:
    """Eliminate the action variable given act = action(args).

    Action equalities against a different action type become false; against
    the same type they become componentwise argument equalities.  An action
    quantifier expands into a disjunction over all action types with fresh
    parameter variables.
    """
    params = t.action_params(action)
    if len(params) != len(args):
        raise EvalError(f"action {action} expects {len(params)} arguments")
    return _suppress(phi, t, action, args)


def _suppress(phi: Formula, t: Theory, action: str, args: tuple[Term, ...]) -> Formula:
    if not has_act(phi):
        # identity on action-free subtrees keeps node sharing (and memo hits)
        return phi
    if isinstance(phi, (TrueF, FalseF, FAtom, Eq)):
        return phi
    if isinstance(phi, ActEq):
        if phi.action != action:
            return FalseF()
        if not phi.args:
            return TrueF()
        return and_all([Eq(u, a) for u, a in zip(phi.args, args)])
    if isinstance(phi, Not):
        return Not(_suppress(phi.sub, t, action, args))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(
            _suppress(phi.left, t, action, args),
            _suppress(phi.right, t, action, args),
        )
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, _suppress(phi.sub, t, action, args))
    if isinstance(phi, CountLess):
        return CountLess(phi.vars, _suppress(phi.sub, t, action, args), phi.bound)
    if isinstance(phi, ExistsAct):
        branches: list[Formula] = []
        for decl in t.actions:
            ys = tuple(gensym(p) for p in decl.params)
            inner = _suppress(phi.sub, t, decl.name, tuple(Var(y) for y in ys))
            for y in reversed(ys):
                inner = Exists(y, inner)
            branches.append(inner)
        return or_all(branches)
    raise EvalError(f"suppress_actions: unexpected node {type(phi).__name__}")


def instantiate_act(
    phi: Formula, t: Theory, action: str, objs: tuple[ObjectId, ...]
) -> Formula:
    """Suppress actions under a fully concrete action instance."""
    return suppress_actions(phi, t, action, tuple(Obj(o) for o in objs))
