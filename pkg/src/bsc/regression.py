"""One-step regression, executability, successors, and boundedness formulas.

Regression of a state formula through a schematic action replaces every
fluent atom by the corresponding successor-state axiom body (parameters
substituted, action equalities resolved against the given action term).
Counting subformulas regress in place: rewriting the matrix commutes with
the counting macro's expansion, which a property test cross-checks.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .model import (
    ActEq, ActionInstance, And, CountLess, Eq, EvalError, Exists, ExistsAct,
    FalseF, Forall, Formula, FAtom, Iff, Implies, Interpretation, Not, Or,
    Term, Theory, TrueF, UnboundedEffect, Var, and_all, expand_count,
    free_vars, has_act, subst,
)
from .foeval import INFINITE, Evaluator, instantiate_act, suppress_actions


def regress_one_step(
    t: Theory,
    phi: Formula,
    action: str,
    args: Optional[tuple[Term, ...]] = None,
    expand_counts: bool = False,
) -> Formula:
    """Regress the state formula phi through one step of `action(args)`.

    `args` defaults to the action's formal parameters as free variables.
    With `expand_counts`, counting subformulas are macro-expanded before
    regression (the slower, definitionally literal route).
    """
    if has_act(phi):
        raise EvalError("can only regress action-free state formulas")
    if args is None:
        args = tuple(Var(p) for p in t.action_params(action))
    if expand_counts:
        phi = expand_all_counts(phi)
    return _regress(t, phi, action, args)


def _regress(t: Theory, phi: Formula, action: str, args: tuple[Term, ...]) -> Formula:
    if isinstance(phi, (TrueF, FalseF, Eq)):
        return phi
    if isinstance(phi, FAtom):
        params = t.ssa_params[phi.fluent]
        body = subst(t.ssa[phi.fluent], dict(zip(params, phi.args)))
        return suppress_actions(body, t, action, args)
    if isinstance(phi, Not):
        return Not(_regress(t, phi.sub, action, args))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(
            _regress(t, phi.left, action, args),
            _regress(t, phi.right, action, args),
        )
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, _regress(t, phi.sub, action, args))
    if isinstance(phi, CountLess):
        return CountLess(phi.vars, _regress(t, phi.sub, action, args), phi.bound)
    raise EvalError(f"cannot regress node {type(phi).__name__}")


def expand_all_counts(phi: Formula) -> Formula:
    if isinstance(phi, (TrueF, FalseF, FAtom, Eq, ActEq)):
        return phi
    if isinstance(phi, Not):
        return Not(expand_all_counts(phi.sub))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(expand_all_counts(phi.left), expand_all_counts(phi.right))
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, expand_all_counts(phi.sub))
    if isinstance(phi, ExistsAct):
        return ExistsAct(expand_all_counts(phi.sub))
    if isinstance(phi, CountLess):
        return expand_count(CountLess(phi.vars, expand_all_counts(phi.sub), phi.bound))
    raise EvalError(f"cannot expand node {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Executability and successor states


def poss_holds(
    i: Interpretation,
    t: Theory,
    a: ActionInstance,
    ev: Optional[Evaluator] = None,
) -> bool:
    """Is the ground action executable in state i?"""
    params = t.action_params(a.action)
    if len(params) != len(a.args):
        raise EvalError(f"action {a.action} expects {len(params)} arguments")
    if ev is None:
        ev = Evaluator(i)
    return ev.eval(t.poss[a.action], dict(zip(params, a.args)))


def executable_instances(
    i: Interpretation,
    t: Theory,
    action: str,
    candidates: list,
    ev: Optional[Evaluator] = None,
):
    """Ground instances of `action` over the candidate objects that are
    executable in state i, in candidate order.

    Answered through the precondition when its satisfier set is finite,
    which skips the full candidate product; when fresh objects also satisfy
    (infinite answer) every candidate tuple is checked individually.
    """
    if ev is None:
        ev = Evaluator(i)
    params = t.action_params(action)
    ans = ev.answer(t.poss[action], params, {})
    if ans is INFINITE:
        for combo in itertools.product(candidates, repeat=len(params)):
            a = ActionInstance(action, combo)
            if poss_holds(i, t, a, ev):
                yield a
        return
    order = {o: k for k, o in enumerate(candidates)}
    keep = [tup for tup in ans if all(o in order for o in tup)]
    keep.sort(key=lambda tup: tuple(order[o] for o in tup))
    for tup in keep:
        yield ActionInstance(action, tup)


def apply_ssa(
    i: Interpretation,
    t: Theory,
    a: ActionInstance,
    ev: Optional[Evaluator] = None,
) -> Interpretation:
    """The unique successor state of i under ground action a.

    Each fluent's new relation is the answer of its instantiated axiom body.
    An infinite answer means the theory has an unbounded effect.
    """
    if ev is None:
        ev = Evaluator(i)
    rels = {}
    for f in t.fluents:
        body = instantiate_act(t.ssa[f.name], t, a.action, a.args)
        res = ev.answer(body, t.ssa_params[f.name], {})
        if res is INFINITE:
            raise UnboundedEffect(
                f"action {a!r} gives fluent {f.name} infinitely many tuples",
                f.name,
                a,
            )
        rels[f.name] = res
    return Interpretation(rels, dict(i.const_map))


# ---------------------------------------------------------------------------
# Boundedness formulas


def count_vars_for(t: Theory, fluent: str) -> tuple[str, ...]:
    return tuple(f"{p}_c" for p in t.ssa_params[fluent])


def bounded_formula(t: Theory, fluent: str, bound: int) -> CountLess:
    """Fewer than `bound` tuples in the fluent's relation (strict macro)."""
    cvars = count_vars_for(t, fluent)
    return CountLess(cvars, FAtom(fluent, tuple(Var(v) for v in cvars)), bound)


def bounded_all(t: Theory, bound: int) -> Formula:
    """Every fluent holds fewer than `bound` tuples."""
    return and_all([bounded_formula(t, f.name, bound) for f in t.fluents])


def next_orig_bounded(t: Theory, bound: int) -> Formula:
    """Every executable action leads to a state with at most `bound` tuples
    per fluent: for each action type, universally over its parameters, the
    precondition implies the regressed (strict bound+1) counting condition.
    """
    parts: list[Formula] = []
    target = bounded_all(t, bound + 1)
    for decl in t.actions:
        reg = regress_one_step(t, target, decl.name)
        body: Formula = Implies(t.poss[decl.name], reg)
        for p in reversed(decl.params):
            body = Forall(p, body)
        parts.append(body)
    return and_all(parts)
