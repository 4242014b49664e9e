"""Theory transformations and boundedness checking.

- blocking: strengthen every precondition with the regressed counting bound,
  so actions that would overflow become impossible.
- fading: replace a fluent by leveled copies that decay each step unless
  re-established, making any theory bounded at the cost of forgetting.
- doubled-theory boundedness check: a primed copy of the theory whose
  dynamics stop as soon as some executable action would overflow; checking
  an invariance formula on its abstraction decides persistence of the bound.
- initial-model enumeration for constraint-based initial data, and verdicts
  that hold under every admissible initial model.
- reduction from alternating machines with bounded tape to verification.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional

from .model import (
    ActEq, ActionDecl, ActionInstance, And, BoundViolation, Const, CountLess,
    Eq, EnumerationGuard, Exists, ExistsAct, FalseF, FAtom, FiniteTS,
    FluentDecl, Forall, Formula, Iff, Implies, Interpretation, MFo, MuFormula,
    MAnd, MBox, MDia, MExists, MMu, MOr, MVar, Not, ObjectId, Or, Theory,
    TrueF, ValidationError, Var, and_all, ctl_ag, free_vars, fresh_object,
    named_object, or_all, sorted_objects, subst, validate_theory,
)
from .foeval import Evaluator, eval_fo
from .regression import (
    apply_ssa, bounded_all, next_orig_bounded, poss_holds, regress_one_step,
)
from .abstraction import (
    AbstractionResult, adom_bounds, build_abstract_ts, choose_object_pool,
    find_iso, max_action_arity,
)
from .mucheck import check


# ---------------------------------------------------------------------------
# Formula surgery helpers


def rename_fluents(phi: Formula, mapping: dict[str, str]) -> Formula:
    if isinstance(phi, (TrueF, FalseF, Eq, ActEq)):
        return phi
    if isinstance(phi, FAtom):
        return FAtom(mapping.get(phi.fluent, phi.fluent), phi.args)
    if isinstance(phi, Not):
        return Not(rename_fluents(phi.sub, mapping))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(
            rename_fluents(phi.left, mapping), rename_fluents(phi.right, mapping)
        )
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, rename_fluents(phi.sub, mapping))
    if isinstance(phi, ExistsAct):
        return ExistsAct(rename_fluents(phi.sub, mapping))
    if isinstance(phi, CountLess):
        return CountLess(phi.vars, rename_fluents(phi.sub, mapping), phi.bound)
    raise ValidationError(f"cannot rename in node {type(phi).__name__}")


def substitute_fluent(phi: Formula, fluent: str, make: "callable") -> Formula:
    """Replace every atom of `fluent` by make(args)."""
    if isinstance(phi, (TrueF, FalseF, Eq, ActEq)):
        return phi
    if isinstance(phi, FAtom):
        return make(phi.args) if phi.fluent == fluent else phi
    if isinstance(phi, Not):
        return Not(substitute_fluent(phi.sub, fluent, make))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(
            substitute_fluent(phi.left, fluent, make),
            substitute_fluent(phi.right, fluent, make),
        )
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, substitute_fluent(phi.sub, fluent, make))
    if isinstance(phi, ExistsAct):
        return ExistsAct(substitute_fluent(phi.sub, fluent, make))
    if isinstance(phi, CountLess):
        return CountLess(
            phi.vars, substitute_fluent(phi.sub, fluent, make), phi.bound
        )
    raise ValidationError(f"cannot substitute in node {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Blocking


def blocking_transform(t: Theory, bound: int) -> Theory:
    """Conjoin to each precondition the regressed strict counting bound: an
    action stays executable only if every fluent keeps fewer than `bound`
    tuples afterwards."""
    target = bounded_all(t, bound)
    new_poss = {}
    for decl in t.actions:
        reg = regress_one_step(t, target, decl.name)
        new_poss[decl.name] = And(t.poss[decl.name], reg)
    out = replace(t, poss=new_poss, name=f"{t.name}_blocked{bound}")
    validate_theory(out)
    return out


# ---------------------------------------------------------------------------
# Fading


def _split_gain_persist(t: Theory, fluent: str) -> tuple[Formula, Formula]:
    """Destructure an axiom of the shape `gain | F(params) & not loss`."""
    body = t.ssa[fluent]
    params = t.ssa_params[fluent]
    if not isinstance(body, Or):
        raise ValidationError(
            f"fading needs {fluent}'s axiom in gain | persist & not loss form"
        )
    gain, persist = body.left, body.right
    ok = (
        isinstance(persist, And)
        and isinstance(persist.left, FAtom)
        and persist.left.fluent == fluent
        and persist.left.args == tuple(Var(p) for p in params)
        and isinstance(persist.right, Not)
    )
    if not ok:
        raise ValidationError(
            f"fading needs {fluent}'s axiom in gain | persist & not loss form"
        )
    return gain, persist.right.sub


def fading_transform(t: Theory, fluent: str, levels: int, bound: int) -> Theory:
    """Replace `fluent` by decaying copies level_<levels>..level_0.

    A freshly established tuple starts at the top level (subject to fewer
    than `bound` establishments in one step, the action variable shared with
    the axiom); every step without re-establishment drops it one level;
    the loss condition still deletes; level 0 disappears on the next step.
    Other formulas see the fluent as the disjunction of all levels.
    """
    if levels < 1:
        raise ValidationError("fading needs at least one level")
    arity = t.fluent_arity(fluent)
    gain, loss = _split_gain_persist(t, fluent)
    params = t.ssa_params[fluent]
    level_names = [f"{fluent}_{i}" for i in range(levels, -1, -1)]
    taken = {f.name for f in t.fluents} | set(t.constants) | {
        a.name for a in t.actions
    }
    for nm in level_names:
        if nm in taken:
            raise ValidationError(f"fading name collision: {nm}")

    def as_any_level(args: tuple) -> Formula:
        return or_all([FAtom(nm, args) for nm in level_names])

    # fresh copies of the fluent's own occurrences inside gain/loss
    gain = substitute_fluent(gain, fluent, as_any_level)
    loss = substitute_fluent(loss, fluent, as_any_level)

    cvars = tuple(f"{p}_c" for p in params)
    gain_c = subst(gain, {p: Var(c) for p, c in zip(params, cvars)})
    top_body = And(gain, CountLess(cvars, gain_c, bound))

    new_fluents = [f for f in t.fluents if f.name != fluent]
    new_fluents += [FluentDecl(nm, arity) for nm in level_names]
    new_ssa = {k: v for k, v in t.ssa.items() if k != fluent}
    new_params = {k: v for k, v in t.ssa_params.items() if k != fluent}
    for k in list(new_ssa):
        new_ssa[k] = substitute_fluent(new_ssa[k], fluent, as_any_level)
    top = level_names[0]
    new_ssa[top] = top_body
    new_params[top] = params
    for idx in range(1, len(level_names)):
        nm = level_names[idx]
        above = level_names[idx - 1]
        new_ssa[nm] = And(
            And(Not(gain), FAtom(above, tuple(Var(p) for p in params))),
            Not(loss),
        )
        new_params[nm] = params
    new_poss = {
        k: substitute_fluent(v, fluent, as_any_level) for k, v in t.poss.items()
    }
    new_init = {k: v for k, v in t.init.items() if k != fluent}
    if fluent in t.init:
        new_init[top] = t.init[fluent]
    new_constraints = None
    if t.init_constraints is not None:
        new_constraints = tuple(
            substitute_fluent(c, fluent, as_any_level) for c in t.init_constraints
        )
    out = replace(
        t,
        name=f"{t.name}_fading_{fluent}{levels}",
        fluents=new_fluents,
        ssa=new_ssa,
        ssa_params=new_params,
        poss=new_poss,
        init=new_init,
        init_constraints=new_constraints,
    )
    validate_theory(out)
    return out


# ---------------------------------------------------------------------------
# Boundedness via the primed stop-on-violation theory


def _prime_map(t: Theory) -> dict[str, str]:
    taken = {f.name for f in t.fluents} | set(t.constants) | {
        a.name for a in t.actions
    }
    mapping = {}
    for f in t.fluents:
        cand = f.name + "_p"
        while cand in taken:
            cand += "_"
        taken.add(cand)
        mapping[f.name] = cand
    return mapping


def boundedness_check_theory(t: Theory, bound: int) -> tuple[Theory, Formula]:
    """The primed theory whose runs halt once some executable action would
    push a fluent above `bound` tuples, plus the primed persistence formula.

    Returns (theory, sentence): the sentence (over primed fluents) states
    that every currently executable action keeps all fluents within bound.
    The invariance of that sentence on the primed theory's abstraction is
    equivalent to the original theory staying within bound forever.
    """
    if not t.complete_init:
        raise ValidationError("boundedness check needs complete initial data")
    i0 = t.initial_interpretation()
    for f in t.fluents:
        if i0.tuple_count(f.name) > bound:
            raise BoundViolation(
                f"initial state exceeds bound {bound} on fluent {f.name}",
                (),
                f.name,
            )
    mapping = _prime_map(t)
    nob = next_orig_bounded(t, bound)
    nob_p = rename_fluents(nob, mapping)
    new_fluents = [FluentDecl(mapping[f.name], f.arity) for f in t.fluents]
    new_ssa = {}
    new_params = {}
    for f in t.fluents:
        body = rename_fluents(t.ssa[f.name], mapping)
        new_ssa[mapping[f.name]] = And(body, nob_p)
        new_params[mapping[f.name]] = t.ssa_params[f.name]
    new_poss = {
        a.name: And(rename_fluents(t.poss[a.name], mapping), nob_p)
        for a in t.actions
    }
    new_init = {mapping[k]: v for k, v in t.init.items()}
    out = replace(
        t,
        name=f"{t.name}_nob{bound}",
        fluents=new_fluents,
        ssa=new_ssa,
        ssa_params=new_params,
        poss=new_poss,
        init=new_init,
        bound=bound,
    )
    validate_theory(out)
    return out, nob_p


@dataclass
class BoundednessReport:
    bounded: bool
    prefix: Optional[tuple[ActionInstance, ...]] = None
    abstraction: Optional[AbstractionResult] = None


def _unprime(i: Interpretation, mapping: dict[str, str]) -> Interpretation:
    back = {v: k for k, v in mapping.items()}
    return Interpretation(
        {back.get(f, f): tups for f, tups in i.relations.items()},
        dict(i.const_map),
    )


def _find_overflow_action(
    i: Interpretation, t: Theory, bound: int
) -> Optional[ActionInstance]:
    n = max_action_arity(t)
    pool = choose_object_pool(i.adom, set(), n)
    candidates = sorted_objects(set(i.adom) | set(pool))
    ev = Evaluator(i)
    for decl in t.actions:
        for combo in itertools.product(candidates, repeat=len(decl.params)):
            a = ActionInstance(decl.name, combo)
            if not poss_holds(i, t, a, ev):
                continue
            succ = apply_ssa(i, t, a, ev)
            if any(succ.tuple_count(f.name) > bound for f in t.fluents):
                return a
    return None


def check_bounded(t: Theory, bound: int) -> BoundednessReport:
    """Does every reachable state keep at most `bound` tuples per fluent?

    On failure the report carries a replayable action prefix whose last
    action overflows.  An initial state already over the bound yields an
    empty prefix.
    """
    if not t.complete_init:
        raise ValidationError("check_bounded needs complete initial data")
    i0 = t.initial_interpretation()
    if any(i0.tuple_count(f.name) > bound for f in t.fluents):
        return BoundednessReport(False, ())
    primed, nob_p = boundedness_check_theory(t, bound)
    mapping = _prime_map(t)
    result = build_abstract_ts(primed, bound)
    report = check(result.ts, ctl_ag(MFo(nob_p)), primed)
    if report.holds:
        return BoundednessReport(True, None, result)
    path = report.path or [result.ts.initial]
    prefix = []
    for a, b in zip(path, path[1:]):
        prefix.append(result.edge_actions[(a, b)])
    last = _unprime(result.ts.labels[path[-1]], mapping)
    overflow = _find_overflow_action(last, t, bound)
    if overflow is not None:
        prefix.append(overflow)
    return BoundednessReport(False, tuple(prefix), result)


# ---------------------------------------------------------------------------
# Initial-model enumeration for constraint-based initial data


def _subset_count(total: int, upto: int) -> int:
    return sum(math.comb(total, k) for k in range(0, upto + 1))


def enumerate_initial_models(
    t: Theory,
    bound: Optional[int] = None,
    max_candidates: int = 10**6,
) -> list[Interpretation]:
    """All initial databases over a canonical object universe satisfying the
    theory's initial constraints, at most `bound` tuples per fluent, up to
    isomorphism (constants pinned).

    The universe holds the constant denotations padded with fresh objects up
    to the per-state object budget.  Raises EnumerationGuard if the
    pre-quotient candidate space exceeds max_candidates.
    """
    if t.complete_init:
        raise ValidationError("theory has complete initial data; nothing to enumerate")
    if bound is None:
        bound = t.bound
    if bound is None:
        raise ValidationError("no bound declared or supplied")
    b_prime, _ = adom_bounds(t, bound)
    universe: list[ObjectId] = [named_object(c) for c in t.constants]
    while len(universe) < b_prime:
        universe.append(fresh_object())
    universe = sorted_objects(universe)
    cmap = {c: named_object(c) for c in t.constants}

    est = 1
    for f in t.fluents:
        est *= _subset_count(len(universe) ** f.arity, bound)
        if est > max_candidates:
            raise EnumerationGuard(
                f"candidate space holds at least {est} interpretations, over the "
                f"guard of {max_candidates}"
            )

    per_fluent: list[list[frozenset]] = []
    for f in t.fluents:
        tuples = sorted(
            itertools.product(universe, repeat=f.arity),
            key=lambda tup: tuple(o._key for o in tup),
        )
        rels = []
        for k in range(0, bound + 1):
            for chosen in itertools.combinations(tuples, k):
                rels.append(frozenset(chosen))
        per_fluent.append(rels)

    kept: list[Interpretation] = []
    names = [f.name for f in t.fluents]
    constraints = t.init_constraints or ()
    for combo in itertools.product(*per_fluent):
        i = Interpretation(dict(zip(names, combo)), dict(cmap))
        ev = Evaluator(i)
        if not all(ev.eval(c, {}) for c in constraints):
            continue
        if any(find_iso(i, k) is not None for k in kept):
            continue
        kept.append(i)
    return kept


@dataclass
class IncompleteReport:
    holds: bool
    cells: list[tuple[Interpretation, bool]]


def verify_incomplete(
    t: Theory,
    phi: MuFormula,
    bound: Optional[int] = None,
    max_candidates: int = 10**6,
) -> IncompleteReport:
    """Certain verdict under incomplete initial data: the formula must hold
    for every admissible initial model (each checked on its own abstraction)."""
    if bound is None:
        bound = t.bound
    if bound is None:
        raise ValidationError("no bound declared or supplied")
    cells = enumerate_initial_models(t, bound, max_candidates)
    results: list[tuple[Interpretation, bool]] = []
    for cell in cells:
        result = build_abstract_ts(t, bound, init_interp=cell)
        verdict = check(result.ts, phi, t).holds
        results.append((cell, verdict))
    return IncompleteReport(all(v for _, v in results), results)


# ---------------------------------------------------------------------------
# Alternating machines with bounded tape


@dataclass
class ATM:
    """Alternating machine: per-state gate (and/or/accept), transitions
    (state, read) -> (state', write, L/R), start state, input word, cells."""

    states: list[str]
    gates: dict[str, str]
    trans: list[tuple[str, str, str, str, str]]
    start: str
    input: list[str]
    cells: int

    BLANK = "_"

    def symbols(self) -> list[str]:
        out = {self.BLANK}
        out.update(self.input)
        for q, c, q2, c2, m in self.trans:
            out.add(c)
            out.add(c2)
        return sorted(out)


def parse_atm(text: str) -> ATM:
    states: list[str] = []
    gates: dict[str, str] = {}
    trans: list[tuple[str, str, str, str, str]] = []
    start: Optional[str] = None
    word: list[str] = []
    cells: Optional[int] = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "state" and len(parts) == 3 and parts[2] in ("and", "or", "accept"):
            if parts[1] in gates:
                raise ValidationError(f"line {ln}: state {parts[1]} declared twice")
            states.append(parts[1])
            gates[parts[1]] = parts[2]
        elif kind == "trans" and len(parts) == 6 and parts[5] in ("L", "R"):
            trans.append((parts[1], parts[2], parts[3], parts[4], parts[5]))
        elif kind == "start" and len(parts) == 2:
            start = parts[1]
        elif kind == "input" and len(parts) == 2:
            word = list(parts[1])
        elif kind == "input" and len(parts) == 1:
            word = []
        elif kind == "tape" and len(parts) == 2:
            cells = int(parts[1])
        else:
            raise ValidationError(f"line {ln}: cannot parse machine line: {raw!r}")
    if start is None:
        raise ValidationError("machine has no start state")
    if start not in gates:
        raise ValidationError(f"undeclared start state {start}")
    for q, c, q2, c2, m in trans:
        for s in (q, q2):
            if s not in gates:
                raise ValidationError(f"transition uses undeclared state {s}")
    n = cells if cells is not None else max(len(word), 1)
    if n < max(len(word), 1):
        raise ValidationError("tape must be at least as long as the input")
    machine = ATM(states, gates, trans, start, word, n)
    for s in machine.symbols():
        if not all(ch.isalnum() or ch == "_" for ch in s):
            raise ValidationError(f"symbol {s!r} must be alphanumeric or underscore")
    return machine


def atm_theory(m: ATM) -> tuple[Theory, MuFormula]:
    """Encode the machine as a bounded action theory plus its acceptance
    formula (accepting gate, or-gates need some accepting successor,
    and-gates need all successors accepting)."""
    q_const = {q: f"q_{q}" for q in m.states}
    s_const = {c: f"sym_{c}" for c in m.symbols()}
    cell_const = [f"Cell_{j}" for j in range(m.cells)]
    dirs = {"L": "D_L", "R": "D_R"}
    gates = {"and": "g_and", "or": "g_or", "accept": "g_accept"}
    constants = (
        [q_const[q] for q in m.states]
        + [s_const[c] for c in m.symbols()]
        + cell_const
        + list(dirs.values())
        + list(gates.values())
    )
    fluents = [
        FluentDecl("state", 1),
        FluentDecl("scan", 1),
        FluentDecl("cell", 2),
        FluentDecl("trans_table", 5),
        FluentDecl("gate", 2),
        FluentDecl("succ", 2),
    ]
    step = ActionDecl("step", ("q2", "c2", "m"))

    def v(*names: str) -> tuple:
        return tuple(Var(n) for n in names)

    poss = Exists(
        "q",
        Exists(
            "i",
            Exists(
                "c",
                and_all(
                    [
                        FAtom("state", v("q")),
                        FAtom("scan", v("i")),
                        FAtom("cell", v("i", "c")),
                        FAtom("trans_table", v("q", "c", "q2", "c2", "m")),
                    ]
                ),
            ),
        ),
    )

    ssa_state = Or(
        Exists("c", Exists("m", ActEq("step", v("q", "c", "m")))),
        And(
            FAtom("state", v("q")),
            Not(
                Exists(
                    "q2",
                    Exists(
                        "c",
                        Exists(
                            "m",
                            And(
                                ActEq("step", v("q2", "c", "m")),
                                Not(Eq(Var("q2"), Var("q"))),
                            ),
                        ),
                    ),
                )
            ),
        ),
    )

    left_move = Exists(
        "q",
        Exists(
            "c",
            Exists(
                "i2",
                and_all(
                    [
                        ActEq("step", (Var("q"), Var("c"), Const("D_L"))),
                        FAtom("scan", v("i2")),
                        Or(
                            And(Eq(Var("i2"), Const("Cell_0")), Eq(Var("i"), Var("i2"))),
                            FAtom("succ", v("i", "i2")),
                        ),
                    ]
                ),
            ),
        ),
    )
    right_move = Exists(
        "q",
        Exists(
            "c",
            Exists(
                "i2",
                and_all(
                    [
                        ActEq("step", (Var("q"), Var("c"), Const("D_R"))),
                        FAtom("scan", v("i2")),
                        FAtom("succ", v("i2", "i")),
                    ]
                ),
            ),
        ),
    )
    no_step = Not(
        Exists("q", Exists("c", Exists("m", ActEq("step", v("q", "c", "m")))))
    )
    ssa_scan = Or(Or(left_move, right_move), And(FAtom("scan", v("i")), no_step))

    ssa_cell = Or(
        Exists(
            "q",
            Exists(
                "m",
                And(ActEq("step", v("q", "c", "m")), FAtom("scan", v("i"))),
            ),
        ),
        And(
            FAtom("cell", v("i", "c")),
            Not(
                Exists(
                    "q",
                    Exists(
                        "c2",
                        Exists(
                            "m",
                            and_all(
                                [
                                    ActEq("step", v("q", "c2", "m")),
                                    FAtom("scan", v("i")),
                                    Not(Eq(Var("c2"), Var("c"))),
                                ]
                            ),
                        ),
                    ),
                )
            ),
        ),
    )

    ssa = {
        "state": ssa_state,
        "scan": ssa_scan,
        "cell": ssa_cell,
        "trans_table": FAtom("trans_table", v("a1", "a2", "a3", "a4", "a5")),
        "gate": FAtom("gate", v("a1", "a2")),
        "succ": FAtom("succ", v("a1", "a2")),
    }
    ssa_params = {
        "state": ("q",),
        "scan": ("i",),
        "cell": ("i", "c"),
        "trans_table": ("a1", "a2", "a3", "a4", "a5"),
        "gate": ("a1", "a2"),
        "succ": ("a1", "a2"),
    }

    init: dict[str, frozenset[tuple[str, ...]]] = {}
    init["state"] = frozenset({(q_const[m.start],)})
    init["scan"] = frozenset({(cell_const[0],)})
    tape = {}
    for j in range(m.cells):
        sym = m.input[j] if j < len(m.input) else ATM.BLANK
        tape[j] = s_const[sym]
    init["cell"] = frozenset((cell_const[j], tape[j]) for j in range(m.cells))
    init["trans_table"] = frozenset(
        (q_const[q], s_const[c], q_const[q2], s_const[c2], dirs[mv])
        for q, c, q2, c2, mv in m.trans
    )
    init["gate"] = frozenset((q_const[q], gates[g]) for q, g in m.gates.items())
    init["succ"] = frozenset(
        (cell_const[j], cell_const[j + 1]) for j in range(m.cells - 1)
    )

    bound = max(len(tups) for tups in init.values())
    t = Theory(
        name="machine",
        fluents=fluents,
        constants=tuple(constants),
        actions=[step],
        poss={"step": poss},
        ssa_params=ssa_params,
        ssa=ssa,
        init=init,
        bound=bound,
    )
    validate_theory(t)

    in_accept = MFo(
        Exists(
            "q", And(FAtom("state", v("q")), FAtom("gate", (Var("q"), Const("g_accept"))))
        )
    )
    in_and = MFo(
        Exists(
            "q", And(FAtom("state", v("q")), FAtom("gate", (Var("q"), Const("g_and"))))
        )
    )
    in_or = MFo(
        Exists(
            "q", And(FAtom("state", v("q")), FAtom("gate", (Var("q"), Const("g_or"))))
        )
    )
    accept = MMu(
        "Z",
        MOr(
            MOr(in_accept, MAnd(in_and, MBox(MVar("Z")))),
            MAnd(in_or, MDia(MVar("Z"))),
        ),
    )
    return t, accept
