"""Core model: objects, terms, formulas, theories, interpretations, transition systems.

Everything downstream (evaluation, regression, abstraction, mu-checking)
works over the types in this module.  Formula ASTs are immutable; sugar
connectives (|, implies, iff, forall) are kept in the tree so printing
round-trips, and `normalize` rewrites them away before semantic work.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Union

ACT_VAR = "act"  # reserved action variable in SSA bodies


class BscError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BscError):
    pass


class EvalError(BscError):
    pass


class BoundViolation(BscError):
    """A reachable state exceeds the per-fluent tuple bound.

    `trace` is the list of ActionInstance leading from the initial state to
    the violating one; `fluent` names the relation that overflowed.
    """

    def __init__(self, message: str, trace: tuple["ActionInstance", ...], fluent: str):
        super().__init__(message)
        self.trace = trace
        self.fluent = fluent


class UnboundedEffect(BscError):
    """apply_ssa produced an infinite relation for some fluent."""

    def __init__(self, message: str, fluent: str, action: "ActionInstance"):
        super().__init__(message)
        self.fluent = fluent
        self.action = action


class EnumerationGuard(BscError):
    """Initial-model enumeration would exceed the candidate guard."""


# ---------------------------------------------------------------------------
# Objects


class ObjectId:
    """An interned domain object with a canonical total order.

    Named objects (constant denotations) sort before fresh ones; within each
    group, creation order.  Fresh objects print as ``#<n>``.
    """

    __slots__ = ("name", "_key")

    def __init__(self, name: str, key: tuple[int, int]):
        self.name = name
        self._key = key

    def __repr__(self) -> str:
        return self.name

    def __lt__(self, other: "ObjectId") -> bool:
        return self._key < other._key

    def __le__(self, other: "ObjectId") -> bool:
        return self._key <= other._key

    # identity-based __eq__/__hash__: instances are interned


_named_objects: dict[str, ObjectId] = {}
_fresh_objects: dict[int, ObjectId] = {}
_named_seq = itertools.count()
_fresh_seq = itertools.count()


def named_object(name: str) -> ObjectId:
    obj = _named_objects.get(name)
    if obj is None:
        if name.startswith("#"):
            raise ValidationError(f"constant name may not start with '#': {name}")
        obj = ObjectId(name, (0, next(_named_seq)))
        _named_objects[name] = obj
    return obj


def fresh_object() -> ObjectId:
    n = next(_fresh_seq)
    obj = _fresh_objects.get(n)
    if obj is None:
        obj = ObjectId(f"#{n}", (1, n))
        _fresh_objects[n] = obj
    return obj


def reset_fresh_counter() -> None:
    """Restart fresh-object numbering at #0 (re-minted ids stay interned)."""
    global _fresh_seq
    _fresh_seq = itertools.count()


def object_from_text(name: str) -> ObjectId:
    """The interned object printing as `name`; accepts fresh '#<n>' names
    (used when deserializing transition systems)."""
    if name.startswith("#"):
        n = int(name[1:])
        obj = _fresh_objects.get(n)
        if obj is None:
            obj = ObjectId(f"#{n}", (1, n))
            _fresh_objects[n] = obj
        return obj
    return named_object(name)


def sorted_objects(objs: Iterable[ObjectId]) -> list[ObjectId]:
    return sorted(objs, key=lambda o: o._key)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Obj:
    """A literal domain object embedded in a formula (runtime-generated)."""

    obj: ObjectId


Term = Union[Var, Const, Obj]


def term_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    return t.obj.name


# ---------------------------------------------------------------------------
# First-order formulas


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class FAtom:
    fluent: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class ActEq:
    """act = action(args); only meaningful inside SSA bodies."""

    action: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    sub: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    sub: "Formula"


@dataclass(frozen=True)
class ExistsAct:
    """Existential over the action variable (programmatic, no concrete syntax)."""

    sub: "Formula"


@dataclass(frozen=True)
class CountLess:
    """|{vars : sub}| < bound.  Evaluation counts directly; regression expands."""

    vars: tuple[str, ...]
    sub: "Formula"
    bound: int


Formula = Union[
    TrueF, FalseF, FAtom, Eq, ActEq, Not, And, Or, Implies, Iff,
    Exists, Forall, ExistsAct, CountLess,
]

TRUE = TrueF()
FALSE = FalseF()


def and_all(parts: list[Formula]) -> Formula:
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def or_all(parts: list[Formula]) -> Formula:
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def free_vars(phi: Formula) -> frozenset[str]:
    """Free individual variables (the action variable is tracked separately)."""
    if isinstance(phi, (TrueF, FalseF)):
        return frozenset()
    if isinstance(phi, FAtom):
        return frozenset(t.name for t in phi.args if isinstance(t, Var))
    if isinstance(phi, Eq):
        return frozenset(t.name for t in (phi.left, phi.right) if isinstance(t, Var))
    if isinstance(phi, ActEq):
        return frozenset(t.name for t in phi.args if isinstance(t, Var))
    if isinstance(phi, Not):
        return free_vars(phi.sub)
    if isinstance(phi, (And, Or, Implies, Iff)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.sub) - {phi.var}
    if isinstance(phi, ExistsAct):
        return free_vars(phi.sub)
    if isinstance(phi, CountLess):
        return free_vars(phi.sub) - set(phi.vars)
    raise TypeError(f"not a formula: {phi!r}")


def has_act(phi: Formula) -> bool:
    """Does the formula mention the action variable (via ActEq / ExistsAct)?"""
    if isinstance(phi, (ActEq, ExistsAct)):
        return True
    if isinstance(phi, Not):
        return has_act(phi.sub)
    if isinstance(phi, (And, Or, Implies, Iff)):
        return has_act(phi.left) or has_act(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return has_act(phi.sub)
    if isinstance(phi, CountLess):
        return has_act(phi.sub)
    return False


def obj_literals(phi: Formula) -> frozenset[ObjectId]:
    """Objects the formula names directly (ground action arguments end up
    here after instantiation; they count as part of the active domain for
    evaluation even when absent from the state)."""
    if isinstance(phi, (TrueF, FalseF)):
        return frozenset()
    if isinstance(phi, (FAtom, ActEq)):
        return frozenset(t.obj for t in phi.args if isinstance(t, Obj))
    if isinstance(phi, Eq):
        return frozenset(
            t.obj for t in (phi.left, phi.right) if isinstance(t, Obj)
        )
    if isinstance(phi, Not):
        return obj_literals(phi.sub)
    if isinstance(phi, (And, Or, Implies, Iff)):
        return obj_literals(phi.left) | obj_literals(phi.right)
    if isinstance(phi, (Exists, Forall, ExistsAct, CountLess)):
        return obj_literals(phi.sub)
    raise TypeError(f"not a formula: {phi!r}")


_gensym_seq = itertools.count()


def gensym(base: str) -> str:
    return f"{base}_{next(_gensym_seq)}"


def _subst_term(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var) and t.name in mapping:
        return mapping[t.name]
    return t


def subst(phi: Formula, mapping: dict[str, Term]) -> Formula:
    """Capture-avoiding substitution of terms for free variables."""
    if not mapping:
        return phi
    if isinstance(phi, (TrueF, FalseF)):
        return phi
    if isinstance(phi, FAtom):
        return FAtom(phi.fluent, tuple(_subst_term(t, mapping) for t in phi.args))
    if isinstance(phi, Eq):
        return Eq(_subst_term(phi.left, mapping), _subst_term(phi.right, mapping))
    if isinstance(phi, ActEq):
        return ActEq(phi.action, tuple(_subst_term(t, mapping) for t in phi.args))
    if isinstance(phi, Not):
        return Not(subst(phi.sub, mapping))
    if isinstance(phi, (And, Or, Implies, Iff)):
        return type(phi)(subst(phi.left, mapping), subst(phi.right, mapping))
    if isinstance(phi, ExistsAct):
        return ExistsAct(subst(phi.sub, mapping))
    if isinstance(phi, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k != phi.var}
        if not inner:
            return phi
        captured = any(
            isinstance(v, Var) and v.name == phi.var for v in inner.values()
        )
        var, sub_f = phi.var, phi.sub
        if captured:
            var = gensym(phi.var)
            sub_f = subst(sub_f, {phi.var: Var(var)})
        return type(phi)(var, subst(sub_f, inner))
    if isinstance(phi, CountLess):
        inner = {k: v for k, v in mapping.items() if k not in phi.vars}
        if not inner:
            return phi
        bound = set(phi.vars)
        captured = [
            v for v in bound
            if any(isinstance(t, Var) and t.name == v for t in inner.values())
        ]
        cvars, sub_f = phi.vars, phi.sub
        if captured:
            ren = {v: Var(gensym(v)) for v in captured}
            cvars = tuple(ren[v].name if v in ren else v for v in cvars)
            sub_f = subst(sub_f, ren)
        return CountLess(cvars, subst(sub_f, inner), phi.bound)
    raise TypeError(f"not a formula: {phi!r}")


def normalize(phi: Formula) -> Formula:
    """Rewrite |, implies, iff, forall into the not/&/exists core."""
    if isinstance(phi, (TrueF, FalseF, FAtom, Eq, ActEq)):
        return phi
    if isinstance(phi, Not):
        return Not(normalize(phi.sub))
    if isinstance(phi, And):
        return And(normalize(phi.left), normalize(phi.right))
    if isinstance(phi, Or):
        return Not(And(Not(normalize(phi.left)), Not(normalize(phi.right))))
    if isinstance(phi, Implies):
        return Not(And(normalize(phi.left), Not(normalize(phi.right))))
    if isinstance(phi, Iff):
        l, r = normalize(phi.left), normalize(phi.right)
        return And(Not(And(l, Not(r))), Not(And(r, Not(l))))
    if isinstance(phi, Exists):
        return Exists(phi.var, normalize(phi.sub))
    if isinstance(phi, Forall):
        return Not(Exists(phi.var, Not(normalize(phi.sub))))
    if isinstance(phi, ExistsAct):
        return ExistsAct(normalize(phi.sub))
    if isinstance(phi, CountLess):
        return CountLess(phi.vars, normalize(phi.sub), phi.bound)
    raise TypeError(f"not a formula: {phi!r}")


def expand_count(phi: CountLess) -> Formula:
    """Expand |{x̄:φ}| < b into plain first-order form.

    < 0 is unsatisfiable; otherwise it is the negation of "at least b":
    b copies of φ on fresh tuples, pairwise tuple-distinct.
    """
    if phi.bound <= 0:
        return FALSE
    b = phi.bound
    copies: list[tuple[str, ...]] = []
    for i in range(b):
        copies.append(tuple(gensym(f"{v}_{i}") for v in phi.vars))
    parts: list[Formula] = []
    for tup in copies:
        parts.append(subst(phi.sub, {v: Var(w) for v, w in zip(phi.vars, tup)}))
    for i in range(b):
        for j in range(i + 1, b):
            same = and_all([Eq(Var(a), Var(c)) for a, c in zip(copies[i], copies[j])])
            parts.append(Not(same))
    body = and_all(parts)
    for tup in reversed(copies):
        for v in reversed(tup):
            body = Exists(v, body)
    return Not(body)


def quantifier_count(phi: Formula) -> int:
    """Syntactic quantifier occurrences; a count node contributes |x̄| plus its body."""
    if isinstance(phi, (TrueF, FalseF, FAtom, Eq, ActEq)):
        return 0
    if isinstance(phi, Not):
        return quantifier_count(phi.sub)
    if isinstance(phi, (And, Or, Implies, Iff)):
        return quantifier_count(phi.left) + quantifier_count(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return 1 + quantifier_count(phi.sub)
    if isinstance(phi, ExistsAct):
        return quantifier_count(phi.sub)
    if isinstance(phi, CountLess):
        return len(phi.vars) + quantifier_count(phi.sub)
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Printing (round-trips through the parser up to whitespace)

_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_NOT = 5
_PREC_ATOM = 6


def fo_to_text(phi: Formula) -> str:
    return _fo_text(phi, 0)


def _fo_text(phi: Formula, ctx: int) -> str:
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, FalseF):
        return "false"
    if isinstance(phi, FAtom):
        return f"{phi.fluent}({', '.join(term_text(t) for t in phi.args)})"
    if isinstance(phi, Eq):
        return f"{term_text(phi.left)} = {term_text(phi.right)}"
    if isinstance(phi, ActEq):
        return f"{ACT_VAR} = {phi.action}({', '.join(term_text(t) for t in phi.args)})"
    if isinstance(phi, Not):
        if isinstance(phi.sub, Eq):
            return f"{term_text(phi.sub.left)} != {term_text(phi.sub.right)}"
        return f"not {_fo_text(phi.sub, _PREC_NOT)}"
    if isinstance(phi, And):
        s = f"{_fo_text(phi.left, _PREC_AND)} & {_fo_text(phi.right, _PREC_AND + 1)}"
        return f"({s})" if ctx > _PREC_AND else s
    if isinstance(phi, Or):
        s = f"{_fo_text(phi.left, _PREC_OR)} | {_fo_text(phi.right, _PREC_OR + 1)}"
        return f"({s})" if ctx > _PREC_OR else s
    if isinstance(phi, Implies):
        s = f"{_fo_text(phi.left, _PREC_IMPLIES + 1)} implies {_fo_text(phi.right, _PREC_IMPLIES)}"
        return f"({s})" if ctx > _PREC_IMPLIES else s
    if isinstance(phi, Iff):
        s = f"{_fo_text(phi.left, _PREC_IFF + 1)} iff {_fo_text(phi.right, _PREC_IFF)}"
        return f"({s})" if ctx > _PREC_IFF else s
    if isinstance(phi, Exists):
        s = f"exists {phi.var}. {_fo_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(phi, Forall):
        s = f"forall {phi.var}. {_fo_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(phi, ExistsAct):
        s = f"exists {ACT_VAR}. {_fo_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(phi, CountLess):
        return f"count({', '.join(phi.vars)} | {_fo_text(phi.sub, 0)}) < {phi.bound}"
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Theories


@dataclass(frozen=True)
class FluentDecl:
    name: str
    arity: int


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple[str, ...]


@dataclass(frozen=True)
class ActionInstance:
    action: str
    args: tuple[ObjectId, ...]

    def __repr__(self) -> str:
        return f"{self.action}({', '.join(o.name for o in self.args)})"


@dataclass
class Theory:
    """A basic action theory with complete or constraint-based initial data."""

    name: str
    fluents: list[FluentDecl]
    constants: tuple[str, ...]
    actions: list[ActionDecl]
    poss: dict[str, Formula]
    ssa_params: dict[str, tuple[str, ...]]
    ssa: dict[str, Formula]
    init: dict[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)
    init_constraints: Optional[tuple[Formula, ...]] = None
    bound: Optional[int] = None

    @property
    def complete_init(self) -> bool:
        return self.init_constraints is None

    def fluent_arity(self, name: str) -> int:
        for f in self.fluents:
            if f.name == name:
                return f.arity
        raise ValidationError(f"undeclared fluent: {name}")

    def action_params(self, name: str) -> tuple[str, ...]:
        for a in self.actions:
            if a.name == name:
                return a.params
        raise ValidationError(f"undeclared action: {name}")

    def constant_objects(self) -> dict[str, ObjectId]:
        return {c: named_object(c) for c in self.constants}

    def initial_interpretation(self) -> "Interpretation":
        if not self.complete_init:
            raise ValidationError(
                f"theory {self.name} has constraint-based initial data; "
                "enumerate its initial models instead"
            )
        cmap = self.constant_objects()
        rels: dict[str, frozenset[tuple[ObjectId, ...]]] = {}
        for f in self.fluents:
            tups = self.init.get(f.name, frozenset())
            rels[f.name] = frozenset(
                tuple(named_object(c) for c in tup) for tup in tups
            )
        return Interpretation(rels, cmap)


# ---------------------------------------------------------------------------
# Interpretations and transition systems


@dataclass(eq=False)
class Interpretation:
    """Finite relational structure: fluent relations over interned objects.

    Treated as immutable after construction.  `const_map` is injective and
    assigns every declared constant a denotation (always in the adom).
    """

    relations: dict[str, frozenset[tuple[ObjectId, ...]]]
    const_map: dict[str, ObjectId]

    def __post_init__(self) -> None:
        vals = list(self.const_map.values())
        if len(set(id(v) for v in vals)) != len(vals):
            raise ValidationError("const_map must be injective")

    @cached_property
    def adom(self) -> frozenset[ObjectId]:
        out: set[ObjectId] = set(self.const_map.values())
        for tups in self.relations.values():
            for tup in tups:
                out.update(tup)
        return frozenset(out)

    def tuple_count(self, fluent: str) -> int:
        return len(self.relations.get(fluent, frozenset()))

    @cached_property
    def _signature(self) -> tuple[tuple[str, int], ...]:
        return tuple(sorted((f, len(r)) for f, r in self.relations.items()))

    def signature(self) -> tuple[tuple[str, int], ...]:
        """Per-fluent tuple counts, an isomorphism invariant."""
        return self._signature

    @cached_property
    def incidences(self) -> dict[ObjectId, tuple[tuple[str, int, int], ...]]:
        """Per object: sorted (fluent, position, count) occurrence profile."""
        counts: dict[ObjectId, dict[tuple[str, int], int]] = {}
        for f, tups in self.relations.items():
            for tup in tups:
                for pos, obj in enumerate(tup):
                    slot = counts.setdefault(obj, {})
                    slot[(f, pos)] = slot.get((f, pos), 0) + 1
        out: dict[ObjectId, tuple[tuple[str, int, int], ...]] = {}
        for o in self.adom:
            slot = counts.get(o, {})
            out[o] = tuple(sorted((f, p, c) for (f, p), c in slot.items()))
        return out

    @cached_property
    def iso_key(self) -> tuple:
        """Invariant equal on isomorphic structures (constants by name);
        used to bucket fold candidates."""
        inc = self.incidences
        return (
            self._signature,
            tuple(sorted(inc.values())),
            tuple(sorted((c, inc[o]) for c, o in self.const_map.items())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interpretation):
            return NotImplemented
        return (
            self.relations == other.relations and self.const_map == other.const_map
        )

    def __hash__(self) -> int:
        return hash(
            (
                frozenset(self.relations.items()),
                frozenset(self.const_map.items()),
            )
        )


def apply_iso(i: Interpretation, h: dict[ObjectId, ObjectId]) -> Interpretation:
    """Rename the structure along h (must cover adom; used by tests and folding)."""
    rels = {
        f: frozenset(tuple(h[o] for o in tup) for tup in tups)
        for f, tups in i.relations.items()
    }
    cmap = {c: h[o] for c, o in i.const_map.items()}
    return Interpretation(rels, cmap)


@dataclass
class FiniteTS:
    """Finite transition system: integer states labeled by interpretations."""

    labels: dict[int, Interpretation]
    transitions: set[tuple[int, int]]
    initial: int = 0

    @property
    def states(self) -> list[int]:
        return sorted(self.labels.keys())

    @cached_property
    def successor_map(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {q: [] for q in self.labels}
        for a, b in sorted(self.transitions):
            out[a].append(b)
        return out

    def successors(self, q: int) -> list[int]:
        return self.successor_map[q]

    def adom_union(self) -> frozenset[ObjectId]:
        out: set[ObjectId] = set()
        for i in self.labels.values():
            out |= i.adom
        return frozenset(out)


# ---------------------------------------------------------------------------
# Theory validation


def _check_formula(
    t: Theory,
    phi: Formula,
    scope: frozenset[str],
    allow_act: bool,
    where: str,
) -> None:
    if isinstance(phi, (TrueF, FalseF)):
        return
    if isinstance(phi, FAtom):
        if phi.fluent not in {f.name for f in t.fluents}:
            raise ValidationError(f"{where}: undeclared fluent {phi.fluent}")
        if len(phi.args) != t.fluent_arity(phi.fluent):
            raise ValidationError(
                f"{where}: {phi.fluent} expects {t.fluent_arity(phi.fluent)} "
                f"arguments, got {len(phi.args)}"
            )
        for a in phi.args:
            _check_term(t, a, scope, where)
        return
    if isinstance(phi, Eq):
        _check_term(t, phi.left, scope, where)
        _check_term(t, phi.right, scope, where)
        return
    if isinstance(phi, ActEq):
        if not allow_act:
            raise ValidationError(f"{where}: action equality not allowed here")
        params = t.action_params(phi.action)
        if len(phi.args) != len(params):
            raise ValidationError(
                f"{where}: action {phi.action} expects {len(params)} "
                f"arguments, got {len(phi.args)}"
            )
        for a in phi.args:
            _check_term(t, a, scope, where)
        return
    if isinstance(phi, Not):
        _check_formula(t, phi.sub, scope, allow_act, where)
        return
    if isinstance(phi, (And, Or, Implies, Iff)):
        _check_formula(t, phi.left, scope, allow_act, where)
        _check_formula(t, phi.right, scope, allow_act, where)
        return
    if isinstance(phi, (Exists, Forall)):
        _check_formula(t, phi.sub, scope | {phi.var}, allow_act, where)
        return
    if isinstance(phi, ExistsAct):
        if not allow_act:
            raise ValidationError(f"{where}: action quantifier not allowed here")
        _check_formula(t, phi.sub, scope, allow_act, where)
        return
    if isinstance(phi, CountLess):
        if phi.bound < 0:
            raise ValidationError(f"{where}: count bound must be >= 0")
        if not phi.vars or len(set(phi.vars)) != len(phi.vars):
            raise ValidationError(f"{where}: count variables must be distinct")
        _check_formula(t, phi.sub, scope | set(phi.vars), allow_act, where)
        return
    raise TypeError(f"not a formula: {phi!r}")


def _check_term(t: Theory, term: Term, scope: frozenset[str], where: str) -> None:
    if isinstance(term, Var):
        if term.name not in scope:
            raise ValidationError(f"{where}: unbound variable {term.name}")
    elif isinstance(term, Const):
        if term.name not in t.constants:
            raise ValidationError(f"{where}: undeclared constant {term.name}")


def theory_diagnostics(t: Theory) -> list[str]:
    """Every invariant violation in the theory, one message each.

    Structural problems (bad declarations, dangling axiom keys) are reported
    alone, since the formula-level checks assume the declarations make sense.
    """
    out: list[str] = []
    names = [f.name for f in t.fluents] + list(t.constants) + [a.name for a in t.actions]
    if len(set(names)) != len(names):
        out.append(f"theory {t.name}: fluent/constant/action names collide")
    for f in t.fluents:
        if f.arity < 1:
            out.append(f"fluent {f.name}: arity must be >= 1")
    for a in t.actions:
        if len(set(a.params)) != len(a.params):
            out.append(f"action {a.name}: duplicate parameters")
        if a.name not in t.poss:
            out.append(f"action {a.name}: missing precondition")
    fluent_names = {f.name for f in t.fluents}
    action_names = {a.name for a in t.actions}
    for k in t.poss:
        if k not in action_names:
            out.append(f"precondition for undeclared action {k}")
    for k in t.ssa:
        if k not in fluent_names:
            out.append(f"successor-state axiom for undeclared fluent {k}")
    for k in t.init:
        if k not in fluent_names:
            out.append(f"init atoms for undeclared fluent {k}")
    if t.bound is not None and t.bound < 0:
        out.append("declared bound must be >= 0")
    if out:
        return out
    for name, phi in t.poss.items():
        try:
            if has_act(phi):
                raise ValidationError(f"poss {name}: mentions the action variable")
            extra = free_vars(phi) - set(t.action_params(name))
            if extra:
                raise ValidationError(
                    f"poss {name}: free variable escapes: {', '.join(sorted(extra))}"
                )
            _check_formula(t, phi, frozenset(t.action_params(name)), False, f"poss {name}")
        except ValidationError as e:
            out.append(str(e))
    for f in t.fluents:
        try:
            if f.name not in t.ssa:
                raise ValidationError(f"fluent {f.name}: missing successor-state axiom")
            params = t.ssa_params.get(f.name, ())
            if len(params) != f.arity or len(set(params)) != f.arity:
                raise ValidationError(f"ssa {f.name}: parameter list must match arity")
            body = t.ssa[f.name]
            extra = free_vars(body) - set(params)
            if extra:
                raise ValidationError(
                    f"ssa {f.name}: free variable escapes: {', '.join(sorted(extra))}"
                )
            _check_formula(t, body, frozenset(params), True, f"ssa {f.name}")
        except ValidationError as e:
            out.append(str(e))
    if t.complete_init:
        for fname, tups in t.init.items():
            arity = t.fluent_arity(fname)
            for tup in tups:
                if len(tup) != arity:
                    out.append(f"init {fname}: arity mismatch in {tup}")
                    continue
                for c in tup:
                    if c not in t.constants:
                        out.append(f"init {fname}: undeclared constant {c}")
    else:
        for k, phi in enumerate(t.init_constraints or ()):
            try:
                if has_act(phi):
                    raise ValidationError(f"init constraint {k}: mentions the action variable")
                if free_vars(phi):
                    raise ValidationError(f"init constraint {k}: must be closed")
                _check_formula(t, phi, frozenset(), False, f"init constraint {k}")
            except ValidationError as e:
                out.append(str(e))
    return out


def validate_theory(t: Theory) -> None:
    diags = theory_diagnostics(t)
    if diags:
        raise ValidationError("; ".join(diags))


# ---------------------------------------------------------------------------
# Mu-calculus formulas


@dataclass(frozen=True)
class MFo:
    fo: Formula


@dataclass(frozen=True)
class MLive:
    """live(x̄): every named variable denotes an active object here."""

    vars: tuple[str, ...]


@dataclass(frozen=True)
class MNot:
    sub: "MuFormula"


@dataclass(frozen=True)
class MAnd:
    left: "MuFormula"
    right: "MuFormula"


@dataclass(frozen=True)
class MOr:
    left: "MuFormula"
    right: "MuFormula"


@dataclass(frozen=True)
class MImplies:
    left: "MuFormula"
    right: "MuFormula"


@dataclass(frozen=True)
class MExists:
    """exists x over the active domain of the current state."""

    var: str
    sub: "MuFormula"


@dataclass(frozen=True)
class MForall:
    var: str
    sub: "MuFormula"


@dataclass(frozen=True)
class MDia:
    """Some successor satisfies sub; implicitly guarded by live(free(sub))."""

    sub: "MuFormula"


@dataclass(frozen=True)
class MBox:
    """All successors satisfy sub; same implicit liveness guard as MDia."""

    sub: "MuFormula"


@dataclass(frozen=True)
class MVar:
    name: str


@dataclass(frozen=True)
class MMu:
    var: str
    sub: "MuFormula"
    sugar: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class MNu:
    var: str
    sub: "MuFormula"
    sugar: Optional[str] = field(default=None, compare=False)


MuFormula = Union[
    MFo, MLive, MNot, MAnd, MOr, MImplies, MExists, MForall,
    MDia, MBox, MVar, MMu, MNu,
]


def mu_free_ivars(
    phi: MuFormula, env: Optional[dict[str, frozenset[str]]] = None
) -> frozenset[str]:
    """Free individual variables, unfolding predicate variables to their binders.

    A fixpoint variable contributes the free variables of its binding formula,
    computed as a least fixpoint (the sets only grow and are bounded).
    """
    if env is None:
        env = {}
    if isinstance(phi, MFo):
        return free_vars(phi.fo)
    if isinstance(phi, MLive):
        return frozenset(phi.vars)
    if isinstance(phi, MNot):
        return mu_free_ivars(phi.sub, env)
    if isinstance(phi, (MAnd, MOr, MImplies)):
        return mu_free_ivars(phi.left, env) | mu_free_ivars(phi.right, env)
    if isinstance(phi, (MExists, MForall)):
        return mu_free_ivars(phi.sub, env) - {phi.var}
    if isinstance(phi, (MDia, MBox)):
        return mu_free_ivars(phi.sub, env)
    if isinstance(phi, MVar):
        if phi.name not in env:
            raise ValidationError(f"unbound predicate variable {phi.name}")
        return env[phi.name]
    if isinstance(phi, (MMu, MNu)):
        cur: frozenset[str] = frozenset()
        while True:
            nxt = mu_free_ivars(phi.sub, {**env, phi.var: cur})
            if nxt == cur:
                return cur
            cur = nxt
    raise TypeError(f"not a mu-formula: {phi!r}")


def guard_vars(
    phi: MuFormula, env: Optional[dict[str, frozenset[str]]] = None
) -> tuple[str, ...]:
    """The implicit liveness vector of a modal node: free vars of its body, sorted."""
    if not isinstance(phi, (MDia, MBox)):
        raise TypeError("guard_vars applies to modal nodes")
    return tuple(sorted(mu_free_ivars(phi.sub, env)))


def mu_pred_vars_free(phi: MuFormula) -> frozenset[str]:
    if isinstance(phi, (MFo, MLive)):
        return frozenset()
    if isinstance(phi, (MNot, MDia, MBox)):
        return mu_pred_vars_free(phi.sub)
    if isinstance(phi, (MAnd, MOr, MImplies)):
        return mu_pred_vars_free(phi.left) | mu_pred_vars_free(phi.right)
    if isinstance(phi, (MExists, MForall)):
        return mu_pred_vars_free(phi.sub)
    if isinstance(phi, MVar):
        return frozenset({phi.name})
    if isinstance(phi, (MMu, MNu)):
        return mu_pred_vars_free(phi.sub) - {phi.var}
    raise TypeError(f"not a mu-formula: {phi!r}")


def _check_monotone(phi: MuFormula, polarity: dict[str, bool], pos: bool) -> None:
    if isinstance(phi, (MFo, MLive)):
        return
    if isinstance(phi, MNot):
        _check_monotone(phi.sub, polarity, not pos)
        return
    if isinstance(phi, (MAnd, MOr)):
        _check_monotone(phi.left, polarity, pos)
        _check_monotone(phi.right, polarity, pos)
        return
    if isinstance(phi, MImplies):
        _check_monotone(phi.left, polarity, not pos)
        _check_monotone(phi.right, polarity, pos)
        return
    if isinstance(phi, (MExists, MForall, MDia, MBox)):
        _check_monotone(phi.sub, polarity, pos)
        return
    if isinstance(phi, MVar):
        if phi.name in polarity and polarity[phi.name] != pos:
            raise ValidationError(
                f"predicate variable {phi.name} occurs under an odd number of "
                "negations from its binder"
            )
        return
    if isinstance(phi, (MMu, MNu)):
        if phi.var in polarity:
            raise ValidationError(
                f"predicate variable {phi.var} rebound on the same branch"
            )
        _check_monotone(phi.sub, {**polarity, phi.var: pos}, pos)
        return
    raise TypeError(f"not a mu-formula: {phi!r}")


def validate_mu(phi: MuFormula, t: Optional[Theory] = None) -> None:
    """Syntactic checks: closed predicate variables, monotone fixpoints,
    well-formed first-order leaves (when a theory is supplied)."""
    loose = mu_pred_vars_free(phi)
    if loose:
        raise ValidationError(f"unbound predicate variables: {sorted(loose)}")
    _check_monotone(phi, {}, True)
    if t is not None:
        _validate_mu_leaves(phi, t, frozenset())


def _validate_mu_leaves(phi: MuFormula, t: Theory, scope: frozenset[str]) -> None:
    if isinstance(phi, MFo):
        if has_act(phi.fo):
            raise ValidationError("temporal formula leaf mentions the action variable")
        _check_formula(t, phi.fo, scope, False, "temporal leaf")
        return
    if isinstance(phi, MLive):
        for v in phi.vars:
            if v not in scope:
                raise ValidationError(f"live({v}): unbound variable")
        return
    if isinstance(phi, (MNot, MDia, MBox)):
        _validate_mu_leaves(phi.sub, t, scope)
        return
    if isinstance(phi, (MAnd, MOr, MImplies)):
        _validate_mu_leaves(phi.left, t, scope)
        _validate_mu_leaves(phi.right, t, scope)
        return
    if isinstance(phi, (MExists, MForall)):
        _validate_mu_leaves(phi.sub, t, scope | {phi.var})
        return
    if isinstance(phi, MVar):
        return
    if isinstance(phi, (MMu, MNu)):
        _validate_mu_leaves(phi.sub, t, scope)
        return
    raise TypeError(f"not a mu-formula: {phi!r}")


def mu_to_text(phi: MuFormula) -> str:
    return _mu_text(phi, 0)


def _mu_text(phi: MuFormula, ctx: int) -> str:
    if isinstance(phi, MFo):
        return _fo_text(phi.fo, ctx)
    if isinstance(phi, MLive):
        return f"live({', '.join(phi.vars)})"
    if isinstance(phi, MNot):
        return f"not {_mu_text(phi.sub, _PREC_NOT)}"
    if isinstance(phi, MAnd):
        s = f"{_mu_text(phi.left, _PREC_AND)} & {_mu_text(phi.right, _PREC_AND + 1)}"
        return f"({s})" if ctx > _PREC_AND else s
    if isinstance(phi, MOr):
        s = f"{_mu_text(phi.left, _PREC_OR)} | {_mu_text(phi.right, _PREC_OR + 1)}"
        return f"({s})" if ctx > _PREC_OR else s
    if isinstance(phi, MImplies):
        s = f"{_mu_text(phi.left, _PREC_IMPLIES + 1)} implies {_mu_text(phi.right, _PREC_IMPLIES)}"
        return f"({s})" if ctx > _PREC_IMPLIES else s
    if isinstance(phi, MExists):
        s = f"exists {phi.var}. {_mu_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(phi, MForall):
        s = f"forall {phi.var}. {_mu_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(phi, MDia):
        return f"dia({_mu_text(phi.sub, 0)})"
    if isinstance(phi, MBox):
        return f"box({_mu_text(phi.sub, 0)})"
    if isinstance(phi, MVar):
        return phi.name
    if isinstance(phi, (MMu, MNu)):
        if phi.sugar in ("EF", "AG", "EG", "AF"):
            inner = _ctl_argument(phi)
            return f"{phi.sugar} ({_mu_text(inner, 0)})"
        kw = "mu" if isinstance(phi, MMu) else "nu"
        s = f"{kw} {phi.var}. {_mu_text(phi.sub, 0)}"
        return f"({s})" if ctx > 0 else s
    raise TypeError(f"not a mu-formula: {phi!r}")


def _ctl_argument(phi: Union[MMu, MNu]) -> MuFormula:
    # EF p = mu Z. p | dia(Z); AG p = nu Z. p & box(Z)
    # EG p = nu Z. p & dia(Z); AF p = mu Z. p | box(Z)
    body = phi.sub
    if isinstance(body, (MOr, MAnd)):
        return body.left
    raise TypeError("malformed sugar-tagged fixpoint")


def ctl_ef(p: MuFormula, var: str = "Z") -> MMu:
    return MMu(var, MOr(p, MDia(MVar(var))), sugar="EF")


def ctl_ag(p: MuFormula, var: str = "Z") -> MNu:
    return MNu(var, MAnd(p, MBox(MVar(var))), sugar="AG")


def ctl_eg(p: MuFormula, var: str = "Z") -> MNu:
    return MNu(var, MAnd(p, MDia(MVar(var))), sugar="EG")


def ctl_af(p: MuFormula, var: str = "Z") -> MMu:
    return MMu(var, MOr(p, MBox(MVar(var))), sugar="AF")
