"""Tokenizer and recursive-descent parser for theories and formulas.

Theory files (.bsc) are statement-oriented: constants, fluent/action
declarations, preconditions, successor-state axioms, initial data (complete
atoms or closed constraints), and an optional bound.  Formulas share one
grammar; purely first-order subtrees are fused into single leaves, so a
quantifier whose body stays first-order keeps plain FO semantics while a
quantifier spanning modal structure becomes the live-guarded kind.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    ACT_VAR, ActEq, ActionDecl, And, BscError, Const, CountLess, Eq, Exists,
    FalseF, FAtom, FluentDecl, Forall, Formula, Iff, Implies, MAnd, MBox, MDia,
    MExists, MFo, MForall, MImplies, MLive, MMu, MNot, MNu, MOr, MuFormula,
    MVar, Not, Or, Term, Theory, TrueF, TRUE, FALSE, Var, _check_formula,
    ctl_af, ctl_ag, ctl_ef, ctl_eg, fo_to_text, free_vars, mu_free_ivars,
    validate_mu, validate_theory,
)


class ParseError(BscError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


KEYWORDS = frozenset(
    """theory constants fluent action poss ssa init constraint bound
       not true false exists forall count act live dia box mu nu
       ef ag eg af implies iff and or""".split()
)

STATEMENT_KEYWORDS = frozenset(
    "theory constants fluent action poss ssa init constraint bound".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9]+)
  | (?P<neq>!=)
  | (?P<sym>[(),.:/=&|<])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "kw", "ident", "number", "sym", "eof"
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        elif kind == "ident":
            low = value.lower()
            if low in KEYWORDS:
                out.append(Token("kw", low, line, col))
            else:
                out.append(Token("ident", value, line, col))
            col += len(value)
        elif kind == "number":
            out.append(Token("number", value, line, col))
            col += len(value)
        elif kind == "neq":
            out.append(Token("sym", "!=", line, col))
            col += 2
        else:
            out.append(Token("sym", value, line, col))
            col += len(value)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str, constants: frozenset[str] = frozenset()):
        self.tokens = tokenize(text)
        self.pos = 0
        self.constants = set(constants)
        self._scopes: dict[str, list[str]] = {}
        self._shadow_seq = 0
        self._pred_scope: list[str] = []

    # -- token plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect_sym(self, sym: str) -> Token:
        tok = self.peek()
        if tok.kind != "sym" or tok.value != sym:
            raise self.error(f"expected {sym!r}, found {tok.value!r}")
        return self.next()

    def expect_kw(self, kw: str) -> Token:
        tok = self.peek()
        if tok.kind != "kw" or tok.value != kw:
            raise self.error(f"expected {kw!r}, found {tok.value!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(f"expected {what}, found {tok.value!r}")
        return self.next().value

    def expect_number(self) -> int:
        tok = self.peek()
        if tok.kind != "number":
            raise self.error(f"expected a number, found {tok.value!r}")
        return int(self.next().value)

    def at_sym(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.value == sym

    def at_kw(self, *kws: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.value in kws

    # -- variable scoping (shadowed binders are renamed apart)

    def bind(self, name: str) -> str:
        stack = self._scopes.setdefault(name, [])
        if stack:
            active = f"{name}__{self._shadow_seq}"
            self._shadow_seq += 1
        else:
            active = name
        stack.append(active)
        return active

    def unbind(self, name: str) -> None:
        self._scopes[name].pop()

    def lookup(self, name: str) -> str:
        stack = self._scopes.get(name)
        return stack[-1] if stack else name

    def term(self) -> Term:
        name = self.expect_ident("term")
        if name in self.constants and not self._scopes.get(name):
            return Const(name)
        return Var(self.lookup(name))

    # -- formula grammar (one tree; FO subtrees fused afterwards)

    def formula(self) -> MuFormula:
        return self._iff()

    def _iff(self) -> MuFormula:
        left = self._implies()
        if self.at_kw("iff"):
            self.next()
            return _mk_iff(left, self._iff())
        return left

    def _implies(self) -> MuFormula:
        left = self._or()
        if self.at_kw("implies"):
            self.next()
            return MImplies(left, self._implies())
        return left

    def _or(self) -> MuFormula:
        left = self._and()
        while self.at_sym("|") or self.at_kw("or"):
            self.next()
            left = MOr(left, self._and())
        return left

    def _and(self) -> MuFormula:
        left = self._unary()
        while self.at_sym("&") or self.at_kw("and"):
            self.next()
            left = MAnd(left, self._unary())
        return left

    def _unary(self) -> MuFormula:
        if self.at_kw("not"):
            self.next()
            return MNot(self._unary())
        if self.at_kw("exists", "forall"):
            kw = self.next().value
            names = [self.expect_ident("variable")]
            while self.at_sym(","):
                self.next()
                names.append(self.expect_ident("variable"))
            self.expect_sym(".")
            active = [self.bind(n) for n in names]
            body = self.formula()
            for n in reversed(names):
                self.unbind(n)
            node_type = MExists if kw == "exists" else MForall
            for v in reversed(active):
                body = node_type(v, body)
            return body
        if self.at_kw("mu", "nu"):
            kw = self.next().value
            name = self.expect_ident("fixpoint variable")
            if name in self._pred_scope:
                raise self.error(f"predicate variable {name} rebound on the same branch")
            self.expect_sym(".")
            self._pred_scope.append(name)
            body = self.formula()
            self._pred_scope.pop()
            return MMu(name, body) if kw == "mu" else MNu(name, body)
        if self.at_kw("ef", "ag", "eg", "af"):
            kw = self.next().value
            arg = self._unary()
            maker = {"ef": ctl_ef, "ag": ctl_ag, "eg": ctl_eg, "af": ctl_af}[kw]
            return maker(arg, self._fresh_pred_var())
        return self._primary()

    def _fresh_pred_var(self) -> str:
        name = f"_Z{self._shadow_seq}"
        self._shadow_seq += 1
        return name

    def _primary(self) -> MuFormula:
        tok = self.peek()
        if self.at_kw("true"):
            self.next()
            return MFo(TRUE)
        if self.at_kw("false"):
            self.next()
            return MFo(FALSE)
        if self.at_sym("("):
            self.next()
            body = self.formula()
            self.expect_sym(")")
            return body
        if self.at_kw("count"):
            self.next()
            self.expect_sym("(")
            names = [self.expect_ident("count variable")]
            while self.at_sym(","):
                self.next()
                names.append(self.expect_ident("count variable"))
            self.expect_sym("|")
            active = [self.bind(n) for n in names]
            body = self.formula()
            for n in reversed(names):
                self.unbind(n)
            self.expect_sym(")")
            self.expect_sym("<")
            bound = self.expect_number()
            return MFo(CountLess(tuple(active), self._demote(body, "count body"), bound))
        if self.at_kw("live"):
            self.next()
            self.expect_sym("(")
            names = []
            if not self.at_sym(")"):
                names.append(self.lookup(self.expect_ident("variable")))
                while self.at_sym(","):
                    self.next()
                    names.append(self.lookup(self.expect_ident("variable")))
            self.expect_sym(")")
            return MLive(tuple(names))
        if self.at_kw("dia", "box"):
            kw = self.next().value
            self.expect_sym("(")
            body = self.formula()
            self.expect_sym(")")
            return MDia(body) if kw == "dia" else MBox(body)
        if self.at_kw("act"):
            self.next()
            self.expect_sym("=")
            action = self.expect_ident("action name")
            self.expect_sym("(")
            args: list[Term] = []
            if not self.at_sym(")"):
                args.append(self.term())
                while self.at_sym(","):
                    self.next()
                    args.append(self.term())
            self.expect_sym(")")
            return MFo(ActEq(action, tuple(args)))
        if tok.kind == "ident":
            name = self.next().value
            if self.at_sym("("):
                self.next()
                args = []
                if not self.at_sym(")"):
                    args.append(self.term())
                    while self.at_sym(","):
                        self.next()
                        args.append(self.term())
                self.expect_sym(")")
                return MFo(FAtom(name, tuple(args)))
            if self.at_sym("=") or self.at_sym("!="):
                op = self.next().value
                left: Term
                if name in self.constants and not self._scopes.get(name):
                    left = Const(name)
                else:
                    left = Var(self.lookup(name))
                right = self.term()
                eq = Eq(left, right)
                return MFo(Not(eq) if op == "!=" else eq)
            if name in self._pred_scope:
                return MVar(name)
            raise self.error(
                f"bare identifier {name!r} is neither an atom nor a bound "
                "predicate variable"
            )
        raise self.error(f"expected a formula, found {tok.value!r}")

    def _demote(self, phi: MuFormula, where: str) -> Formula:
        fused = fuse(phi)
        if isinstance(fused, MFo):
            return fused.fo
        raise self.error(f"{where} must be first-order (no modal or fixpoint parts)")


def _mk_iff(left: MuFormula, right: MuFormula) -> MuFormula:
    # iff over temporal operands has no primitive node; expand to two implications
    if isinstance(left, MFo) and isinstance(right, MFo):
        return MFo(Iff(left.fo, right.fo))
    return MAnd(MImplies(left, right), MImplies(right, left))


def fuse(phi: MuFormula) -> MuFormula:
    """Collapse maximal purely first-order subtrees into single FO leaves."""
    if isinstance(phi, MFo):
        return phi
    if isinstance(phi, MNot):
        sub = fuse(phi.sub)
        return MFo(Not(sub.fo)) if isinstance(sub, MFo) else MNot(sub)
    if isinstance(phi, (MAnd, MOr, MImplies)):
        left, right = fuse(phi.left), fuse(phi.right)
        if isinstance(left, MFo) and isinstance(right, MFo):
            pair = {MAnd: And, MOr: Or, MImplies: Implies}[type(phi)]
            return MFo(pair(left.fo, right.fo))
        return type(phi)(left, right)
    if isinstance(phi, (MExists, MForall)):
        sub = fuse(phi.sub)
        if isinstance(sub, MFo):
            quant = Exists if isinstance(phi, MExists) else Forall
            return MFo(quant(phi.var, sub.fo))
        return type(phi)(phi.var, sub)
    if isinstance(phi, (MDia, MBox)):
        return type(phi)(fuse(phi.sub))
    if isinstance(phi, (MMu, MNu)):
        return type(phi)(phi.var, fuse(phi.sub), phi.sugar)
    return phi  # MLive, MVar


def _check_live_vectors(
    phi: MuFormula, env: dict[str, frozenset[str]], p: _Parser
) -> None:
    """An explicit live(x̄) & dia/box(Φ) conjunction must name exactly free(Φ)."""
    if isinstance(phi, MAnd) and isinstance(phi.left, MLive) and isinstance(
        phi.right, (MDia, MBox)
    ):
        need = mu_free_ivars(phi.right.sub, dict(env))
        if frozenset(phi.left.vars) != need:
            raise ParseError(
                f"live-vector mismatch: live({', '.join(phi.left.vars)}) guards a "
                f"modality whose free variables are {{{', '.join(sorted(need))}}}",
                0, 0,
            )
    if isinstance(phi, (MNot, MDia, MBox)):
        _check_live_vectors(phi.sub, env, p)
    elif isinstance(phi, (MAnd, MOr, MImplies)):
        _check_live_vectors(phi.left, env, p)
        _check_live_vectors(phi.right, env, p)
    elif isinstance(phi, (MExists, MForall)):
        _check_live_vectors(phi.sub, env, p)
    elif isinstance(phi, (MMu, MNu)):
        env2 = {**env, phi.var: mu_free_ivars(phi, dict(env))}
        _check_live_vectors(phi.sub, env2, p)


# ---------------------------------------------------------------------------
# Entry points


def parse_mu_formula(text: str, theory: Optional[Theory] = None) -> MuFormula:
    constants = frozenset(theory.constants) if theory else frozenset()
    p = _Parser(text, constants)
    phi = fuse(p.formula())
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.value!r}", tok.line, tok.col)
    _check_live_vectors(phi, {}, p)
    validate_mu(phi, theory)
    return phi


def parse_fo_formula(text: str, theory: Optional[Theory] = None) -> Formula:
    constants = frozenset(theory.constants) if theory else frozenset()
    p = _Parser(text, constants)
    phi = p._demote(p.formula(), "formula")
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.value!r}", tok.line, tok.col)
    if theory is not None:
        _check_formula(theory, phi, free_vars(phi), False, "formula")
    return phi


def parse_theory(text: str, name: str = "theory") -> Theory:
    p = _Parser(text)
    tname = name
    const_order: list[str] = []
    fluents: list[FluentDecl] = []
    actions: list[ActionDecl] = []
    poss: dict[str, Formula] = {}
    ssa: dict[str, Formula] = {}
    ssa_params: dict[str, tuple[str, ...]] = {}
    init: dict[str, set[tuple[str, ...]]] = {}
    constraints: list[Formula] = []
    bound: Optional[int] = None

    if p.peek().kind == "eof":
        raise p.error("empty theory source")
    while not p.peek().kind == "eof":
        tok = p.peek()
        if tok.kind != "kw" or tok.value not in STATEMENT_KEYWORDS:
            raise p.error(f"expected a declaration, found {tok.value!r}")
        kw = p.next().value
        if kw == "theory":
            tname = p.expect_ident("theory name")
        elif kw == "constants":
            names = [p.expect_ident("constant name")]
            while p.at_sym(","):
                p.next()
                names.append(p.expect_ident("constant name"))
            for n in names:
                if n in p.constants:
                    raise p.error(f"constant {n} declared twice")
                p.constants.add(n)
                const_order.append(n)
        elif kw == "fluent":
            fname = p.expect_ident("fluent name")
            p.expect_sym("/")
            arity = p.expect_number()
            fluents.append(FluentDecl(fname, arity))
        elif kw == "action":
            aname = p.expect_ident("action name")
            p.expect_sym("(")
            params: list[str] = []
            if not p.at_sym(")"):
                params.append(p.expect_ident("parameter"))
                while p.at_sym(","):
                    p.next()
                    params.append(p.expect_ident("parameter"))
            p.expect_sym(")")
            actions.append(ActionDecl(aname, tuple(params)))
        elif kw == "poss":
            aname = p.expect_ident("action name")
            p.expect_sym("(")
            params = []
            if not p.at_sym(")"):
                params.append(p.expect_ident("parameter"))
                while p.at_sym(","):
                    p.next()
                    params.append(p.expect_ident("parameter"))
            p.expect_sym(")")
            p.expect_sym(":")
            if aname in poss:
                raise p.error(f"duplicate precondition for {aname}")
            for q in params:
                p.bind(q)
            body = p._demote(p.formula(), f"precondition of {aname}")
            for q in reversed(params):
                p.unbind(q)
            decl = next((a for a in actions if a.name == aname), None)
            if decl is None or decl.params != tuple(params):
                raise p.error(
                    f"precondition parameters for {aname} do not match its declaration"
                )
            poss[aname] = body
        elif kw == "ssa":
            fname = p.expect_ident("fluent name")
            p.expect_sym("(")
            params = []
            if not p.at_sym(")"):
                params.append(p.expect_ident("parameter"))
                while p.at_sym(","):
                    p.next()
                    params.append(p.expect_ident("parameter"))
            p.expect_sym(")")
            p.expect_sym(":")
            if fname in ssa:
                raise p.error(f"duplicate successor-state axiom for {fname}")
            for q in params:
                p.bind(q)
            body = p._demote(p.formula(), f"successor-state axiom of {fname}")
            for q in reversed(params):
                p.unbind(q)
            ssa[fname] = body
            ssa_params[fname] = tuple(params)
        elif kw == "init":
            fname = p.expect_ident("fluent name")
            p.expect_sym("(")
            args: list[str] = []
            if not p.at_sym(")"):
                args.append(p.expect_ident("constant"))
                while p.at_sym(","):
                    p.next()
                    args.append(p.expect_ident("constant"))
            p.expect_sym(")")
            for c in args:
                if c not in p.constants:
                    raise p.error(f"init arguments must be declared constants: {c}")
            init.setdefault(fname, set()).add(tuple(args))
        elif kw == "constraint":
            constraints.append(p._demote(p.formula(), "initial constraint"))
        elif kw == "bound":
            bound = p.expect_number()

    if init and constraints:
        raise ParseError(
            "a theory may not mix complete init atoms with init constraints", 1, 1
        )
    t = Theory(
        name=tname,
        fluents=fluents,
        constants=tuple(const_order),
        actions=actions,
        poss=poss,
        ssa_params=ssa_params,
        ssa=ssa,
        init={f: frozenset(tups) for f, tups in init.items()},
        init_constraints=tuple(constraints) if constraints else None,
        bound=bound,
    )
    validate_theory(t)
    return t


def parse_theory_file(path: str) -> Theory:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    base = os.path.splitext(os.path.basename(path))[0]
    return parse_theory(text, name=base)


def theory_to_text(t: Theory) -> str:
    """Concrete syntax for a theory; parse_theory inverts it."""
    lines = [f"theory {t.name}"]
    if t.constants:
        lines.append("constants " + ", ".join(t.constants))
    for f in t.fluents:
        lines.append(f"fluent {f.name}/{f.arity}")
    for a in t.actions:
        lines.append(f"action {a.name}({', '.join(a.params)})")
    for a in t.actions:
        lines.append(f"poss {a.name}({', '.join(a.params)}): {fo_to_text(t.poss[a.name])}")
    for f in t.fluents:
        params = ", ".join(t.ssa_params[f.name])
        lines.append(f"ssa {f.name}({params}): {fo_to_text(t.ssa[f.name])}")
    for f in t.fluents:
        for tup in sorted(t.init.get(f.name, frozenset())):
            lines.append(f"init {f.name}({', '.join(tup)})")
    for c in t.init_constraints or ():
        lines.append(f"constraint {fo_to_text(c)}")
    if t.bound is not None:
        lines.append(f"bound {t.bound}")
    return "\n".join(lines) + "\n"
