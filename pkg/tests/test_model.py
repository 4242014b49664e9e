"""Object interning, interpretations, formula utilities, theory validation."""

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from bsc.model import (
    And,
    Eq,
    Exists,
    FAtom,
    Forall,
    Interpretation,
    Not,
    Or,
    ValidationError,
    Var,
    apply_iso,
    expand_count,
    CountLess,
    FALSE,
    free_vars,
    fresh_object,
    named_object,
    normalize,
    object_from_text,
    quantifier_count,
    reset_fresh_counter,
    sorted_objects,
    subst,
    theory_diagnostics,
    validate_theory,
)

A = named_object("A")
B = named_object("B")


def interp(at=frozenset(), cmap=None):
    return Interpretation({"At": frozenset(at)}, dict(cmap or {}))


# ---------------------------------------------------------------------------
# interning


def test_named_objects_are_interned():
    assert named_object("A") is A
    assert object_from_text("A") is A


def test_fresh_objects_restart_but_stay_interned():
    a = fresh_object()
    reset_fresh_counter()
    b = fresh_object()
    assert a is b
    assert a.name == "#0"


def test_fresh_never_collides_with_named():
    objs = {fresh_object() for _ in range(50)}
    assert A not in objs
    with pytest.raises(ValidationError):
        named_object("#3")


def test_sorted_objects_puts_named_first():
    f = fresh_object()
    assert sorted_objects([f, B, A]) == [A, B, f]


# ---------------------------------------------------------------------------
# interpretations


def test_adom_constants_only():
    i = interp(cmap={"ShipDock": A})
    assert i.adom == frozenset({A})


def test_adom_unions_tuples_and_constants():
    o1 = fresh_object()
    i = interp(at={(o1, A)}, cmap={"ShipDock": A})
    assert i.adom == frozenset({A, o1})


def test_warehouse_initial_adom_is_the_constants(warehouse):
    i = warehouse.initial_interpretation()
    expected = {named_object(c) for c in ("ShipDock", "SL1", "SL2", "SL3")}
    assert set(i.adom) == expected
    assert i.tuple_count("At") == 0
    assert i.tuple_count("IsLoc") == 3


def test_const_map_must_be_injective():
    with pytest.raises(ValidationError):
        Interpretation({}, {"X": A, "Y": A})


def test_signature_counts_tuples_per_fluent():
    o = fresh_object()
    i = Interpretation(
        {"At": frozenset({(o, A)}), "IsLoc": frozenset({(A,), (B,)})}, {}
    )
    assert i.signature() == (("At", 1), ("IsLoc", 2))


def test_apply_iso_renames_relations_and_constants():
    o = fresh_object()
    p = fresh_object()
    i = interp(at={(o, A)}, cmap={"D": A})
    j = apply_iso(i, {o: p, A: B})
    assert j.relations["At"] == frozenset({(p, B)})
    assert j.const_map == {"D": B}


OBJ_POOL = [named_object("a0"), named_object("a1")] + [
    object_from_text(f"#{900 + k}") for k in range(4)
]


@st.composite
def small_interps(draw):
    univ = OBJ_POOL
    unary = draw(
        st.frozensets(st.sampled_from(univ).map(lambda o: (o,)), max_size=4)
    )
    binary = draw(
        st.frozensets(
            st.tuples(st.sampled_from(univ), st.sampled_from(univ)), max_size=5
        )
    )
    return Interpretation({"P": unary, "R": binary}, {"a0": univ[0]})


@given(small_interps())
@settings(max_examples=60)
def test_iso_key_is_renaming_invariant(i):
    targets = [object_from_text(f"#{950 + k}") for k in range(len(OBJ_POOL))]
    h = dict(zip(OBJ_POOL, targets))
    assert apply_iso(i, h).iso_key == i.iso_key


@given(small_interps())
@settings(max_examples=60)
def test_adom_never_contains_foreign_objects(i):
    assert i.adom <= frozenset(OBJ_POOL)


# ---------------------------------------------------------------------------
# formula utilities


def test_free_vars_sees_through_binders():
    phi = Exists("x", And(FAtom("At", (Var("x"), Var("l"))), Eq(Var("x"), Var("y"))))
    assert free_vars(phi) == frozenset({"l", "y"})


def test_subst_avoids_capture():
    # substituting x for y must not let x fall under the exists x binder
    phi = Exists("x", Eq(Var("x"), Var("y")))
    out = subst(phi, {"y": Var("x")})
    assert isinstance(out, Exists)
    assert out.var != "x"
    assert free_vars(out) == frozenset({"x"})


def test_normalize_eliminates_sugar_connectives():
    phi = Forall("x", Or(FAtom("P", (Var("x"),)), Not(FAtom("P", (Var("x"),)))))
    core = normalize(phi)

    def walk(f):
        assert not isinstance(f, (Or, Forall)), f
        for attr in ("sub", "left", "right"):
            if hasattr(f, attr):
                walk(getattr(f, attr))

    walk(core)


def test_expand_count_of_zero_is_false():
    c = CountLess(("x",), FAtom("P", (Var("x"),)), 0)
    assert expand_count(c) is FALSE


def test_quantifier_count_includes_count_columns():
    phi = Exists("x", CountLess(("y", "z"), FAtom("R", (Var("y"), Var("z"))), 2))
    assert quantifier_count(phi) == 3


# ---------------------------------------------------------------------------
# theory validation


def test_corpus_theories_have_no_diagnostics(warehouse, photo, blocks):
    for t in (warehouse, photo, blocks):
        assert theory_diagnostics(t) == []


def test_missing_ssa_is_diagnosed(warehouse):
    from dataclasses import replace

    from bsc.model import FluentDecl

    broken = replace(warehouse, fluents=warehouse.fluents + [FluentDecl("Ghost", 1)])
    diags = theory_diagnostics(broken)
    assert diags == ["fluent Ghost: missing successor-state axiom"]
    with pytest.raises(ValidationError, match="Ghost"):
        validate_theory(broken)


def test_escaping_free_variable_is_diagnosed(warehouse):
    from dataclasses import replace

    bad_poss = dict(warehouse.poss)
    bad_poss["move"] = FAtom("At", (Var("x"), Var("somewhere")))
    diags = theory_diagnostics(replace(warehouse, poss=bad_poss))
    assert diags == ["poss move: free variable escapes: somewhere"]


def test_multiple_diagnostics_are_all_reported(warehouse):
    from dataclasses import replace

    bad_poss = dict(warehouse.poss)
    bad_poss["move"] = FAtom("At", (Var("x"), Var("zz")))
    bad_poss["ship"] = FAtom("At", (Var("y"),))  # arity mismatch too
    diags = theory_diagnostics(replace(warehouse, poss=bad_poss))
    assert len(diags) == 2


def test_init_must_use_declared_constants(warehouse):
    from dataclasses import replace

    bad = replace(warehouse, init={"At": frozenset({("Crate9", "ShipDock")})})
    diags = theory_diagnostics(bad)
    assert any("Crate9" in d for d in diags)
