"""Surface syntax: theory files, formulas, sugar, errors, round-trips."""

import glob

import pytest

from bsc.model import (
    CountLess,
    MAnd,
    MBox,
    MDia,
    MFo,
    MLive,
    MMu,
    MNu,
    MOr,
    MVar,
    Not,
    ValidationError,
    fo_to_text,
    guard_vars,
    mu_free_ivars,
    mu_to_text,
)
from bsc.parser import (
    ParseError,
    parse_fo_formula,
    parse_mu_formula,
    parse_theory,
    parse_theory_file,
    theory_to_text,
)
from helpers import corpus_path, load

CORPUS_FILES = sorted(glob.glob(corpus_path("*.bsc")))


def find_node(phi, cls):
    if isinstance(phi, cls):
        return phi
    for attr in ("sub", "left", "right"):
        if hasattr(phi, attr):
            hit = find_node(getattr(phi, attr), cls)
            if hit is not None:
                return hit
    return None


# ---------------------------------------------------------------------------
# theories


def test_warehouse_declaration_counts(warehouse):
    assert len(warehouse.fluents) == 2
    assert len(warehouse.actions) == 3
    assert len(warehouse.constants) == 4
    assert warehouse.bound == 4


def test_empty_source_is_a_syntax_error_at_1_1():
    with pytest.raises(ParseError) as e:
        parse_theory("")
    assert (e.value.line, e.value.col) == (1, 1)


def test_ssa_arity_mismatch_is_rejected():
    src = """theory broken
constants C
fluent At/2
action a()
poss a(): true
ssa At(x, l): At(x, l, l)
"""
    with pytest.raises((ParseError, ValidationError), match="At expects 2"):
        parse_theory(src)


def test_duplicate_ssa_is_rejected():
    src = """theory broken
constants C
fluent At/2
action a()
poss a(): true
ssa At(x, l): At(x, l)
ssa At(x, l): false
"""
    with pytest.raises(ParseError, match="duplicate successor-state axiom for At"):
        parse_theory(src)


def test_duplicate_precondition_is_rejected():
    src = """theory broken
constants C
fluent P/1
action a()
poss a(): true
poss a(): false
ssa P(x): P(x)
"""
    with pytest.raises(ParseError, match="duplicate precondition"):
        parse_theory(src)


def test_parse_error_positions_point_into_the_source():
    src = "theory t\nfluent P/1\naction a()\nposs a(): P(x,)\nssa P(x): P(x)\n"
    with pytest.raises(ParseError) as e:
        parse_theory(src)
    assert e.value.line == 4


@pytest.mark.parametrize("path", CORPUS_FILES)
def test_theory_round_trips_through_pretty_printer(path):
    t = parse_theory_file(path)
    again = parse_theory(theory_to_text(t), name=t.name)
    assert again.fluents == t.fluents
    assert again.constants == t.constants
    assert again.actions == t.actions
    assert again.poss == t.poss
    assert again.ssa == t.ssa
    assert again.init == t.init
    assert again.init_constraints == t.init_constraints
    assert again.bound == t.bound


# ---------------------------------------------------------------------------
# formulas


def test_ef_sugar_expands_to_a_least_fixpoint(warehouse):
    phi = parse_mu_formula("EF (not exists x. exists l. At(x,l))", warehouse)
    assert isinstance(phi, MMu) and phi.sugar == "EF"
    assert isinstance(phi.sub, MOr)
    assert isinstance(phi.sub.left, MFo)
    assert isinstance(phi.sub.right, MDia)
    assert phi.sub.right.sub == MVar(phi.var)


def test_ag_sugar_expands_to_a_greatest_fixpoint(warehouse):
    phi = parse_mu_formula("AG true", warehouse)
    assert isinstance(phi, MNu) and phi.sugar == "AG"
    assert isinstance(phi.sub, MAnd)
    assert isinstance(phi.sub.right, MBox)


def test_non_monotone_fixpoint_is_rejected():
    with pytest.raises(ValidationError, match="odd number of negations"):
        parse_mu_formula("mu Z. not Z")


def test_rebinding_a_predicate_variable_is_rejected():
    with pytest.raises(ParseError, match="rebound"):
        parse_mu_formula("mu Z. mu Z. Z")


def test_unbound_predicate_variable_is_rejected():
    with pytest.raises((ParseError, ValidationError)):
        parse_mu_formula("dia(Z)")


def test_persistence_formula_guard_vector(warehouse):
    # quantified persistence: the modality's implicit liveness guard is
    # exactly the free variable crossing the state boundary
    phi = parse_mu_formula(
        "AG (forall x. (exists l. At(x,l)) implies"
        " mu Z. (not exists l. At(x,l)) or live(x) and dia(Z))",
        warehouse,
    )
    inner = find_node(phi, MMu)
    while inner.sugar is not None:  # skip the AG wrapper
        inner = find_node(inner.sub, MMu)
    dia = find_node(inner, MDia)
    env = {inner.var: mu_free_ivars(inner)}
    assert guard_vars(dia, env) == ("x",)
    live = find_node(inner, MLive)
    assert live.vars == ("x",)


def test_word_connectives_match_symbol_connectives(warehouse):
    a = parse_fo_formula("At(x,l) and not (x = l or l = ShipDock)", warehouse)
    b = parse_fo_formula("At(x,l) & not (x = l | l = ShipDock)", warehouse)
    assert a == b


def test_count_atom_parses_to_a_count_node(warehouse):
    phi = parse_fo_formula("count(x, l | At(x, l)) < 2", warehouse)
    assert isinstance(phi, CountLess)
    assert phi.vars == ("x", "l")
    assert phi.bound == 2


def test_count_body_must_be_first_order(warehouse):
    with pytest.raises(ParseError, match="first-order"):
        parse_mu_formula("count(x | dia(exists l. At(x,l))) < 1", warehouse)


def test_fo_parser_rejects_modalities(warehouse):
    with pytest.raises((ParseError, ValidationError)):
        parse_fo_formula("dia(true)", warehouse)


def test_unknown_fluent_is_rejected_when_theory_given(warehouse):
    with pytest.raises(ValidationError, match="Missing"):
        parse_mu_formula("EF Missing(x)", warehouse)


def test_neq_sugar_parses_to_negated_equality(warehouse):
    phi = parse_fo_formula("exists x. x != ShipDock", warehouse)
    assert isinstance(phi.sub, Not)


@pytest.mark.parametrize(
    "text",
    [
        "EF (not exists x. exists l. At(x,l))",
        "AG (EF (not exists x. exists l. At(x,l)))",
        "nu Z. (forall l. ((exists x. At(x, l)) implies"
        " dia(not exists x. At(x, l)))) & box(Z)",
        "count(x, l | At(x, l)) < 3",
        "exists x. exists l. At(x, l) & live(x)",
        "mu Z. (exists x. At(x, ShipDock)) | dia(Z)",
    ],
)
def test_mu_formulas_round_trip(text, warehouse):
    phi = parse_mu_formula(text, warehouse)
    assert parse_mu_formula(mu_to_text(phi), warehouse) == phi


def test_fo_printer_parenthesizes_by_precedence(warehouse):
    phi = parse_fo_formula(
        "(At(x,l) | exists y. At(y, l)) & not (x = l & l = ShipDock)", warehouse
    )
    assert parse_fo_formula(fo_to_text(phi), warehouse) == phi
