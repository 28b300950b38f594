import random

import pytest

from helpers import brute_congruent, random_process, shuffle_process
from lmnkit.congruence import (
    canonical_form,
    canonical_key,
    canonical_rule_text,
    congruent,
    normalize_connectors,
)
from lmnkit.parser import parse_process, parse_rule, pretty_print
from lmnkit.rulesets import FIXTURE_SOURCES
from lmnkit.terms import free_links


def norm_text(src):
    return pretty_print(normalize_connectors(parse_process(src)))


def test_self_loop_vanishes():
    assert norm_text("X=X.") == ""


def test_atom_absorbs_connector():
    assert norm_text("a(X), X=Y.") == "a(Y)."


def test_connector_crosses_membrane():
    p = normalize_connectors(parse_process("{a(X)}, X=Y, b(Y)."))
    assert congruent(p, parse_process("{a(L)}, b(L)."))
    # exactly one membrane-crossing link afterwards
    assert "=" not in pretty_print(p)


def test_interface_connector_kept():
    p = normalize_connectors(parse_process("X=Y."))
    assert free_links(p) == {"X", "Y"}
    assert len(p.atoms) == 1


def test_connector_stuck_inside_membrane():
    # E10 cannot move a bare connector out when neither side occurs inside
    p = normalize_connectors(parse_process("{X=Y}, a(X), b(Y)."))
    assert len(p.cells) == 1
    assert len(p.cells[0].content.atoms) == 1


def test_connector_chain_collapses():
    p = normalize_connectors(parse_process("a(X), X=Y, Y2=Z, Y=Y2, b(Z)."))
    assert congruent(p, parse_process("a(L), b(L)."))


def test_congruent_multiset_and_alpha():
    assert congruent(parse_process("a(X),b(X)."), parse_process("b(Y),a(Y)."))


def test_port_order_matters():
    assert not congruent(
        parse_process("a(X,Y),c(X),d(Y)."),
        parse_process("a(X,Y),c(Y),d(X)."),
    )


def test_membrane_args_unordered():
    assert congruent(
        parse_process("cut{+A,+B},f(A),g(B)."),
        parse_process("cut{+B,+A},f(A),g(B)."),
    )


def test_free_link_names_significant():
    assert not congruent(parse_process("a(F)."), parse_process("a(G)."))


def test_fixture_shuffle_canonical_stability():
    rng = random.Random(7)
    p = parse_process(FIXTURE_SOURCES["apply_fx"])
    reference = canonical_key(p)
    forms = {canonical_key(shuffle_process(rng, p)) for _ in range(100)}
    assert forms == {reference}


def test_canonical_form_text_reparses():
    p = parse_process(FIXTURE_SOURCES["apply_ffx"])
    cf = canonical_form(p)
    assert congruent(parse_process(cf.text), p)


def test_canonical_empty():
    from lmnkit.terms import Process

    cf = canonical_form(Process())
    assert cf.text == ""


def test_normalize_idempotent_and_congruent():
    rng = random.Random(11)
    for _ in range(200):
        p = random_process(rng, max_atoms=8, connector_rate=0.4)
        q = normalize_connectors(p)
        assert congruent(p, q)
        assert pretty_print(normalize_connectors(q)) == pretty_print(q)


def test_canonical_matches_brute_force_on_shuffles():
    rng = random.Random(13)
    for i in range(150):
        p = random_process(rng, max_atoms=9)
        q = shuffle_process(rng, p)
        assert canonical_key(p) == canonical_key(q)
        assert brute_congruent(p, q)


def test_canonical_matches_brute_force_on_distinct_pairs():
    rng = random.Random(17)
    processes = [random_process(rng, max_atoms=6) for _ in range(60)]
    for i in range(0, len(processes) - 1, 2):
        p, q = processes[i], processes[i + 1]
        assert (canonical_key(p) == canonical_key(q)) == brute_congruent(p, q)


def test_rules_in_membranes_compare_by_text():
    p = parse_process("{a, (x(L),y(L) :- z)}.")
    q = parse_process("{a, (y(K),x(K) :- z)}.")
    assert congruent(p, q)
    r = parse_process("{a, (x(L),y(L) :- w)}.")
    assert not congruent(p, r)


def test_canonical_rule_text_normalizes_order():
    r1 = parse_rule("foo@@ a(X), b(X,Y), c(Y) :- d.")
    r2 = parse_rule("foo@@ c(Q), a(P), b(P,Q) :- d.")
    assert canonical_rule_text(r1) == canonical_rule_text(r2)
