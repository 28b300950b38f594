import pytest

from lmnkit.congruence import congruent
from lmnkit.parser import (
    ParseError,
    parse_process,
    parse_program,
    parse_rule,
    parse_rules,
    pretty_print,
)
from lmnkit.rulesets import CUT_ELIMINATION_SOURCE, FIXTURE_SOURCES
from lmnkit.terms import LinkConditionError, free_links


def test_nested_term_sugar():
    # p(a,b) flattens to p wired to fresh 0-ary atoms
    assert congruent(parse_process("p(a,b)."), parse_process("p(X,Y),a(X),b(Y)."))


def test_membrane_argument_sugar():
    p = parse_process("cut{+A,+B},f(A),g(B).")
    cell = p.cells[0]
    assert cell.name == "cut"
    assert sorted(a.name for a in cell.content.atoms) == ["+", "+"]


def test_membrane_as_atom_argument():
    # p({q}) becomes p(L) plus a membrane containing +L and q
    p = parse_process("p({q}).")
    assert len(p.atoms) == 1 and len(p.cells) == 1
    names = sorted(a.name for a in p.cells[0].content.atoms)
    assert names == ["+", "q"]


def test_fixture_corpus_parses():
    for name, src in FIXTURE_SOURCES.items():
        program = parse_program(src)
        assert program.items, name


def test_apply_fx_shape():
    # two unnamed membranes and the expected atom bag at the top level
    p = parse_process(FIXTURE_SOURCES["apply_fx"])
    unnamed = [c for c in p.cells if c.name is None]
    assert len(unnamed) == 4  # 2 boxes + 2 contraction port membranes
    named = sorted(c.name for c in p.cells if c.name)
    assert named == ["ax", "ax", "ax", "cut", "cut"]
    atom_names = sorted(a.name for a in p.atoms)
    assert atom_names == ["?c", "?c", "?d", "?w", "formula",
                          "par", "par", "tensor", "tensor"]
    assert free_links(p) == set()


def test_rule_names_attach():
    rules = parse_rules(CUT_ELIMINATION_SOURCE)
    assert [r.name for r in rules] == [
        "ax_cut", "tensor_par", "promotion_promotion",
        "promotion_dereliction", "promotion_weakening",
        "promotion_contraction",
    ]


def test_round_trip_rules():
    for rule in parse_rules(CUT_ELIMINATION_SOURCE):
        again = parse_rule(pretty_print(rule))
        assert again.name == rule.name
        assert pretty_print(again) == pretty_print(rule)


def test_round_trip_fixtures():
    for name, src in FIXTURE_SOURCES.items():
        program = parse_program(src)
        reparsed = parse_program(pretty_print(program))
        proc1, rules1 = program.split()
        proc2, rules2 = reparsed.split()
        assert congruent(proc1, proc2), name
        assert len(rules1) == len(rules2)


def test_pretty_empty():
    from lmnkit.terms import Process

    assert pretty_print(Process()) == ""


def test_negative_link_decoration():
    p = parse_process("{id, +M1, -M2}, n(M1), m(M2).")
    inner = p.cells[0].content
    assert sorted(a.name for a in inner.atoms) == ["+", "-", "id"]


def test_quoted_names_preserved():
    p = parse_process("'?d'(A,B),x(A),y(B).")
    assert p.atoms[0].name == "?d"
    assert "'?d'" in pretty_print(p)


def test_module_qualified_name():
    p = parse_process("mell.copy(A,B,C,D,E,F,G,H),x(A),x(B),x(C),x(D),x(E),x(F),x(G),x(H).")
    assert p.atoms[0].name == "mell.copy"


def test_comments_and_whitespace():
    p = parse_process("a(X), // trailing comment\n b(X). // another\n")
    assert len(p.atoms) == 2


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_program("a(X), ] b.")
    assert "1:" in str(err.value)


def test_context_outside_rule_rejected():
    with pytest.raises(ParseError, match="outside a rule"):
        parse_program("{$p}.")


def test_link_condition_violation_at_parse():
    with pytest.raises(LinkConditionError):
        parse_program("a(X),b(X),c(X).")


def test_rule_link_condition_at_parse():
    with pytest.raises(LinkConditionError):
        parse_rule("a(X) :- b(Y).")


def test_desugaring_preserves_free_links():
    src = "p(a,{q(Z)},W)."
    p = parse_process(src)
    assert free_links(p) == {"Z", "W"}


def test_connector_in_lhs_rejected():
    with pytest.raises(ParseError, match="connector"):
        parse_rule("X=Y, a(X), b(Y) :- c(X2),d(X2).")


def test_context_must_recur_in_rhs():
    with pytest.raises((ParseError, LinkConditionError)):
        parse_rule("{$p} :- done.")
    with pytest.raises(ParseError, match="exactly once in rhs"):
        parse_rule("{$p[X]}, a(X) :- b(Y), c(Y).")


def test_rule_context_may_be_dropped():
    rule = parse_rule("{a(X),b(X),@r} :- done.")
    assert rule.name is None


def test_local_rule_inside_membrane():
    prog = parse_program("{a, (a :- b)}.")
    proc, _ = prog.split()
    assert len(proc.cells[0].content.rules) == 1
