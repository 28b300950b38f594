from lmnkit.parser import parse_process, parse_program, parse_rule
from lmnkit.terms import free_links, validate_link_condition


def test_link_condition_ok_two_occurrences():
    report = validate_link_condition(parse_process("a(X),b(X)."))
    assert report.ok


def test_link_condition_triple_occurrence_reported():
    from lmnkit.terms import Atom, Process

    p = Process(atoms=(Atom("a", ("X",)), Atom("b", ("X",)), Atom("c", ("X",))))
    report = validate_link_condition(p)
    assert not report.ok
    assert report.violations[0].link == "X"
    assert report.violations[0].count == 3


def test_rule_single_occurrences_reported():
    from lmnkit.terms import Atom, Rule, Template

    rule = Rule(None, Template(atoms=(Atom("a", ("X",)),)),
                Template(atoms=(Atom("b", ("Y",)),)))
    report = validate_link_condition(rule)
    bad = {v.link for v in report.violations}
    assert bad == {"X", "Y"}


def test_rule_two_per_side_is_legal():
    # the same name may close a link on each side independently
    rule = parse_rule("a(X,X) :- b(X,X).")
    assert validate_link_condition(rule).ok


def test_free_links_basic():
    assert free_links(parse_process("a(X,F),b(X).")) == {"F"}


def test_free_links_across_membrane():
    assert free_links(parse_process("{a(X)},b(X).")) == set()


def test_free_links_membrane_args():
    p = parse_process("ax{+A,+B}.")
    assert free_links(p) == {"A", "B"}


def test_link_count_spans_period_items():
    # period-terminated fragments compose in parallel
    prog = parse_program("a(X). b(X).")
    proc, rules = prog.split()
    assert not rules
    assert free_links(proc) == set()
