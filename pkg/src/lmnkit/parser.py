"""Concrete syntax: parser and pretty printer.

Programs are UTF-8 text with ``//`` line comments and period-terminated
items; each item is a process fragment or a rewrite rule
(``name@@ lhs :- rhs``).  All sugar is desugared while parsing:

* nested atom arguments ``p(a,b)`` become flat atoms wired by fresh links,
* a membrane argument ``p({Q},Y)`` becomes ``p(L,Y)`` plus a membrane
  containing ``+L`` and ``Q``,
* ``+L`` / ``-L`` are operator forms of the unary atoms ``+``/``-``,
* ``X=Y`` is the binary connector atom.

Process contexts ``$p[...]``, rule contexts ``@q``, and aggregates are only
legal inside rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .terms import (
    Aggregate,
    Atom,
    Cell,
    CONNECTOR,
    ContextAggregate,
    LinkConditionError,
    Process,
    ProcessContext,
    Rule,
    RuleContext,
    Template,
    TemplateCell,
    fresh_link,
    is_generated_link,
    validate_link_condition,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SourceProgram:
    """Ordered period-terminated items; fragments compose in parallel."""

    items: tuple[Union[Process, Rule], ...]

    def split(self) -> tuple[Process, list[Rule]]:
        """Merge fragments into one process; pull top-level rules out as the
        active rule set."""
        atoms: list = []
        cells: list = []
        inner_rules: list = []
        top_rules: list[Rule] = []
        for item in self.items:
            if isinstance(item, Rule):
                top_rules.append(item)
            else:
                atoms.extend(item.atoms)
                cells.extend(item.cells)
                inner_rules.extend(item.rules)
        return Process(tuple(atoms), tuple(cells), tuple(inner_rules)), top_rules

    def merged_process(self) -> Process:
        proc, rules = self.split()
        return Process(proc.atoms, proc.cells, proc.rules + tuple(rules))


# --------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<arrow>:-)
  | (?P<atat>@@)
  | (?P<qname>'[^']*')
  | (?P<name>[a-z0-9_][A-Za-z0-9_]*(?:\.[a-z0-9_][A-Za-z0-9_]*)*)
  | (?P<link>[A-Z][A-Za-z0-9_]*)
  | (?P<punct>[.,{}()\[\]|@$*+=-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, linestart = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - linestart + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - linestart + 1
        if kind == "ws":
            nl = value.count("\n")
            if nl:
                line += nl
                linestart = pos + value.rfind("\n") + 1
        elif kind == "qname":
            toks.append(_Tok("name", value[1:-1], line, col))
        elif kind == "punct":
            toks.append(_Tok(value, value, line, col))
        else:
            toks.append(_Tok(kind, value, line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, len(text) - linestart + 1))
    return toks


# --------------------------------------------------------------------------
# Parser

# Mutable template under construction.
class _Items:
    def __init__(self) -> None:
        self.atoms: list[Atom] = []
        self.cells: list[TemplateCell] = []
        self.contexts: list[ProcessContext] = []
        self.rule_contexts: list[RuleContext] = []
        self.aggregates: list[Aggregate] = []
        self.ctx_aggregates: list[ContextAggregate] = []
        self.rules: list[Rule] = []

    def freeze(self) -> Template:
        return Template(
            tuple(self.atoms),
            tuple(self.cells),
            tuple(self.contexts),
            tuple(self.rule_contexts),
            tuple(self.aggregates),
            tuple(self.ctx_aggregates),
            tuple(self.rules),
        )


def _implicit_bundle(ctx_name: str) -> str:
    return f"~b:{ctx_name}"


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, got {t.value!r}", t.line, t.col)
        return self.next()

    def fail(self, msg: str) -> None:
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- program ------------------------------------------------------------

    def program(self) -> list[Union[Template, Rule]]:
        items: list[Union[Template, Rule]] = []
        while self.peek().kind != "eof":
            items.append(self.item())
            self.expect(".")
        return items

    def item(self) -> Union[Template, Rule]:
        name = None
        if self.peek().kind == "name" and self.peek(1).kind == "atat":
            name = self.next().value
            self.next()
        lhs = self.template()
        if self.peek().kind == "arrow":
            self.next()
            rhs = self.template()
            return Rule(name, lhs, rhs)
        if name is not None:
            self.fail("rule name without ':-'")
        return lhs

    def template(self) -> Template:
        items = _Items()
        self.element(items)
        while self.peek().kind == ",":
            self.next()
            self.element(items)
        return items.freeze()

    # -- elements -----------------------------------------------------------

    def element(self, out: _Items) -> None:
        t = self.peek()
        if t.kind == "+":
            self.next()
            link = self.expect("link").value
            out.atoms.append(Atom("+", (link,)))
        elif t.kind == "-":
            self.next()
            link = self.expect("link").value
            out.atoms.append(Atom("-", (link,)))
        elif t.kind == "$":
            self.next()
            self.context(out)
        elif t.kind == "@":
            self.next()
            name = self.expect("name").value
            out.rule_contexts.append(RuleContext(name))
        elif t.kind == "(":
            self.next()
            inner = self.item()
            self.expect(")")
            if isinstance(inner, Rule):
                out.rules.append(inner)
            else:
                self._splice(inner, out)
        elif t.kind == "{":
            out.cells.append(self.membrane(None))
        elif t.kind == "link":
            link = self.next().value
            self.expect("=")
            right = self.arg_link(out)
            out.atoms.append(Atom(CONNECTOR, (link, right)))
        elif t.kind == "name":
            name = self.next().value
            if name == "0" and self.peek().kind not in ("(", "{"):
                return  # inert null process
            if self.peek().kind == "{":
                out.cells.append(self.membrane(name))
            elif self.peek().kind == "(":
                self.atom_or_aggregate(name, out)
            else:
                out.atoms.append(Atom(name, ()))
        else:
            self.fail(f"unexpected {t.value!r}")

    def _splice(self, tpl: Template, out: _Items) -> None:
        out.atoms.extend(tpl.atoms)
        out.cells.extend(tpl.cells)
        out.contexts.extend(tpl.contexts)
        out.rule_contexts.extend(tpl.rule_contexts)
        out.aggregates.extend(tpl.aggregates)
        out.ctx_aggregates.extend(tpl.ctx_aggregates)
        out.rules.extend(tpl.rules)

    def membrane(self, name: Union[str, None]) -> TemplateCell:
        self.expect("{")
        if self.peek().kind == "}":
            self.next()
            return TemplateCell(name, Template())
        items = _Items()
        self.element(items)
        while self.peek().kind == ",":
            self.next()
            self.element(items)
        if self.peek().kind == "arrow":
            # the whole membrane body is a single (unnamed) local rule
            self.next()
            rhs = self.template()
            items_rule = Rule(None, items.freeze(), rhs)
            items = _Items()
            items.rules.append(items_rule)
        self.expect("}")
        return TemplateCell(name, items.freeze())

    def atom_or_aggregate(self, name: str, out: _Items) -> None:
        self.expect("(")
        if self.peek().kind == "*":
            bundles = [self.bundle_arg()]
            while self.peek().kind == ",":
                self.next()
                bundles.append(self.bundle_arg())
            self.expect(")")
            out.aggregates.append(Aggregate(name, tuple(bundles)))
            return
        args = [self.arg_link(out)]
        while self.peek().kind == ",":
            self.next()
            args.append(self.arg_link(out))
        self.expect(")")
        out.atoms.append(Atom(name, tuple(args)))

    def bundle_arg(self) -> str:
        self.expect("*")
        return self.expect("link").value

    def arg_link(self, out: _Items) -> str:
        """Parse one atom argument and return the link wired to this slot,
        emitting desugared side atoms/cells into ``out``."""
        t = self.peek()
        if t.kind == "link":
            return self.next().value
        if t.kind == "{":
            cell = self.membrane(None)
            link = fresh_link()
            plus = Atom("+", (link,))
            cell = TemplateCell(cell.name, Template(
                (plus,) + cell.content.atoms,
                cell.content.cells,
                cell.content.contexts,
                cell.content.rule_contexts,
                cell.content.aggregates,
                cell.content.ctx_aggregates,
                cell.content.rules,
            ))
            out.cells.append(cell)
            return link
        if t.kind == "name":
            name = self.next().value
            if self.peek().kind == "{":
                cell = self.membrane(name)
                link = fresh_link()
                cell = TemplateCell(cell.name, Template(
                    (Atom("+", (link,)),) + cell.content.atoms,
                    cell.content.cells,
                    cell.content.contexts,
                    cell.content.rule_contexts,
                    cell.content.aggregates,
                    cell.content.ctx_aggregates,
                    cell.content.rules,
                ))
                out.cells.append(cell)
                return link
            link = fresh_link()
            if self.peek().kind == "(":
                self.expect("(")
                args = [self.arg_link(out)]
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.arg_link(out))
                self.expect(")")
                out.atoms.append(Atom(name, tuple(args) + (link,)))
            else:
                out.atoms.append(Atom(name, (link,)))
            return link
        self.fail(f"expected argument, got {t.value!r}")
        raise AssertionError

    def context(self, out: _Items) -> None:
        name = self.expect("name").value
        if self.peek().kind != "[":
            out.contexts.append(
                ProcessContext(name, (), _implicit_bundle(name), implicit=True)
            )
            return
        self.next()
        if self.peek().kind == "]":
            self.next()
            out.contexts.append(ProcessContext(name, (), None))
            return
        if self.peek().kind == "*":
            bundles = [self.bundle_arg()]
            while self.peek().kind == ",":
                self.next()
                bundles.append(self.bundle_arg())
            self.expect("]")
            out.ctx_aggregates.append(ContextAggregate(name, tuple(bundles)))
            return
        links: list[str] = []
        bundle: Union[str, None] = None
        if self.peek().kind == "link":
            links.append(self.next().value)
            while self.peek().kind == ",":
                self.next()
                links.append(self.expect("link").value)
        if self.peek().kind == "|":
            self.next()
            if self.peek().kind == "*":
                bundle = self.bundle_arg()
            elif self.peek().kind == "[":
                self.next()
                self.expect("]")
            else:
                self.fail("expected '*X' or '[]' residual")
        self.expect("]")
        out.contexts.append(ProcessContext(name, tuple(links), bundle))


# --------------------------------------------------------------------------
# Entry points


def _first_template_feature(t: Template) -> Union[str, None]:
    if t.contexts:
        return f"process context ${t.contexts[0].name}"
    if t.rule_contexts:
        return f"rule context @{t.rule_contexts[0].name}"
    if t.aggregates:
        return f"aggregate {t.aggregates[0].name}(*...)"
    if t.ctx_aggregates:
        return f"context aggregate ${t.ctx_aggregates[0].name}[*...]"
    for c in t.cells:
        found = _first_template_feature(c.content)
        if found:
            return found
    return None


def _validate_rule(rule: Rule) -> None:
    report = validate_link_condition(rule)
    if not report.ok:
        raise LinkConditionError(report)
    _validate_rule_contexts(rule)


def _validate_nested_rules(p: Process) -> None:
    for r in p.rules:
        _validate_rule(r)
    for c in p.cells:
        _validate_nested_rules(c.content)


def parse_program(text: str) -> SourceProgram:
    parsed = _Parser(text).program()
    items: list[Union[Process, Rule]] = []
    for item in parsed:
        if isinstance(item, Rule):
            _validate_rule(item)
            items.append(item)
        else:
            feature = _first_template_feature(item)
            if feature:
                raise ParseError(f"{feature} outside a rule", 0, 0)
            proc = item.to_process()
            _validate_nested_rules(proc)
            items.append(proc)
    program = SourceProgram(tuple(items))
    report = validate_link_condition(program.merged_process())
    if not report.ok:
        raise LinkConditionError(report)
    return program


def parse_process(text: str) -> Process:
    """Parse text containing no top-level rules into a single process."""
    proc, rules = parse_program(text).split()
    if rules:
        raise ParseError("unexpected rule in process text", 0, 0)
    return proc


def parse_rule(text: str) -> Rule:
    program = parse_program(text)
    rules = [i for i in program.items if isinstance(i, Rule)]
    if len(rules) != 1 or len(program.items) != 1:
        raise ParseError("expected exactly one rule", 0, 0)
    return rules[0]


def parse_rules(text: str) -> list[Rule]:
    program = parse_program(text)
    rules = [i for i in program.items if isinstance(i, Rule)]
    if len(rules) != len(program.items):
        raise ParseError("expected only rules", 0, 0)
    return rules


def _collect_context_info(t: Template, inside_cell: bool, acc: dict,
                          enforce_single: bool) -> None:
    for ctx in t.contexts:
        acc.setdefault(ctx.name, []).append((inside_cell, ctx))
    for c in t.cells:
        if enforce_single and len(c.content.contexts) > 1:
            raise ParseError(
                f"lhs membrane has {len(c.content.contexts)} process contexts; "
                "at most one allowed", 0, 0)
        if enforce_single and len(c.content.rule_contexts) > 1:
            raise ParseError("lhs membrane has more than one rule context", 0, 0)
        _collect_context_info(c.content, True, acc, enforce_single)


def _validate_rule_contexts(rule: Rule) -> None:
    lhs_ctx: dict[str, list] = {}
    rhs_ctx: dict[str, list] = {}
    _collect_context_info(rule.lhs, False, lhs_ctx, enforce_single=True)
    _collect_context_info(rule.rhs, False, rhs_ctx, enforce_single=False)
    for name, occs in lhs_ctx.items():
        if len(occs) > 1:
            raise ParseError(f"process context ${name} occurs twice in lhs", 0, 0)
        if not occs[0][0]:
            raise ParseError(f"process context ${name} not inside a membrane in lhs", 0, 0)

    def rhs_occurrences(name: str) -> int:
        n = len(rhs_ctx.get(name, []))

        def count_agg(t: Template) -> int:
            k = sum(1 for a in t.ctx_aggregates if a.name == name)
            return k + sum(count_agg(c.content) for c in t.cells)

        return n + count_agg(rule.rhs)

    for name in lhs_ctx:
        if rhs_occurrences(name) != 1:
            raise ParseError(
                f"process context ${name} must occur exactly once in rhs", 0, 0
            )
    for name, occs in rhs_ctx.items():
        if name not in lhs_ctx:
            raise ParseError(f"process context ${name} unbound in rhs", 0, 0)
        lhs_arity = len(lhs_ctx[name][0][1].links)
        for _, ctx in occs:
            if len(ctx.links) != lhs_arity:
                raise ParseError(
                    f"process context ${name} declares {len(ctx.links)} links in "
                    f"rhs but {lhs_arity} in lhs", 0, 0)

    def check_cagg_arity(t: Template) -> None:
        for ca in t.ctx_aggregates:
            if ca.name in lhs_ctx:
                lhs_arity = len(lhs_ctx[ca.name][0][1].links)
                if len(ca.bundles) != lhs_arity:
                    raise ParseError(
                        f"context aggregate ${ca.name} takes {len(ca.bundles)} "
                        f"bundles but the lhs context declares {lhs_arity} links",
                        0, 0)
            else:
                raise ParseError(f"context aggregate ${ca.name} unbound in rhs", 0, 0)
        for c in t.cells:
            check_cagg_arity(c.content)

    check_cagg_arity(rule.rhs)

    def lhs_rulectx(t: Template) -> set[str]:
        s = {rc.name for rc in t.rule_contexts}
        for c in t.cells:
            s |= lhs_rulectx(c.content)
        return s

    lhs_rc = lhs_rulectx(rule.lhs)
    rhs_rc = lhs_rulectx(rule.rhs)
    if rhs_rc - lhs_rc:
        missing = sorted(rhs_rc - lhs_rc)[0]
        raise ParseError(f"rule context @{missing} unbound in rhs", 0, 0)

    def agg_bundles_bound(t: Template, bound: set[str]) -> None:
        for a in t.aggregates + t.ctx_aggregates:
            for b in a.bundles:
                if b not in bound:
                    raise ParseError(f"bundle *{b} in aggregate unbound by lhs", 0, 0)
        for c in t.cells:
            agg_bundles_bound(c.content, bound)

    lhs_bundles = {
        ctx.bundle
        for occs in lhs_ctx.values()
        for _, ctx in occs
        if ctx.bundle is not None
    }
    agg_bundles_bound(rule.rhs, lhs_bundles)

    def no_lhs_only_features(t: Template) -> None:
        if t.aggregates or t.ctx_aggregates:
            raise ParseError("aggregates are only allowed in a rule rhs", 0, 0)
        if t.rules:
            raise ParseError("rule literal in lhs; use a rule context", 0, 0)
        for a in t.atoms:
            if a.name == CONNECTOR:
                raise ParseError("connector '=' not allowed in a rule lhs", 0, 0)
        for c in t.cells:
            no_lhs_only_features(c.content)

    no_lhs_only_features(rule.lhs)


# --------------------------------------------------------------------------
# Pretty printer

_PLAIN_NAME = re.compile(r"[a-z0-9_][A-Za-z0-9_]*(\.[a-z0-9_][A-Za-z0-9_]*)*$")


def _fmt_name(name: str) -> str:
    if _PLAIN_NAME.match(name) and name != "0":
        return name
    return f"'{name}'"


class _LinkNamer:
    """Rename machine-generated links to printable ones on output."""

    def __init__(self) -> None:
        self.map: dict[str, str] = {}
        self.used: set[str] = set()
        self.n = 0

    def seed(self, names) -> None:
        self.used.update(n for n in names if not is_generated_link(n))

    def __call__(self, link: str) -> str:
        if not is_generated_link(link):
            return link
        if link not in self.map:
            self.n += 1
            while f"L{self.n}" in self.used:
                self.n += 1
            self.map[link] = f"L{self.n}"
        return self.map[link]


def _fmt_atom(a: Atom, nm: _LinkNamer) -> str:
    if a.name == "+" and a.arity == 1:
        return f"+{nm(a.args[0])}"
    if a.name == "-" and a.arity == 1:
        return f"-{nm(a.args[0])}"
    if a.name == CONNECTOR and a.arity == 2:
        return f"{nm(a.args[0])}={nm(a.args[1])}"
    if not a.args:
        return _fmt_name(a.name)
    return f"{_fmt_name(a.name)}({','.join(nm(x) for x in a.args)})"


def _fmt_context(c: ProcessContext, nm: _LinkNamer) -> str:
    if c.implicit:
        return f"${c.name}"
    inner = ",".join(nm(x) for x in c.links)
    if c.bundle is not None:
        inner += f"|*{nm(c.bundle)}"
    return f"${c.name}[{inner}]"


def _fmt_template(t: Template, nm: _LinkNamer, in_rule: bool) -> str:
    parts: list[str] = []
    parts.extend(_fmt_atom(a, nm) for a in t.atoms)
    for c in t.cells:
        head = _fmt_name(c.name) if c.name else ""
        parts.append(head + "{" + _fmt_template(c.content, nm, in_rule) + "}")
    parts.extend(_fmt_context(c, nm) for c in t.contexts)
    parts.extend(f"@{rc.name}" for rc in t.rule_contexts)
    for a in t.aggregates:
        parts.append(f"{_fmt_name(a.name)}({','.join('*' + nm(b) for b in a.bundles)})")
    for ca in t.ctx_aggregates:
        parts.append(f"${ca.name}[{','.join('*' + nm(b) for b in ca.bundles)}]")
    for r in t.rules:
        parts.append("(" + _fmt_rule(r, nested=True) + ")")
    return ",".join(parts)


def _fmt_rule(r: Rule, nested: bool = False) -> str:
    nm = _LinkNamer()
    nm.seed(_rule_links(r))
    head = f"{r.name}@@ " if r.name else ""
    return f"{head}{_fmt_template(r.lhs, nm, True)} :- {_fmt_template(r.rhs, nm, True)}"


def _rule_links(r: Rule):
    names: set[str] = set()

    def walk(t: Template) -> None:
        for a in t.atoms:
            names.update(a.args)
        for c in t.contexts:
            names.update(c.links)
            if c.bundle:
                names.add(c.bundle)
        for c in t.cells:
            walk(c.content)

    walk(r.lhs)
    walk(r.rhs)
    return names


def pretty_print(x) -> str:
    """Deterministic text form; reparses to a congruent value."""
    from .terms import all_links

    if isinstance(x, SourceProgram):
        return "\n".join(pretty_print(item) for item in x.items)
    if isinstance(x, Rule):
        return _fmt_rule(x) + "."
    if isinstance(x, Process):
        if x.is_empty():
            return ""
        nm = _LinkNamer()
        nm.seed(all_links(x))
        body = _fmt_template(_process_template(x), nm, False)
        return body + "."
    if isinstance(x, Template):
        nm = _LinkNamer()
        return _fmt_template(x, nm, True)
    raise TypeError(f"cannot pretty-print {type(x).__name__}")


def _process_template(p: Process) -> Template:
    from .terms import template_of_process

    return template_of_process(p)
