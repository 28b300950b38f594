"""Core term model: atoms, membranes (cells), rules, and rule templates.

A process is a hierarchical port graph written as a multiset term.  Links are
plain names; a link name may occur at most twice in a process (Link Condition)
and a once-occurring name is a free link.  Links may cross membrane
boundaries, so occurrence counting is always global to the process tree.

Rule sides are templates: processes extended with process contexts
(``$p[X1,...|*B]``), rule contexts (``@r``), atom aggregates (``p(*X)``) and
aggregates of process contexts (``$p[*X1,*X2]``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Union

# Reserved prefix for machine-generated links (desugaring, rewriting, clones).
# User link names never start with "~", so collisions are impossible.
_FRESH_PREFIX = "~"
_fresh_counter = itertools.count(1)


def fresh_link() -> str:
    return f"{_FRESH_PREFIX}{next(_fresh_counter)}"


def is_generated_link(name: str) -> bool:
    return name.startswith(_FRESH_PREFIX)


CONNECTOR = "="


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class Cell:
    """A membrane-wrapped subprocess; the membrane name is optional."""

    name: Union[str, None]
    content: "Process"


@dataclass(frozen=True)
class Process:
    atoms: tuple[Atom, ...] = ()
    cells: tuple[Cell, ...] = ()
    rules: tuple["Rule", ...] = ()

    def is_empty(self) -> bool:
        return not (self.atoms or self.cells or self.rules)

    def item_count(self) -> int:
        n = len(self.atoms) + len(self.rules)
        for c in self.cells:
            n += 1 + c.content.item_count()
        return n


EMPTY = Process()


# --------------------------------------------------------------------------
# Templates (rule sides)


@dataclass(frozen=True)
class ProcessContext:
    """``$p[X1,...,Xn|res]``: wildcard for the non-rule rest of a membrane.

    ``links`` are the names that must occur free in the matched content;
    ``bundle`` names the sequence of remaining free links, or is None for the
    closed residual ``[]``.  Bare ``$p`` is sugar for an implicit bundle whose
    name is derived from ``p`` (so the two occurrences in a rule pair up).
    """

    name: str
    links: tuple[str, ...] = ()
    bundle: Union[str, None] = None
    implicit: bool = False


@dataclass(frozen=True)
class RuleContext:
    name: str


@dataclass(frozen=True)
class Aggregate:
    """``p(*X1,...,*Xn)``: one ``p`` atom per member of the bundles."""

    name: str
    bundles: tuple[str, ...]


@dataclass(frozen=True)
class ContextAggregate:
    """``$p[*X1,...,*Xn]``: one clone of $p's content per bundle member."""

    name: str
    bundles: tuple[str, ...]


@dataclass(frozen=True)
class TemplateCell:
    name: Union[str, None]
    content: "Template"


@dataclass(frozen=True)
class Template:
    atoms: tuple[Atom, ...] = ()
    cells: tuple[TemplateCell, ...] = ()
    contexts: tuple[ProcessContext, ...] = ()
    rule_contexts: tuple[RuleContext, ...] = ()
    aggregates: tuple[Aggregate, ...] = ()
    ctx_aggregates: tuple[ContextAggregate, ...] = ()
    rules: tuple["Rule", ...] = ()

    def is_plain(self) -> bool:
        """True when no template-only constructs occur at any depth."""
        if self.contexts or self.rule_contexts or self.aggregates or self.ctx_aggregates:
            return False
        return all(c.content.is_plain() for c in self.cells)

    def to_process(self) -> Process:
        if not self.is_plain():
            raise ValueError("template contains contexts/aggregates; not a plain process")
        return Process(
            atoms=self.atoms,
            cells=tuple(Cell(c.name, c.content.to_process()) for c in self.cells),
            rules=self.rules,
        )


def template_of_process(p: Process) -> Template:
    return Template(
        atoms=p.atoms,
        cells=tuple(TemplateCell(c.name, template_of_process(c.content)) for c in p.cells),
        rules=p.rules,
    )


@dataclass(frozen=True)
class Rule:
    name: Union[str, None]
    lhs: Template
    rhs: Template


# --------------------------------------------------------------------------
# Link occurrence bookkeeping

# An occurrence is (path, atom_index, port): path is the chain of cell indices
# from the top level down to the membrane holding the atom.
Occurrence = tuple[tuple[int, ...], int, int]


def link_occurrences(p: Process) -> dict[str, list[Occurrence]]:
    occ: dict[str, list[Occurrence]] = {}

    def walk(proc: Process, path: tuple[int, ...]) -> None:
        for ai, atom in enumerate(proc.atoms):
            for pi, link in enumerate(atom.args):
                occ.setdefault(link, []).append((path, ai, pi))
        for ci, cell in enumerate(proc.cells):
            walk(cell.content, path + (ci,))

    walk(p, ())
    return occ


def free_links(p: Process) -> frozenset[str]:
    """Names occurring exactly once in the whole process tree."""
    return frozenset(l for l, os in link_occurrences(p).items() if len(os) == 1)


def rename_links(p: Process, mapping: dict[str, str]) -> Process:
    """Apply a link renaming to every atom port.  Rules are link-closed and
    are carried over untouched."""
    if not mapping:
        return p

    def ren(proc: Process) -> Process:
        atoms = tuple(
            Atom(a.name, tuple(mapping.get(x, x) for x in a.args)) for a in proc.atoms
        )
        cells = tuple(Cell(c.name, ren(c.content)) for c in proc.cells)
        return Process(atoms, cells, proc.rules)

    return ren(p)


def all_links(p: Process) -> frozenset[str]:
    return frozenset(link_occurrences(p))


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    link: str
    count: int
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class LinkConditionError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        details = "; ".join(v.message for v in report.violations)
        super().__init__(f"Link Condition violated: {details}")


def _path_str(path: tuple[int, ...]) -> str:
    return "top" + "".join(f"/cell[{i}]" for i in path)


def validate_link_condition(x: Union[Process, Rule]) -> ValidationReport:
    """Check the Link Condition: at most two occurrences of a link name in a
    process; in a rule, (lhs, rhs) occurrence counts per name must be one of
    (2,0), (0,2), (1,1), (2,2), counting context argument declarations."""
    if isinstance(x, Rule):
        return _validate_rule_links(x)
    viol = []
    for link, occs in sorted(link_occurrences(x).items()):
        if len(occs) > 2:
            where = ", ".join(_path_str(o[0]) for o in occs)
            viol.append(
                Violation(link, len(occs), where, f"link {link} occurs {len(occs)} times ({where})")
            )
    return ValidationReport(tuple(viol))


def template_link_counts(t: Template) -> dict[str, int]:
    """Occurrences of plain link names in a template, counting atom ports and
    process-context argument declarations (bundles are counted separately)."""
    counts: dict[str, int] = {}

    def bump(name: str) -> None:
        counts[name] = counts.get(name, 0) + 1

    def walk(tt: Template) -> None:
        for a in tt.atoms:
            for x in a.args:
                bump(x)
        for ctx in tt.contexts:
            for x in ctx.links:
                bump(x)
        for c in tt.cells:
            walk(c.content)

    walk(t)
    return counts


def template_bundle_counts(t: Template) -> dict[str, int]:
    counts: dict[str, int] = {}

    def bump(name: str) -> None:
        counts[name] = counts.get(name, 0) + 1

    def walk(tt: Template) -> None:
        for ctx in tt.contexts:
            if ctx.bundle is not None:
                bump(ctx.bundle)
        for agg in tt.aggregates:
            for b in agg.bundles:
                bump(b)
        for cagg in tt.ctx_aggregates:
            for b in cagg.bundles:
                bump(b)
        for c in tt.cells:
            walk(c.content)

    walk(t)
    return counts


def _validate_rule_links(rule: Rule) -> ValidationReport:
    viol = []
    lhs = template_link_counts(rule.lhs)
    rhs = template_link_counts(rule.rhs)
    for link in sorted(set(lhs) | set(rhs)):
        pair = (lhs.get(link, 0), rhs.get(link, 0))
        if pair not in ((2, 0), (0, 2), (1, 1), (2, 2)):
            viol.append(
                Violation(
                    link,
                    pair[0] + pair[1],
                    "rule",
                    f"link {link} occurs {pair[0]}x in lhs, {pair[1]}x in rhs",
                )
            )
    lb = template_bundle_counts(rule.lhs)
    rb = template_bundle_counts(rule.rhs)
    for b in sorted(set(lb) | set(rb)):
        pair = (lb.get(b, 0), rb.get(b, 0))
        if pair != (1, 1):
            viol.append(
                Violation(
                    "*" + b,
                    pair[0] + pair[1],
                    "rule",
                    f"bundle *{b} occurs {pair[0]}x in lhs, {pair[1]}x in rhs",
                )
            )
    return ValidationReport(tuple(viol))
