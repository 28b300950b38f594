"""Built-in membrane clone/delete steps, activated by the atoms
``mell.copy/8`` and ``mell.delete/2``.

``mell.copy(X,A1,A2,A3,B1,B2,C1,C2)`` clones the cell reached through its
principal link X.  Alongside it match a cell with free links exactly
{A1,A2,A3} (replicated once per auxiliary link of the cloned cell, joining
the two clone images of that link and its original outer endpoint) and a
cell with free links exactly {B1,B2} (replicated twice, wiring each clone's
principal link to C1 respectively C2).  ``mell.delete(X,A)`` removes the
cell reached through X and caps each auxiliary link with one replica of the
{A}-cell.  Both consume the API atom and the argument cells, dissolve the
replica membranes, and connector-normalize the result.

A user rule emits the API atom in one reduction step; the built-in fires as
the next step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congruence import normalize_connectors
from .matching import replicate_content
from .terms import (
    Atom,
    Cell,
    LinkConditionError,
    Process,
    fresh_link,
    link_occurrences,
    rename_links,
    validate_link_condition,
)

COPY_NAME = "mell.copy"
DELETE_NAME = "mell.delete"
_RESERVED = {"nlmem.copy", "nlmem.kill"}


class ApiCallError(ValueError):
    pass


@dataclass(frozen=True)
class PendingApiCall:
    kind: str                     # "copy" | "delete"
    level: tuple[int, ...]
    atom_index: int
    args: tuple[str, ...]

    @property
    def label(self) -> str:
        return COPY_NAME if self.kind == "copy" else DELETE_NAME


def pending_calls(host: Process) -> list[PendingApiCall]:
    """API atoms awaiting their built-in step, in traversal order."""
    found: list[PendingApiCall] = []

    def walk(p: Process, path):
        for ai, atom in enumerate(p.atoms):
            if atom.name in _RESERVED:
                raise ApiCallError(
                    f"{atom.name} is reserved and not provided; use mell.copy/mell.delete")
            if atom.name == COPY_NAME and len(atom.args) == 8:
                found.append(PendingApiCall("copy", path, ai, atom.args))
            elif atom.name == DELETE_NAME and len(atom.args) == 2:
                found.append(PendingApiCall("delete", path, ai, atom.args))
        for ci, cell in enumerate(p.cells):
            walk(cell.content, path + (ci,))

    walk(host, ())
    return found


def fire(host: Process, call: PendingApiCall) -> Process:
    if call.kind == "copy":
        return fire_mell_copy(host, call)
    return fire_mell_delete(host, call)


def _subprocess(p: Process, path):
    for i in path:
        p = p.cells[i].content
    return p


def _crossing_links(cell: Cell) -> list[str]:
    """Links with exactly one endpoint inside the cell subtree, in
    first-occurrence order."""
    occ = link_occurrences(cell.content)
    return [l for l, os in occ.items() if len(os) == 1]


def _cell_with_rules(cell: Cell) -> bool:
    def walk(p: Process) -> bool:
        if p.rules:
            return True
        return any(walk(c.content) for c in p.cells)

    return walk(cell.content)


def _resolve_cell(host: Process, call: PendingApiCall, links: tuple[str, ...],
                  role: str, taken: set[int]) -> int:
    """Find the sibling cell the given API argument links lead into."""
    occ = link_occurrences(host)
    level_len = len(call.level)
    found: set[int] = set()
    for link in links:
        entries = [o for o in occ.get(link, ())
                   if not (o[0] == call.level and o[1] == call.atom_index)]
        if len(entries) != 1:
            raise ApiCallError(f"{call.label}: argument link {link} is dangling")
        path = entries[0][0]
        if len(path) <= level_len or path[:level_len] != call.level:
            raise ApiCallError(
                f"{call.label}: link {link} does not enter a sibling membrane")
        found.add(path[level_len])
    if len(found) != 1:
        raise ApiCallError(
            f"{call.label}: links {', '.join(links)} enter different membranes")
    ci = found.pop()
    if ci in taken:
        raise ApiCallError(
            f"{call.label}: the {role} membrane coincides with another argument's")
    taken.add(ci)
    return ci


def deep_clone(cell: Cell) -> tuple[Cell, dict[str, str]]:
    """Structurally congruent copy with every link freshened; returns the
    clone and the original->clone correspondence of its crossing links."""
    occ = link_occurrences(cell.content)
    mapping = {link: fresh_link() for link in occ}
    clone = Cell(cell.name, rename_links(cell.content, mapping))
    crossing = {l: mapping[l] for l, os in occ.items() if len(os) == 1}
    return clone, crossing


def fire_mell_copy(host: Process, call: PendingApiCall) -> Process:
    x, a1, a2, a3, b1, b2, c1, c2 = call.args
    taken: set[int] = set()
    pi = _resolve_cell(host, call, (x,), "principal", taken)
    ai_ = _resolve_cell(host, call, (a1, a2, a3), "auxiliary-handler", taken)
    bi = _resolve_cell(host, call, (b1, b2), "principal-handler", taken)
    level = _subprocess(host, call.level)
    pcell, acell, bcell = level.cells[pi], level.cells[ai_], level.cells[bi]

    for cell, names, expect in ((acell, (a1, a2, a3), "a"), (bcell, (b1, b2), "b")):
        crossing = set(_crossing_links(cell))
        if crossing != set(names):
            raise ApiCallError(
                f"{call.label}: handler membrane has free links "
                f"{sorted(crossing)}, expected {sorted(names)}")
        if _cell_with_rules(cell):
            raise ApiCallError(f"{call.label}: handler membrane contains rules")

    p_crossing = _crossing_links(pcell)
    if x not in p_crossing:
        raise ApiCallError(f"{call.label}: principal link {x} does not cross "
                           "the membrane boundary")
    aux = [l for l in p_crossing if l != x]

    clone1, map1 = deep_clone(pcell)
    clone2, map2 = deep_clone(pcell)

    new_atoms: list[Atom] = []
    new_cells: list[Cell] = [clone1, clone2]
    new_rules: list = []

    def splice(proc: Process) -> None:
        new_atoms.extend(proc.atoms)
        new_cells.extend(proc.cells)
        new_rules.extend(proc.rules)

    for z in aux:
        splice(replicate_content(acell.content, {a1: map1[z], a2: map2[z], a3: z}))
    splice(replicate_content(bcell.content, {b1: map1[x], b2: c1}))
    splice(replicate_content(bcell.content, {b1: map2[x], b2: c2}))

    return _commit(host, call, {pi, ai_, bi}, new_atoms, new_cells, new_rules)


def fire_mell_delete(host: Process, call: PendingApiCall) -> Process:
    x, a = call.args
    taken: set[int] = set()
    pi = _resolve_cell(host, call, (x,), "principal", taken)
    ai_ = _resolve_cell(host, call, (a,), "auxiliary-handler", taken)
    level = _subprocess(host, call.level)
    pcell, acell = level.cells[pi], level.cells[ai_]

    crossing = set(_crossing_links(acell))
    if crossing != {a}:
        raise ApiCallError(
            f"{call.label}: handler membrane has free links {sorted(crossing)}, "
            f"expected [{a!r}]")
    if _cell_with_rules(acell):
        raise ApiCallError(f"{call.label}: handler membrane contains rules")

    p_crossing = _crossing_links(pcell)
    if x not in p_crossing:
        raise ApiCallError(f"{call.label}: principal link {x} does not cross "
                           "the membrane boundary")
    aux = [l for l in p_crossing if l != x]

    new_atoms: list[Atom] = []
    new_cells: list[Cell] = []
    new_rules: list = []
    for z in aux:
        repl = replicate_content(acell.content, {a: z})
        new_atoms.extend(repl.atoms)
        new_cells.extend(repl.cells)
        new_rules.extend(repl.rules)

    return _commit(host, call, {pi, ai_}, new_atoms, new_cells, new_rules)


def _commit(host: Process, call: PendingApiCall, dropped_cells: set[int],
            new_atoms, new_cells, new_rules) -> Process:
    def walk(p: Process, depth: int) -> Process:
        if depth == len(call.level):
            atoms = tuple(a for i, a in enumerate(p.atoms) if i != call.atom_index)
            cells = tuple(c for i, c in enumerate(p.cells) if i not in dropped_cells)
            return Process(
                atoms + tuple(new_atoms),
                cells + tuple(new_cells),
                p.rules + tuple(new_rules),
            )
        idx = call.level[depth]
        cells = list(p.cells)
        cells[idx] = Cell(cells[idx].name, walk(cells[idx].content, depth + 1))
        return Process(p.atoms, tuple(cells), p.rules)

    result = normalize_connectors(walk(host, 0))
    report = validate_link_condition(result)
    if not report.ok:
        raise LinkConditionError(report)
    return result
