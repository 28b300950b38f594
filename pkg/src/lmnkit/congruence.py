"""Structural congruence: connector normalization and canonical forms.

Two processes are congruent when they denote the same hierarchical port
graph: multisets of atoms/cells, alpha-renamable local links, and the
connector laws (a self-loop ``X=X`` vanishes; a connector fuses two links
when it can reach, moving across membranes where the side condition allows,
the level of an atom holding one of them).

Canonical forms are exact: iterative port-aware color refinement over the
whole hierarchy with backtracking individualization on ties.  Equality of
canonical keys is equality up to congruence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .terms import (
    Atom,
    Cell,
    CONNECTOR,
    Process,
    Rule,
    Template,
    TemplateCell,
    fresh_link,
    link_occurrences,
)

# --------------------------------------------------------------------------
# Mutable working tree


class _MutProc:
    __slots__ = ("atoms", "cells", "rules")

    def __init__(self, atoms, cells, rules):
        self.atoms: list[list] = atoms          # [name, [links]]
        self.cells: list[list] = cells          # [name, _MutProc]
        self.rules = rules


def _to_mut(p: Process) -> _MutProc:
    return _MutProc(
        [[a.name, list(a.args)] for a in p.atoms],
        [[c.name, _to_mut(c.content)] for c in p.cells],
        list(p.rules),
    )


def _freeze(m: _MutProc) -> Process:
    return Process(
        tuple(Atom(n, tuple(args)) for n, args in m.atoms),
        tuple(Cell(n, _freeze(sub)) for n, sub in m.cells),
        tuple(m.rules),
    )


def _level(m: _MutProc, path: tuple[int, ...]) -> _MutProc:
    for i in path:
        m = m.cells[i][1]
    return m


def _mut_occurrences(m: _MutProc):
    occ: dict[str, list] = {}

    def walk(node: _MutProc, path):
        for ai, (_, args) in enumerate(node.atoms):
            for pi, link in enumerate(args):
                occ.setdefault(link, []).append((path, ai, pi))
        for ci, (_, sub) in enumerate(node.cells):
            walk(sub, path + (ci,))

    walk(m, ())
    return occ


# --------------------------------------------------------------------------
# Connector normalization (E7-E10)


def normalize_connectors(p: Process) -> Process:
    """Eliminate ``=`` atoms wherever the congruence laws allow.

    A connector between two free links of the whole process is kept (there
    is no atom to absorb it), as is the degenerate stuck case where the
    connector sits inside a membrane that neither endpoint's other
    occurrence can legally be reached from.
    """
    m = _to_mut(p)
    changed = True
    while changed:
        changed = False
        occ = _mut_occurrences(m)
        for path, ai, u, v in _connectors(m):
            if u == v:
                _remove_atom(m, path, ai)
                changed = True
                break
            other_u = _other_occurrence(occ, u, path, ai)
            other_v = _other_occurrence(occ, v, path, ai)
            if other_u is None and other_v is None:
                continue  # fuses two interface links; keep
            target = _absorption_level(m, path, other_u, other_v)
            if target is None:
                continue  # stuck behind membranes
            if other_u is None:
                tpath, tai, tpi = other_v
                _level(m, tpath).atoms[tai][1][tpi] = u
            elif other_v is None:
                tpath, tai, tpi = other_u
                _level(m, tpath).atoms[tai][1][tpi] = v
            else:
                tpath, tai, tpi = other_v
                _level(m, tpath).atoms[tai][1][tpi] = u
            _remove_atom(m, path, ai)
            changed = True
            break
    return _freeze(m)


def _connectors(m: _MutProc):
    out = []

    def walk(node: _MutProc, path):
        for ai, (name, args) in enumerate(node.atoms):
            if name == CONNECTOR and len(args) == 2:
                out.append((path, ai, args[0], args[1]))
        for ci, (_, sub) in enumerate(node.cells):
            walk(sub, path + (ci,))

    walk(m, ())
    return out


def _remove_atom(m: _MutProc, path, ai):
    _level(m, path).atoms.pop(ai)


def _other_occurrence(occ, link, cpath, cai):
    for o in occ.get(link, ()):
        if not (o[0] == cpath and o[1] == cai):
            return o
    return None


def _absorption_level(m, start, other_u, other_v):
    """BFS over membrane levels the connector may legally move to (E10);
    return a level co-located with one endpoint's atom (E9), or None."""
    tu = other_u[0] if other_u else None
    tv = other_v[0] if other_v else None

    def inside(target, level):
        # does the other occurrence lie within the membrane at `level`?
        return target is not None and target[: len(level)] == level

    seen = {start}
    frontier = [start]
    while frontier:
        level = frontier.pop(0)
        if level == tu or level == tv:
            return level
        moves = []
        if level:
            moves.append(level[:-1])
        node = _level(m, level)
        moves.extend(level + (ci,) for ci in range(len(node.cells)))
        for nxt in moves:
            if nxt in seen:
                continue
            # side condition of E10 at the membrane being crossed
            membrane = nxt if len(nxt) > len(level) else level
            if inside(tu, membrane) != inside(tv, membrane):
                seen.add(nxt)
                frontier.append(nxt)
    return None


# --------------------------------------------------------------------------
# Canonical forms

_UP = ("^",)
_DOWN = ("v",)


def _build_graph(p: Process):
    """Flatten the hierarchy into a vertex-colored, edge-labeled graph.

    Vertices: a root, one per membrane, one per atom, one per rule (colored
    by canonical rule text), and one terminal per free link (colored by the
    link's name, which is interface and must survive canonicalization).
    """
    invs: list[tuple] = [("root",)]
    adj: list[list] = [[]]
    atom_vertex: dict[tuple, int] = {}

    def add_vertex(inv) -> int:
        invs.append(inv)
        adj.append([])
        return len(invs) - 1

    def walk(proc: Process, parent: int, path):
        for ai, atom in enumerate(proc.atoms):
            v = add_vertex(("a", atom.name, len(atom.args)))
            atom_vertex[(path, ai)] = v
            adj[v].append((_UP, parent))
            adj[parent].append((_DOWN, v))
        for rule in proc.rules:
            v = add_vertex(("r", canonical_rule_text(rule)))
            adj[v].append((_UP, parent))
            adj[parent].append((_DOWN, v))
        for ci, cell in enumerate(proc.cells):
            v = add_vertex(("m", cell.name or ""))
            adj[v].append((_UP, parent))
            adj[parent].append((_DOWN, v))
            walk(cell.content, v, path + (ci,))

    walk(p, 0, ())

    def port(path, ai, pi) -> int:
        # connector arguments are unordered (E8)
        name = _atom_name(p, path, ai)
        return 0 if name == CONNECTOR else pi + 1

    for link, occs in link_occurrences(p).items():
        if len(occs) == 2:
            (p1, a1, i1), (p2, a2, i2) = occs
            v1, v2 = atom_vertex[(p1, a1)], atom_vertex[(p2, a2)]
            l1, l2 = port(p1, a1, i1), port(p2, a2, i2)
            adj[v1].append((("l", l1, l2), v2))
            adj[v2].append((("l", l2, l1), v1))
        else:
            (p1, a1, i1) = occs[0]
            v1 = atom_vertex[(p1, a1)]
            t = add_vertex(("f", link))
            l1 = port(p1, a1, i1)
            adj[v1].append((("l", l1, 0), t))
            adj[t].append((("l", 0, l1), v1))
    return invs, adj


def _atom_name(p: Process, path, ai) -> str:
    for i in path:
        p = p.cells[i].content
    return p.atoms[ai].name


def _refine(colors: list[int], adj) -> list[int]:
    n = len(colors)
    while True:
        sigs = [
            (colors[v], tuple(sorted((lab, colors[u]) for lab, u in adj[v])))
            for v in range(n)
        ]
        order = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [order[s] for s in sigs]
        if new == colors:
            return new
        colors = new


def _first_tie(colors: list[int]) -> Union[list[int], None]:
    by_color: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        by_color.setdefault(c, []).append(v)
    ties = [vs for vs in by_color.values() if len(vs) > 1]
    if not ties:
        return None
    return min(ties, key=lambda vs: (len(vs), colors[vs[0]]))


def _canonical_order(invs, adj) -> list[int]:
    base = {inv: i for i, inv in enumerate(sorted(set(invs)))}
    colors = _refine([base[iv] for iv in invs], adj)

    def search(colors):
        tie = _first_tie(colors)
        if tie is None:
            return _render(invs, adj, colors), colors
        best = None
        for v in tie:
            branched = [c * 2 for c in colors]
            branched[v] -= 1
            refined = _refine(branched, adj)
            cand = search(refined)
            if best is None or cand[0] < best[0]:
                best = cand
        return best

    _, final = search(colors)
    return final


def _render(invs, adj, colors):
    n = len(invs)
    rank = [0] * n
    for v in range(n):
        rank[v] = colors[v]
    return tuple(
        (invs[v], tuple(sorted((lab, rank[u]) for lab, u in adj[v])))
        for v in sorted(range(n), key=lambda v: rank[v])
    )


def canonical_key(p: Process) -> str:
    """Identity string: equal iff the (connector-normalized) processes are
    congruent."""
    q = normalize_connectors(p)
    invs, adj = _build_graph(q)
    colors = _canonical_order(invs, adj)
    return repr(_render(invs, adj, colors))


@dataclass(frozen=True)
class CanonicalForm:
    key: str
    text: str
    process: Process = field(compare=False, hash=False)

    def __eq__(self, other):
        return isinstance(other, CanonicalForm) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


def canonical_form(p: Process) -> CanonicalForm:
    """Canonical key plus a canonically reordered, pretty-printable process."""
    from .parser import pretty_print

    q = normalize_connectors(p)
    invs, adj = _build_graph(q)
    colors = _canonical_order(invs, adj)
    key = repr(_render(invs, adj, colors))
    canon = _reorder(q, colors)
    return CanonicalForm(key=key, text=pretty_print(canon), process=canon)


def _reorder(p: Process, colors) -> Process:
    """Rebuild the process with items ordered by canonical rank and local
    links renamed in canonical first-use order."""
    counter = [0]
    rename: dict[str, str] = {}
    occs = link_occurrences(p)

    def link_name(x: str) -> str:
        if len(occs[x]) == 1:
            return x  # free links keep their interface name
        if x not in rename:
            counter[0] += 1
            rename[x] = f"~c{counter[0]}"
        return rename[x]

    # ranks follow the vertex construction order of _build_graph
    rank_iter = iter(colors[1:])

    def walk(proc: Process) -> Process:
        atom_ranks = [next(rank_iter) for _ in proc.atoms]
        rule_ranks = [next(rank_iter) for _ in proc.rules]
        cell_ranks = []
        sub_conv = []
        for cell in proc.cells:
            cell_ranks.append(next(rank_iter))
            sub_conv.append(walk(cell.content))
        atoms = [proc.atoms[i] for i in sorted(range(len(proc.atoms)), key=lambda i: atom_ranks[i])]
        atoms = [Atom(a.name, tuple(link_name(x) for x in a.args)) for a in atoms]
        order = sorted(range(len(proc.cells)), key=lambda i: cell_ranks[i])
        cells = tuple(Cell(proc.cells[i].name, sub_conv[i]) for i in order)
        rules = tuple(
            proc.rules[i]
            for i in sorted(range(len(proc.rules)), key=lambda i: rule_ranks[i])
        )
        return Process(tuple(atoms), cells, rules)

    return walk(p)


def congruent(p: Process, q: Process) -> bool:
    """True iff p and q are structurally congruent (E1-E10)."""
    return canonical_key(p) == canonical_key(q)


# --------------------------------------------------------------------------
# Canonical rule text (rules compare syntactically, modulo item order and
# link naming)


def canonical_rule_text(r: Rule) -> str:
    from .parser import pretty_print

    normal = _normalize_rule(r)
    return pretty_print(normal)


def _template_sort_key(t: Template):
    return (
        tuple(sorted((a.name, len(a.args)) for a in t.atoms)),
        tuple(sorted((c.name or "", _template_sort_key(c.content)) for c in t.cells)),
        tuple(sorted((c.name, c.links, c.bundle or "") for c in t.contexts)),
        tuple(sorted(rc.name for rc in t.rule_contexts)),
        tuple(sorted((a.name, a.bundles) for a in t.aggregates)),
        tuple(sorted((a.name, a.bundles) for a in t.ctx_aggregates)),
        tuple(sorted(canonical_rule_text(rr) for rr in t.rules)),
    )


def _normalize_rule(r: Rule) -> Rule:
    rename: dict[str, str] = {}

    def link(x: str) -> str:
        if x not in rename:
            rename[x] = f"X{len(rename) + 1}"
        return rename[x]

    def order_template(t: Template) -> Template:
        atoms = tuple(sorted(t.atoms, key=lambda a: (a.name, len(a.args))))
        cells = tuple(
            sorted(t.cells, key=lambda c: (c.name or "", _template_sort_key(c.content)))
        )
        contexts = tuple(sorted(t.contexts, key=lambda c: c.name))
        rcs = tuple(sorted(t.rule_contexts, key=lambda c: c.name))
        aggs = tuple(sorted(t.aggregates, key=lambda a: (a.name, a.bundles)))
        caggs = tuple(sorted(t.ctx_aggregates, key=lambda a: (a.name, a.bundles)))
        rules = tuple(sorted(t.rules, key=canonical_rule_text))
        return Template(
            atoms,
            tuple(TemplateCell(c.name, order_template(c.content)) for c in cells),
            contexts,
            rcs,
            aggs,
            caggs,
            rules,
        )

    def rename_template(t: Template) -> Template:
        from .terms import ProcessContext, Aggregate, ContextAggregate

        atoms = tuple(Atom(a.name, tuple(link(x) for x in a.args)) for a in t.atoms)
        cells = tuple(TemplateCell(c.name, rename_template(c.content)) for c in t.cells)
        contexts = tuple(
            ProcessContext(
                c.name,
                tuple(link(x) for x in c.links),
                link(c.bundle) if c.bundle else None,
                c.implicit,
            )
            for c in t.contexts
        )
        aggs = tuple(Aggregate(a.name, tuple(link(b) for b in a.bundles)) for a in t.aggregates)
        caggs = tuple(
            ContextAggregate(a.name, tuple(link(b) for b in a.bundles))
            for a in t.ctx_aggregates
        )
        return Template(atoms, cells, contexts, t.rule_contexts, aggs, caggs, t.rules)

    lhs = rename_template(order_template(r.lhs))
    rhs = rename_template(order_template(r.rhs))
    return Rule(r.name, lhs, rhs)
