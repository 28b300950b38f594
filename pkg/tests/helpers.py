"""Test oracles and random generators.

The congruence oracle is a plain backtracking isomorphism search over the
membrane tree, independent of the refinement-based canonical labeling it is
used to check.  The generators build arbitrary well-formed processes and
proof structures from a seeded RNG so failures replay deterministically.
"""

from __future__ import annotations

import random

from lmnkit.congruence import canonical_rule_text, normalize_connectors
from lmnkit.proofnet import (
    AX, BANG, CONTR, CUT, DEREL, PAR, TENSOR, WEAK,
    Box, NetCell, ProofStructure,
)
from lmnkit.terms import Atom, Cell, Process, link_occurrences

# --------------------------------------------------------------------------
# Brute-force congruence oracle


def brute_congruent(p: Process, q: Process) -> bool:
    """Backtracking isomorphism search on connector-normalized processes.

    Free links must correspond by name; local links by a consistent
    bijection; membranes recursively as multisets; rules by canonical text.
    """
    p = normalize_connectors(p)
    q = normalize_connectors(q)
    p_free = {l for l, os in link_occurrences(p).items() if len(os) == 1}
    q_free = {l for l, os in link_occurrences(q).items() if len(os) == 1}
    if p_free != q_free:
        return False

    def rules_key(proc):
        return sorted(canonical_rule_text(r) for r in proc.rules)

    def match_link(a: str, b: str, fwd: dict, bwd: dict) -> bool:
        if a in fwd:
            return fwd[a] == b
        if b in bwd:
            return False
        if (a in p_free) != (b in q_free):
            return False
        if a in p_free and a != b:
            return False
        fwd[a] = b
        bwd[b] = a
        return True

    def match_level(pa: Process, qa: Process, fwd: dict, bwd: dict) -> bool:
        if len(pa.atoms) != len(qa.atoms) or len(pa.cells) != len(qa.cells):
            return False
        if rules_key(pa) != rules_key(qa):
            return False

        def try_atoms(i, used, fwd, bwd):
            if i == len(pa.atoms):
                return try_cells(0, set(), fwd, bwd)
            a = pa.atoms[i]
            for j, b in enumerate(qa.atoms):
                if j in used or b.name != a.name or len(b.args) != len(a.args):
                    continue
                fwd2, bwd2 = dict(fwd), dict(bwd)
                if all(match_link(x, y, fwd2, bwd2) for x, y in zip(a.args, b.args)):
                    if try_atoms(i + 1, used | {j}, fwd2, bwd2):
                        fwd.clear(); fwd.update(fwd2)
                        bwd.clear(); bwd.update(bwd2)
                        return True
            return False

        def try_cells(i, used, fwd, bwd):
            if i == len(pa.cells):
                return True
            c = pa.cells[i]
            for j, d in enumerate(qa.cells):
                if j in used or d.name != c.name:
                    continue
                fwd2, bwd2 = dict(fwd), dict(bwd)
                if match_level(c.content, d.content, fwd2, bwd2):
                    if try_cells(i + 1, used | {j}, fwd2, bwd2):
                        fwd.clear(); fwd.update(fwd2)
                        bwd.clear(); bwd.update(bwd2)
                        return True
            return False

        return try_atoms(0, set(), fwd, bwd)

    return match_level(p, q, {}, {})


# --------------------------------------------------------------------------
# Random processes

_NAMES = ["a", "b", "c", "p", "q", "f", "g", "?w", "mark"]
_CELL_NAMES = [None, None, None, "ax", "cut", "m"]


def random_process(rng: random.Random, max_atoms: int = 12,
                   max_depth: int = 3, with_rules: bool = False,
                   connector_rate: float = 0.1) -> Process:
    """A well-formed random process: random membrane tree, random atoms,
    ports paired into local links or left free."""
    levels: list[list] = []

    def build_tree(depth: int):
        node = {"atoms": [], "cells": [], "rules": []}
        levels.append(node)
        if depth < max_depth:
            for _ in range(rng.randint(0, 2)):
                if rng.random() < 0.4:
                    node["cells"].append(
                        (rng.choice(_CELL_NAMES), build_tree(depth + 1)))
        return node

    root = build_tree(0)

    n_atoms = rng.randint(0, max_atoms)
    ports: list[tuple[dict, int, int]] = []
    for _ in range(n_atoms):
        node = rng.choice(levels)
        name = rng.choice(_NAMES)
        arity = rng.randint(0, 3)
        idx = len(node["atoms"])
        node["atoms"].append([name, [None] * arity])
        for pi in range(arity):
            ports.append((node, idx, pi))
    while rng.random() < connector_rate:
        node = rng.choice(levels)
        idx = len(node["atoms"])
        node["atoms"].append(["=", [None, None]])
        ports.append((node, idx, 0))
        ports.append((node, idx, 1))

    rng.shuffle(ports)
    counter = [0]

    def fresh(prefix):
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    while len(ports) >= 2 and rng.random() < 0.8:
        a = ports.pop()
        b = ports.pop()
        link = fresh("L")
        a[0]["atoms"][a[1]][1][a[2]] = link
        b[0]["atoms"][b[1]][1][b[2]] = link
    for node, idx, pi in ports:
        node["atoms"][idx][1][pi] = fresh("F")

    if with_rules and rng.random() < 0.3:
        from lmnkit.parser import parse_rule

        node = rng.choice(levels)
        node["rules"].append(parse_rule("tick(X,Y) :- tock(X),tack(Y)."))

    def freeze(node) -> Process:
        return Process(
            tuple(Atom(n, tuple(args)) for n, args in node["atoms"]),
            tuple(Cell(name, freeze(sub)) for name, sub in node["cells"]),
            tuple(node["rules"]),
        )

    return freeze(root)


def shuffle_process(rng: random.Random, p: Process) -> Process:
    """A congruent variant: permuted multisets and renamed local links."""
    occ = link_occurrences(p)
    locals_ = [l for l, os in occ.items() if len(os) == 2]
    renaming = {l: f"R{i}_{rng.randint(0, 999)}" for i, l in enumerate(locals_)}

    def walk(proc: Process) -> Process:
        atoms = [Atom(a.name, tuple(renaming.get(x, x) for x in a.args))
                 for a in proc.atoms]
        rng.shuffle(atoms)
        cells = [Cell(c.name, walk(c.content)) for c in proc.cells]
        rng.shuffle(cells)
        rules = list(proc.rules)
        rng.shuffle(rules)
        return Process(tuple(atoms), tuple(cells), tuple(rules))

    return walk(p)


# --------------------------------------------------------------------------
# Random proof structures


def random_structure(rng: random.Random, max_cells: int = 8,
                     box_depth: int = 2) -> ProofStructure:
    counter = [0]

    def wire():
        counter[0] += 1
        return f"w{counter[0]}"

    def cid():
        counter[0] += 1
        return f"c{counter[0]}"

    def build(budget: int, depth: int) -> ProofStructure:
        cells: list[NetCell] = []
        boxes: list[Box] = []
        producers: list[str] = []

        def add_source():
            if rng.random() < 0.7:
                a, b = wire(), wire()
                cells.append(NetCell(cid(), AX, (), (a, b)))
                producers.extend((a, b))
            else:
                a = wire()
                cells.append(NetCell(cid(), WEAK, (), (a,)))
                producers.append(a)

        add_source()
        steps = rng.randint(0, budget)
        for _ in range(steps):
            choice = rng.random()
            if choice < 0.25 or len(producers) < 2:
                if choice < 0.12 and depth < box_depth:
                    inner = build(max(1, budget // 2), depth + 1)
                    if not inner.conclusions:
                        add_source()
                        continue
                    feed = rng.choice(inner.conclusions)
                    out = wire()
                    bang = NetCell(cid(), BANG, (feed,), (out,))
                    net = ProofStructure(
                        inner.cells + (bang,), inner.boxes,
                        tuple(w for w in inner.conclusions if w != feed) + (out,))
                    box = Box(cid(), net, out,
                              tuple(w for w in net.conclusions if w != out))
                    boxes.append(box)
                    producers.extend(net.conclusions)
                else:
                    add_source()
            elif choice < 0.45:
                a = producers.pop(rng.randrange(len(producers)))
                out = wire()
                cells.append(NetCell(cid(), DEREL, (a,), (out,)))
                producers.append(out)
            elif choice < 0.85:
                a = producers.pop(rng.randrange(len(producers)))
                b = producers.pop(rng.randrange(len(producers)))
                kind = rng.choice((TENSOR, PAR, CONTR))
                out = wire()
                cells.append(NetCell(cid(), kind, (a, b), (out,)))
                producers.append(out)
            else:
                a = producers.pop(rng.randrange(len(producers)))
                b = producers.pop(rng.randrange(len(producers)))
                cells.append(NetCell(cid(), CUT, (a, b), ()))
        return ProofStructure(tuple(cells), tuple(boxes), tuple(producers))

    return build(max_cells, 0)


# --------------------------------------------------------------------------
# Independent switching-acyclicity oracle (recursive, no graph machinery
# shared with the library implementation)


def oracle_dr(structure: ProofStructure) -> bool:
    def level_ok(net: ProofStructure) -> bool:
        # node for each cell/box; wire endpoints resolved to node indices
        names: list[str] = []
        produce: dict[str, int] = {}
        consume: dict[str, int] = {}
        switched: list[tuple[int, str, str]] = []
        for c in net.cells:
            names.append(c.id)
            i = len(names) - 1
            for w in c.outputs:
                produce[w] = i
            for w in c.inputs:
                consume[w] = i
            if c.kind in (PAR, CONTR):
                switched.append((i, c.inputs[0], c.inputs[1]))
        for b in net.boxes:
            names.append(b.id)
            i = len(names) - 1
            for w in (b.principal, *b.auxiliaries):
                produce[w] = i

        base_edges = [
            (produce[w], consume[w], w)
            for w in produce
            if w in consume
        ]

        def acyclic(edges) -> bool:
            # a multigraph is a forest iff #edges == #nodes - #components
            adj: dict[int, list[int]] = {i: [] for i in range(len(names))}
            for u, v, _ in edges:
                adj[u].append(v)
                adj[v].append(u)
            seen: set[int] = set()
            components = 0
            for start in range(len(names)):
                if start in seen:
                    continue
                components += 1
                stack = [start]
                seen.add(start)
                while stack:
                    node = stack.pop()
                    for other in adj[node]:
                        if other not in seen:
                            seen.add(other)
                            stack.append(other)
            return len(edges) == len(names) - components

        def rec(i, dropped):
            if i == len(switched):
                edges = [e for e in base_edges if e[2] not in dropped]
                return acyclic(edges)
            _, left, right = switched[i]
            return rec(i + 1, dropped | {right}) and rec(i + 1, dropped | {left})

        return rec(0, set())

    if not level_ok(structure):
        return False
    return all(oracle_dr(b.net) for b in structure.boxes)
