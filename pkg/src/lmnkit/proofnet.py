"""MELL proof structures: model, correctness checking, and the translation
to and from engine processes.

A proof structure is a directed multigraph of cells (ax, cut, tensor, par,
?d, ?w, ?c, !) and promotion boxes.  Correctness is the switching
criterion: for every way of cutting one input of each par and ?c cell at a
level (boxes contracted to single nodes), the undirected graph is acyclic,
and box contents are correct recursively.

The process translation follows the membrane encoding: commutative ports
become membranes (``ax{+A,+B}``, ``cut{+A,+B}``, the ?c input pair),
ordered ports become atom argument positions, boxes become membranes, and
every top-level conclusion is capped by a ``formula`` atom.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Union

from .terms import Atom, Cell, Process

AX = "ax"
CUT = "cut"
TENSOR = "tensor"
PAR = "par"
DEREL = "derel"
WEAK = "weak"
CONTR = "contr"
BANG = "bang"

KINDS = (AX, CUT, TENSOR, PAR, DEREL, WEAK, CONTR, BANG)

# kind -> (#inputs, #outputs, inputs ordered?)
ARITY = {
    AX: (0, 2, False),
    CUT: (2, 0, False),
    TENSOR: (2, 1, True),
    PAR: (2, 1, True),
    DEREL: (1, 1, False),
    WEAK: (0, 1, False),
    CONTR: (2, 1, False),
    BANG: (1, 1, False),
}

SWITCHED = (PAR, CONTR)

DEFAULT_SWITCHING_LIMIT = 20


class NetError(ValueError):
    pass


class DecodeError(NetError):
    pass


class SwitchingLimitExceeded(NetError):
    pass


@dataclass(frozen=True)
class NetCell:
    id: str
    kind: str
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Box:
    id: str
    net: "ProofStructure"
    principal: str
    auxiliaries: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProofStructure:
    cells: tuple[NetCell, ...] = ()
    boxes: tuple[Box, ...] = ()
    conclusions: tuple[str, ...] = ()

    def cell_count(self) -> int:
        return len(self.cells) + sum(b.net.cell_count() for b in self.boxes)

    def kind_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.cells:
            counts[c.kind] = counts.get(c.kind, 0) + 1
        for b in self.boxes:
            for k, n in b.net.kind_counts().items():
                counts[k] = counts.get(k, 0) + n
        return counts


@dataclass(frozen=True)
class NetReport:
    errors: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


# --------------------------------------------------------------------------
# Validation


def validate_structure(s: ProofStructure) -> NetReport:
    """Port arities, single-use wiring, box door discipline, and per-level
    directed acyclicity (boxes contracted)."""
    errors: list[str] = []
    produced: dict[str, int] = {}
    consumed: dict[str, int] = {}

    def walk(net: ProofStructure, where: str) -> None:
        ids = set()
        for c in net.cells:
            if c.id in ids:
                errors.append(f"{where}: duplicate cell id {c.id}")
            ids.add(c.id)
            if c.kind not in ARITY:
                errors.append(f"{where}: unknown cell kind {c.kind}")
                continue
            n_in, n_out, _ = ARITY[c.kind]
            if len(c.inputs) != n_in or len(c.outputs) != n_out:
                errors.append(
                    f"{where}: cell {c.id} ({c.kind}) has arity "
                    f"{len(c.inputs)}/{len(c.outputs)}, expected {n_in}/{n_out}")
            for w in c.inputs:
                consumed[w] = consumed.get(w, 0) + 1
            for w in c.outputs:
                produced[w] = produced.get(w, 0) + 1
        for b in net.boxes:
            if b.id in ids:
                errors.append(f"{where}: duplicate box id {b.id}")
            ids.add(b.id)
            doors = set(b.net.conclusions)
            if b.principal not in doors:
                errors.append(f"{where}: box {b.id} principal {b.principal} is "
                              "not a conclusion of its contents")
            if set(b.auxiliaries) | {b.principal} != doors or b.principal in b.auxiliaries:
                errors.append(f"{where}: box {b.id} doors do not partition its "
                              "contents' conclusions")
            bangs = [c for c in b.net.cells
                     if c.kind == BANG and b.principal in c.outputs]
            if not bangs:
                errors.append(f"{where}: box {b.id} principal door is not "
                              "produced by a top-level promotion cell")
            inner_produced, inner_consumed = _wire_uses(b.net)
            inner_dangling = {w for w in inner_produced if w not in inner_consumed}
            if inner_dangling != doors:
                errors.append(
                    f"{where}: box {b.id} declares doors {sorted(doors)} but its "
                    f"contents dangle {sorted(inner_dangling)}")
            into_box = set(inner_consumed) - set(inner_produced)
            if into_box:
                errors.append(
                    f"{where}: wires {sorted(into_box)} flow into box {b.id}")
            walk(b.net, f"{where}/box[{b.id}]")

    walk(s, "net")

    for w, n in produced.items():
        if n > 1:
            errors.append(f"wire {w} produced {n} times")
    for w, n in consumed.items():
        if n > 1:
            errors.append(f"wire {w} consumed {n} times")
        if w not in produced:
            errors.append(f"wire {w} consumed but never produced")
    dangling = {w for w in produced if w not in consumed}
    if dangling != set(s.conclusions):
        errors.append(
            f"declared conclusions {sorted(s.conclusions)} != dangling wires "
            f"{sorted(dangling)}")
    if len(set(s.conclusions)) != len(s.conclusions):
        errors.append("duplicate conclusion wires")

    def check_dag(net: ProofStructure, where: str) -> None:
        nodes, edges = _level_graph(net)
        succ: dict[str, list[str]] = {n: [] for n in nodes}
        indeg = {n: 0 for n in nodes}
        for u, v, _ in edges:
            succ[u].append(v)
            indeg[v] += 1
        queue = [n for n, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            n = queue.pop()
            seen += 1
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    queue.append(m)
        if seen != len(nodes):
            errors.append(f"{where}: directed cycle among cells/boxes")
        for b in net.boxes:
            check_dag(b.net, f"{where}/box[{b.id}]")

    if not errors:
        check_dag(s, "net")
    return NetReport(tuple(errors))


# --------------------------------------------------------------------------
# Switchings and the correctness criterion


def _level_graph(s: ProofStructure):
    """Nodes and directed wire edges at this level, boxes contracted.

    Edges are (producer_node, consumer_node, wire); wires with an endpoint
    outside this level dangle and produce no edge.
    """
    producer: dict[str, str] = {}
    consumer: dict[str, str] = {}
    nodes: list[str] = []
    for c in s.cells:
        nodes.append(c.id)
        for w in c.outputs:
            producer[w] = c.id
        for w in c.inputs:
            consumer[w] = c.id
    for b in s.boxes:
        nodes.append(b.id)
        for w in (b.principal, *b.auxiliaries):
            producer[w] = b.id
    edges = [
        (producer[w], consumer[w], w)
        for w in producer
        if w in consumer
    ]
    return nodes, edges


def _switched_cells(s: ProofStructure) -> list[NetCell]:
    return [c for c in s.cells if c.kind in SWITCHED]


def enumerate_switchings(
    s: ProofStructure, limit: int = DEFAULT_SWITCHING_LIMIT
) -> Iterator[tuple[dict[str, str], list[str], list[tuple[str, str, str]]]]:
    """All switching graphs at this level: one per choice of kept input for
    each par/?c cell.  Yields (choices, nodes, undirected edges)."""
    switched = _switched_cells(s)
    if len(switched) > limit:
        raise SwitchingLimitExceeded(
            f"{len(switched)} switched cells exceed the limit of {limit}; "
            "use a smaller net")
    nodes, edges = _level_graph(s)
    for keep in itertools.product(("left", "right"), repeat=len(switched)):
        choices = {c.id: side for c, side in zip(switched, keep)}
        dropped_wires = {
            c.inputs[1] if side == "left" else c.inputs[0]
            for c, side in zip(switched, keep)
        }
        kept_edges = [e for e in edges if e[2] not in dropped_wires]
        yield choices, nodes, kept_edges


def _find_cycle(nodes: list[str], edges) -> Union[list[str], None]:
    """Undirected cycle (as a node list) via union-find; parallel edges and
    self-loops count as cycles."""
    parent = {n: n for n in nodes}

    def root(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj: dict[str, list[tuple[str, str]]] = {n: [] for n in nodes}
    for u, v, w in edges:
        if u == v:
            return [u, u]
        ru, rv = root(u), root(v)
        if ru == rv:
            # recover the path u..v through already-kept edges
            path = _bfs_path(adj, u, v)
            return path + [u]
        parent[ru] = rv
        adj[u].append((v, w))
        adj[v].append((u, w))
    return None


def _bfs_path(adj, start, goal):
    prev = {start: None}
    queue = [start]
    while queue:
        n = queue.pop(0)
        if n == goal:
            break
        for m, _ in adj[n]:
            if m not in prev:
                prev[m] = n
                queue.append(m)
    path = [goal]
    while prev.get(path[-1]) is not None:
        path.append(prev[path[-1]])
    return list(reversed(path))


@dataclass(frozen=True)
class DrViolation:
    box_path: tuple[str, ...]
    switching: dict
    cycle: tuple[str, ...]


def find_dr_violation(
    s: ProofStructure, limit: int = DEFAULT_SWITCHING_LIMIT
) -> Union[DrViolation, None]:
    """First switching with an undirected cycle, searching boxes
    recursively; None when the structure is a proof net."""
    for choices, nodes, edges in enumerate_switchings(s, limit):
        cycle = _find_cycle(nodes, edges)
        if cycle is not None:
            return DrViolation((), choices, tuple(cycle))
    for b in s.boxes:
        inner = find_dr_violation(b.net, limit)
        if inner is not None:
            return DrViolation((b.id,) + inner.box_path, inner.switching, inner.cycle)
    return None


def check_dr(s: ProofStructure, limit: int = DEFAULT_SWITCHING_LIMIT) -> bool:
    """The switching criterion: every switching graph acyclic, recursively
    inside boxes."""
    return find_dr_violation(s, limit) is None


# --------------------------------------------------------------------------
# Encoding to processes

_SURFACE = {DEREL: "?d", WEAK: "?w", BANG: "!"}


def encode(s: ProofStructure) -> Process:
    """Translate to the membrane encoding; top-level conclusions are capped
    by ``formula`` atoms."""
    report = validate_structure(s)
    if not report.ok:
        raise NetError("invalid structure: " + "; ".join(report.errors))
    namer: dict[str, str] = {}

    def link(wire: str) -> str:
        if wire not in namer:
            namer[wire] = f"W{len(namer) + 1}"
        return namer[wire]

    def enc(net: ProofStructure) -> Process:
        atoms: list[Atom] = []
        cells: list[Cell] = []
        for c in net.cells:
            if c.kind == AX:
                cells.append(Cell("ax", Process(
                    tuple(Atom("+", (link(w),)) for w in c.outputs))))
            elif c.kind == CUT:
                cells.append(Cell("cut", Process(
                    tuple(Atom("+", (link(w),)) for w in c.inputs))))
            elif c.kind in (TENSOR, PAR):
                atoms.append(Atom("tensor" if c.kind == TENSOR else "par",
                                  (link(c.inputs[0]), link(c.inputs[1]),
                                   link(c.outputs[0]))))
            elif c.kind == CONTR:
                inner = f"~i:{c.id}"
                atoms.append(Atom("?c", (link(inner), link(c.outputs[0]))))
                cells.append(Cell(None, Process((
                    Atom("+", (link(inner),)),
                    Atom("+", (link(c.inputs[0]),)),
                    Atom("+", (link(c.inputs[1]),)),
                ))))
            else:
                atoms.append(Atom(_SURFACE[c.kind],
                                  tuple(link(w) for w in (*c.inputs, *c.outputs))))
        for b in net.boxes:
            cells.append(Cell(None, enc(b.net)))
        return Process(tuple(atoms), tuple(cells))

    top = enc(s)
    caps = tuple(Atom("formula", (link(w),)) for w in s.conclusions)
    return Process(top.atoms + caps, top.cells)


# --------------------------------------------------------------------------
# Decoding from processes

_PRODUCER_PORTS = {
    "tensor": (2,),
    "par": (2,),
    "?d": (1,),
    "?w": (0,),
    "!": (1,),
}
_CONSUMER_PORTS = {
    "tensor": (0, 1),
    "par": (0, 1),
    "?d": (0,),
    "!": (0,),
    "formula": (0,),
}


class _Decoder:
    def __init__(self) -> None:
        self.n = 0

    def next_id(self, prefix: str) -> str:
        self.n += 1
        return f"{prefix}{self.n}"

    def decode_level(self, p: Process) -> ProofStructure:
        if p.rules:
            raise DecodeError("process contains rewrite rules")
        cells: list[NetCell] = []
        boxes: list[Box] = []
        conclusions: list[str] = []

        contr_membranes: list[tuple[int, list[str]]] = []
        plain_membrane_links: set[str] = set()

        for ci, cell in enumerate(p.cells):
            content = cell.content
            if cell.name in ("ax", "cut"):
                links = self._plus_links(cell)
                if len(links) != 2:
                    raise DecodeError(f"{cell.name} membrane with {len(links)} ports")
                cid = self.next_id("c")
                if cell.name == "ax":
                    cells.append(NetCell(cid, AX, (), tuple(links)))
                else:
                    cells.append(NetCell(cid, CUT, tuple(links), ()))
            elif cell.name is None and self._is_port_membrane(content):
                contr_membranes.append((ci, [a.args[0] for a in content.atoms]))
                plain_membrane_links.update(a.args[0] for a in content.atoms)
            elif cell.name is None:
                boxes.append(self._decode_box(cell))
            else:
                raise DecodeError(f"unrecognized membrane {cell.name}{{...}}")

        contr_cells: dict[str, tuple[int, list[str]]] = {}
        for ci, links in contr_membranes:
            contr_cells[f"@{ci}"] = (ci, links)

        pending_contr: list[tuple[str, str]] = []
        for atom in p.atoms:
            name = atom.name
            if name.startswith("mell.") or name.startswith("nlmem."):
                raise DecodeError(f"transient state: pending {name} call")
            if name == "?c":
                if len(atom.args) != 2:
                    raise DecodeError("?c atom must be binary")
                pending_contr.append(atom.args)  # (internal link, output)
                continue
            if name == "formula":
                if len(atom.args) != 1:
                    raise DecodeError("formula atom must be unary")
                conclusions.append(atom.args[0])
                continue
            if name == "+":
                raise DecodeError("stray + atom outside a port membrane")
            if name == "tensor" or name == "par":
                if len(atom.args) != 3:
                    raise DecodeError(f"{name} atom must be ternary")
                kind = TENSOR if name == "tensor" else PAR
                cells.append(NetCell(self.next_id("c"), kind,
                                     (atom.args[0], atom.args[1]), (atom.args[2],)))
            elif name == "?d":
                cells.append(NetCell(self.next_id("c"), DEREL,
                                     (atom.args[0],), (atom.args[1],)))
            elif name == "?w":
                cells.append(NetCell(self.next_id("c"), WEAK, (), (atom.args[0],)))
            elif name == "!":
                cells.append(NetCell(self.next_id("c"), BANG,
                                     (atom.args[0],), (atom.args[1],)))
            else:
                raise DecodeError(f"unrecognized atom {name}/{len(atom.args)}")

        for internal, output in pending_contr:
            home = None
            for ci, links in contr_membranes:
                if internal in links:
                    home = (ci, links)
                    break
            if home is None:
                raise DecodeError("?c atom without its input membrane")
            inputs = tuple(l for l in home[1] if l != internal)
            if len(inputs) != 2:
                raise DecodeError("?c input membrane must hold exactly two inputs")
            cells.append(NetCell(self.next_id("c"), CONTR, inputs, (output,)))
            contr_membranes.remove(home)
        if contr_membranes:
            raise DecodeError("port membrane not connected to any ?c atom")

        return ProofStructure(tuple(cells), tuple(boxes), tuple(conclusions))

    @staticmethod
    def _plus_links(cell: Cell) -> list[str]:
        content = cell.content
        if content.cells or content.rules or any(
                a.name != "+" or len(a.args) != 1 for a in content.atoms):
            raise DecodeError(f"{cell.name} membrane must contain only + atoms")
        return [a.args[0] for a in content.atoms]

    @staticmethod
    def _is_port_membrane(content: Process) -> bool:
        return (
            not content.cells
            and not content.rules
            and len(content.atoms) == 3
            and all(a.name == "+" and len(a.args) == 1 for a in content.atoms)
        )

    def _decode_box(self, cell: Cell) -> Box:
        inner = self.decode_level(cell.content)
        # doors: wires produced inside, not consumed inside
        produced, consumed = _wire_uses(inner)
        doors = [w for w in produced if w not in consumed]
        inner = ProofStructure(inner.cells, inner.boxes, tuple(doors))
        principal_candidates = [
            c for c in inner.cells if c.kind == BANG and c.outputs[0] in doors
        ]
        if len(principal_candidates) != 1:
            raise DecodeError(
                f"box must have exactly one principal door, found "
                f"{len(principal_candidates)}")
        principal = principal_candidates[0].outputs[0]
        auxiliaries = tuple(w for w in doors if w != principal)
        return Box(self.next_id("b"), inner, principal, auxiliaries)


def _wire_uses(s: ProofStructure):
    produced: dict[str, int] = {}
    consumed: dict[str, int] = {}

    def walk(net: ProofStructure) -> None:
        for c in net.cells:
            for w in c.outputs:
                produced[w] = produced.get(w, 0) + 1
            for w in c.inputs:
                consumed[w] = consumed.get(w, 0) + 1
        for b in net.boxes:
            walk(b.net)

    walk(s)
    return produced, consumed


def decode(p: Process) -> ProofStructure:
    """Inverse of :func:`encode`; rejects processes outside the encoding's
    image."""
    structure = _Decoder().decode_level(p)
    report = validate_structure(structure)
    if not report.ok:
        raise DecodeError("not a proof-structure encoding: " + "; ".join(report.errors))
    return structure


# --------------------------------------------------------------------------
# Net JSON


def structure_to_json(s: ProofStructure) -> dict:
    return {
        "cells": [
            {"id": c.id, "kind": c.kind, "inputs": list(c.inputs),
             "outputs": list(c.outputs)}
            for c in s.cells
        ],
        "boxes": [
            {"id": b.id, "net": structure_to_json(b.net),
             "principal": b.principal, "auxiliaries": list(b.auxiliaries)}
            for b in s.boxes
        ],
        "conclusions": list(s.conclusions),
    }


def structure_from_json(doc: dict) -> ProofStructure:
    try:
        cells = tuple(
            NetCell(str(c["id"]), str(c["kind"]),
                    tuple(str(w) for w in c.get("inputs", ())),
                    tuple(str(w) for w in c.get("outputs", ())))
            for c in doc.get("cells", ())
        )
        boxes = tuple(
            Box(str(b["id"]), structure_from_json(b["net"]),
                str(b["principal"]),
                tuple(str(w) for w in b.get("auxiliaries", ())))
            for b in doc.get("boxes", ())
        )
        conclusions = tuple(str(w) for w in doc.get("conclusions", ()))
    except (KeyError, TypeError) as exc:
        raise NetError(f"malformed net JSON: {exc}") from exc
    return ProofStructure(cells, boxes, conclusions)


def dumps(s: ProofStructure) -> str:
    return json.dumps(structure_to_json(s), indent=1, sort_keys=True)


def loads(text: str) -> ProofStructure:
    return structure_from_json(json.loads(text))
