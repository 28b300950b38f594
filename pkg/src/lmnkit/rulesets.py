"""Shipped rule sets and example nets.

The six cut-elimination rules rewrite the membrane encoding of proof
structures; the two that clone or discard a promotion box delegate to the
``mell.copy``/``mell.delete`` built-ins.  The push/pull rules move ?c/?w
cells across a box boundary and can be enabled selectively to study their
effect on confluence and termination.

Fixtures: ``apply_fx`` encodes the net of (\\f.\\x.f x)(\\x.x), ``identity``
its normal form \\x.x, ``apply_ffx`` the net of (\\f.\\x.f (f x))(\\x.x), and
``open_repl`` the ambient-calculus replication rule built on mell.copy.
"""

from __future__ import annotations

from .parser import SourceProgram, parse_process, parse_program, parse_rules
from .terms import Process, Rule

CUT_ELIMINATION_SOURCE = """
ax_cut@@
  cut{+X,+Y}, ax{+Y,+Z}
    :- X=Z.

tensor_par@@
  tensor(X1,Y1,XY1), par(X2,Y2,XY2), cut{+XY1,+XY2}
    :- cut{+X1,+X2}, cut{+Y1,+Y2}.

promotion_promotion@@
  {'!'(X1,X2), $p[X1|*X]}, cut{+X2,+X3}, {$q[X3|*Y]}
    :- {{'!'(X1,X2), $p[X1|*X]}, cut{+X2,+X3}, $q[X3|*Y]}.

promotion_dereliction@@
  {'!'(X1,X2), $p[X1|*X], @r}, cut{+X2,+X3}, '?d'(X4,X3)
    :- cut{+X1,+X4}, $p[X1|*X], @r.

promotion_weakening@@
  {'!'(X1,X2), $p[X1|*X]}, cut{+X2,+X3}, '?w'(X3)
    :- mell.delete(X1,W), {$p[X1|*X]}, {'?w'(W)}.

promotion_contraction@@
  {'!'(X1,X2), $p[X1|*X]}, cut{+X2,+X3}, '?c'({+C1,+C2}, X3)
    :- mell.copy(X2,A1,A2,A3,B1,B2,C1,C2), {'!'(X1,X2), $p[X1|*X]},
       {'?c'({+A1,+A2}, A3)}, {cut{+B1,+B2}}.
"""

PUSH_PULL_SOURCES = {
    "c_pull": """
contraction_pull@@
  {'!'(X1,X2), '?c'(I,X5), {+I,+X3,+X4}, $p[X1,X3,X4|*X]}
    :- {'!'(X1,X2), $p[X1,X3,X4|*X]}, '?c'(I,X5), {+I,+X3,+X4}.
""",
    "c_push": """
contraction_push@@
  {'!'(X1,X2), $p[X1,X3,X4|*X]}, '?c'(I,X5), {+I,+X3,+X4}
    :- {'!'(X1,X2), $p[X1,X3,X4|*X], '?c'(I,X5), {+I,+X3,+X4}}.
""",
    "w_pull": """
weakening_pull@@
  {'!'(X1,X2), '?w'(X3), $p[X1|*X]}
    :- {'!'(X1,X2), $p[X1|*X]}, '?w'(X3).
""",
    "w_push": """
weakening_push@@
  {'!'(X1,X2), $p[X1|*X]}, '?w'(X3)
    :- {'!'(X1,X2), '?w'(X3), $p[X1|*X]}.
""",
}

PUSH_PULL_NAMES = ("c_pull", "c_push", "w_pull", "w_push")


def cut_elimination_rules() -> list[Rule]:
    """The six rules: ax_cut, tensor_par, promotion_promotion,
    promotion_dereliction, promotion_weakening, promotion_contraction."""
    return parse_rules(CUT_ELIMINATION_SOURCE)


def push_pull_rules(selected) -> list[Rule]:
    """The chosen subset of {c_pull, c_push, w_pull, w_push}, in that
    order."""
    unknown = set(selected) - set(PUSH_PULL_NAMES)
    if unknown:
        raise ValueError(f"unknown push/pull rules: {sorted(unknown)}")
    out: list[Rule] = []
    for name in PUSH_PULL_NAMES:
        if name in selected:
            out.extend(parse_rules(PUSH_PULL_SOURCES[name]))
    return out


def rule_set(spec: str) -> list[Rule]:
    """Parse a selector like ``base`` or ``base+w_pull+w_push``."""
    parts = spec.split("+")
    if parts[0] != "base":
        raise ValueError(f"rule set must start with 'base', got {spec!r}")
    return cut_elimination_rules() + push_pull_rules(parts[1:])


# --------------------------------------------------------------------------
# Fixtures

FIXTURE_SOURCES = {
    # (\f:n->n. \x:n. f x)(\x:n. x) -- normalizes to \x:n. x
    "apply_fx": """
ax{+A1,+A2}, '?d'(A1,A3), '?w'(A4),
{ax{+B1,+B2}, '?d'(B1,B3), '?w'(B4), '!'(B2,B5)},
'?c'({+A3,+B4},C1), '?c'({+A4,+B3},C2),
tensor(B5,T1,D2), ax{+T1,+T2}, cut{+A2,+D2}, par(C2,T2,P1), par(C1,P1,F),
{ax{+E1,+E2}, '?d'(E1,E3), par(E3,E2,E4), '!'(E4,E5)},
tensor(E5,T3,D4), ax{+T3,+T4}, cut{+F,+D4},
formula(T4).
""",
    # \x:n. x -- the cut-free normal form of apply_fx
    "identity": """
ax{+E1,+E2}, '?d'(E1,E3), par(E3,E2,E4), formula(E4).
""",
    # (\f:n->n. \x:n. f (f x))(\x:n. x) -- the inner application is boxed,
    # with its two contractions inside the box alongside the inner cut
    "apply_ffx": """
ax{+A1,+A2}, '?d'(A1,A3), '?w'(A4),
{ax{+B1,+B2}, '?d'(B1,B3), '?w'(B4),
 {ax{+G1,+G2}, '?d'(G1,G3), '?w'(G4), '!'(G2,G5)},
 ax{+H1,+H2}, tensor(G5,H1,D1), cut{+B2,+D1},
 '?c'({+B3,+G4},CF), '?c'({+B4,+G3},CX),
 '!'(H2,P5)},
ax{+T1,+T2}, tensor(P5,T1,D2), cut{+A2,+D2},
'?c'({+A3,+CF},C1), '?c'({+A4,+CX},C2),
par(C2,T2,P1), par(C1,P1,F),
{ax{+E1,+E2}, '?d'(E1,E3), par(E3,E2,E4), '!'(E4,E5)},
tensor(E5,T3,D4), ax{+T3,+T4}, cut{+F,+D4},
formula(T4).
""",
    # ambient-calculus replication: !(open m.P) | m[Q] -> P|Q|!(open m.P)
    "open_repl": """
open_repl@@
  open_repl(M,{$p}), {amb(M1),{id,+M1,-M2,$mm},$q,@q}, {id,+M,+M2,$m}
    :- mell.copy({$p},A1,A2,A3,B1,B2,remove,P), {cp(A1,A2,A3)},
       {B1=B2}, $q, {id,+M3,$m,$mm}, open_repl(M3,P).

open_repl_aux@@ remove({$p}) :- $p.
""",
}


def fixtures() -> dict[str, SourceProgram]:
    """Parsed fixture programs, keyed as in FIXTURE_SOURCES."""
    return {name: parse_program(src) for name, src in FIXTURE_SOURCES.items()}


def fixture_process(name: str) -> Process:
    return parse_process(FIXTURE_SOURCES[name])


# --------------------------------------------------------------------------
# Push/pull study configuration: rule-set rows and reference counts
# (states, transitions, end states); None marks divergence.

TABLE_ROWS = {
    1: "base",
    2: "base+c_pull",
    3: "base+c_push",
    4: "base+c_pull+c_push",
    5: "base+w_pull",
    6: "base+w_push",
    7: "base+w_pull+w_push",
}

REFERENCE_COUNTS = {
    1: (476, 1592, 1),
    2: (1808, 7204, 1),
    3: (476, 1592, 1),
    4: (1808, 7832, 1),
    5: (756, 2700, 1),
    6: (41216, 204680, 16),
    7: None,
}
