"""Exhaustive state-space exploration of the reduction relation.

Breadth-first closure of one-step rewriting plus built-in firings, with
states deduplicated by exact canonical form.  In collapse-api mode a state
containing a pending ``mell.*`` call is transient: the built-in is fired
immediately and the user-rule edge lands on the settled state, so the
two-step API protocol appears as a single abstract transition.

Parallel edges with identical (from, rule, to) are merged; pass
``count_multi=True`` to additionally record multiplicities.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Union

from .congruence import canonical_form, canonical_key, normalize_connectors
from .matching import step_all
from .mell import fire, pending_calls
from .terms import LinkConditionError, Process, Rule, validate_link_condition


class CapExceeded(RuntimeError):
    pass


class TransientStateError(RuntimeError):
    pass


DEFAULT_STATE_CAP = 100_000


@dataclass
class TransitionSystem:
    state_keys: list[str]
    state_texts: list[str]
    initial: int
    transitions: list[tuple[int, str, int]]
    end_state_ids: list[int]
    capped: bool
    collapse_api: bool
    api_state_ids: set[int] = field(default_factory=set)
    transition_counts: Union[dict[tuple[int, str, int], int], None] = None
    _processes: dict[int, Process] = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.state_keys)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    @property
    def num_end_states(self) -> int:
        return len(self.end_state_ids)

    def decode_state(self, sid: int) -> Process:
        if sid in self._processes:
            return self._processes[sid]
        from .parser import parse_process

        return parse_process(self.state_texts[sid])

    def longest_path(self) -> Union[int, None]:
        """Longest transition chain from the initial state; None if the
        system has cycles."""
        succ: dict[int, list[int]] = {}
        indeg = dict.fromkeys(range(self.num_states), 0)
        for frm, _, to in self.transitions:
            succ.setdefault(frm, []).append(to)
            indeg[to] += 1
        order = deque(v for v, d in indeg.items() if d == 0)
        dist = dict.fromkeys(range(self.num_states), 0)
        seen = 0
        while order:
            v = order.popleft()
            seen += 1
            for w in succ.get(v, ()):
                dist[w] = max(dist[w], dist[v] + 1)
                indeg[w] -= 1
                if indeg[w] == 0:
                    order.append(w)
        if seen != self.num_states:
            return None
        return max(dist.values()) if dist else 0


def explore(
    initial: Process,
    rules: list[Rule],
    *,
    state_cap: int = DEFAULT_STATE_CAP,
    collapse_api: bool = True,
    count_multi: bool = False,
    keep_processes: bool = False,
) -> TransitionSystem:
    """BFS closure of rewriting from ``initial`` under ``rules``.

    Stops early (``capped=True``, partial system) when ``state_cap`` distinct
    states have been stored and another would be needed.
    """
    host = normalize_connectors(initial)
    report = validate_link_condition(host)
    if not report.ok:
        raise LinkConditionError(report)

    initial_via_api = False
    if collapse_api:
        host, initial_via_api = _settle(host)

    cf0 = canonical_form(host)
    index: dict[str, int] = {cf0.key: 0}
    ts = TransitionSystem(
        state_keys=[cf0.key],
        state_texts=[cf0.text],
        initial=0,
        transitions=[],
        end_state_ids=[],
        capped=False,
        collapse_api=collapse_api,
        transition_counts={} if count_multi else None,
    )
    if initial_via_api:
        ts.api_state_ids.add(0)
    if keep_processes:
        ts._processes[0] = host

    seen_edges: set[tuple[int, str, int]] = set()
    frontier: deque[tuple[int, Process]] = deque([(0, host)])

    while frontier:
        sid, proc = frontier.popleft()
        successors: list[tuple[str, Process, bool]] = []
        if not collapse_api:
            for call in pending_calls(proc):
                successors.append((call.label, fire(proc, call), True))
        for label, q in step_all(proc, rules):
            if collapse_api:
                q, fired = _settle(q)
                successors.append((label, q, fired))
            else:
                successors.append((label, q, False))

        if not successors:
            ts.end_state_ids.append(sid)
            ts._processes.setdefault(sid, proc)
            continue

        for label, q, via_api in successors:
            key = canonical_key(q)
            tid = index.get(key)
            if tid is None:
                if len(ts.state_keys) >= state_cap:
                    ts.capped = True
                    frontier.clear()
                    break
                tid = len(ts.state_keys)
                index[key] = tid
                qcf = canonical_form(q)
                ts.state_keys.append(key)
                ts.state_texts.append(qcf.text)
                if keep_processes:
                    ts._processes[tid] = q
                frontier.append((tid, q))
            if via_api:
                ts.api_state_ids.add(tid)
            edge = (sid, label, tid)
            if edge not in seen_edges:
                seen_edges.add(edge)
                ts.transitions.append(edge)
            if ts.transition_counts is not None:
                ts.transition_counts[edge] = ts.transition_counts.get(edge, 0) + 1
        if ts.capped:
            break
    return ts


def _settle(host: Process) -> tuple[Process, bool]:
    """Fire pending API calls until none remain (collapse-api chasing)."""
    fired = False
    while True:
        calls = pending_calls(host)
        if not calls:
            return host, fired
        host = fire(host, calls[0])
        fired = True


def end_states(ts: TransitionSystem) -> list[Process]:
    """The irreducible states, decoded, in state-id order."""
    return [ts.decode_state(sid) for sid in ts.end_state_ids]


# --------------------------------------------------------------------------
# Exports


def export_dot(ts: TransitionSystem) -> str:
    lines = ["digraph statespace {", "  rankdir=LR;"]
    ends = set(ts.end_state_ids)
    for sid in range(ts.num_states):
        shape = "box" if sid in ts.api_state_ids else "circle"
        attrs = [f'label="{sid}"', f"shape={shape}"]
        if sid == ts.initial:
            attrs.append("penwidth=2")
        if sid in ends:
            attrs.append('style=filled')
            attrs.append('fillcolor="#ffcccc"')
            if shape == "circle":
                attrs[1] = "shape=doublecircle"
        lines.append(f"  s{sid} [{', '.join(attrs)}];")
    for frm, label, to in ts.transitions:
        lines.append(f'  s{frm} -> s{to} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_json(ts: TransitionSystem) -> str:
    doc = {
        "states": [
            {"id": sid, "canonical": ts.state_texts[sid]}
            for sid in range(ts.num_states)
        ],
        "transitions": [
            {"from": frm, "rule": label, "to": to}
            for frm, label, to in ts.transitions
        ],
        "initial": ts.initial,
        "end_states": list(ts.end_state_ids),
        "capped": ts.capped,
    }
    return json.dumps(doc, indent=1, sort_keys=True)
