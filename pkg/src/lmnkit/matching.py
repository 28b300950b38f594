"""Rule matching and rewriting.

One application of a rule happens at one level of the membrane hierarchy:
its left-hand side matches a sub-multiset of the atoms and cells there.
Pattern cells match host cells recursively and exhaustively: a membrane
pattern must account for the whole membrane, with a process context
absorbing the non-rule remainder and a rule context absorbing the rules.
Link names constrain the wiring; names occurring once in the lhs bridge to
the rhs and keep their host link.

Rules are visible throughout the membrane subtree they live in, so
``step_all`` tries every rule at every level of its subtree (program-level
rules everywhere).  Matching enumerates every embedding in a deterministic
order.  Rewriting removes the matched image, instantiates the right-hand
side under the collected substitution, and connector-normalizes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

from .congruence import normalize_connectors
from .terms import (
    Atom,
    Cell,
    LinkConditionError,
    Process,
    Rule,
    Template,
    fresh_link,
    link_occurrences,
    rename_links,
    template_link_counts,
    validate_link_condition,
)


class MatchError(ValueError):
    pass


class ApplyError(ValueError):
    pass


@dataclass(frozen=True)
class ContextBinding:
    """What a process context matched: the content subprocess, the host
    links bound to its declared names (in declaration order), and the
    remaining free links of the content (the bundle, in first-occurrence
    order)."""

    content: Process
    decl_links: tuple[str, ...]
    bundle: tuple[str, ...]
    cell_path: tuple[int, ...]


@dataclass(frozen=True)
class Match:
    rule: Rule
    level: tuple[int, ...]
    binding: dict
    contexts: dict
    rule_contexts: dict
    consumed_atoms: tuple[int, ...]
    consumed_cells: tuple[int, ...]


def _subprocess(p: Process, path: tuple[int, ...]) -> Process:
    for i in path:
        p = p.cells[i].content
    return p


def _free_links_ordered(content: Process) -> list[str]:
    occ = link_occurrences(content)
    return [l for l, os in occ.items() if len(os) == 1]


class _Search:
    def __init__(self, rule: Rule, host: Process, level: tuple[int, ...], emit):
        top = rule.lhs
        if top.contexts or top.rule_contexts:
            raise MatchError("process/rule context at the top level of a rule lhs")
        if top.aggregates or top.ctx_aggregates or top.rules:
            raise MatchError("aggregate or rule literal in a rule lhs")
        self.rule = rule
        self.level = level
        self.base = _subprocess(host, level)
        self.emit = emit
        self.host_occ = link_occurrences(host)
        self.binding: dict[str, str] = {}
        self.trail: list[str] = []
        self.pending_ctx: list = []
        self.rule_ctx: dict[str, tuple] = {}
        self.top_atoms: set[int] = set()
        self.top_cells: set[int] = set()

    def _crosses_out(self, link: str, cell_path: tuple[int, ...]) -> bool:
        """True when the link has exactly one endpoint within the matched
        host cell's subtree, i.e. it crosses that membrane (or is an
        interface link of the whole host)."""
        n = len(cell_path)
        inside = sum(
            1 for occ in self.host_occ.get(link, ()) if occ[0][:n] == cell_path)
        return inside == 1

    def run(self) -> None:
        top = self.rule.lhs
        self._atoms(top.atoms, 0, self.base, self.top_atoms, lambda: self._cells(
            top.cells, 0, self.base, self.top_cells, self.level, self._finish))

    # -- binding with backtracking --

    def _bind(self, t: str, h: str) -> bool:
        cur = self.binding.get(t)
        if cur is not None:
            return cur == h
        self.binding[t] = h
        self.trail.append(t)
        return True

    def _mark(self) -> int:
        return len(self.trail)

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            del self.binding[self.trail.pop()]

    # -- structural enumeration --

    def _atoms(self, patoms, i, hproc, used, cont):
        if i == len(patoms):
            cont()
            return
        pa = patoms[i]
        n = len(pa.args)
        for hi, ha in enumerate(hproc.atoms):
            if hi in used or ha.name != pa.name or len(ha.args) != n:
                continue
            m = self._mark()
            if all(self._bind(t, h) for t, h in zip(pa.args, ha.args)):
                used.add(hi)
                self._atoms(patoms, i + 1, hproc, used, cont)
                used.discard(hi)
            self._undo(m)

    def _cells(self, pcells, i, hproc, used, hpath, cont):
        if i == len(pcells):
            cont()
            return
        pc = pcells[i]
        for hi, hc in enumerate(hproc.cells):
            if hi in used or hc.name != pc.name:
                continue
            used.add(hi)
            self._into_cell(
                pc.content, hc, hpath + (hi,),
                lambda: self._cells(pcells, i + 1, hproc, used, hpath, cont))
            used.discard(hi)

    def _into_cell(self, tpl: Template, hcell: Cell, path, cont):
        if len(tpl.contexts) > 1 or len(tpl.rule_contexts) > 1:
            raise MatchError("membrane pattern with multiple contexts")
        if tpl.rules or tpl.aggregates or tpl.ctx_aggregates:
            raise MatchError("aggregate or rule literal in lhs membrane")
        content = hcell.content
        if not tpl.rule_contexts and content.rules:
            return

        used_atoms: set[int] = set()
        used_cells: set[int] = set()

        def after_items():
            leftover_atoms = tuple(
                a for i, a in enumerate(content.atoms) if i not in used_atoms)
            leftover_cells = tuple(
                c for i, c in enumerate(content.cells) if i not in used_cells)
            if not tpl.contexts:
                if leftover_atoms or leftover_cells:
                    return
                self._with_rule_ctx(tpl, content, cont)
                return
            remainder = Process(leftover_atoms, leftover_cells, ())
            self.pending_ctx.append(
                (tpl.contexts[0], remainder, _free_links_ordered(remainder), path))
            self._with_rule_ctx(tpl, content, cont)
            self.pending_ctx.pop()

        self._atoms(tpl.atoms, 0, content, used_atoms, lambda: self._cells(
            tpl.cells, 0, content, used_cells, path, after_items))

    def _with_rule_ctx(self, tpl: Template, content: Process, cont):
        if tpl.rule_contexts:
            name = tpl.rule_contexts[0].name
            self.rule_ctx[name] = content.rules
            cont()
            del self.rule_ctx[name]
        else:
            cont()

    # -- context resolution (after the whole image is assigned) --

    def _finish(self):
        self._resolve(0, {})

    def _resolve(self, i, resolved):
        if i == len(self.pending_ctx):
            self.emit(self, dict(resolved))
            return
        ctx, content, free_ordered, path = self.pending_ctx[i]
        free_set = set(free_ordered)
        decl_vals: list = []
        unbound = []
        taken: set[str] = set()
        for j, name in enumerate(ctx.links):
            v = self.binding.get(name)
            if v is None:
                decl_vals.append(None)
                unbound.append(j)
            else:
                if v not in free_set or v in taken:
                    return
                decl_vals.append(v)
                taken.add(v)

        def assign(k, vals, taken):
            if k == len(unbound):
                rest = tuple(l for l in free_ordered if l not in taken)
                if ctx.bundle is None and rest:
                    return
                # bundle members are the links crossing this membrane; a
                # content free link ending on a matched atom inside the same
                # cell is covered by neither declaration nor bundle
                if any(not self._crosses_out(l, path) for l in rest):
                    return
                m = self._mark()
                if all(self._bind(ctx.links[j], vals[j]) for j in unbound):
                    resolved[ctx.name] = ContextBinding(content, tuple(vals), rest, path)
                    self._resolve(i + 1, resolved)
                    del resolved[ctx.name]
                self._undo(m)
                return
            j = unbound[k]
            for cand in free_ordered:
                if cand in taken:
                    continue
                vals2 = list(vals)
                vals2[j] = cand
                assign(k + 1, vals2, taken | {cand})

        assign(0, decl_vals, taken)


def find_matches(rule: Rule, host: Process, level: tuple[int, ...] = ()) -> list[Match]:
    """All embeddings of ``rule.lhs`` into the host at the given membrane
    level, in a deterministic order."""
    results: list[Match] = []

    def emit(search: _Search, contexts):
        results.append(Match(
            rule=rule,
            level=level,
            binding=dict(search.binding),
            contexts=contexts,
            rule_contexts=dict(search.rule_ctx),
            consumed_atoms=tuple(sorted(search.top_atoms)),
            consumed_cells=tuple(sorted(search.top_cells)),
        ))

    _Search(rule, host, level, emit).run()
    return results


# --------------------------------------------------------------------------
# Rewriting


def apply_match(host: Process, match: Match) -> Process:
    """Remove the matched image, instantiate the rhs, normalize connectors.

    Raises ApplyError on aggregate bundle-length mismatches and on rules
    whose instantiation would break the Link Condition.
    """
    rule = match.rule
    lhs_counts = template_link_counts(rule.lhs)
    env: dict[str, str] = {}

    for name, hlink in match.binding.items():
        if lhs_counts.get(name, 0) == 1:
            env[name] = hlink  # bridge: lhs occurrence pairs with an rhs one

    def collect_decl_env(t: Template) -> None:
        for ctx in t.contexts:
            cb = match.contexts.get(ctx.name)
            if cb is None:
                raise ApplyError(f"context ${ctx.name} unbound")
            if len(ctx.links) != len(cb.decl_links):
                raise ApplyError(f"context ${ctx.name} arity differs between sides")
            for j, name in enumerate(ctx.links):
                env.setdefault(name, cb.decl_links[j])
        for c in t.cells:
            collect_decl_env(c.content)

    collect_decl_env(rule.rhs)

    def val(name: str) -> str:
        if name not in env:
            env[name] = fresh_link()
        return env[name]

    bundles = _bundle_values(match)

    def instantiate(t: Template) -> Process:
        atoms = [Atom(a.name, tuple(val(x) for x in a.args)) for a in t.atoms]
        cells = [Cell(c.name, instantiate(c.content)) for c in t.cells]
        rules = list(t.rules)
        for ctx in t.contexts:
            cb = match.contexts[ctx.name]
            renames = {}
            for j, name in enumerate(ctx.links):
                if val(name) != cb.decl_links[j]:
                    renames[cb.decl_links[j]] = val(name)
            content = rename_links(cb.content, renames)
            atoms.extend(content.atoms)
            cells.extend(content.cells)
            rules.extend(content.rules)
        for rc in t.rule_contexts:
            rules.extend(match.rule_contexts.get(rc.name, ()))
        for agg in t.aggregates:
            vals = [bundles[b] for b in agg.bundles]
            n = len(vals[0])
            if any(len(v) != n for v in vals):
                raise ApplyError(
                    f"aggregate {agg.name}: bundle lengths differ "
                    f"({[len(v) for v in vals]})")
            for i in range(n):
                atoms.append(Atom(agg.name, tuple(v[i] for v in vals)))
        for cagg in t.ctx_aggregates:
            cb = match.contexts[cagg.name]
            if len(cagg.bundles) != len(cb.decl_links):
                raise ApplyError(
                    f"context aggregate ${cagg.name}: takes {len(cagg.bundles)} "
                    f"bundles but the context declares {len(cb.decl_links)} links")
            vals = [bundles[b] for b in cagg.bundles]
            n = len(vals[0])
            if any(len(v) != n for v in vals):
                raise ApplyError(
                    f"context aggregate ${cagg.name}: bundle lengths differ")
            for i in range(n):
                replica = replicate_content(
                    cb.content,
                    {cb.decl_links[j]: vals[j][i] for j in range(len(cagg.bundles))})
                atoms.extend(replica.atoms)
                cells.extend(replica.cells)
                rules.extend(replica.rules)
        return Process(tuple(atoms), tuple(cells), tuple(rules))

    new_items = instantiate(rule.rhs)
    result = _rebuild(host, match.level, match.consumed_atoms,
                      match.consumed_cells, new_items)
    result = normalize_connectors(result)
    report = validate_link_condition(result)
    if not report.ok:
        raise ApplyError(
            f"rule {match.rule.name or '<anonymous>'} broke the Link Condition: "
            + "; ".join(v.message for v in report.violations))
    return result


def _bundle_values(match: Match) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}

    def collect(t: Template) -> None:
        for ctx in t.contexts:
            if ctx.bundle is not None and ctx.name in match.contexts:
                out[ctx.bundle] = match.contexts[ctx.name].bundle
        for c in t.cells:
            collect(c.content)

    collect(match.rule.lhs)
    return out


def replicate_content(content: Process, decl_map: dict[str, str]) -> Process:
    """One clone of a context's content: internal links freshened, declared
    links renamed per ``decl_map``; any other free link would dangle and is
    an error."""
    occ = link_occurrences(content)
    mapping: dict[str, str] = {}
    for link, os in occ.items():
        if link in decl_map:
            mapping[link] = decl_map[link]
        elif len(os) == 2:
            mapping[link] = fresh_link()
        else:
            raise ApplyError(
                f"replicated content has free link {link} beyond its declared links")
    return rename_links(content, mapping)


def _rebuild(host: Process, level, drop_atoms, drop_cells, new_items: Process) -> Process:
    drop_a, drop_c = set(drop_atoms), set(drop_cells)

    def walk(p: Process, depth: int) -> Process:
        if depth == len(level):
            atoms = tuple(a for i, a in enumerate(p.atoms) if i not in drop_a)
            cells = tuple(c for i, c in enumerate(p.cells) if i not in drop_c)
            return Process(
                atoms + new_items.atoms,
                cells + new_items.cells,
                p.rules + new_items.rules,
            )
        idx = level[depth]
        cells = list(p.cells)
        cells[idx] = Cell(cells[idx].name, walk(cells[idx].content, depth + 1))
        return Process(p.atoms, tuple(cells), p.rules)

    return walk(host, 0)


# --------------------------------------------------------------------------
# One-step successors


def rule_label(rule: Rule, idx: int) -> str:
    return rule.name if rule.name else f"rule{idx + 1}"


def all_levels(host: Process, base: tuple[int, ...] = ()):
    """Every membrane level of the given subtree, outermost first."""
    yield base
    sub = host
    for i in base:
        sub = sub.cells[i].content

    def walk(p: Process, path):
        for ci, cell in enumerate(p.cells):
            yield path + (ci,)
            yield from walk(cell.content, path + (ci,))

    yield from walk(sub, base)


def step_all(host: Process, rules: list[Rule]) -> list[tuple[str, Process]]:
    """All one-step successors.

    A rule acts within the membrane subtree it is visible in: the given
    (program-level) rules fire at the top level and inside every membrane;
    a rule residing inside a membrane fires on that membrane's contents and
    below.
    """
    out: list[tuple[str, Process]] = []
    for idx, rule in enumerate(rules):
        label = rule_label(rule, idx)
        for level in all_levels(host):
            for m in find_matches(rule, host, level=level):
                out.append((label, apply_match(host, m)))
    for home, local_rules in _levels_with_rules(host):
        for idx, rule in enumerate(local_rules):
            label = rule.name if rule.name else f"local{idx + 1}"
            for level in all_levels(host, home):
                for m in find_matches(rule, host, level=level):
                    out.append((label, apply_match(host, m)))
    return out


def _levels_with_rules(host: Process):
    found = []

    def walk(p: Process, path):
        for ci, cell in enumerate(p.cells):
            sub = cell.content
            if sub.rules:
                found.append((path + (ci,), sub.rules))
            walk(sub, path + (ci,))

    walk(host, ())
    return found
