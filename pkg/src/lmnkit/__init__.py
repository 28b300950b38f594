"""Hierarchical port-graph rewriting with membranes, plus a MELL proof-net
workbench built on top of it."""

from .congruence import (
    CanonicalForm,
    canonical_form,
    canonical_key,
    congruent,
    normalize_connectors,
)
from .matching import (
    ApplyError,
    Match,
    MatchError,
    apply_match,
    find_matches,
    step_all,
)
from .mell import (
    ApiCallError,
    PendingApiCall,
    deep_clone,
    fire,
    fire_mell_copy,
    fire_mell_delete,
    pending_calls,
)
from .parser import (
    ParseError,
    SourceProgram,
    parse_process,
    parse_program,
    parse_rule,
    parse_rules,
    pretty_print,
)
from .statespace import (
    TransitionSystem,
    end_states,
    explore,
    export_dot,
    export_json,
)
from .terms import (
    Atom,
    Cell,
    LinkConditionError,
    Process,
    Rule,
    ValidationReport,
    free_links,
    validate_link_condition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
