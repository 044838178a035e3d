"""Equivalence checking between a choreography and a synthesized system.

The check is extensional on small instances: both sides are explored
exhaustively and compared on their sets of successful final valuations,
projected onto the user-declared variables (generated control scratch
variables are dropped). A deadlock on either side, or a missing/extra final
state, refutes equivalence; truncation of either exploration makes the
verdict inconclusive.

The module also carries the structural invariant suite and a small set of
mutation operators used to validate that the checker actually has teeth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .core import Valuation
from .chorsem import explore
from .cbs import (
    AtomicComponent, CompositeSystem,
    check_structure, sys_explore,
)
from .lang import Chor, Diagnostic, SystemDecl
from .synthesis import synthesize


# --------------------------------------------------------------------------
# Equivalence
# --------------------------------------------------------------------------

def user_variables(decl: SystemDecl) -> tuple:
    """Qualified names of the user-declared variables, in a stable order."""
    return tuple(sorted(decl.initial_valuation().keys()))


def project(sigma: Valuation, keys) -> tuple:
    return tuple(sigma[k] for k in keys)


@dataclass
class EquivReport:
    verdict: str  # "equivalent" | "mismatch" | "inconclusive"
    chor_states: int = 0
    sys_states: int = 0
    chor_finals: set = field(default_factory=set)
    sys_finals: set = field(default_factory=set)
    chor_deadlocks: int = 0
    sys_deadlocks: int = 0
    reasons: list = field(default_factory=list)

    @property
    def equivalent(self) -> bool:
        return self.verdict == "equivalent"


def equiv_check(decl: SystemDecl, ch: Chor, sys: CompositeSystem,
                max_configs: int = 200_000, max_depth: int = 10_000) -> EquivReport:
    keys = user_variables(decl)
    chor_res = explore(ch, decl.initial_valuation(),
                       max_configs=max_configs, max_depth=max_depth)
    sys_res = sys_explore(sys, max_configs=max_configs, max_depth=max_depth)
    report = EquivReport(
        verdict="equivalent",
        chor_states=len(chor_res.graph),
        sys_states=len(sys_res.graph),
        chor_finals={project(s, keys) for s in chor_res.finals},
        sys_finals={project(st.sigma, keys) for st in sys_res.terminals},
        chor_deadlocks=len(chor_res.deadlocks),
        sys_deadlocks=len(sys_res.deadlocks),
    )
    if chor_res.truncated or sys_res.truncated:
        report.verdict = "inconclusive"
        report.reasons.append("state-space exploration truncated by limits")
        return report
    if chor_res.deadlocks:
        report.reasons.append(
            f"choreography deadlocks in {len(chor_res.deadlocks)} configuration(s)")
    if sys_res.deadlocks:
        report.reasons.append(
            f"system deadlocks in {len(sys_res.deadlocks)} state(s)")
    only_chor = report.chor_finals - report.sys_finals
    only_sys = report.sys_finals - report.chor_finals
    if only_chor:
        report.reasons.append(
            f"{len(only_chor)} final state(s) reachable only in the choreography")
    if only_sys:
        report.reasons.append(
            f"{len(only_sys)} final state(s) reachable only in the system")
    if report.reasons:
        report.verdict = "mismatch"
    return report


# --------------------------------------------------------------------------
# Invariant suite
# --------------------------------------------------------------------------

def invariant_suite(sys: CompositeSystem) -> list:
    """Structural invariants expected of every synthesized system.

    Includes all basic structure checks (one port per interaction, no
    location mixing outgoing sends and receives, dtype agreement, ...) plus
    synthesis-specific ones: exactly one marked end location per component
    and no transition leaving it.
    """
    diags = list(check_structure(sys))
    for comp in sys.components:
        if comp.end is None:
            diags.append(Diagnostic(
                "no-end", f"{comp.id}: no end location marked"))
        elif comp.outgoing(comp.end):
            diags.append(Diagnostic(
                "end-not-final",
                f"{comp.id}: end location {comp.end} has outgoing transitions"))
    return diags


# --------------------------------------------------------------------------
# Mutation operators
# --------------------------------------------------------------------------

def _replace_component(sys: CompositeSystem, comp: AtomicComponent,
                       **changes) -> CompositeSystem:
    new = replace(comp, **changes)
    comps = tuple(new if c.id == comp.id else c for c in sys.components)
    return CompositeSystem(components=comps, gamma=sys.gamma)


def mutate_drop_eps(sys: CompositeSystem):
    """Remove one silent (epsilon) transition."""
    for comp in sys.components:
        for t in comp.transitions:
            if t.port is None:
                ts = tuple(x for x in comp.transitions if x != t)
                return _replace_component(sys, comp, transitions=ts)
    return None


def mutate_swap_break_guard(sys: CompositeSystem):
    """Swap the guards of a loop's break transition and its entry transition
    (they leave the same location with complementary guards)."""
    for comp in sys.components:
        for brk in comp.transitions:
            if brk.port is None or not brk.port.name.startswith("brk@"):
                continue
            if not brk.port.is_send and brk.port.ctype != "in":
                continue
            for entry in comp.outgoing(brk.src):
                if entry is brk:
                    continue
                ts = tuple(
                    replace(t, guard=entry.guard) if t == brk
                    else (replace(t, guard=brk.guard) if t == entry else t)
                    for t in comp.transitions
                )
                return _replace_component(sys, comp, transitions=ts)
    return None


def mutate_merge_port_copies(sys: CompositeSystem):
    """Merge two copies of the same send port: transitions that used the
    second copy are rewired to the first, while gamma keeps both."""
    for comp in sys.components:
        by_base = {}
        for p in comp.ports:
            if "#" not in p.name or not p.is_send:
                continue
            by_base.setdefault((p.name.split("#")[0], p.ctype), []).append(p)
        for copies in by_base.values():
            if len(copies) < 2:
                continue
            keep, drop = copies[0], copies[1]
            if not any(t.port == drop for t in comp.transitions):
                continue
            ts = tuple(
                replace(t, port=keep) if t.port == drop else t
                for t in comp.transitions
            )
            return _replace_component(sys, comp, transitions=ts)
    return None


def mutate_drop_interaction(sys: CompositeSystem):
    """Remove one interaction from gamma."""
    if not sys.gamma:
        return None
    return CompositeSystem(components=sys.components, gamma=sys.gamma[1:])


def mutate_unmark_end(sys: CompositeSystem):
    """Forget the end marking of one component, so nothing terminates."""
    for comp in sys.components:
        if comp.end is not None:
            return _replace_component(sys, comp, end=None)
    return None


#: Name -> operator; each returns a mutated system or None if inapplicable.
MUTATIONS = {
    "drop-eps": mutate_drop_eps,
    "swap-break-guard": mutate_swap_break_guard,
    "merge-port-copies": mutate_merge_port_copies,
    "drop-interaction": mutate_drop_interaction,
    "unmark-end": mutate_unmark_end,
}


def mutation_report(decl: SystemDecl, ch: Chor, profile: str = "default",
                    max_configs: int = 200_000, max_depth: int = 10_000) -> dict:
    """Apply every applicable mutation and report each verdict."""
    base = synthesize(decl, ch, profile)
    out = {}
    for name, op in MUTATIONS.items():
        mutant = op(base)
        if mutant is None:
            out[name] = "inapplicable"
            continue
        report = equiv_check(decl, ch, mutant,
                             max_configs=max_configs, max_depth=max_depth)
        out[name] = report.verdict
    return out
