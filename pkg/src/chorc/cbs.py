"""Atomic components, interactions and composite-system semantics.

An atomic component is a guarded labelled transition system over locations,
ports and local variables. A composite system is a set of atomic components
plus an interaction set gamma; its semantics steps over joint locations, a
global valuation and per-receive-port FIFO buffers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Expr, Port, Update, Valuation, apply_update, evaluate,
    expr_vars, format_expr, format_update, update_vars,
)
from .lang import Diagnostic

TAU = "tau"

SYS_RULES = ("synch-send", "asynch-send", "recv", "internal")


@dataclass(frozen=True)
class Transition:
    src: str
    port: Optional[Port]  # None is a silent (epsilon) internal transition
    guard: Expr
    update: Update
    dst: str


@dataclass(frozen=True)
class AtomicComponent:
    id: str
    vars: tuple  # of (Variable, initial Value)
    ports: tuple  # of Port
    locations: tuple  # of str
    transitions: tuple  # of Transition
    init: str
    end: Optional[str] = None  # location marking successful termination

    def outgoing(self, loc: str):
        return [t for t in self.transitions if t.src == loc]


@dataclass(frozen=True)
class Interaction:
    send: Port
    receivers: tuple  # of Port, nonempty

    @property
    def pids(self) -> frozenset:
        return frozenset({self.send.pid} | {r.pid for r in self.receivers})


@dataclass(frozen=True)
class CompositeSystem:
    components: tuple  # of AtomicComponent
    gamma: tuple  # of Interaction

    def component(self, cid: str) -> AtomicComponent:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def index(self, cid: str) -> int:
        for i, c in enumerate(self.components):
            if c.id == cid:
                return i
        raise KeyError(cid)

    def initial_state(self) -> "SysState":
        sigma = Valuation({
            var.qname: init
            for c in self.components
            for var, init in c.vars
        })
        return SysState(
            locations=tuple(c.init for c in self.components),
            sigma=sigma,
            buffers=(),
        )


@dataclass(frozen=True)
class SysState:
    locations: tuple  # aligned with CompositeSystem.components
    sigma: Valuation
    buffers: tuple  # sorted tuple of (receive port id, tuple of values)

    def buffer(self, pid: str) -> tuple:
        for key, queue in self.buffers:
            if key == pid:
                return queue
        return ()


def _buf_append(buffers: tuple, pid: str, value: Value) -> tuple:
    d = dict(buffers)
    d[pid] = d.get(pid, ()) + (value,)
    return tuple(sorted(d.items()))


def _buf_pop(buffers: tuple, pid: str) -> tuple:
    d = dict(buffers)
    queue = d[pid][1:]
    if queue:
        d[pid] = queue
    else:
        del d[pid]
    return tuple(sorted(d.items()))


# --------------------------------------------------------------------------
# Semantics
# --------------------------------------------------------------------------

def _enabled(comp: AtomicComponent, loc: str, port: Port, sigma: Valuation):
    return [
        t for t in comp.outgoing(loc)
        if t.port == port and evaluate(t.guard, sigma)
    ]


def sys_steps_tagged(sys: CompositeSystem, state: SysState):
    """Successors of a system state as (rule, label, state)."""
    out = []

    # Interactions: synch-send / asynch-send.
    for inter in sys.gamma:
        snd = inter.send
        si = sys.index(snd.owner)
        sender_ts = _enabled(sys.components[si], state.locations[si], snd, state.sigma)
        if not sender_ts:
            continue
        if snd.ctype == "as":
            payload = state.sigma[snd.var.qname]
            for t in sender_ts:
                sigma = apply_update(t.update, state.sigma)
                buffers = state.buffers
                for r in inter.receivers:
                    buffers = _buf_append(buffers, r.pid, payload)
                locs = list(state.locations)
                locs[si] = t.dst
                out.append((
                    "asynch-send",
                    frozenset({snd.pid}),
                    SysState(tuple(locs), sigma, buffers),
                ))
            continue
        # Synchronous: every receiver must offer an enabled transition on its
        # port and that port's buffer must be empty; all step together.
        choices = []
        ok = True
        for r in inter.receivers:
            if state.buffer(r.pid):
                ok = False
                break
            ri = sys.index(r.owner)
            ts = _enabled(sys.components[ri], state.locations[ri], r, state.sigma)
            if not ts:
                ok = False
                break
            choices.append((ri, ts))
        if not ok:
            continue
        payload = state.sigma[snd.var.qname]
        for t_s in sender_ts:
            for combo in itertools.product(*[ts for _, ts in choices]):
                sigma = state.sigma
                for r in inter.receivers:
                    sigma = sigma.set(r.var.qname, payload)
                sigma = apply_update(t_s.update, sigma)
                locs = list(state.locations)
                locs[si] = t_s.dst
                for (ri, _), t_r in zip(choices, combo):
                    sigma = apply_update(t_r.update, sigma)
                    locs[ri] = t_r.dst
                out.append((
                    "synch-send",
                    inter.pids,
                    SysState(tuple(locs), sigma, state.buffers),
                ))

    # Local steps: recv / internal.
    for ci, comp in enumerate(sys.components):
        for t in comp.outgoing(state.locations[ci]):
            if t.port is None or t.port.ctype == "in":
                if not evaluate(t.guard, state.sigma):
                    continue
                sigma = apply_update(t.update, state.sigma)
                locs = list(state.locations)
                locs[ci] = t.dst
                out.append(("internal", TAU, SysState(tuple(locs), sigma, state.buffers)))
            elif t.port.ctype == "r":
                queue = state.buffer(t.port.pid)
                if not queue or not evaluate(t.guard, state.sigma):
                    continue
                sigma = state.sigma.set(t.port.var.qname, queue[0])
                sigma = apply_update(t.update, sigma)
                locs = list(state.locations)
                locs[ci] = t.dst
                out.append((
                    "recv",
                    TAU,
                    SysState(tuple(locs), sigma, _buf_pop(state.buffers, t.port.pid)),
                ))
    return out


def sys_steps(sys: CompositeSystem, state: SysState):
    return [(label, s) for _, label, s in sys_steps_tagged(sys, state)]


def is_terminal(sys: CompositeSystem, state: SysState) -> bool:
    """Successful termination: empty buffers and every component at its end
    location. A component without an end marking can never terminate."""
    if state.buffers:
        return False
    for comp, loc in zip(sys.components, state.locations):
        if comp.end is None or loc != comp.end:
            return False
    return True


@dataclass
class SysExploreResult:
    terminals: set = field(default_factory=set)   # of SysState
    deadlocks: set = field(default_factory=set)   # of SysState
    graph: dict = field(default_factory=dict)     # state -> [(label, state)]
    truncated: bool = False
    rules_seen: set = field(default_factory=set)
    initial: SysState = None


def sys_explore(sys: CompositeSystem, s0: Optional[SysState] = None,
                max_configs: int = 200_000, max_depth: int = 10_000) -> SysExploreResult:
    """Breadth-first closure of sys_steps with memoization."""
    result = SysExploreResult()
    start = sys.initial_state() if s0 is None else s0
    result.initial = start
    seen = {start}
    frontier = [start]
    depth = 0
    while frontier:
        if depth >= max_depth:
            result.truncated = True
            break
        nxt_frontier = []
        for state in frontier:
            succs = sys_steps_tagged(sys, state)
            result.graph[state] = [(label, s) for _, label, s in succs]
            if not succs:
                if is_terminal(sys, state):
                    result.terminals.add(state)
                else:
                    result.deadlocks.add(state)
            for rule, label, succ in succs:
                result.rules_seen.add(rule)
                if succ not in seen:
                    if len(seen) >= max_configs:
                        result.truncated = True
                        continue
                    seen.add(succ)
                    nxt_frontier.append(succ)
        frontier = nxt_frontier
        depth += 1
    return result


# --------------------------------------------------------------------------
# Structural checks
# --------------------------------------------------------------------------

def check_structure(sys: CompositeSystem) -> list:
    """Structural sanity of a composite system; empty iff clean."""
    diags: list[Diagnostic] = []
    all_ports = {}
    for comp in sys.components:
        for p in comp.ports:
            if p.pid in all_ports:
                diags.append(Diagnostic("duplicate-port", f"port {p.pid} declared twice"))
            all_ports[p.pid] = p

    for comp in sys.components:
        locs = set(comp.locations)
        if comp.init not in locs:
            diags.append(Diagnostic(
                "bad-init", f"{comp.id}: initial location {comp.init} undeclared"))
        if comp.end is not None and comp.end not in locs:
            diags.append(Diagnostic(
                "bad-end", f"{comp.id}: end location {comp.end} undeclared"))
        own_vars = {var.qname for var, _ in comp.vars}
        for t in comp.transitions:
            if t.src not in locs or t.dst not in locs:
                diags.append(Diagnostic(
                    "bad-transition",
                    f"{comp.id}: transition {t.src}->{t.dst} uses undeclared location"))
            if t.port is not None and (t.port.owner != comp.id or t.port not in comp.ports):
                diags.append(Diagnostic(
                    "foreign-port", f"{comp.id}: transition uses port {t.port.pid}"))
            used = expr_vars(t.guard) | update_vars(t.update)
            if not used <= own_vars:
                diags.append(Diagnostic(
                    "foreign-var",
                    f"{comp.id}: transition at {t.src} uses "
                    + ", ".join(sorted(used - own_vars))))
        # No location may mix outgoing send and receive ports.
        for loc in comp.locations:
            kinds = {t.port.ctype for t in comp.outgoing(loc) if t.port is not None}
            if kinds & {"ss", "as"} and "r" in kinds:
                diags.append(Diagnostic(
                    "mixed-location",
                    f"{comp.id}: location {loc} mixes outgoing send and receive"))

    # Interaction shape and one-port-one-interaction.
    uses: dict[str, int] = {}
    for inter in sys.gamma:
        if not inter.send.is_send:
            diags.append(Diagnostic(
                "bad-interaction", f"{inter.send.pid} is not a send port"))
        if not inter.receivers:
            diags.append(Diagnostic(
                "bad-interaction", f"interaction on {inter.send.pid} has no receivers"))
        owners = {inter.send.owner}
        for r in inter.receivers:
            if r.ctype != "r":
                diags.append(Diagnostic(
                    "bad-interaction", f"{r.pid} is not a receive port"))
            if r.dtype != inter.send.dtype:
                diags.append(Diagnostic(
                    "bad-interaction",
                    f"dtype mismatch {inter.send.pid}:{inter.send.dtype} -> "
                    f"{r.pid}:{r.dtype}"))
            if r.owner in owners:
                diags.append(Diagnostic(
                    "bad-interaction",
                    f"component {r.owner} occurs twice in interaction on "
                    f"{inter.send.pid}"))
            owners.add(r.owner)
        for pid in inter.pids:
            if pid not in all_ports:
                diags.append(Diagnostic(
                    "unknown-port", f"interaction references undeclared port {pid}"))
            uses[pid] = uses.get(pid, 0) + 1
    for pid, n in sorted(uses.items()):
        if n > 1:
            diags.append(Diagnostic(
                "port-conflict", f"port {pid} occurs in {n} interactions"))

    # Every communicating port used on a transition is wired exactly once;
    # internal ports are never wired.
    for comp in sys.components:
        for t in comp.transitions:
            p = t.port
            if p is None:
                continue
            if p.ctype == "in":
                if p.pid in uses:
                    diags.append(Diagnostic(
                        "internal-wired", f"internal port {p.pid} occurs in gamma"))
            elif p.pid not in uses:
                diags.append(Diagnostic(
                    "unconnected-port",
                    f"port {p.pid} used on a transition but absent from gamma"))
    return diags


# --------------------------------------------------------------------------
# Canonical serialization and DOT export
# --------------------------------------------------------------------------

def serialize_system(sys: CompositeSystem) -> str:
    """Stable plain-text rendering of a composite system."""
    lines = []
    for comp in sorted(sys.components, key=lambda c: c.id):
        lines.append(f"component {comp.id} {{")
        for var, init in sorted(comp.vars, key=lambda vi: vi[0].name):
            shown = format_expr_value(init)
            lines.append(f"  var {var.name}: {var.dtype} = {shown}")
        for p in sorted(comp.ports, key=lambda p: p.name):
            lines.append(f"  port {p.name}: {p.ctype} of {p.dtype} binds {p.var.name}")
        lines.append(f"  init {comp.init}")
        if comp.end is not None:
            lines.append(f"  end {comp.end}")
        for loc in sorted(comp.locations):
            lines.append(f"  location {loc}")
        for t in sorted(comp.transitions,
                        key=lambda t: (t.src, _port_name(t.port), t.dst,
                                       format_expr(t.guard), format_update(t.update))):
            g = format_expr(t.guard, comp.id)
            f = format_update(t.update, comp.id)
            lines.append(f"  {t.src} --{_port_name(t.port)}[{g}, {f}]--> {t.dst}")
        lines.append("}")
    lines.append(f"gamma ({len(sys.gamma)} interactions) {{")
    for inter in sorted(sys.gamma, key=lambda i: i.send.pid):
        rcvs = ", ".join(sorted(r.pid for r in inter.receivers))
        lines.append(f"  {inter.send.pid} -> {{ {rcvs} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _port_name(port: Optional[Port]) -> str:
    return "eps" if port is None else port.name


def format_expr_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(value)


def system_to_dot(sys: CompositeSystem) -> str:
    """One DOT cluster per component automaton plus dashed interaction edges."""
    lines = ["digraph system {", "  rankdir=LR;", "  compound=true;"]

    def loc_id(cid, loc):
        return f"\"{cid}__{loc}\""

    for i, comp in enumerate(sorted(sys.components, key=lambda c: c.id)):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="{comp.id}";')
        for loc in sorted(comp.locations):
            shape = "doublecircle" if loc == comp.end else "circle"
            peripheries = ', style=bold' if loc == comp.init else ""
            lines.append(f'    {loc_id(comp.id, loc)} [shape={shape}, label="{loc}"{peripheries}];')
        for t in sorted(comp.transitions, key=lambda t: (t.src, _port_name(t.port), t.dst)):
            g = format_expr(t.guard, comp.id)
            lines.append(
                f'    {loc_id(comp.id, t.src)} -> {loc_id(comp.id, t.dst)} '
                f'[label="{_port_name(t.port)} [{g}]"];')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
