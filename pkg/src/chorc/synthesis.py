"""Synthesis of a controller-free component system from a choreography.

The transformation folds over the syntactic structure of the choreography,
growing each component's automaton from its unique context location. Send
and receive ports are copied per communication so that every copy is wired
to exactly one interaction, which is what makes the result controller-free.

Two profiles are supported:

* ``default`` is the lean placement: the end set of a synchronous
  communication is its receivers, branch joins are made with silent
  epsilon transitions, and the sequential synchronization is anchored on
  the first starter of the second choreography (so the component about to
  act is the one that receives the go-ahead).
* ``compat`` is a denser, sender-centric placement: the end set of any
  communication is its sender, branch joins merge the per-choice contexts
  into a single location (no epsilon), and the sequential synchronization
  is anchored on an end component of the first choreography. It trades
  extra control interactions for merge-style joins and is the profile the
  Promela ack-encoding mode builds on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    Expr, Not, Port, SKIP, TRUE, Update, Variable, default_value,
)
from .cbs import (
    AtomicComponent, CompositeSystem, Interaction, Transition, check_structure,
)
from .lang import (
    Branch, Chor, Comm, Loop, Nil, Par, Seq, SystemDecl,
    participants, start_set, end_set,
)

PROFILES = ("default", "compat")

#: Name of the per-component control scratch variable carried by generated
#: control ports (one per data type actually needed). The ``%`` prefix keeps
#: these out of the surface language's namespace, and downstream tools drop
#: them when projecting states onto user-declared variables.
CONTROL_VAR = "%c"


class SynthError(Exception):
    pass


def end_set_compat(ch: Chor) -> frozenset:
    """Sender-side end sets used by the compat profile."""
    if isinstance(ch, Nil):
        return frozenset()
    if isinstance(ch, Comm):
        return frozenset({ch.send.port.owner})
    if isinstance(ch, Branch):
        out = frozenset()
        for _, cont in ch.conts:
            out |= end_set_compat(cont)
        return out if out else frozenset({ch.master})
    if isinstance(ch, Loop):
        return frozenset({ch.cond.port.owner})
    if isinstance(ch, Seq):
        return end_set_compat(ch.second)
    if isinstance(ch, Par):
        return end_set_compat(ch.left) | end_set_compat(ch.right)
    raise AssertionError(ch)


@dataclass
class _Builder:
    decl: SystemDecl
    profile: str
    vars: dict = field(default_factory=dict)        # cid -> [(Variable, init)]
    ports: dict = field(default_factory=dict)       # cid -> [Port]
    locations: dict = field(default_factory=dict)   # cid -> [str]
    transitions: dict = field(default_factory=dict)  # cid -> [Transition]
    context: dict = field(default_factory=dict)     # cid -> location
    gamma: list = field(default_factory=list)
    ctl_vars: dict = field(default_factory=dict)    # cid -> {dtype: Variable}
    copy_counters: dict = field(default_factory=dict)  # base pid -> int
    ctl_counters: dict = field(default_factory=dict)   # name class -> int
    loc_counters: dict = field(default_factory=dict)   # cid -> int

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise SynthError(f"unknown profile {self.profile!r}")
        for comp in self.decl.components:
            cid = comp.id
            self.ctl_vars[cid] = {}
            self.vars[cid] = list(comp.vars)
            self.ports[cid] = list(comp.ports)
            self.locations[cid] = [f"L{cid}_0"]
            self.transitions[cid] = []
            self.context[cid] = f"L{cid}_0"
            self.loc_counters[cid] = 0

    # -- naming helpers ------------------------------------------------------

    def order(self, cids) -> list:
        ranking = {cid: i for i, cid in enumerate(self.decl.component_ids())}
        return sorted(cids, key=lambda c: ranking[c])

    def fresh_loc(self, cid: str) -> str:
        self.loc_counters[cid] += 1
        loc = f"L{cid}_{self.loc_counters[cid]}"
        self.locations[cid].append(loc)
        return loc

    def fresh_copy(self, port: Port, ctype: str | None = None) -> Port:
        k = self.copy_counters.get(port.pid, 0) + 1
        self.copy_counters[port.pid] = k
        copy = Port(name=f"{port.name}#{k}", owner=port.owner, var=port.var,
                    ctype=port.ctype if ctype is None else ctype)
        self.ports[port.owner].append(copy)
        return copy

    def ctl_var(self, cid: str, dtype: str) -> Variable:
        if dtype not in self.ctl_vars[cid]:
            name = CONTROL_VAR if dtype == "int" else f"{CONTROL_VAR}_{dtype}"
            var = Variable(name, cid, dtype)
            self.ctl_vars[cid][dtype] = var
            self.vars[cid].append((var, default_value(dtype)))
        return self.ctl_vars[cid][dtype]

    def ctl_port(self, owner: str, klass: str, ctype: str,
                 dtype: str = "int") -> Port:
        k = self.ctl_counters.get(klass, 0) + 1
        self.ctl_counters[klass] = k
        port = Port(name=f"{klass}@{k}", owner=owner,
                    var=self.ctl_var(owner, dtype), ctype=ctype)
        self.ports[owner].append(port)
        return port

    # -- primitive growth steps ----------------------------------------------

    def advance(self, cid: str, port, guard: Expr, update: Update) -> str:
        """Add a transition from the component's context to a fresh location
        and move the context there. A ``None`` port is a silent epsilon."""
        dst = self.fresh_loc(cid)
        self.transitions[cid].append(
            Transition(self.context[cid], port, guard, update, dst))
        self.context[cid] = dst
        self.assert_context()
        return dst

    def add_eps(self, cid: str, src: str, dst: str):
        t = Transition(src, None, TRUE, SKIP, dst)
        if t not in self.transitions[cid]:
            self.transitions[cid].append(t)

    def assert_context(self):
        for cid in self.context:
            assert self.context[cid] in self.locations[cid], (
                f"context of {cid} points at undeclared location "
                f"{self.context[cid]}")

    def wire(self, send: Port, guard: Expr, update: Update, rcvs):
        """One communication: sender transition, receiver transitions and the
        connecting interaction. Ports are already final (copied/control)."""
        self.advance(send.owner, send, guard, update)
        receivers = []
        for port, f in rcvs:
            self.advance(port.owner, port, TRUE, f)
            receivers.append(port)
        self.gamma.append(Interaction(send=send, receivers=tuple(receivers)))

    # -- transformation proper -----------------------------------------------

    def synth(self, ch: Chor):
        if isinstance(ch, Nil):
            return
        if isinstance(ch, Comm):
            send = self.fresh_copy(ch.send.port)
            rcvs = [(self.fresh_copy(p), f) for p, f in ch.rcvs]
            self.wire(send, ch.send.guard, ch.send.update, rcvs)
            return
        if isinstance(ch, Branch):
            self.synth_branch(ch)
            return
        if isinstance(ch, Loop):
            self.synth_loop(ch)
            return
        if isinstance(ch, Seq):
            self.synth(ch.first)
            self.synth_seq_sync(ch.first, ch.second)
            self.synth(ch.second)
            return
        if isinstance(ch, Par):
            self.synth(ch.left)
            self.synth(ch.right)
            return
        raise AssertionError(ch)

    def synth_branch(self, ch: Branch):
        K = self.order(participants(ch) - {ch.master})
        base = dict(self.context)
        snapshots = []
        for gs, cont in ch.conts:
            self.context = dict(base)
            if K:
                send = self.fresh_copy(gs.port)
                rcvs = [(self.ctl_port(k, "br", "r", send.dtype), SKIP)
                        for k in K]
                self.wire(send, gs.guard, gs.update, rcvs)
            else:
                # Degenerate notification: nobody to notify, the choice is a
                # local step of the master on a re-typed copy of its port.
                port = self.fresh_copy(gs.port, ctype="in")
                self.advance(ch.master, port, gs.guard, gs.update)
            self.synth(cont)
            snapshots.append(dict(self.context))
        if self.profile == "default":
            self.union_eps(base, snapshots)
        else:
            self.union_merge(snapshots)
        self.assert_context()

    def union_eps(self, base, snapshots):
        """Join the per-choice contexts with epsilon transitions into a
        fresh location. Components untouched by every choice keep their
        context: giving them a silent hop as well would be harmless but
        multiplies interleavings during exploration."""
        for cid in self.decl.component_ids():
            ends = []
            for snap in snapshots:
                if snap[cid] not in ends:
                    ends.append(snap[cid])
            if ends == [base[cid]]:
                self.context[cid] = base[cid]
                continue
            join = self.fresh_loc(cid)
            for end in ends:
                self.add_eps(cid, end, join)
            self.context[cid] = join

    def union_merge(self, snapshots):
        """Join per-choice contexts by merging them into a single location
        (context locations have no outgoing transitions, so retargeting
        incoming transitions is a sound quotient)."""
        for cid in self.decl.component_ids():
            ends = []
            for snap in snapshots:
                if snap[cid] not in ends:
                    ends.append(snap[cid])
            if len(ends) == 1:
                self.context[cid] = ends[0]
                continue
            join = self.fresh_loc(cid)
            dropped = set(ends)
            for t in self.transitions[cid]:
                assert t.src not in dropped, (
                    f"cannot merge location {t.src} of {cid}: it has an "
                    f"outgoing transition")
            self.transitions[cid] = [
                t if t.dst not in dropped
                else Transition(t.src, t.port, t.guard, t.update, join)
                for t in self.transitions[cid]
            ]
            self.locations[cid] = [
                l for l in self.locations[cid] if l not in dropped]
            self.context[cid] = join

    def synth_loop(self, ch: Loop):
        master = ch.cond.port.owner
        K = self.order(participants(ch.body) - {master})
        before = dict(self.context)
        if K:
            send = self.fresh_copy(ch.cond.port)
            rcvs = [(self.ctl_port(k, "cont", "r", send.dtype), SKIP)
                    for k in K]
            self.wire(send, ch.cond.guard, ch.cond.update, rcvs)
        else:
            port = self.fresh_copy(ch.cond.port, ctype="in")
            self.advance(master, port, ch.cond.guard, ch.cond.update)
        self.synth(ch.body)
        # Re-iteration: silent back edges to the loop head.
        for cid in K + [master]:
            self.add_eps(cid, self.context[cid], before[cid])
            self.context[cid] = before[cid]
        # Break: the master evaluates the negated condition; participants
        # follow unconditionally through one synchronous interaction.
        if K:
            brk = self.ctl_port(master, "brk", "ss")
            dst = self.fresh_loc(master)
            self.transitions[master].append(
                Transition(before[master], brk, Not(ch.cond.guard), SKIP, dst))
            self.context[master] = dst
            receivers = []
            for cid in K:
                p = self.ctl_port(cid, "brk", "r")
                dst_k = self.fresh_loc(cid)
                self.transitions[cid].append(
                    Transition(before[cid], p, TRUE, SKIP, dst_k))
                self.context[cid] = dst_k
                receivers.append(p)
            self.gamma.append(Interaction(send=brk, receivers=tuple(receivers)))
        else:
            brk = self.ctl_port(master, "brk", "in")
            dst = self.fresh_loc(master)
            self.transitions[master].append(
                Transition(before[master], brk, Not(ch.cond.guard), SKIP, dst))
            self.context[master] = dst
        self.assert_context()

    def synth_seq_sync(self, first: Chor, second: Chor):
        """Synchronize the end of ``first`` with the start of ``second``."""
        if self.profile == "default":
            ends = end_set(first)
        else:
            ends = end_set_compat(first)
        starts = start_set(second)
        if not ends or not starts:
            return
        if self.profile == "default":
            anchor = self.order(starts)[0]
        else:
            anchor = self.order(ends)[0]
        J = self.order((ends | starts) - {anchor})
        if not J:
            return
        cs = self.ctl_port(anchor, "cs", "ss")
        rcvs = [(self.ctl_port(j, "cr", "r"), SKIP) for j in J]
        self.wire(cs, TRUE, SKIP, rcvs)

    # -- result --------------------------------------------------------------

    def build(self) -> CompositeSystem:
        comps = []
        for comp in self.decl.components:
            cid = comp.id
            comps.append(AtomicComponent(
                id=cid,
                vars=tuple(self.vars[cid]),
                ports=tuple(self.ports[cid]),
                locations=tuple(self.locations[cid]),
                transitions=tuple(self.transitions[cid]),
                init=f"L{cid}_0",
                end=self.context[cid],
            ))
        return CompositeSystem(components=tuple(comps), gamma=tuple(self.gamma))


def synthesize(decl: SystemDecl, ch: Chor, profile: str = "default") -> CompositeSystem:
    """Transform a well-formed choreography into a composite system."""
    builder = _Builder(decl=decl, profile=profile)
    builder.synth(ch)
    builder.assert_context()
    sys = builder.build()
    diags = check_structure(sys)
    if diags:
        raise SynthError(
            "synthesized system failed structural checks:\n"
            + "\n".join(str(d) for d in diags))
    return sys
