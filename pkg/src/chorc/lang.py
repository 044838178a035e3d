"""Choreography AST, declarations, structural functions and static checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .core import (
    Expr, Port, TRUE, Update, Valuation, Variable, default_value, expr_vars,
    format_expr, format_update, infer_type, update_vars, Value,
)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0
    severity: str = "error"  # "error" or "warning"

    def __str__(self):
        where = f"{self.line}:{self.col}: " if self.line else ""
        return f"{where}{self.severity}: {self.code}: {self.message}"


@dataclass(frozen=True)
class ComponentDecl:
    id: str
    vars: tuple[tuple[Variable, Value], ...]  # (variable, initial value)
    ports: tuple[Port, ...]


@dataclass(frozen=True)
class SystemDecl:
    components: tuple[ComponentDecl, ...]

    def component(self, cid: str) -> ComponentDecl:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def component_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.components)

    def port(self, pid: str) -> Port:
        for c in self.components:
            for p in c.ports:
                if p.pid == pid:
                    return p
        raise KeyError(pid)

    def type_env(self) -> dict[str, str]:
        return {
            var.qname: var.dtype
            for c in self.components
            for var, _ in c.vars
        }

    def initial_valuation(self) -> Valuation:
        return Valuation({
            var.qname: init if init is not None else default_value(var.dtype)
            for c in self.components
            for var, init in c.vars
        })


# --------------------------------------------------------------------------
# Choreography terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GuardedSend:
    """A send port together with its guard and update function."""

    port: Port
    guard: Expr
    update: Update


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Comm:
    """One send port wired to a nonempty list of receive ports."""

    send: GuardedSend
    rcvs: tuple[tuple[Port, Update], ...]


@dataclass(frozen=True)
class Branch:
    """Master-decided choice between guarded continuations."""

    master: str
    conts: tuple[tuple[GuardedSend, "Chor"], ...]


@dataclass(frozen=True)
class Loop:
    cond: GuardedSend
    body: "Chor"


@dataclass(frozen=True)
class Seq:
    first: "Chor"
    second: "Chor"


@dataclass(frozen=True)
class Par:
    left: "Chor"
    right: "Chor"


Chor = Union[Nil, Comm, Branch, Loop, Seq, Par]


# --------------------------------------------------------------------------
# Structural functions over choreographies
# --------------------------------------------------------------------------

def participants(ch: Chor) -> frozenset[str]:
    """All component ids involved in the choreography."""
    if isinstance(ch, Nil):
        return frozenset()
    if isinstance(ch, Comm):
        return frozenset({ch.send.port.owner} | {p.owner for p, _ in ch.rcvs})
    if isinstance(ch, Branch):
        out = {ch.master}
        for gs, cont in ch.conts:
            out.add(gs.port.owner)
            out |= participants(cont)
        return frozenset(out)
    if isinstance(ch, Loop):
        return frozenset({ch.cond.port.owner}) | participants(ch.body)
    if isinstance(ch, (Seq, Par)):
        a, b = _operands(ch)
        return participants(a) | participants(b)
    raise AssertionError(ch)


def start_set(ch: Chor) -> frozenset[str]:
    """Components that must be notified to start the choreography."""
    if isinstance(ch, Nil):
        return frozenset()
    if isinstance(ch, Comm):
        return frozenset({ch.send.port.owner})
    if isinstance(ch, Branch):
        return frozenset({ch.master})
    if isinstance(ch, Loop):
        return frozenset({ch.cond.port.owner})
    if isinstance(ch, Seq):
        return start_set(ch.first)
    if isinstance(ch, Par):
        return start_set(ch.left) | start_set(ch.right)
    raise AssertionError(ch)


def end_set(ch: Chor) -> frozenset[str]:
    """Components that must terminate for the choreography to terminate.

    Synchronous communication ends with the receivers, asynchronous with the
    sender.
    """
    if isinstance(ch, Nil):
        return frozenset()
    if isinstance(ch, Comm):
        if ch.send.port.ctype == "ss":
            return frozenset(p.owner for p, _ in ch.rcvs)
        return frozenset({ch.send.port.owner})
    if isinstance(ch, Branch):
        out = set()
        for gs, cont in ch.conts:
            out.add(gs.port.owner)
            out |= participants(cont)
        return frozenset(out)
    if isinstance(ch, Loop):
        return frozenset({ch.cond.port.owner})
    if isinstance(ch, Seq):
        return end_set(ch.second)
    if isinstance(ch, Par):
        return end_set(ch.left) | end_set(ch.right)
    raise AssertionError(ch)


def _operands(ch):
    if isinstance(ch, Seq):
        return ch.first, ch.second
    return ch.left, ch.right


# --------------------------------------------------------------------------
# Pretty printing (round-trips through the parser)
# --------------------------------------------------------------------------

def _fmt_guarded_send(gs: GuardedSend) -> str:
    owner = gs.port.owner
    return (f"{gs.port.pid}[{format_expr(gs.guard, owner)}, "
            f"{format_update(gs.update, owner)}]")


def format_chor(ch: Chor) -> str:
    """Render a choreography term in concrete syntax."""
    if isinstance(ch, Nil):
        return "nil"
    if isinstance(ch, Comm):
        rcvs = ", ".join(
            f"{p.pid}[{format_update(f, p.owner)}]" for p, f in ch.rcvs
        )
        return f"{_fmt_guarded_send(ch.send)} -> {{ {rcvs} }}"
    if isinstance(ch, Branch):
        conts = " | ".join(
            f"{_fmt_guarded_send(gs)} => {format_chor(cont)}"
            for gs, cont in ch.conts
        )
        return f"choice {ch.master} {{ {conts} }}"
    if isinstance(ch, Loop):
        return f"while ({_fmt_guarded_send(ch.cond)}) {{ {format_chor(ch.body)} }}"
    if isinstance(ch, Seq):
        return f"({format_chor(ch.first)} ; {format_chor(ch.second)})"
    if isinstance(ch, Par):
        return f"({format_chor(ch.left)} || {format_chor(ch.right)})"
    raise AssertionError(ch)


# --------------------------------------------------------------------------
# Well-formedness
# --------------------------------------------------------------------------

def _check_local(diags, decl, owner: str, guard: Expr, update: Update, what: str):
    env = decl.type_env()
    used = expr_vars(guard) | update_vars(update)
    for qname in used:
        if not qname.startswith(owner + "."):
            diags.append(Diagnostic(
                "locality",
                f"{what} on component {owner} uses foreign variable {qname}",
            ))
    try:
        if infer_type(guard, env) != "bool":
            diags.append(Diagnostic("guard-type", f"{what} guard is not boolean"))
    except TypeError as exc:
        diags.append(Diagnostic("guard-type", f"{what} guard: {exc}"))
    for target, rhs in update.assignments:
        try:
            rhs_t = infer_type(rhs, env)
            if target not in env:
                diags.append(Diagnostic("unknown-var", f"{what}: unknown target {target}"))
            elif env[target] != rhs_t:
                diags.append(Diagnostic(
                    "assign-type",
                    f"{what}: assigning {rhs_t} to {target} of type {env[target]}",
                ))
        except TypeError as exc:
            diags.append(Diagnostic("assign-type", f"{what}: {exc}"))


def check_well_formed(decl: SystemDecl, ch: Chor) -> list[Diagnostic]:
    """Static checks beyond what the grammar enforces.

    Returns an empty list iff the choreography is well formed.
    """
    diags: list[Diagnostic] = []

    def walk(term: Chor):
        if isinstance(term, Nil):
            return
        if isinstance(term, Comm):
            snd = term.send
            if not snd.port.is_send:
                diags.append(Diagnostic(
                    "send-port-type",
                    f"port {snd.port.pid} is not a send port",
                ))
            _check_local(diags, decl, snd.port.owner, snd.guard, snd.update,
                         f"send {snd.port.pid}")
            if not term.rcvs:
                diags.append(Diagnostic("empty-receivers", "communication without receivers"))
            owners = [snd.port.owner]
            for p, f in term.rcvs:
                if p.ctype != "r":
                    diags.append(Diagnostic(
                        "recv-port-type", f"port {p.pid} is not a receive port"))
                if p.dtype != snd.port.dtype:
                    diags.append(Diagnostic(
                        "comm-dtype",
                        f"receiver {p.pid}:{p.dtype} does not match sender "
                        f"{snd.port.pid}:{snd.port.dtype}",
                    ))
                if p.owner in owners:
                    diags.append(Diagnostic(
                        "distinct-receivers",
                        f"component {p.owner} occurs twice in one communication",
                    ))
                owners.append(p.owner)
                _check_local(diags, decl, p.owner, TRUE, f,
                             f"receive {p.pid}")
            return
        if isinstance(term, Branch):
            for gs, cont in term.conts:
                if gs.port.owner != term.master:
                    diags.append(Diagnostic(
                        "branch-port-ownership",
                        f"continuation port {gs.port.pid} does not belong to "
                        f"master {term.master}",
                    ))
                if not gs.port.is_send:
                    diags.append(Diagnostic(
                        "send-port-type", f"port {gs.port.pid} is not a send port"))
                _check_local(diags, decl, gs.port.owner, gs.guard, gs.update,
                             f"choice {gs.port.pid}")
                walk(cont)
            return
        if isinstance(term, Loop):
            gs = term.cond
            if not gs.port.is_send:
                diags.append(Diagnostic(
                    "send-port-type", f"port {gs.port.pid} is not a send port"))
            _check_local(diags, decl, gs.port.owner, gs.guard, gs.update,
                         f"loop condition {gs.port.pid}")
            walk(term.body)
            return
        if isinstance(term, Seq):
            walk(term.first)
            walk(term.second)
            return
        if isinstance(term, Par):
            shared = participants(term.left) & participants(term.right)
            if shared:
                # Dependent parallel operands are executed in a fixed
                # left-to-right order (no interleaving), so this is flagged
                # but does not reject the choreography.
                diags.append(Diagnostic(
                    "parallel-independence",
                    "parallel operands share components ("
                    + ", ".join(sorted(shared))
                    + "); they will run in order, not interleaved",
                    severity="warning",
                ))
            walk(term.left)
            walk(term.right)
            return
        raise AssertionError(term)

    walk(ch)
    return diags
