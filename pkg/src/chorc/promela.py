"""Promela model generation and LTL property templates.

Every receive port in gamma gets a global channel: length 0 (rendezvous)
when the sending port is synchronous, length ``MAX_LEN`` when asynchronous.
Each component becomes a proctype with an explicit ``currentLocation``
variable and one guarded alternative per location inside a ``do`` loop; an
observable ``currPort_<comp>`` variable records the last port used, which is
what the LTL templates quantify over.

Synchronous interactions are acknowledged by the receivers. Two encodings
are supported:

* default: each synchronous receive port gets a dedicated rendezvous ack
  channel (``ack_<port>``); the payload channel carries data only.
* ``paper_ack``: the reverse acknowledgement travels on the payload channel
  itself (send then ``recvAck`` on the same channel; receivers use
  ``synchRecv``), reusing the data channel for acknowledgements.

String values are interned to small integers (Promela has no string type);
``strict`` mode rejects string-typed data instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    BinOp, Expr, Lit, Neg, Not, Port, Ref, Update, Variable, Value,
)
from .cbs import AtomicComponent, CompositeSystem, Transition

MAX_LEN = 8


class PromelaError(Exception):
    pass


@dataclass
class PromelaOptions:
    paper_ack: bool = False
    strict: bool = False
    max_len: int = MAX_LEN
    inline_ltl: bool = False


def sanitize(name: str) -> str:
    """Turn a port/variable identifier into a Promela-safe symbol."""
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


# --------------------------------------------------------------------------
# Expression translation
# --------------------------------------------------------------------------

_OPS = {
    "and": "&&", "or": "||",
    "==": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
    "+": "+", "-": "-", "*": "*", "/": "/", "%": "%",
}


class _Strings:
    """Interning table for string literals/initial values."""

    def __init__(self, strict: bool):
        self.strict = strict
        self.table: dict[str, int] = {}

    def code(self, s: str) -> int:
        if self.strict:
            raise PromelaError(
                f"string value {s!r} not representable in strict mode")
        if s not in self.table:
            self.table[s] = len(self.table) + 1
        return self.table[s]


def var_symbol(var: Variable) -> str:
    return qname_symbol(var.qname)


def qname_symbol(qname: str) -> str:
    owner, name = qname.split(".", 1)
    name = name.replace("%c", "ctl")
    return f"{sanitize(owner)}_{sanitize(name)}"


def _pexpr(e: Expr, strings: _Strings) -> str:
    if isinstance(e, Lit):
        v = e.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return str(strings.code(v))
        return str(v)
    if isinstance(e, Ref):
        return qname_symbol(e.qname)
    if isinstance(e, Not):
        return f"!({_pexpr(e.operand, strings)})"
    if isinstance(e, Neg):
        return f"-({_pexpr(e.operand, strings)})"
    if isinstance(e, BinOp):
        op = _OPS[e.op]
        return f"({_pexpr(e.left, strings)} {op} {_pexpr(e.right, strings)})"
    raise AssertionError(e)


def _passign(update: Update, strings: _Strings) -> list:
    return [
        f"{qname_symbol(target)} = {_pexpr(expr, strings)};"
        for target, expr in update.assignments
    ]


# --------------------------------------------------------------------------
# Model generation
# --------------------------------------------------------------------------

def _pml_value(v: Value, strings: _Strings) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return str(strings.code(v))
    return str(v)


def port_symbol(port: Port) -> str:
    return sanitize(port.pid)


def chan_name(port: Port) -> str:
    return f"ch_{port_symbol(port)}"


def ack_chan_name(port: Port) -> str:
    return f"ack_{port_symbol(port)}"


@dataclass
class Model:
    text: str
    port_codes: dict           # Port -> int (symbol define value)
    strings: dict              # str -> int
    ltl: list = field(default_factory=list)  # (name, formula)


def _interaction_of_send(sys: CompositeSystem, port: Port):
    for inter in sys.gamma:
        if inter.send == port:
            return inter
    return None


def _sender_of_receive(sys: CompositeSystem, port: Port):
    for inter in sys.gamma:
        for r in inter.receivers:
            if r == port:
                return inter.send
    return None


def _used_ports(sys: CompositeSystem) -> list:
    """Ports appearing on transitions, in stable component/transition order."""
    out = []
    for comp in sys.components:
        for t in comp.transitions:
            if t.port is not None and t.port not in out:
                out.append(t.port)
    return out


def generate_promela(sys: CompositeSystem, opts: PromelaOptions = None) -> Model:
    opts = opts or PromelaOptions()
    strings = _Strings(opts.strict)
    lines = []
    w = lines.append

    w("/* Generated Promela model of a synthesized component system. */")
    w(f"#define MAX_LEN {opts.max_len}")
    w("")

    # Port symbols (currPort values).
    ports = _used_ports(sys)
    codes = {}
    w("/* port symbols */")
    w("#define PORT_NONE 0")
    for i, p in enumerate(ports, start=1):
        sym = port_symbol(p)
        if sym in {port_symbol(q) for q in codes}:
            raise PromelaError(f"port symbol collision on {sym}")
        codes[p] = i
        w(f"#define {sym} {i}")
    w("")

    # Location symbols.
    w("/* location symbols */")
    for comp in sys.components:
        for i, loc in enumerate(comp.locations):
            w(f"#define {sanitize(loc)} {i}")
    w("")

    w("/* messaging macros */")
    w("#define recv(ch) ch?value")
    w("#define recvAck(ch) ch?(_)")
    w("#define send(ch) ch!value")
    w("#define sendAck(ch) ch!ack")
    w("#define synchRecv(ch) ch?value; sendAck(ch)")
    w("")
    w("int ack = 0;")
    w("")

    # Observable current-port variable per component.
    w("/* observable state */")
    for comp in sys.components:
        w(f"int currPort_{sanitize(comp.id)} = PORT_NONE;")
    w("")

    # Component variables as prefixed globals.
    w("/* component variables */")
    for comp in sys.components:
        for var, init in comp.vars:
            dtype = "bool" if var.dtype == "bool" else "int"
            w(f"{dtype} {var_symbol(var)} = {_pml_value(init, strings)};")
    w("")

    # Channels: one per receive port occurring in gamma.
    w("/* channels (one per receive port) */")
    for inter in sys.gamma:
        sync = inter.send.ctype == "ss"
        for r in inter.receivers:
            length = "0" if sync else "MAX_LEN"
            w(f"chan {chan_name(r)} = [{length}] of {{ int }};")
            if sync and not opts.paper_ack:
                w(f"chan {ack_chan_name(r)} = [0] of {{ int }};")
    w("")

    for comp in sys.components:
        lines.extend(_emit_process(sys, comp, codes, strings, opts))
        w("")

    w("init {")
    w("  atomic {")
    for comp in sys.components:
        w(f"    run {sanitize(comp.id)}();")
    w("  }")
    w("}")

    text = "\n".join(lines) + "\n"
    ltl = ltl_templates(sys)
    if opts.inline_ltl:
        chunks = [text]
        for name, formula in ltl:
            chunks.append(f"ltl {name} {{ {formula} }}\n")
        text = "".join(chunks)

    if strings.table:
        header = ["/* interned strings:"]
        for s, c in sorted(strings.table.items(), key=lambda kv: kv[1]):
            header.append(f"   {c} = {s!r}")
        header.append("*/")
        text = "\n".join(header) + "\n" + text

    return Model(text=text, port_codes=codes, strings=dict(strings.table), ltl=ltl)


def _emit_process(sys, comp, codes, strings, opts):
    cid = sanitize(comp.id)
    lines = []
    w = lines.append
    w(f"proctype {cid}() {{")
    w("  int value;")
    w(f"  int currentLocation = {sanitize(comp.init)};")
    w("  do")
    w("  :: if")
    for loc in comp.locations:
        outs = comp.outgoing(loc)
        if loc == comp.end:
            w(f"     :: (currentLocation == {sanitize(loc)}) -> break;")
            continue
        if not outs:
            continue
        body = _emit_location(sys, comp, loc, outs, strings, opts)
        w(f"     :: (currentLocation == {sanitize(loc)}) ->")
        for stmt in body:
            w("        " + stmt)
    w("     fi;")
    w("  od;")
    w("}")
    return lines


def _emit_location(sys, comp, loc, outs, strings, opts):
    cid = sanitize(comp.id)

    def arm(t: Transition) -> list:
        stmts = []
        p = t.port
        if p is None:
            stmts.extend(_passign(t.update, strings))
        elif p.ctype == "in":
            stmts.append(f"currPort_{cid} = {port_symbol(p)};")
            stmts.extend(_passign(t.update, strings))
        elif p.ctype == "r":
            sender = _sender_of_receive(sys, p)
            sync = sender is not None and sender.ctype == "ss"
            if sync:
                if opts.paper_ack:
                    stmts.append(f"sendAck({chan_name(p)});")
                else:
                    stmts.append(f"sendAck({ack_chan_name(p)});")
            stmts.append(f"currPort_{cid} = {port_symbol(p)};")
            stmts.append(f"{var_symbol(p.var)} = value;")
            stmts.extend(_passign(t.update, strings))
        else:  # send
            inter = _interaction_of_send(sys, p)
            if inter is None:
                raise PromelaError(f"send port {p.pid} not wired in gamma")
            stmts.append(f"value = {var_symbol(p.var)};")
            for r in inter.receivers:
                stmts.append(f"send({chan_name(r)});")
            if p.ctype == "ss":
                for r in inter.receivers:
                    if opts.paper_ack:
                        stmts.append(f"recvAck({chan_name(r)});")
                    else:
                        stmts.append(f"recvAck({ack_chan_name(r)});")
            stmts.append(f"currPort_{cid} = {port_symbol(p)};")
            stmts.extend(_passign(t.update, strings))
        stmts.append(f"currentLocation = {sanitize(t.dst)};")
        return stmts

    receives = [t for t in outs if t.port is not None and t.port.ctype == "r"]
    if len(outs) == 1:
        t = outs[0]
        if receives:
            # Single receive: block on the channel directly.
            p = t.port
            sender = _sender_of_receive(sys, p)
            sync = sender is not None and sender.ctype == "ss"
            stmts = []
            if sync and opts.paper_ack:
                stmts.append(f"synchRecv({chan_name(p)});")
            else:
                stmts.append(f"recv({chan_name(p)});")
                if sync:
                    stmts.append(f"sendAck({ack_chan_name(p)});")
            stmts.append(f"currPort_{cid} = {port_symbol(p)};")
            stmts.append(f"{var_symbol(p.var)} = value;")
            stmts.extend(_passign(t.update, strings))
            stmts.append(f"currentLocation = {sanitize(t.dst)};")
            return stmts
        guard = _pexpr(t.guard, strings)
        if guard == "true":
            return arm(t)
        return ["if", f":: ({guard}) ->"] + ["   " + s for s in arm(t)] + ["fi;"]

    # Several alternatives: inner if with one executability condition each.
    stmts = ["if"]
    for t in outs:
        if t.port is not None and t.port.ctype == "r":
            cond = f"recv({chan_name(t.port)})"
        else:
            cond = f"({_pexpr(t.guard, strings)})"
        stmts.append(f":: {cond} ->")
        body = arm(t)
        if t.port is not None and t.port.ctype == "r":
            # The channel read already happened in the condition.
            pass
        stmts.extend("   " + s for s in body)
    stmts.append("fi;")
    return stmts


# --------------------------------------------------------------------------
# LTL templates
# --------------------------------------------------------------------------

def _end_port(comp: AtomicComponent):
    """The port observed when a component reaches its end location."""
    if comp.end is None:
        return None
    for t in comp.transitions:
        if t.dst == comp.end and t.port is not None:
            return t.port
    return None


def _cyclic_transitions(comp: AtomicComponent):
    """Transitions that lie on a cycle of the component's location graph."""
    adj = {}
    for t in comp.transitions:
        adj.setdefault(t.src, []).append(t.dst)

    def reaches(src, dst):
        seen, todo = set(), [src]
        while todo:
            cur = todo.pop()
            if cur == dst:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            todo.extend(adj.get(cur, []))
        return False

    return [t for t in comp.transitions if reaches(t.dst, t.src)]


def _is_control(port: Port) -> bool:
    return "@" in port.name


def _next_data_send(comp: AtomicComponent, loc: str):
    """First non-control send reached from ``loc`` along a unique path of
    silent or control transitions, or None."""
    for _ in range(len(comp.transitions) + 1):
        outs = comp.outgoing(loc)
        if len(outs) != 1:
            return None
        t = outs[0]
        if t.port is not None and t.port.is_send and not _is_control(t.port):
            return t.port
        if t.port is None or _is_control(t.port):
            loc = t.dst
            continue
        return None
    return None


def _obs(comp_id: str, port: Port) -> str:
    return f"(currPort_{sanitize(comp_id)} == {port_symbol(port)})"


def ltl_templates(sys: CompositeSystem) -> list:
    """Instantiate the four property templates; returns (name, formula)."""
    out = []

    # 1. Correct termination: if any process reaches its ending interface,
    #    eventually all of them do.
    ends = [(c.id, _end_port(c)) for c in sys.components]
    ends = [(cid, p) for cid, p in ends if p is not None]
    if ends:
        any_end = " || ".join(_obs(cid, p) for cid, p in ends)
        all_end = " && ".join(_obs(cid, p) for cid, p in ends)
        out.append(("termination", f"[] (({any_end}) -> <> ({all_end}))"))

    # 2. Absence of livelock: no recurring receive port is used infinitely
    #    often.
    for comp in sys.components:
        seen = []
        for t in _cyclic_transitions(comp):
            p = t.port
            if p is None or p.ctype != "r" or _is_control(p) or p in seen:
                continue
            seen.append(p)
            out.append((f"livelock_{port_symbol(p)}",
                        f"! ([] <> {_obs(comp.id, p)})"))

    # 3. Uniqueness of interface calls: a non-recurring send port fires at
    #    most once.
    for comp in sys.components:
        cyclic = set(_cyclic_transitions(comp))
        for t in comp.transitions:
            p = t.port
            if p is None or not p.is_send or _is_control(p) or t in cyclic:
                continue
            obs = _obs(comp.id, p)
            out.append((f"uniqueness_{port_symbol(p)}",
                        f"[] ({obs} -> X ([] (! {obs})))"))

    # 4. Correct transaction: a send that follows a receive (possibly through
    #    silent/control synchronization steps) does not happen before the
    #    matching trigger send.
    for comp in sys.components:
        for t in comp.transitions:
            p = t.port
            if p is None or p.ctype != "r" or _is_control(p):
                continue
            trigger = _sender_of_receive(sys, p)
            if trigger is None or _is_control(trigger):
                continue
            q = _next_data_send(comp, t.dst)
            if q is None:
                continue
            out.append((
                f"transaction_{port_symbol(q)}",
                f"[] ((! {_obs(comp.id, q)}) U "
                f"{_obs(trigger.owner, trigger)})"))
    # Deduplicate by name, keeping first occurrences.
    seen_names = set()
    unique = []
    for name, formula in out:
        if name in seen_names:
            continue
        seen_names.add(name)
        unique.append((name, formula))
    return unique


def format_ltl(ltl: list) -> str:
    return "".join(f"{name} : {formula}\n" for name, formula in ltl)


# --------------------------------------------------------------------------
# Minimal syntactic validator
# --------------------------------------------------------------------------

_LINE_PATTERNS = [
    re.compile(r"^#define \w+(\(\w+\))? .+$"),
    re.compile(r"^(/\*.*)|(.*\*/)$"),
    re.compile(r"^(bool|int) \w+( = .+)?;$"),
    re.compile(r"^chan \w+ = \[\w+\] of \{ (int|bool) \};$"),
    re.compile(r"^proctype \w+\(\) \{$"),
    re.compile(r"^(init|atomic) \{$"),
    re.compile(r"^run \w+\(\);$"),
    re.compile(r"^(do|od;|if|fi;|\}|break;|skip;|:: if)$"),
    re.compile(r"^:: .*(->|;|break;)$"),
    re.compile(r"^ltl \w+ \{ .+ \}$"),
    re.compile(r"^[\w\[\]\(\)\.!?><=&|%+*/ _,-]+;$"),  # plain statements
]


def validate_promela(text: str) -> list:
    """Shallow syntactic check: bracket balance, do/od and if/fi pairing,
    and line-level shape. Returns a list of error strings (empty = pass)."""
    errors = []
    depth_brace = 0
    stack = []
    in_comment = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if in_comment:
            if "*/" in line:
                in_comment = False
            continue
        if line.startswith("/*") and "*/" not in line:
            in_comment = True
            continue
        depth_brace += line.count("{") - line.count("}")
        if depth_brace < 0:
            errors.append(f"line {lineno}: unbalanced '}}'")
        if re.search(r"(^|\s)do$", line):
            stack.append(("do", lineno))
        if re.search(r"(^|\s|::\s)if$", line) or line.endswith("-> if") or line == "if":
            stack.append(("if", lineno))
        if line.startswith("od"):
            if not stack or stack.pop()[0] != "do":
                errors.append(f"line {lineno}: 'od' without matching 'do'")
        if line.startswith("fi"):
            if not stack or stack.pop()[0] != "if":
                errors.append(f"line {lineno}: 'fi' without matching 'if'")
        if not any(p.match(line) for p in _LINE_PATTERNS):
            errors.append(f"line {lineno}: unrecognized statement: {line!r}")
    if depth_brace != 0:
        errors.append("unbalanced braces at end of file")
    for kind, lineno in stack:
        errors.append(f"line {lineno}: unclosed '{kind}'")
    return errors
