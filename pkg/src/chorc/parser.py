"""Lexer and recursive-descent parser for the .chor input language.

A source file declares components followed by one named choreography::

    comp P1 {
        var n: int = 3;
        port s: as of int binds n;
    }

    choreography main = while (P1.cond[n > 0, n := n - 1]) { ... }

Inside a port's ``[guard, update]`` bracket, bare variable names refer to
variables of the port's owner; foreign variables must be qualified (and are
then rejected by the well-formedness checker).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    BinOp, Expr, FALSE, Lit, Neg, Not, Port, Ref, SKIP, TRUE, Update,
    Variable, default_value,
)
from .lang import (
    Branch, Chor, Comm, ComponentDecl, GuardedSend, Loop, Nil, Par, Seq,
    SystemDecl,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, STRING, OP, EOF
    text: str
    line: int
    col: int


KEYWORDS = {
    "comp", "var", "port", "of", "binds", "choreography", "choice", "while",
    "nil", "skip", "true", "false", "not", "and", "or", "mod",
}

# Longest first so that e.g. ":=" is not read as ":" "=".
_SYMBOLS = (
    "||", ":=", "=>", "->", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", "[", "]", ",", ";", ".", ":", "<", ">",
    "+", "-", "*", "/", "=", "|",
)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            kind = text if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, line, col))
            col += i - start
            continue
        if c.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(Token("INT", source[start:i], line, col))
            col += i - start
            continue
        if c == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            chars = []
            while True:
                if i >= n or source[i] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                ch = source[i]
                if ch == '"':
                    i += 1
                    col += 1
                    break
                if ch == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated escape", line, col)
                    nxt = source[i + 1]
                    if nxt == "n":
                        chars.append("\n")
                    elif nxt == "t":
                        chars.append("\t")
                    elif nxt in ('"', "\\"):
                        chars.append(nxt)
                    else:
                        raise ParseError(f"unknown escape \\{nxt}", line, col)
                    i += 2
                    col += 2
                    continue
                chars.append(ch)
                i += 1
                col += 1
            tokens.append(Token("STRING", "".join(chars), start_line, start_col))
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token stream helpers ------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: str) -> bool:
        return self.cur.kind == kind

    def accept(self, kind: str) -> Token | None:
        if self.cur.kind == kind:
            tok = self.cur
            self.pos += 1
            return tok
        return None

    def expect(self, kind: str) -> Token:
        tok = self.accept(kind)
        if tok is None:
            got = self.cur.text or self.cur.kind
            raise ParseError(f"expected {kind!r}, found {got!r}",
                             self.cur.line, self.cur.col)
        return tok

    def fail(self, message: str):
        raise ParseError(message, self.cur.line, self.cur.col)

    # -- declarations --------------------------------------------------------

    def parse_file(self) -> tuple[SystemDecl, str, Chor]:
        decl = self.parse_decls(stop_at_choreography=True)
        self.expect("choreography")
        name = self.expect("IDENT").text
        self.expect("=")
        ch = self.parse_chor(decl)
        self.expect("EOF")
        return decl, name, ch

    def parse_decls(self, stop_at_choreography: bool = False) -> SystemDecl:
        comps = []
        seen = set()
        while self.at("comp"):
            c = self.parse_component()
            if c.id in seen:
                self.fail(f"duplicate component {c.id!r}")
            seen.add(c.id)
            comps.append(c)
        if not stop_at_choreography:
            self.expect("EOF")
        return SystemDecl(components=tuple(comps))

    def parse_component(self) -> ComponentDecl:
        self.expect("comp")
        cid = self.expect("IDENT").text
        self.expect("{")
        variables: list[tuple[Variable, object]] = []
        var_by_name: dict[str, Variable] = {}
        ports: list[Port] = []
        port_names = set()
        while not self.accept("}"):
            if self.accept("var"):
                name = self.expect("IDENT").text
                if name in var_by_name:
                    self.fail(f"duplicate variable {name!r} in {cid}")
                self.expect(":")
                dtype = self.parse_dtype()
                var = Variable(name=name, owner=cid, dtype=dtype)
                init = default_value(dtype)
                if self.accept("="):
                    init = self.parse_literal(dtype)
                self.expect(";")
                var_by_name[name] = var
                variables.append((var, init))
            elif self.accept("port"):
                name = self.expect("IDENT").text
                if name in port_names:
                    self.fail(f"duplicate port {name!r} in {cid}")
                self.expect(":")
                ctype_tok = self.expect("IDENT")
                if ctype_tok.text not in ("ss", "as", "r", "in"):
                    raise ParseError(f"unknown port type {ctype_tok.text!r}",
                                     ctype_tok.line, ctype_tok.col)
                self.expect("of")
                dtype = self.parse_dtype()
                self.expect("binds")
                var_name = self.expect("IDENT").text
                if var_name not in var_by_name:
                    self.fail(f"port {name!r} binds unknown variable {var_name!r}")
                var = var_by_name[var_name]
                if var.dtype != dtype:
                    self.fail(f"port {name!r} of {dtype} binds {var_name}: {var.dtype}")
                self.expect(";")
                port_names.add(name)
                ports.append(Port(name=name, owner=cid, var=var, ctype=ctype_tok.text))
            else:
                self.fail("expected 'var', 'port' or '}'")
        return ComponentDecl(id=cid, vars=tuple(variables), ports=tuple(ports))

    def parse_dtype(self) -> str:
        tok = self.expect("IDENT")
        if tok.text not in ("int", "bool", "str"):
            raise ParseError(f"unknown type {tok.text!r}", tok.line, tok.col)
        return tok.text

    def parse_literal(self, dtype: str):
        if dtype == "int":
            neg = bool(self.accept("-"))
            tok = self.expect("INT")
            return -int(tok.text) if neg else int(tok.text)
        if dtype == "bool":
            if self.accept("true"):
                return True
            self.expect("false")
            return False
        return self.expect("STRING").text

    # -- choreography terms --------------------------------------------------

    def parse_chor(self, decl: SystemDecl) -> Chor:
        left = self.parse_seq(decl)
        if self.accept("||"):
            return Par(left, self.parse_chor(decl))
        return left

    def parse_seq(self, decl: SystemDecl) -> Chor:
        left = self.parse_atom(decl)
        if self.accept(";"):
            return Seq(left, self.parse_seq(decl))
        return left

    def parse_atom(self, decl: SystemDecl) -> Chor:
        if self.accept("nil"):
            return Nil()
        if self.accept("("):
            ch = self.parse_chor(decl)
            self.expect(")")
            return ch
        if self.accept("choice"):
            return self.parse_branch(decl)
        if self.accept("while"):
            return self.parse_loop(decl)
        return self.parse_comm(decl)

    def parse_branch(self, decl: SystemDecl) -> Branch:
        master = self.expect("IDENT").text
        try:
            decl.component(master)
        except KeyError:
            self.fail(f"unknown component {master!r}")
        self.expect("{")
        conts = []
        while True:
            gs = self.parse_guarded_send(decl)
            self.expect("=>")
            conts.append((gs, self.parse_chor(decl)))
            if not self.accept("|"):
                break
        self.expect("}")
        return Branch(master=master, conts=tuple(conts))

    def parse_loop(self, decl: SystemDecl) -> Loop:
        self.expect("(")
        cond = self.parse_guarded_send(decl)
        self.expect(")")
        self.expect("{")
        body = self.parse_chor(decl)
        self.expect("}")
        return Loop(cond=cond, body=body)

    def parse_comm(self, decl: SystemDecl) -> Comm:
        send = self.parse_guarded_send(decl)
        self.expect("->")
        self.expect("{")
        rcvs = []
        if not self.at("}"):
            while True:
                port = self.parse_port_ref(decl)
                update = SKIP
                if self.accept("["):
                    update = self.parse_update(decl, port.owner)
                    self.expect("]")
                rcvs.append((port, update))
                if not self.accept(","):
                    break
        close = self.cur
        self.expect("}")
        if not rcvs:
            raise ParseError("communication needs at least one receiver",
                             close.line, close.col)
        if self.accept(":"):
            self.expect("<")
            tok = self.cur
            dtype = self.parse_dtype()
            self.expect(">")
            if dtype != send.port.dtype:
                raise ParseError(
                    f"annotation <{dtype}> does not match port "
                    f"{send.port.pid} of {send.port.dtype}",
                    tok.line, tok.col)
        return Comm(send=send, rcvs=tuple(rcvs))

    def parse_guarded_send(self, decl: SystemDecl) -> GuardedSend:
        port = self.parse_port_ref(decl)
        guard: Expr = TRUE
        update = SKIP
        if self.accept("["):
            if not self.at("]"):
                guard = self.parse_expr(decl, port.owner)
                if self.accept(","):
                    update = self.parse_update(decl, port.owner)
            self.expect("]")
        return GuardedSend(port=port, guard=guard, update=update)

    def parse_port_ref(self, decl: SystemDecl) -> Port:
        tok = self.expect("IDENT")
        self.expect(".")
        name = self.expect("IDENT").text
        try:
            comp = decl.component(tok.text)
        except KeyError:
            raise ParseError(f"unknown component {tok.text!r}", tok.line, tok.col)
        for p in comp.ports:
            if p.name == name:
                return p
        raise ParseError(f"component {tok.text} has no port {name!r}",
                         tok.line, tok.col)

    # -- updates and expressions ---------------------------------------------

    def parse_update(self, decl: SystemDecl, owner: str) -> Update:
        if self.accept("skip"):
            return SKIP
        assignments = []
        while True:
            target = self.parse_var_ref(decl, owner)
            self.expect(":=")
            assignments.append((target, self.parse_expr(decl, owner)))
            if not self.accept(";"):
                break
        return Update(assignments=tuple(assignments))

    def parse_var_ref(self, decl: SystemDecl, owner: str) -> str:
        tok = self.expect("IDENT")
        first = tok.text
        if self.accept("."):
            comp_id, name = first, self.expect("IDENT").text
        else:
            comp_id, name = owner, first
        try:
            comp = decl.component(comp_id)
        except KeyError:
            raise ParseError(f"unknown component {comp_id!r}", tok.line, tok.col)
        for var, _ in comp.vars:
            if var.name == name:
                return var.qname
        raise ParseError(f"component {comp_id} has no variable {name!r}",
                         tok.line, tok.col)

    def parse_expr(self, decl: SystemDecl, owner: str) -> Expr:
        return self.parse_or(decl, owner)

    def parse_or(self, decl, owner) -> Expr:
        left = self.parse_and(decl, owner)
        while self.accept("or"):
            left = BinOp("or", left, self.parse_and(decl, owner))
        return left

    def parse_and(self, decl, owner) -> Expr:
        left = self.parse_cmp(decl, owner)
        while self.accept("and"):
            left = BinOp("and", left, self.parse_cmp(decl, owner))
        return left

    def parse_cmp(self, decl, owner) -> Expr:
        left = self.parse_add(decl, owner)
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.accept(op):
                return BinOp(op, left, self.parse_add(decl, owner))
        return left

    def parse_add(self, decl, owner) -> Expr:
        left = self.parse_mul(decl, owner)
        while True:
            if self.accept("+"):
                left = BinOp("+", left, self.parse_mul(decl, owner))
            elif self.accept("-"):
                left = BinOp("-", left, self.parse_mul(decl, owner))
            else:
                return left

    def parse_mul(self, decl, owner) -> Expr:
        left = self.parse_unary(decl, owner)
        while True:
            if self.accept("*"):
                left = BinOp("*", left, self.parse_unary(decl, owner))
            elif self.accept("/"):
                left = BinOp("/", left, self.parse_unary(decl, owner))
            elif self.accept("mod"):
                left = BinOp("mod", left, self.parse_unary(decl, owner))
            else:
                return left

    def parse_unary(self, decl, owner) -> Expr:
        if self.accept("not"):
            return Not(self.parse_unary(decl, owner))
        if self.accept("-"):
            return Neg(self.parse_unary(decl, owner))
        return self.parse_primary(decl, owner)

    def parse_primary(self, decl, owner) -> Expr:
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        tok = self.accept("INT")
        if tok is not None:
            return Lit(int(tok.text))
        tok = self.accept("STRING")
        if tok is not None:
            return Lit(tok.text)
        if self.accept("("):
            inner = self.parse_expr(decl, owner)
            self.expect(")")
            return inner
        if self.at("IDENT"):
            return Ref(self.parse_var_ref(decl, owner))
        self.fail("expected an expression")


def parse_source(source: str) -> tuple[SystemDecl, str, Chor]:
    """Parse a complete .chor file: declarations plus one named choreography."""
    return Parser(tokenize(source)).parse_file()


def parse_decls(source: str) -> SystemDecl:
    """Parse a declarations-only file (two-file configuration mode)."""
    return Parser(tokenize(source)).parse_decls()


def parse_chor_source(source: str, decl: SystemDecl) -> tuple[str, Chor]:
    """Parse a choreography-only file against an existing declaration."""
    p = Parser(tokenize(source))
    p.expect("choreography")
    name = p.expect("IDENT").text
    p.expect("=")
    ch = p.parse_chor(decl)
    p.expect("EOF")
    return name, ch
