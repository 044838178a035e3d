"""Shared data model: values, variables, expressions, updates, valuations, ports.

Everything here is immutable and hashable so that interpreter configurations
can be memoized structurally.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Union


class EvalError(Exception):
    """Runtime evaluation failure (division/modulo by zero, unbound variable)."""


class _Neutral:
    """The neutral communication element. Compares equal only to itself."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEUTRAL"


NEUTRAL = _Neutral()

#: Closed set of data type tags.
DATA_TYPES = ("int", "bool", "str")

#: Closed set of port communication types: synchronous send, asynchronous
#: send, receive, internal.
PORT_TYPES = ("ss", "as", "r", "in")

Value = Union[int, bool, str, _Neutral]

_DEFAULTS = {"int": 0, "bool": False, "str": ""}


def default_value(dtype: str) -> Value:
    return _DEFAULTS[dtype]


def value_dtype(value: Value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "str"
    raise TypeError(f"not a data value: {value!r}")


@dataclass(frozen=True)
class Variable:
    """A typed variable owned by one component.

    The qualified name ``owner.name`` is unique system-wide.
    """

    name: str
    owner: str
    dtype: str

    @property
    def qname(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class Port:
    """A typed communication endpoint bound to one variable of its owner."""

    name: str
    owner: str
    var: Variable
    ctype: str  # one of PORT_TYPES

    def __post_init__(self):
        assert self.ctype in PORT_TYPES, self.ctype
        assert self.var.owner == self.owner, (self.var, self.owner)

    @property
    def pid(self) -> str:
        return f"{self.owner}.{self.name}"

    @property
    def dtype(self) -> str:
        return self.var.dtype

    @property
    def is_send(self) -> bool:
        return self.ctype in ("ss", "as")


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "/", "mod")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Ref:
    """Reference to a variable by qualified name."""

    qname: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Lit, Ref, BinOp, Not, Neg]

TRUE = Lit(True)
FALSE = Lit(False)


class Valuation(Mapping):
    """An immutable total mapping from qualified variable names to values."""

    __slots__ = ("_items", "_dict", "_hash")

    def __init__(self, bindings: Mapping[str, Value] | Iterable[tuple[str, Value]] = ()):
        d = dict(bindings)
        object.__setattr__(self, "_dict", d)
        object.__setattr__(self, "_items", tuple(sorted(d.items(), key=lambda kv: kv[0])))
        object.__setattr__(self, "_hash", hash(self._items))

    def __getitem__(self, qname: str) -> Value:
        try:
            return self._dict[qname]
        except KeyError:
            raise EvalError(f"unbound variable {qname!r}") from None

    def __iter__(self):
        return iter(self._dict)

    def __len__(self):
        return len(self._dict)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Valuation):
            return self._items == other._items
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"{{{inner}}}"

    def set(self, qname: str, value: Value) -> "Valuation":
        d = dict(self._dict)
        d[qname] = value
        return Valuation(d)

    def restrict(self, qnames) -> "Valuation":
        keep = set(qnames)
        return Valuation({k: v for k, v in self._dict.items() if k in keep})


def evaluate(expr: Expr, v: Valuation) -> Value:
    """Evaluate an expression against a valuation. Pure."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Ref):
        return v[expr.qname]
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, v)
    if isinstance(expr, Not):
        return not evaluate(expr.operand, v)
    if isinstance(expr, BinOp):
        op = expr.op
        if op == "and":
            return bool(evaluate(expr.left, v)) and bool(evaluate(expr.right, v))
        if op == "or":
            return bool(evaluate(expr.left, v)) or bool(evaluate(expr.right, v))
        a = evaluate(expr.left, v)
        b = evaluate(expr.right, v)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise EvalError("division by zero")
            return a // b
        if op == "mod":
            if b == 0:
                raise EvalError("modulo by zero")
            return a % b
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        raise AssertionError(f"unknown operator {op!r}")
    raise AssertionError(f"not an expression: {expr!r}")


# --------------------------------------------------------------------------
# Update functions
# --------------------------------------------------------------------------

Assignment = tuple[str, Expr]  # (target qualified name, right-hand side)


@dataclass(frozen=True)
class Update:
    """An ordered sequence of assignments. The empty sequence is skip."""

    assignments: tuple[Assignment, ...] = ()

    @property
    def is_skip(self) -> bool:
        return not self.assignments

    def targets(self) -> set[str]:
        return {t for t, _ in self.assignments}


SKIP = Update()


def apply_update(f: Update, v: Valuation) -> Valuation:
    """Apply assignments left to right; each rhs sees the latest bindings."""
    if f.is_skip:
        return v
    d = dict(v)
    for target, rhs in f.assignments:
        d[target] = evaluate(rhs, Valuation(d))
    return Valuation(d)


def override(hi: Valuation, lo: Valuation) -> Valuation:
    """Combine valuations; ``hi`` wins on overlap.

    Keys of ``hi`` outside ``lo``'s domain are dropped, keeping the result
    total over the declared domain.
    """
    d = dict(lo)
    for k, val in hi.items():
        if k in d:
            d[k] = val
    return Valuation(d)


def transfer(v: Valuation, snd: Port, rcvs: Iterable[Port]) -> Valuation:
    """Rebind each receiver's port variable to the sender's current value."""
    assert snd.is_send, snd
    d = dict(v)
    payload = v[snd.var.qname]
    for r in rcvs:
        assert r.ctype == "r", r
        if r.dtype != snd.dtype:
            raise TypeError(f"transfer dtype mismatch: {snd.pid}:{snd.dtype} -> {r.pid}:{r.dtype}")
        d[r.var.qname] = payload
    return Valuation(d)


# --------------------------------------------------------------------------
# Expression utilities shared by the checker, printers and code generators
# --------------------------------------------------------------------------

def expr_vars(expr: Expr) -> set[str]:
    if isinstance(expr, Ref):
        return {expr.qname}
    if isinstance(expr, (Not, Neg)):
        return expr_vars(expr.operand)
    if isinstance(expr, BinOp):
        return expr_vars(expr.left) | expr_vars(expr.right)
    return set()


def update_vars(f: Update) -> set[str]:
    out = set()
    for target, rhs in f.assignments:
        out.add(target)
        out |= expr_vars(rhs)
    return out


def infer_type(expr: Expr, env: Mapping[str, str]) -> str:
    """Infer an expression's data type under ``env`` (qname -> dtype).

    Raises TypeError on ill-typed expressions.
    """
    if isinstance(expr, Lit):
        return value_dtype(expr.value)
    if isinstance(expr, Ref):
        if expr.qname not in env:
            raise TypeError(f"unknown variable {expr.qname!r}")
        return env[expr.qname]
    if isinstance(expr, Neg):
        if infer_type(expr.operand, env) != "int":
            raise TypeError("unary minus needs an int operand")
        return "int"
    if isinstance(expr, Not):
        if infer_type(expr.operand, env) != "bool":
            raise TypeError("not needs a bool operand")
        return "bool"
    if isinstance(expr, BinOp):
        lt = infer_type(expr.left, env)
        rt = infer_type(expr.right, env)
        if expr.op in ARITH_OPS:
            if expr.op == "+" and lt == rt == "str":
                return "str"
            if lt == rt == "int":
                return "int"
            raise TypeError(f"operator {expr.op!r} needs int operands, got {lt}/{rt}")
        if expr.op in CMP_OPS:
            if lt != rt:
                raise TypeError(f"comparison {expr.op!r} across types {lt}/{rt}")
            if expr.op not in ("==", "!=") and lt == "bool":
                raise TypeError(f"ordering {expr.op!r} on bool")
            return "bool"
        if expr.op in BOOL_OPS:
            if lt == rt == "bool":
                return "bool"
            raise TypeError(f"operator {expr.op!r} needs bool operands, got {lt}/{rt}")
    raise AssertionError(f"not an expression: {expr!r}")


_PRECEDENCE = {
    "or": 1,
    "and": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5, "mod": 5,
}


def format_expr(expr: Expr, strip_owner: str | None = None) -> str:
    """Render an expression in concrete syntax.

    With ``strip_owner`` set, references owned by that component print bare.
    """

    def ref_name(qname: str) -> str:
        if strip_owner is not None and qname.startswith(strip_owner + "."):
            return qname[len(strip_owner) + 1:]
        return qname

    def fmt(e: Expr, parent_prec: int) -> str:
        if isinstance(e, Lit):
            if isinstance(e.value, bool):
                return "true" if e.value else "false"
            if isinstance(e.value, str):
                escaped = e.value.replace("\\", "\\\\").replace('"', '\\"')
                return f'"{escaped}"'
            return str(e.value)
        if isinstance(e, Ref):
            return ref_name(e.qname)
        if isinstance(e, Neg):
            return f"-{fmt(e.operand, 6)}"
        if isinstance(e, Not):
            return f"not {fmt(e.operand, 6)}"
        if isinstance(e, BinOp):
            prec = _PRECEDENCE[e.op]
            text = f"{fmt(e.left, prec)} {e.op} {fmt(e.right, prec + 1)}"
            if prec < parent_prec:
                return f"({text})"
            return text
        raise AssertionError(e)

    return fmt(expr, 0)


def format_update(f: Update, strip_owner: str | None = None) -> str:
    if f.is_skip:
        return "skip"
    parts = []
    for target, rhs in f.assignments:
        name = target
        if strip_owner is not None and target.startswith(strip_owner + "."):
            name = target[len(strip_owner) + 1:]
        parts.append(f"{name} := {format_expr(rhs, strip_owner)}")
    return "; ".join(parts)
