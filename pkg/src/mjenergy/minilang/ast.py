"""Immutable AST for MJ.

Nodes compare structurally; ``pos`` (line, col) and ``nid`` (a per-parse
unique integer) are excluded from equality so a re-parsed program equals the
original.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Optional, Tuple

Pos = Tuple[int, int]
NOPOS: Pos = (0, 0)


def _meta():
    return field(default=NOPOS, compare=False, repr=False)


def _nid():
    return field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class TypeRef:
    """A type as written: base name, optional List element class, array flag."""

    base: str
    array: bool = False
    elem: Optional[str] = None  # only for List<elem>

    def __str__(self):
        s = self.base
        if self.elem is not None:
            s += f"<{self.elem}>"
        if self.array:
            s += "[]"
        return s


class Node:
    __slots__ = ()


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class FloatLit(Expr):
    value: float
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class CharLit(Expr):
    value: str
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class NullLit(Expr):
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class This(Expr):
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Name(Expr):
    id: str
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class FieldAccess(Expr):
    obj: Expr
    name: str
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Index(Expr):
    array: Expr
    index: Expr
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Call(Expr):
    recv: Optional[Expr]
    name: str
    args: Tuple[Expr, ...]
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # '-' or '!'
    operand: Expr
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Cast(Expr):
    target: str  # 'int' or 'float'
    operand: Expr
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class New(Expr):
    """``new C()``, ``new List<C>()`` or ``new Buffer()``."""

    type: TypeRef
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class NewArray(Expr):
    elem: TypeRef
    size: Expr
    pos: Pos = _meta()
    nid: int = _nid()


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Stmt(Node):
    pass


@dataclass(frozen=True)
class Declarator:
    name: str
    init: Optional[Expr] = None
    pos: Pos = _meta()


@dataclass(frozen=True)
class VarDecl(Stmt):
    type: TypeRef
    decls: Tuple[Declarator, ...]
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr
    op: str  # '=', '+=', '-=', '*=', '/=', '%='
    value: Expr
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class IncDec(Stmt):
    target: Expr
    op: str  # '++' or '--'
    prefix: bool = False
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Call
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Tuple[Stmt, ...]
    orelse: Optional[Tuple[Stmt, ...]] = None
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class For(Stmt):
    init: Optional[Stmt]
    cond: Expr
    update: Optional[Stmt]
    body: Tuple[Stmt, ...]
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Tuple[Stmt, ...]
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Break(Stmt):
    pos: Pos = _meta()
    nid: int = _nid()


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr] = None
    pos: Pos = _meta()
    nid: int = _nid()


# --------------------------------------------------------------- declarations


@dataclass(frozen=True)
class Param:
    type: TypeRef
    name: str
    pos: Pos = _meta()


@dataclass(frozen=True)
class FieldDecl:
    type: TypeRef
    name: str
    public: bool = False
    pos: Pos = _meta()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: Tuple[Param, ...]
    ret: Optional[TypeRef]  # None means void
    body: Tuple[Stmt, ...]
    public: bool = False
    pos: Pos = _meta()


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: Tuple[FieldDecl, ...]
    methods: Tuple[MethodDecl, ...]
    pos: Pos = _meta()

    def method(self, name):
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def field(self, name):
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass(frozen=True)
class Program:
    classes: Tuple[ClassDecl, ...]

    def cls(self, name):
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)


# ------------------------------------------------------------------- helpers


def children(node):
    """Direct child nodes (expressions and statements) in evaluation order."""
    if isinstance(node, Call):
        out = [] if node.recv is None else [node.recv]
        out.extend(node.args)
        return out
    if isinstance(node, FieldAccess):
        return [node.obj]
    if isinstance(node, Index):
        return [node.array, node.index]
    if isinstance(node, (Unary, Cast)):
        return [node.operand]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, NewArray):
        return [node.size]
    if isinstance(node, VarDecl):
        return [d.init for d in node.decls if d.init is not None]
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, IncDec):
        return [node.target]
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, Return):
        return [] if node.value is None else [node.value]
    if isinstance(node, If):
        return [node.cond, *node.then, *(node.orelse or ())]
    if isinstance(node, For):
        out = [] if node.init is None else [node.init]
        out.append(node.cond)
        if node.update is not None:
            out.append(node.update)
        out.extend(node.body)
        return out
    if isinstance(node, While):
        return [node.cond, *node.body]
    return []


def walk(node):
    """Pre-order traversal of ``node`` and everything beneath it."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def walk_stmts(stmts):
    for s in stmts:
        yield from walk(s)


def strip_meta(node):
    """Copy of ``node`` with positions and ids reset (for debugging dumps)."""
    if isinstance(node, tuple):
        return tuple(strip_meta(n) for n in node)
    if not is_dataclass(node):
        return node
    kw = {}
    for f in fields(node):
        v = getattr(node, f.name)
        if f.name == "pos":
            v = NOPOS
        elif f.name == "nid":
            v = -1
        else:
            v = strip_meta(v)
        kw[f.name] = v
    return replace(node, **kw)
