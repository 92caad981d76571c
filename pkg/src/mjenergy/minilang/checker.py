"""Static type checking and name/call resolution.

The checker never mutates the AST: annotations live in side tables keyed by
node ``nid`` inside the returned :class:`TypedProgram`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from ..errors import MJTypeError, UnknownLibraryFunction, UnresolvedName
from . import ast as A
from . import types as T
from .library import BY_ID, GLOBAL_FUNCS, RESERVED_NAMES, lib_id


@dataclass(frozen=True)
class CallTarget:
    kind: str  # 'user' or 'lib'
    cls: Optional[str] = None
    method: Optional[str] = None
    lib: Optional[str] = None

    @property
    def key(self):
        return self.lib if self.kind == "lib" else f"{self.cls}.{self.method}"


@dataclass
class MethodInfo:
    cls: str
    name: str
    params: Tuple[Tuple[str, T.SemType], ...]
    ret: T.SemType
    decl: A.MethodDecl

    @property
    def qualname(self):
        return f"{self.cls}.{self.name}"


@dataclass
class ClassInfo:
    name: str
    fields: Dict[str, Tuple[T.SemType, bool]]
    methods: Dict[str, MethodInfo]
    decl: A.ClassDecl


@dataclass
class TypedProgram:
    program: A.Program
    classes: Dict[str, ClassInfo]
    types: Dict[int, T.SemType] = field(default_factory=dict)
    calls: Dict[int, CallTarget] = field(default_factory=dict)
    names: Dict[int, str] = field(default_factory=dict)  # Name nid -> 'local' | 'field'
    decl_types: Dict[int, T.SemType] = field(default_factory=dict)  # VarDecl nid -> type
    filename: Optional[str] = None

    def method(self, cls, name):
        return self.classes[cls].methods[name]

    def methods(self):
        for c in self.program.classes:
            for m in c.methods:
                yield self.classes[c.name].methods[m.name]

    def entry(self):
        """The program entry point: the first class declaring ``void main()``."""
        for c in self.program.classes:
            info = self.classes[c.name]
            m = info.methods.get("main")
            if m is not None and not m.params and m.ret == T.VOID:
                return m
        return None


class Checker:
    def __init__(self, program, filename=None):
        self.p = program
        self.filename = filename
        self.tp = TypedProgram(program, {}, filename=filename)

    # -- errors -----------------------------------------------------------------

    def type_error(self, node_pos, found, expected, what=None):
        line, col = node_pos
        msg = what or f"found {found}, expected {expected}"
        raise MJTypeError(msg, line, col, found=str(found), expected=str(expected),
                          filename=self.filename)

    def unresolved(self, pos, msg):
        raise UnresolvedName(msg, pos[0], pos[1], filename=self.filename)

    # -- declarations -------------------------------------------------------------

    def resolve_type(self, tref, pos):
        if tref.base in T.PRIMITIVES:
            base = T.PRIMITIVES[tref.base]
        elif tref.base == "List":
            if tref.elem not in self.user_classes:
                self.unresolved(pos, f"unknown class {tref.elem!r} in List<>")
            base = T.obj("List", tref.elem)
        elif tref.base == "Buffer":
            base = T.BUFFER
        elif tref.base in self.user_classes:
            base = T.obj(tref.base)
        else:
            self.unresolved(pos, f"unknown type {tref.base!r}")
        if tref.array:
            if base.name in ("List", "Buffer"):
                self.type_error(pos, tref, "array of primitive or user class",
                                what="arrays of library types are not supported")
            return T.array(base)
        return base

    def _check_name(self, name, pos, what):
        if name in RESERVED_NAMES:
            self.type_error(pos, name, "identifier", what=f"{what} {name!r} uses a reserved name")

    def declare(self):
        self.user_classes = set()
        for c in self.p.classes:
            self._check_name(c.name, c.pos, "class")
            if c.name in self.user_classes:
                self.type_error(c.pos, c.name, "unique class name", what=f"duplicate class {c.name!r}")
            self.user_classes.add(c.name)
        for c in self.p.classes:
            fields = {}
            for f in c.fields:
                self._check_name(f.name, f.pos, "field")
                if f.name in fields:
                    self.type_error(f.pos, f.name, "unique field", what=f"duplicate field {f.name!r}")
                fields[f.name] = (self.resolve_type(f.type, f.pos), f.public)
            methods = {}
            for m in c.methods:
                self._check_name(m.name, m.pos, "method")
                if m.name in methods:
                    self.type_error(m.pos, m.name, "unique method", what=f"duplicate method {m.name!r}")
                seen = set()
                params = []
                for prm in m.params:
                    if prm.name in seen:
                        self.type_error(prm.pos, prm.name, "unique parameter",
                                        what=f"duplicate parameter {prm.name!r}")
                    self._check_name(prm.name, prm.pos, "parameter")
                    seen.add(prm.name)
                    params.append((prm.name, self.resolve_type(prm.type, prm.pos)))
                ret = T.VOID if m.ret is None else self.resolve_type(m.ret, m.pos)
                methods[m.name] = MethodInfo(c.name, m.name, tuple(params), ret, m)
            self.tp.classes[c.name] = ClassInfo(c.name, fields, methods, c)

    # -- bodies ---------------------------------------------------------------------

    def check(self):
        self.declare()
        for c in self.p.classes:
            for m in c.methods:
                self.cls = c.name
                self.minfo = self.tp.classes[c.name].methods[m.name]
                self.scopes = [dict(self.minfo.params)]
                self.loop_depth = 0
                self.stmts(m.body)
        return self.tp

    def lookup_local(self, name):
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        return None

    def stmts(self, stmts):
        self.scopes.append({})
        for s in stmts:
            self.stmt(s)
        self.scopes.pop()

    def declare_local(self, name, t, pos):
        self._check_name(name, pos, "variable")
        if self.lookup_local(name) is not None:
            self.type_error(pos, name, "fresh name", what=f"variable {name!r} is already declared")
        self.scopes[-1][name] = t

    def stmt(self, s):
        if isinstance(s, A.VarDecl):
            t = self.resolve_type(s.type, s.pos)
            self.tp.decl_types[s.nid] = t
            for d in s.decls:
                if d.init is not None:
                    it = self.expr(d.init)
                    if not T.assignable(t, it):
                        self.type_error(d.init.pos, it, t)
                self.declare_local(d.name, t, d.pos)
        elif isinstance(s, A.Assign):
            tt = self.lvalue(s.target)
            vt = self.expr(s.value)
            if s.op == "=":
                if not T.assignable(tt, vt):
                    self.type_error(s.value.pos, vt, tt)
            else:
                for side, st in ((s.target, tt), (s.value, vt)):
                    if not st.is_numeric:
                        self.type_error(side.pos, st, "numeric")
                rt = T.arith_result(tt, vt)
                if not T.assignable(tt, rt):
                    self.type_error(s.value.pos, rt, tt)
        elif isinstance(s, A.IncDec):
            tt = self.lvalue(s.target)
            if tt != T.INT:
                self.type_error(s.target.pos, tt, T.INT)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.If):
            self.cond(s.cond)
            self.stmts(s.then)
            if s.orelse is not None:
                self.stmts(s.orelse)
        elif isinstance(s, A.For):
            self.scopes.append({})
            if s.init is not None:
                self.stmt(s.init)
            self.cond(s.cond)
            if s.update is not None:
                if isinstance(s.update, A.VarDecl):
                    self.type_error(s.update.pos, "declaration", "update statement")
                self.stmt(s.update)
            self.loop_depth += 1
            self.stmts(s.body)
            self.loop_depth -= 1
            self.scopes.pop()
        elif isinstance(s, A.While):
            self.cond(s.cond)
            self.loop_depth += 1
            self.stmts(s.body)
            self.loop_depth -= 1
        elif isinstance(s, A.Break):
            if self.loop_depth == 0:
                self.type_error(s.pos, "break", "enclosing loop", what="break outside loop")
        elif isinstance(s, A.Return):
            ret = self.minfo.ret
            if s.value is None:
                if ret != T.VOID:
                    self.type_error(s.pos, T.VOID, ret)
            else:
                vt = self.expr(s.value)
                if ret == T.VOID:
                    self.type_error(s.value.pos, vt, T.VOID)
                if not T.assignable(ret, vt):
                    self.type_error(s.value.pos, vt, ret)
        else:  # pragma: no cover - parser produces no other statements
            raise TypeError(type(s))

    def cond(self, e):
        t = self.expr(e)
        if t != T.BOOL:
            self.type_error(e.pos, t, T.BOOL)

    def lvalue(self, e):
        if isinstance(e, A.FieldAccess) and self.expr(e.obj).kind == "array":
            self.type_error(e.pos, "length", "assignable location", what="array length is read-only")
        return self.expr(e)

    # -- expressions ------------------------------------------------------------------

    def expr(self, e):
        t = self._expr(e)
        self.tp.types[e.nid] = t
        return t

    def field_type(self, cls, name, pos):
        info = self.tp.classes[cls]
        if name not in info.fields:
            self.unresolved(pos, f"class {cls} has no field {name!r}")
        ft, public = info.fields[name]
        if cls != self.cls and not public:
            self.type_error(pos, f"private field {cls}.{name}", "public field",
                            what=f"field {cls}.{name} is not public")
        return ft

    def _expr(self, e):
        if isinstance(e, A.IntLit):
            return T.INT
        if isinstance(e, A.FloatLit):
            return T.FLOAT
        if isinstance(e, A.BoolLit):
            return T.BOOL
        if isinstance(e, A.CharLit):
            return T.CHAR
        if isinstance(e, A.NullLit):
            return T.NULL
        if isinstance(e, A.This):
            return T.obj(self.cls)
        if isinstance(e, A.Name):
            lt = self.lookup_local(e.id)
            if lt is not None:
                self.tp.names[e.nid] = "local"
                return lt
            if e.id in self.tp.classes[self.cls].fields:
                self.tp.names[e.nid] = "field"
                return self.tp.classes[self.cls].fields[e.id][0]
            self.unresolved(e.pos, f"unresolved name {e.id!r}")
        if isinstance(e, A.FieldAccess):
            ot = self.expr(e.obj)
            if ot.kind == "array":
                if e.name != "length":
                    self.unresolved(e.pos, f"arrays have no field {e.name!r}")
                return T.INT
            if ot.kind != "object" or ot.name in ("List", "Buffer"):
                self.type_error(e.obj.pos, ot, "user object")
            return self.field_type(ot.name, e.name, e.pos)
        if isinstance(e, A.Index):
            at = self.expr(e.array)
            if at.kind != "array":
                self.type_error(e.array.pos, at, "array")
            it = self.expr(e.index)
            if it != T.INT:
                self.type_error(e.index.pos, it, T.INT)
            return at.elem
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.Unary):
            ot = self.expr(e.operand)
            if e.op == "-":
                if not ot.is_numeric:
                    self.type_error(e.operand.pos, ot, "numeric")
                return ot
            if ot != T.BOOL:
                self.type_error(e.operand.pos, ot, T.BOOL)
            return T.BOOL
        if isinstance(e, A.Cast):
            ot = self.expr(e.operand)
            want = T.FLOAT if e.target == "int" else T.INT
            if ot != want:
                self.type_error(e.operand.pos, ot, want)
            return T.PRIMITIVES[e.target]
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.New):
            return self.resolve_type(e.type, e.pos)
        if isinstance(e, A.NewArray):
            elem = self.resolve_type(e.elem, e.pos)
            if elem.name in ("List", "Buffer"):
                self.type_error(e.pos, elem, "primitive or user class")
            st = self.expr(e.size)
            if st != T.INT:
                self.type_error(e.size.pos, st, T.INT)
            return T.array(elem)
        raise TypeError(type(e))  # pragma: no cover

    def binary(self, e):
        lt = self.expr(e.left)
        rt = self.expr(e.right)
        op = e.op
        if op in ("&&", "||"):
            for side, st in ((e.left, lt), (e.right, rt)):
                if st != T.BOOL:
                    self.type_error(side.pos, st, T.BOOL)
            return T.BOOL
        if op in ("+", "-", "*", "/", "%"):
            for side, st in ((e.left, lt), (e.right, rt)):
                if not st.is_numeric:
                    self.type_error(side.pos, st, "numeric")
            return T.arith_result(lt, rt)
        if op in ("<", "<=", ">", ">="):
            if lt == T.CHAR and rt == T.CHAR:
                return T.BOOL
            for side, st in ((e.left, lt), (e.right, rt)):
                if not st.is_numeric:
                    self.type_error(side.pos, st, "numeric")
            return T.BOOL
        # == and !=
        if lt.is_numeric and rt.is_numeric:
            return T.BOOL
        if lt == rt and lt.kind in ("bool", "char"):
            return T.BOOL
        if lt.is_reference and rt.is_reference:
            if lt.kind == "null" or rt.kind == "null" or lt == rt:
                return T.BOOL
        self.type_error(e.right.pos, rt, lt, what=f"cannot compare {lt} with {rt}")

    def call(self, e):
        argtypes = None
        if e.recv is None:
            if e.name in GLOBAL_FUNCS:
                return self.lib_call(e, GLOBAL_FUNCS[e.name], None)
            owner = self.cls
        elif isinstance(e.recv, A.Name) and e.recv.id == "Math" and self.lookup_local("Math") is None:
            return self.lib_call(e, lib_id("Math", e.name), None)
        else:
            rt = self.expr(e.recv)
            if rt.kind != "object":
                self.type_error(e.recv.pos, rt, "object")
            if rt.name in ("List", "Buffer"):
                return self.lib_call(e, lib_id(rt.name, e.name), rt)
            owner = rt.name
        cinfo = self.tp.classes[owner]
        if e.name not in cinfo.methods:
            self.unresolved(e.pos, f"class {owner} has no method {e.name!r}")
        m = cinfo.methods[e.name]
        argtypes = [self.expr(a) for a in e.args]
        if len(argtypes) != len(m.params):
            self.type_error(e.pos, f"{len(argtypes)} arguments", f"{len(m.params)} arguments")
        for a, at, (_, pt) in zip(e.args, argtypes, m.params):
            if not T.assignable(pt, at):
                self.type_error(a.pos, at, pt)
        self.tp.calls[e.nid] = CallTarget("user", owner, e.name)
        return m.ret

    def lib_call(self, e, lid, recv_type):
        sig = BY_ID.get(lid)
        if sig is None:
            raise UnknownLibraryFunction(f"unknown library function {lid}", e.pos[0], e.pos[1],
                                         filename=self.filename)
        argtypes = [self.expr(a) for a in e.args]
        if len(argtypes) != len(sig.params):
            self.type_error(e.pos, f"{len(argtypes)} arguments", f"{len(sig.params)} arguments")
        elem = T.obj(recv_type.elem) if recv_type is not None and recv_type.elem else None
        for a, at, pt in zip(e.args, argtypes, sig.params):
            if pt == "num" or pt == "float":
                ok = at.is_numeric
            elif pt == "prim":
                ok = at.kind in ("int", "float", "bool", "char")
            elif pt == "E":
                ok = T.assignable(elem, at)
                pt = elem
            elif pt == "Buffer":
                ok = at == T.BUFFER
            else:
                ok = at == T.PRIMITIVES[pt]
            if not ok:
                self.type_error(a.pos, at, pt)
        self.tp.calls[e.nid] = CallTarget("lib", lib=lid)
        ret = sig.ret
        if ret == "E":
            return elem
        if ret == "num":
            return T.arith_result(*argtypes)
        if ret == "void":
            return T.VOID
        return T.PRIMITIVES[ret]


def type_check(program, filename=None):
    """Annotate ``program``; raises on the first type or resolution error."""
    return Checker(program, filename).check()


def load_typed(source, filename=None):
    from .parser import parse_program

    return type_check(parse_program(source, filename), filename)
