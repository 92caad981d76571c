"""Recursive-descent parser for MJ.

See ``docs/mj-grammar.md`` for the grammar.  Every node gets a source
position and a per-parse unique ``nid``.
"""

from __future__ import annotations

from ..errors import EmptySource, MJSyntaxError
from . import ast as A
from .lexer import tokenize

PRIMS = ("int", "float", "bool", "boolean", "char")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=")
INT_MAX = 2**31 - 1

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)


class Parser:
    def __init__(self, source, filename=None):
        self.filename = filename
        self.toks = tokenize(source, filename)
        self.i = 0
        self._nid = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def at(self, *texts, k=0):
        t = self.peek(k) if k else self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def error(self, expected, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        exp = (expected,) if isinstance(expected, str) else tuple(expected)
        raise MJSyntaxError(
            f"expected {' or '.join(exp)}, found {found!r}",
            tok.line, tok.col, expected=exp, filename=self.filename,
        )

    def expect(self, text):
        if not self.at(text):
            self.error(f"'{text}'")
        return self.advance()

    def ident(self):
        if self.tok.kind != "ident":
            self.error("identifier")
        return self.advance()

    def nid(self):
        self._nid += 1
        return self._nid

    @staticmethod
    def where(tok):
        return (tok.line, tok.col)

    # -- declarations ---------------------------------------------------------

    def program(self):
        if self.tok.kind == "eof":
            raise EmptySource("empty source", 1, 1, filename=self.filename)
        classes = []
        while self.tok.kind != "eof":
            classes.append(self.class_decl())
        return A.Program(tuple(classes))

    def class_decl(self):
        start = self.expect("class")
        name = self.ident().text
        self.expect("{")
        fields, methods = [], []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("'}'")
            member = self.member()
            (fields if isinstance(member, A.FieldDecl) else methods).append(member)
        self.expect("}")
        return A.ClassDecl(name, tuple(fields), tuple(methods), pos=self.where(start))

    def member(self):
        start = self.tok
        public = False
        if self.at("public"):
            self.advance()
            public = True
        if self.at("void"):
            self.advance()
            rtype = None
        else:
            rtype = self.type_ref()
        name = self.ident().text
        if self.at(";"):
            if rtype is None:
                self.error("'('")
            self.advance()
            return A.FieldDecl(rtype, name, public, pos=self.where(start))
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptok = self.tok
                ptype = self.type_ref()
                pname = self.ident().text
                params.append(A.Param(ptype, pname, pos=self.where(ptok)))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        body = self.block()
        return A.MethodDecl(name, tuple(params), rtype, body, public, pos=self.where(start))

    def starts_type(self):
        t = self.tok
        if t.kind == "kw" and t.text in PRIMS + ("List", "Buffer"):
            return True
        if t.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "ident":
                return True
            if nxt.kind == "op" and nxt.text == "[" and self.at("]", k=2):
                return True
        return False

    def type_ref(self):
        t = self.tok
        elem = None
        if t.kind == "kw" and t.text in PRIMS:
            self.advance()
            base = "bool" if t.text == "boolean" else t.text
        elif self.at("List"):
            self.advance()
            self.expect("<")
            elem = self.ident().text
            self.expect(">")
            base = "List"
        elif self.at("Buffer"):
            self.advance()
            base = "Buffer"
        elif t.kind == "ident":
            self.advance()
            base = t.text
        else:
            self.error("type")
        array = False
        if self.at("["):
            self.advance()
            self.expect("]")
            array = True
            if self.at("["):
                self.error("identifier (multi-dimensional arrays are not supported)")
        return A.TypeRef(base, array, elem)

    # -- statements --------------------------------------------------------------

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("'}'")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def body(self):
        if self.at("{"):
            return self.block()
        return (self.statement(),)

    def statement(self):
        t = self.tok
        pos = self.where(t)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.body()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.body()
            return A.If(cond, then, orelse, pos=pos, nid=self.nid())
        if self.at("for"):
            self.advance()
            self.expect("(")
            init = None
            if not self.at(";"):
                init = self.var_decl() if self.starts_type() else self.simple()
            self.expect(";")
            cond = self.expr()
            self.expect(";")
            update = None if self.at(")") else self.simple()
            self.expect(")")
            body = self.body()
            return A.For(init, cond, update, body, pos=pos, nid=self.nid())
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return A.While(cond, self.body(), pos=pos, nid=self.nid())
        if self.at("break"):
            self.advance()
            self.expect(";")
            return A.Break(pos=pos, nid=self.nid())
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, pos=pos, nid=self.nid())
        if self.starts_type():
            s = self.var_decl()
        else:
            s = self.simple()
        self.expect(";")
        return s

    def var_decl(self):
        start = self.tok
        tref = self.type_ref()
        decls = []
        while True:
            nt = self.ident()
            init = None
            if self.at("="):
                self.advance()
                init = self.expr()
            decls.append(A.Declarator(nt.text, init, pos=self.where(nt)))
            if not self.at(","):
                break
            self.advance()
        return A.VarDecl(tref, tuple(decls), pos=self.where(start), nid=self.nid())

    def simple(self):
        """Assignment, increment/decrement, or call statement (no ';')."""
        start = self.tok
        pos = self.where(start)
        if self.at("++", "--"):
            op = self.advance().text
            target = self.postfix()
            self._check_lvalue(target, start)
            return A.IncDec(target, op, True, pos=pos, nid=self.nid())
        e = self.postfix()
        if self.at(*ASSIGN_OPS):
            op = self.advance().text
            self._check_lvalue(e, start)
            value = self.expr()
            return A.Assign(e, op, value, pos=pos, nid=self.nid())
        if self.at("++", "--"):
            op = self.advance().text
            self._check_lvalue(e, start)
            return A.IncDec(e, op, False, pos=pos, nid=self.nid())
        if not isinstance(e, A.Call):
            self.error(("'='", "'++'", "'--'", "method call"))
        return A.ExprStmt(e, pos=pos, nid=self.nid())

    def _check_lvalue(self, e, tok):
        if not isinstance(e, (A.Name, A.FieldAccess, A.Index)):
            raise MJSyntaxError("left-hand side is not assignable", tok.line, tok.col,
                                expected=("variable", "field", "array element"),
                                filename=self.filename)

    # -- expressions -------------------------------------------------------------

    def expr(self, level=0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.advance()
            right = self.expr(level + 1)
            left = A.Binary(t.text, left, right, pos=self.where(t), nid=self.nid())
        return left

    def unary(self):
        t = self.tok
        if self.at("-", "!"):
            self.advance()
            operand = self.unary()
            return A.Unary(t.text, operand, pos=self.where(t), nid=self.nid())
        if self.at("(") and self.peek().kind == "kw" and self.peek().text in ("int", "float") \
                and self.at(")", k=2):
            self.advance()
            target = self.advance().text
            self.advance()
            operand = self.unary()
            return A.Cast(target, operand, pos=self.where(t), nid=self.nid())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while True:
            t = self.tok
            if self.at("."):
                self.advance()
                name = self.ident().text
                if self.at("("):
                    args = self.args()
                    e = A.Call(e, name, args, pos=self.where(t), nid=self.nid())
                else:
                    e = A.FieldAccess(e, name, pos=self.where(t), nid=self.nid())
            elif self.at("["):
                self.advance()
                idx = self.expr()
                self.expect("]")
                e = A.Index(e, idx, pos=self.where(t), nid=self.nid())
            else:
                return e

    def args(self):
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                out.append(self.expr())
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        return tuple(out)

    def primary(self):
        t = self.tok
        pos = self.where(t)
        if t.kind == "int":
            self.advance()
            if t.value > INT_MAX:
                raise MJSyntaxError("integer literal out of range", t.line, t.col,
                                    expected=("int literal",), filename=self.filename)
            return A.IntLit(t.value, pos=pos, nid=self.nid())
        if t.kind == "float":
            self.advance()
            return A.FloatLit(t.value, pos=pos, nid=self.nid())
        if t.kind == "char":
            self.advance()
            return A.CharLit(t.value, pos=pos, nid=self.nid())
        if self.at("true", "false"):
            self.advance()
            return A.BoolLit(t.text == "true", pos=pos, nid=self.nid())
        if self.at("null"):
            self.advance()
            return A.NullLit(pos=pos, nid=self.nid())
        if self.at("this"):
            self.advance()
            return A.This(pos=pos, nid=self.nid())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("new"):
            self.advance()
            tt = self.tok
            if tt.kind == "kw" and tt.text in PRIMS or tt.kind == "ident" and self.at("[", k=1):
                self.advance()
                base = "bool" if tt.text == "boolean" else tt.text
                self.expect("[")
                size = self.expr()
                self.expect("]")
                return A.NewArray(A.TypeRef(base), size, pos=pos, nid=self.nid())
            tref = self.type_ref()
            self.expect("(")
            self.expect(")")
            return A.New(tref, pos=pos, nid=self.nid())
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                args = self.args()
                return A.Call(None, t.text, args, pos=pos, nid=self.nid())
            return A.Name(t.text, pos=pos, nid=self.nid())
        self.error("expression")


def parse_program(source, filename=None):
    """Parse MJ source text into a :class:`Program`."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return Parser(source, filename).program()


def parse_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), filename=str(path))
