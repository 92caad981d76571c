"""Small AST rewriting toolkit for the source-to-source transforms.

Rewrites rebuild frozen nodes with ``dataclasses.replace``, so untouched
nodes keep their ``nid`` and the type tables of the original program stay
usable while a transform is being assembled.  ``finish`` then formats,
re-parses and re-checks the result, which assigns fresh positions and
ids.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace

from ..errors import MJError, TransformTypeError
from ..minilang import ast as A
from ..minilang.checker import type_check
from ..minilang.formatter import format_program
from ..minilang.parser import parse_program

_LITERALS = (A.IntLit, A.FloatLit, A.BoolLit, A.CharLit, A.NullLit)


def fingerprint(p):
    """Identity of a program version: hash of its canonical text."""
    return hashlib.sha256(format_program(p).encode()).hexdigest()[:16]


def finish(program, filename=None):
    text = format_program(program)
    try:
        return type_check(parse_program(text, filename), filename)
    except MJError as exc:
        raise TransformTypeError(f"transformed program does not check: {exc}") from exc


# ------------------------------------------------------------------ expressions


def map_expr(e, fn):
    """Bottom-up rebuild; ``fn(node)`` returns a replacement or None to keep it."""
    if e is None:
        return None
    if isinstance(e, A.Call):
        n = replace(e, recv=map_expr(e.recv, fn), args=tuple(map_expr(a, fn) for a in e.args))
    elif isinstance(e, A.FieldAccess):
        n = replace(e, obj=map_expr(e.obj, fn))
    elif isinstance(e, A.Index):
        n = replace(e, array=map_expr(e.array, fn), index=map_expr(e.index, fn))
    elif isinstance(e, (A.Unary, A.Cast)):
        n = replace(e, operand=map_expr(e.operand, fn))
    elif isinstance(e, A.Binary):
        n = replace(e, left=map_expr(e.left, fn), right=map_expr(e.right, fn))
    elif isinstance(e, A.NewArray):
        n = replace(e, size=map_expr(e.size, fn))
    else:
        n = e
    r = fn(n)
    return n if r is None else r


def map_stmt(s, fn, sfn=None):
    """Apply ``fn`` to every expression of ``s`` (recursively through bodies).

    ``sfn(stmt)``, if given, may return a list of statements to splice in
    place of a (rebuilt) statement.
    """
    if isinstance(s, A.VarDecl):
        n = replace(s, decls=tuple(replace(d, init=map_expr(d.init, fn)) for d in s.decls))
    elif isinstance(s, A.Assign):
        n = replace(s, target=map_expr(s.target, fn), value=map_expr(s.value, fn))
    elif isinstance(s, A.IncDec):
        n = replace(s, target=map_expr(s.target, fn))
    elif isinstance(s, A.ExprStmt):
        n = replace(s, expr=map_expr(s.expr, fn))
    elif isinstance(s, A.Return):
        n = replace(s, value=map_expr(s.value, fn))
    elif isinstance(s, A.If):
        n = replace(s, cond=map_expr(s.cond, fn), then=map_stmts(s.then, fn, sfn),
                    orelse=None if s.orelse is None else map_stmts(s.orelse, fn, sfn))
    elif isinstance(s, A.For):
        init = None if s.init is None else _single(map_stmt(s.init, fn, sfn))
        upd = None if s.update is None else _single(map_stmt(s.update, fn, sfn))
        n = replace(s, init=init, cond=map_expr(s.cond, fn), update=upd,
                    body=map_stmts(s.body, fn, sfn))
    elif isinstance(s, A.While):
        n = replace(s, cond=map_expr(s.cond, fn), body=map_stmts(s.body, fn, sfn))
    else:
        n = s
    if sfn is not None:
        r = sfn(n)
        if r is not None:
            return list(r)
    return [n]


def _single(lst):
    if len(lst) != 1:
        raise TransformTypeError("a for header statement cannot be expanded")
    return lst[0]


def map_stmts(stmts, fn, sfn=None):
    out = []
    for s in stmts:
        out.extend(map_stmt(s, fn, sfn))
    return tuple(out)


def keep(e):
    return None


# ------------------------------------------------------------------ names


def rename_locals(tp, stmts, mapping):
    """Rename local variables (uses and declarations) in ``stmts``."""
    if not mapping:
        return tuple(stmts)

    def fn(e):
        if isinstance(e, A.Name) and e.id in mapping and tp.names.get(e.nid, "local") == "local":
            return replace(e, id=mapping[e.id])
        return None

    def sfn(s):
        if isinstance(s, A.VarDecl):
            return [replace(s, decls=tuple(replace(d, name=mapping.get(d.name, d.name))
                                           for d in s.decls))]
        return None

    return map_stmts(stmts, fn, sfn)


def substitute(tp, stmts, mapping):
    """Replace reads of locals by expressions (``mapping``: name -> Expr)."""
    def fn(e):
        if isinstance(e, A.Name) and e.id in mapping and tp.names.get(e.nid, "local") == "local":
            return mapping[e.id]
        return None
    return map_stmts(stmts, fn)


def method_names(m):
    """Every identifier a method declares or mentions (for fresh-name picking)."""
    out = {p.name for p in m.params}
    for n in A.walk_stmts(m.body):
        if isinstance(n, A.VarDecl):
            out.update(d.name for d in n.decls)
        elif isinstance(n, A.Name):
            out.add(n.id)
    return out


def fresh(base, taken):
    name = base
    k = 2
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    taken.add(name)
    return name


def is_simple(tp, e):
    """Side-effect-free operand that can be duplicated without changing meaning."""
    if isinstance(e, _LITERALS) or isinstance(e, A.This):
        return True
    return isinstance(e, A.Name) and tp.names.get(e.nid) == "local"


# ------------------------------------------------------------------ arithmetic


def add_offset(e, k):
    """``e + k`` with constant folding of ``x + c`` and ``x - c`` shapes."""
    if k == 0:
        return e
    if isinstance(e, A.IntLit):
        return A.IntLit(e.value + k)
    if isinstance(e, A.Binary) and isinstance(e.right, A.IntLit) and e.op in ("+", "-"):
        c = e.right.value if e.op == "+" else -e.right.value
        c += k
        if c == 0:
            return e.left
        if c > 0:
            return A.Binary("+", e.left, A.IntLit(c))
        return A.Binary("-", e.left, A.IntLit(-c))
    return A.Binary("+", e, A.IntLit(k))


def shift_index(tp, stmts, var, k):
    """Replace reads of local ``var`` by ``var + k`` and fold ``var + c``."""
    if k == 0:
        return tuple(stmts)

    # substituted names carry nid -2 until folding is done, so only the
    # offsets introduced here are folded, never the program's own sums
    def fn(e):
        if isinstance(e, A.Name) and e.id == var and tp.names.get(e.nid, "local") == "local":
            return A.Binary("+", A.Name(var, nid=-2), A.IntLit(k))
        return None

    def clean(e):
        if isinstance(e, A.Binary) and isinstance(e.left, A.Name) and e.left.nid == -2:
            return replace(e, left=replace(e.left, nid=-1))
        if isinstance(e, A.Name) and e.nid == -2:
            return replace(e, nid=-1)
        return None

    return map_stmts(_fold(map_stmts(stmts, fn)), clean)


def _fold(stmts):
    def fn(e):
        # (var + k) + c  ->  var + (k + c)
        if isinstance(e, A.Binary) and e.op in ("+", "-") and isinstance(e.right, A.IntLit) \
                and isinstance(e.left, A.Binary) and e.left.op == "+" \
                and isinstance(e.left.left, A.Name) and e.left.left.nid == -2 \
                and isinstance(e.left.right, A.IntLit):
            c = e.right.value if e.op == "+" else -e.right.value
            return add_offset(A.Binary("+", replace(e.left.left, nid=-1), e.left.right), c)
        return None
    return map_stmts(stmts, fn)


# ------------------------------------------------------------------ statements


def replace_stmt(stmts, nid, fn):
    """Splice ``fn(stmt)`` (a list) in place of the statement with ``nid``; recursive."""
    found = [False]

    def walk(lst):
        out = []
        for s in lst:
            if s.nid == nid:
                found[0] = True
                out.extend(fn(s))
                continue
            out.append(_descend(s, walk))
        return tuple(out)

    res = walk(stmts)
    return res, found[0]


def _descend(s, walk):
    if isinstance(s, A.If):
        return replace(s, then=walk(s.then), orelse=None if s.orelse is None else walk(s.orelse))
    if isinstance(s, (A.For, A.While)):
        return replace(s, body=walk(s.body))
    return s


def replace_list(stmts, owner_nid, fn):
    """Rewrite the whole statement list that directly contains statement ``owner_nid``."""
    found = [False]

    def walk(lst):
        if any(s.nid == owner_nid for s in lst):
            found[0] = True
            return tuple(fn(tuple(lst)))
        return tuple(_descend(s, walk) for s in lst)

    res = walk(stmts)
    return res, found[0]


def with_method_body(program, cls, method, body):
    classes = []
    for c in program.classes:
        if c.name == cls:
            ms = tuple(replace(m, body=tuple(body)) if m.name == method else m for m in c.methods)
            c = replace(c, methods=ms)
        classes.append(c)
    return replace(program, classes=tuple(classes))


def with_public_field(program, cls, fname):
    classes = []
    for c in program.classes:
        if c.name == cls:
            fs = tuple(replace(f, public=True) if f.name == fname else f for f in c.fields)
            c = replace(c, fields=fs)
        classes.append(c)
    return replace(program, classes=tuple(classes))


def find_stmt(stmts, nid):
    for n in A.walk_stmts(stmts):
        if isinstance(n, A.Stmt) and n.nid == nid:
            return n
    return None


def enclosing_list(stmts, nid):
    """The statement list directly holding statement ``nid``, or None."""
    if any(s.nid == nid for s in stmts):
        return tuple(stmts)
    for s in stmts:
        subs = []
        if isinstance(s, A.If):
            subs = [s.then] + ([s.orelse] if s.orelse is not None else [])
        elif isinstance(s, (A.For, A.While)):
            subs = [s.body]
        for sub in subs:
            r = enclosing_list(sub, nid)
            if r is not None:
                return r
    return None
