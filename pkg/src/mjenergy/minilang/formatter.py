"""Canonical pretty-printer.  ``parse(format(p)) == p`` for every AST."""

from . import ast as A

INDENT = "    "

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7
_ATOM_PREC = 8

_CHAR_ESC = {"\n": "\\n", "\t": "\\t", "\0": "\\0", "'": "\\'", "\\": "\\\\", "\r": "\\r"}


def _prec(e):
    if isinstance(e, A.Binary):
        return _PREC[e.op]
    if isinstance(e, (A.Unary, A.Cast)):
        return _UNARY_PREC
    return _ATOM_PREC


def format_expr(e):
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        return repr(float(e.value))
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.CharLit):
        return "'" + _CHAR_ESC.get(e.value, e.value) + "'"
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.FieldAccess):
        return f"{_operand(e.obj, _ATOM_PREC)}.{e.name}"
    if isinstance(e, A.Index):
        return f"{_operand(e.array, _ATOM_PREC)}[{format_expr(e.index)}]"
    if isinstance(e, A.Call):
        args = ", ".join(format_expr(a) for a in e.args)
        if e.recv is None:
            return f"{e.name}({args})"
        return f"{_operand(e.recv, _ATOM_PREC)}.{e.name}({args})"
    if isinstance(e, A.Unary):
        inner = _operand(e.operand, _UNARY_PREC)
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, A.Cast):
        return f"({e.target}) {_operand(e.operand, _UNARY_PREC)}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        left = _operand(e.left, p)
        right = _operand(e.right, p + 1)
        return f"{left} {e.op} {right}"
    if isinstance(e, A.New):
        return f"new {e.type}()"
    if isinstance(e, A.NewArray):
        return f"new {e.elem.base}[{format_expr(e.size)}]"
    raise TypeError(f"cannot format {type(e).__name__}")


def _operand(e, min_prec):
    s = format_expr(e)
    if _prec(e) < min_prec:
        return f"({s})"
    return s


def format_simple(s):
    """Statement text without the trailing ';' (used in for headers)."""
    if isinstance(s, A.VarDecl):
        parts = []
        for d in s.decls:
            parts.append(d.name if d.init is None else f"{d.name} = {format_expr(d.init)}")
        return f"{s.type} {', '.join(parts)}"
    if isinstance(s, A.Assign):
        return f"{format_expr(s.target)} {s.op} {format_expr(s.value)}"
    if isinstance(s, A.IncDec):
        t = format_expr(s.target)
        return f"{s.op}{t}" if s.prefix else f"{t}{s.op}"
    if isinstance(s, A.ExprStmt):
        return format_expr(s.expr)
    raise TypeError(f"not a simple statement: {type(s).__name__}")


def format_stmts(stmts, depth):
    lines = []
    for s in stmts:
        lines.extend(format_stmt(s, depth))
    return lines


def format_stmt(s, depth):
    pad = INDENT * depth
    if isinstance(s, A.If):
        out = [f"{pad}if ({format_expr(s.cond)}) {{"]
        out += format_stmts(s.then, depth + 1)
        if s.orelse is not None:
            out.append(f"{pad}}} else {{")
            out += format_stmts(s.orelse, depth + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, A.For):
        init = "" if s.init is None else format_simple(s.init)
        upd = "" if s.update is None else format_simple(s.update)
        out = [f"{pad}for ({init}; {format_expr(s.cond)}; {upd}) {{"]
        out += format_stmts(s.body, depth + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, A.While):
        out = [f"{pad}while ({format_expr(s.cond)}) {{"]
        out += format_stmts(s.body, depth + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, A.Break):
        return [f"{pad}break;"]
    if isinstance(s, A.Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(s.value)};"]
    return [f"{pad}{format_simple(s)};"]


def format_method(m, depth=1):
    pad = INDENT * depth
    ret = "void" if m.ret is None else str(m.ret)
    params = ", ".join(f"{p.type} {p.name}" for p in m.params)
    head = f"{pad}{'public ' if m.public else ''}{ret} {m.name}({params}) {{"
    return [head, *format_stmts(m.body, depth + 1), f"{pad}}}"]


def format_program(p):
    """Canonical source text for a Program (or a TypedProgram)."""
    prog = getattr(p, "program", p)
    lines = []
    for ci, c in enumerate(prog.classes):
        if ci:
            lines.append("")
        lines.append(f"class {c.name} {{")
        for f in c.fields:
            lines.append(f"{INDENT}{'public ' if f.public else ''}{f.type} {f.name};")
        for mi, m in enumerate(c.methods):
            if mi or c.fields:
                lines.append("")
            lines.extend(format_method(m))
        lines.append("}")
    return "\n".join(lines) + "\n"
