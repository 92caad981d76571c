"""Mechanical source-to-source rewrites, one per suggestion kind."""

from __future__ import annotations

from ..errors import StaleSuggestion, TransformTypeError
from ..minilang import ast as A
from .analysis import declared_in
from .detect import _assigned, _local_name, induction, type_ref
from .rewrite import (finish, fingerprint, find_stmt, fresh, is_simple, map_stmt,
                      map_stmts, method_names, rename_locals, replace_list, replace_stmt,
                      shift_index, substitute, with_method_body, with_public_field)


def apply_transform(tp, s):
    """Rewrite ``tp`` as ``s`` proposes; the result is re-parsed and re-checked."""
    if fingerprint(tp.program) != s.fingerprint:
        raise StaleSuggestion(f"{s.label} at {s.site} was detected against a different version "
                              f"of the program; detect again")
    fn = _APPLY.get(s.kind)
    if fn is None:
        raise TransformTypeError(f"unknown suggestion kind {s.kind!r}")
    return finish(fn(tp, s), tp.filename)


def _body(tp, s):
    return tp.method(s.cls, s.method).decl.body


def _put(tp, s, body):
    return with_method_body(tp.program, s.cls, s.method, body)


def _must(found, s):
    if not found:
        raise StaleSuggestion(f"{s.label}: target statement not found in {s.cls}.{s.method}")


def _nodes(root):
    return {n.nid: n for n in A.walk(root)}


# ------------------------------------------------------------------ kinds


def _if_combination(tp, s):
    first, second = s.params["first"], s.params["second"]

    def fn(lst):
        i = next(k for k, x in enumerate(lst) if x.nid == first)
        j = next(k for k, x in enumerate(lst) if x.nid == second)
        s1, s2, mid = lst[i], lst[j], lst[i + 1:j]
        merged = A.If(s1.cond, tuple(s1.then) + mid + tuple(s2.then), mid)
        return lst[:i] + (merged,) + lst[j + 1:]

    body, found = replace_list(_body(tp, s), first, fn)
    _must(found, s)
    return _put(tp, s, body)


def _inline(tp, s):
    m = tp.method(s.cls, s.method)
    stmt = find_stmt(m.decl.body, s.params["stmt"])
    if stmt is None:
        _must(False, s)
    call = _nodes(stmt)[s.params["call"]]
    callee = tp.method(*s.params["callee"])
    taken = method_names(m.decl) | set(tp.classes[m.cls].fields)
    cbody = list(callee.decl.body)
    ret = None
    if cbody and isinstance(cbody[-1], A.Return):
        ret = cbody.pop().value
    pre, subst, ren = [], {}, {}
    for (pn, pt), arg in zip(callee.params, call.args):
        if is_simple(tp, arg) and tp.types[arg.nid] == pt and not _assigned(cbody, pn):
            subst[pn] = arg
        else:
            ren[pn] = fresh(pn, taken)
            pre.append(A.VarDecl(type_ref(pt), (A.Declarator(ren[pn], arg),)))
    taken |= set(subst)
    ctx = s.params["context"]
    if ctx == "decl" and isinstance(ret, A.Name) and _local_name(tp, ret):
        # `T x = f();` where f ends in `return y;`: let y become x
        top = [d for d in cbody if isinstance(d, A.VarDecl) and len(d.decls) == 1
               and d.decls[0].name == ret.id]
        if top and tp.decl_types[top[0].nid] == tp.decl_types[stmt.nid]:
            ren[ret.id] = stmt.decls[0].name
            taken.add(stmt.decls[0].name)
    for name in sorted(declared_in(cbody)):
        if name not in ren:
            ren[name] = fresh(name, taken)
    inner = list(substitute(tp, rename_locals(tp, cbody, ren), subst))
    if ret is not None:
        ret = substitute(tp, rename_locals(tp, (A.Return(ret),), ren), subst)[0].value
    tail = []
    if ctx == "expr":
        if isinstance(ret, A.Call):
            tail = [A.ExprStmt(ret)]
    elif ctx == "decl":
        x = stmt.decls[0].name
        if not (isinstance(ret, A.Name) and ret.id == x):
            tail = [A.VarDecl(stmt.type, (A.Declarator(x, ret),))]
    elif ctx == "assign":
        tail = [A.Assign(stmt.target, "=", ret)]
    elif ctx == "return":
        tail = [A.Return(ret)]
    body, found = replace_stmt(m.decl.body, stmt.nid, lambda _: pre + inner + tail)
    _must(found, s)
    return _put(tp, s, body)


def _getter(tp, s):
    targets = set(s.params["calls"])
    fname = s.params["field"]
    hit = [0]

    def fn(e):
        if isinstance(e, A.Call) and e.nid in targets:
            hit[0] += 1
            return A.FieldAccess(e.recv, fname)
        return None

    p = tp.program
    for mi in tp.methods():
        if mi.cls == s.cls:
            continue
        p = with_method_body(p, mi.cls, mi.name, map_stmts(mi.decl.body, fn))
    if hit[0] != len(targets):
        raise StaleSuggestion(f"{s.label}: {len(targets) - hit[0]} call site(s) not found")
    return with_public_field(p, s.cls, fname)


def _apply_actions(tp, stmts, actions):
    """Splice per-statement replacements, renaming the rest of a scope when asked."""
    out = []
    lst = list(stmts)
    i = 0
    while i < len(lst):
        st = lst[i]
        if st.nid in actions:
            new, ren = actions[st.nid]
            if ren:
                lst[i + 1:] = list(rename_locals(tp, lst[i + 1:], ren))
            out.extend(new)
        elif isinstance(st, A.If):
            out.append(A.If(st.cond, _apply_actions(tp, st.then, actions),
                            None if st.orelse is None else _apply_actions(tp, st.orelse, actions),
                            st.pos, st.nid))
        elif isinstance(st, A.For):
            out.append(A.For(st.init, st.cond, st.update, _apply_actions(tp, st.body, actions),
                             st.pos, st.nid))
        elif isinstance(st, A.While):
            out.append(A.While(st.cond, _apply_actions(tp, st.body, actions), st.pos, st.nid))
        else:
            out.append(st)
        i += 1
    return tuple(out)


def _licm(tp, s):
    body = _body(tp, s)
    loop = find_stmt(body, s.params["loop"])
    if loop is None:
        _must(False, s)
    nodes = _nodes(loop)
    pre = []
    for d in s.params["decls"]:
        if not d["alias"]:
            st = nodes[d["stmt"]]
            pre.append(A.VarDecl(st.type, (A.Declarator(d["name"], st.decls[0].init),)))
    repl = {}
    for h in s.params["hoists"]:
        e = nodes[h["expr"]]
        repl[h["expr"]] = h["name"]
        if h["new"]:
            pre.append(A.VarDecl(type_ref(tp.types[e.nid]), (A.Declarator(h["name"], e),)))

    def fn(e):
        if e.nid in repl:
            return A.Name(repl[e.nid])
        return None

    loop1 = map_stmt(loop, fn)[0]
    nodes1 = _nodes(loop1)
    actions = {}
    for d in s.params["decls"]:
        st = nodes1[d["stmt"]]
        new = d["alias"] or d["name"]
        old = st.decls[0].name
        actions[st.nid] = ([], {old: new} if new != old else None)
    for o in s.params["objects"]:
        st = nodes1[o["stmt"]]
        old, new = st.decls[0].name, o["name"]
        ren = {old: new} if new != old else None
        if o["reuse"]:
            pre.append(A.VarDecl(st.type, (A.Declarator(new, st.decls[0].init),)))
            actions[st.nid] = ([], ren)
        else:
            pre.append(A.VarDecl(st.type, (A.Declarator(new),)))
            actions[st.nid] = ([A.Assign(A.Name(new), "=", st.decls[0].init)], ren)
    new_body = _apply_actions(tp, loop1.body, actions)
    if isinstance(loop1, A.For):
        loop2 = A.For(loop1.init, loop1.cond, loop1.update, new_body, loop1.pos, loop1.nid)
    else:
        loop2 = A.While(loop1.cond, new_body, loop1.pos, loop1.nid)
    body, found = replace_stmt(body, loop.nid, lambda _: pre + [loop2])
    _must(found, s)
    return _put(tp, s, body)


def _unroll(tp, s):
    m = tp.method(s.cls, s.method)
    loop = find_stmt(m.decl.body, s.params["loop"])
    ind = induction(tp, loop) if loop is not None else None
    if ind is None:
        _must(False, s)
    var, _, _, step, form = ind
    f = int(s.params["factor"])
    taken = method_names(m.decl) | set(tp.classes[m.cls].fields)
    top = [d.name for st in loop.body if isinstance(st, A.VarDecl) for d in st.decls]
    copies = []
    for k in range(f):
        b = loop.body
        if k:
            b = rename_locals(tp, b, {n: fresh(n, taken) for n in top})
        copies.extend(shift_index(tp, b, var, k * step))
    if form == "plus_eq":
        upd = A.Assign(A.Name(var), "+=", A.IntLit(step * f))
    else:
        upd = A.Assign(A.Name(var), "=", A.Binary("+", A.Name(var), A.IntLit(step * f)))
    new = A.For(loop.init, loop.cond, upd, tuple(copies), loop.pos, loop.nid)
    body, found = replace_stmt(m.decl.body, loop.nid, lambda _: [new])
    _must(found, s)
    return _put(tp, s, body)


def _library(tp, s):
    body = _body(tp, s)
    loop = find_stmt(body, s.params["loop"])
    if loop is None:
        _must(False, s)
    put = loop.body[0].expr
    bulk = A.ExprStmt(A.Call(put.recv, "putAll", (put.args[0].recv,)))
    body, found = replace_stmt(body, loop.nid, lambda _: [bulk])
    _must(found, s)
    dn = s.params.get("bound_decl", -1)
    if dn != -1:
        decl = find_stmt(body, dn)
        name = decl.decls[0].name
        used = any(isinstance(n, A.Name) and n.id == name and tp.names.get(n.nid) == "local"
                   for n in A.walk_stmts(body))
        if not used:
            body, _ = replace_stmt(body, dn, lambda _: [])
    return _put(tp, s, body)


_APPLY = {
    "IfCombination": _if_combination,
    "InnerMethodInline": _inline,
    "InterClassGetterInline": _getter,
    "LoopInvariantMotion": _licm,
    "LoopUnroll": _unroll,
    "LibrarySubstitution": _library,
}


def unified_diff(before, after, name="program.mj"):
    import difflib
    from ..minilang.formatter import format_program
    a = format_program(before.program).splitlines(keepends=True)
    b = format_program(after.program).splitlines(keepends=True)
    return "".join(difflib.unified_diff(a, b, f"a/{name}", f"b/{name}"))
