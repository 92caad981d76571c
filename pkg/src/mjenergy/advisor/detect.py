"""Detectors for the six refactoring kinds.

Each detector returns suggestions whose ``params`` hold a complete
rewrite plan in terms of node ids of the analysed program version, so
``apply_transform`` never has to re-run the analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..cfg import build_program_cfg
from ..minilang import ast as A
from ..minilang import types as T
from ..minilang.formatter import format_expr, format_simple
from .analysis import Analysis, LoopContext, declared_in
from .rewrite import fingerprint, method_names
from .suggestion import Suggestion

GETTER_NOTE = ("inlining this getter makes field {f} of {c} public; the encapsulation "
               "trade-off is for the developers to decide, so it is only applied on request")


@dataclass
class Thresholds:
    min_calls: int = 1000
    max_inline_stmts: int = 5
    unroll_factors: Sequence[int] = (8,)
    max_unrolled_stmts: int = 32

    def to_dict(self):
        return {"min_calls": self.min_calls, "max_inline_stmts": self.max_inline_stmts,
                "unroll_factors": list(self.unroll_factors),
                "max_unrolled_stmts": self.max_unrolled_stmts}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d.get("min_calls", 1000)), int(d.get("max_inline_stmts", 5)),
                   tuple(d.get("unroll_factors", (8,))), int(d.get("max_unrolled_stmts", 32)))


class ProgramFacts:
    """One analysed program version shared by all detectors."""

    def __init__(self, tp, profile=None, g=None):
        self.tp = tp
        self.an = Analysis(tp)
        self.g = g if g is not None else build_program_cfg(tp)
        self.fp = fingerprint(tp.program)
        if profile is not None and profile.fingerprint != self.fp:
            raise ValueError("profile was recorded for a different program version")
        self.profile = profile
        self._ctx = {}

    def block_of(self, stmt):
        return self.g.blocks[self.g.stmt_block[stmt.nid]].id

    def body_id(self, loop):
        return self.g.blocks[self.g.loop_blocks[loop.nid][2]].id

    def loop_ctx(self, cls, loop):
        if loop.nid not in self._ctx:
            self._ctx[loop.nid] = LoopContext(self.an, cls, loop)
        return self._ctx[loop.nid]

    def min_trips(self, loop):
        if self.profile is None:
            return None
        return self.profile.min_trips(self.body_id(loop))

    def suggestion(self, kind, site, m, nodes, params, notes="", opt_in=False, nids=None):
        pos = tuple(n.pos for n in nodes)
        nids = tuple(n.nid for n in nodes) if nids is None else tuple(nids)
        return Suggestion(kind, site, m.cls, m.name, pos, nids, self.fp, params, notes, opt_in)


def _lists(stmts):
    yield stmts
    for s in stmts:
        if isinstance(s, A.If):
            yield from _lists(s.then)
            if s.orelse is not None:
                yield from _lists(s.orelse)
        elif isinstance(s, (A.For, A.While)):
            yield from _lists(s.body)


def _loops(stmts, chain=()):
    """Every loop with the tuple of loops enclosing it (outermost first)."""
    for lst in _direct_lists(stmts):
        for s in lst:
            if isinstance(s, (A.For, A.While)):
                yield s, chain
                yield from _loops(s.body, chain + (s,))


def _direct_lists(stmts):
    # statement lists reachable without entering a loop body
    yield stmts
    for s in stmts:
        if isinstance(s, A.If):
            yield from _direct_lists(s.then)
            if s.orelse is not None:
                yield from _direct_lists(s.orelse)


def _has(nodes, cls):
    return any(isinstance(n, cls) for n in A.walk_stmts(nodes))


def _breaks_out(stmts):
    """A break that would leave the loop owning ``stmts``."""
    for s in stmts:
        if isinstance(s, A.Break):
            return True
        if isinstance(s, A.If):
            if _breaks_out(s.then) or (s.orelse is not None and _breaks_out(s.orelse)):
                return True
    return False


def _assigned(nodes, name):
    for n in A.walk_stmts(nodes):
        if isinstance(n, (A.Assign, A.IncDec)) and isinstance(n.target, A.Name) \
                and n.target.id == name:
            return True
    return False


def _local_name(tp, e, name=None):
    return isinstance(e, A.Name) and tp.names.get(e.nid) == "local" and (name is None or e.id == name)


# ------------------------------------------------------------------ if combination


def detect_if_combination(tp, prog=None):
    prog = prog or ProgramFacts(tp)
    out = []
    for m in tp.methods():
        for lst in _lists(m.decl.body):
            for i, s1 in enumerate(lst):
                if not isinstance(s1, A.If) or s1.orelse is not None:
                    continue
                j = next((k for k in range(i + 1, len(lst)) if isinstance(lst[k], A.If)
                          and lst[k].cond == s1.cond), None)
                if j is None or lst[j].orelse is not None:
                    continue
                s2 = lst[j]
                mid = lst[i + 1:j]
                if not _if_pair_safe(prog, m.cls, s1, mid, s2):
                    continue
                cond = format_expr(s1.cond)
                out.append(prog.suggestion(
                    "IfCombination", prog.block_of(s1), m, (s1, s2),
                    {"first": s1.nid, "second": s2.nid, "key": f"{cond}@{i}",
                     "summary": f"merge the two `if ({cond})` tests, duplicating "
                                f"{len(mid)} statement(s) into the else branch"},
                    "the condition has no effects and nothing between the tests writes what "
                    "it reads"))
    return out


def _if_pair_safe(prog, cls, s1, mid, s2):
    tp, an = prog.tp, prog.an
    ce = an.effects_of(cls, s1.cond)
    if not ce.pure:
        return False
    if any(isinstance(s, A.VarDecl) for s in mid):
        return False
    # names declared at the top of the first branch stay in scope for the
    # rest of the merged branch; they must not capture anything there
    later = set()
    for n in A.walk_stmts(tuple(mid) + tuple(s2.then)):
        if isinstance(n, A.Name):
            later.add(n.id)
        elif isinstance(n, A.VarDecl):
            later.update(d.name for d in n.decls)
    top = {d.name for s in s1.then if isinstance(s, A.VarDecl) for d in s.decls}
    if top & later:
        return False
    we = an.effects_of(cls, tuple(s1.then) + tuple(mid))
    if we.writes & ce.reads or we.mutates & ce.lib_reads:
        return False
    if we.array_writes and _has((s1.cond,), A.Index):
        return False
    cond_locals = {n.id for n in A.walk(s1.cond) if _local_name(tp, n)}
    return not (we.locals_written & cond_locals)


# ------------------------------------------------------------------ inlining


def _callee_shape(tp, an, key, max_stmts):
    """Why (cls, method) cannot be inlined, or None when it can."""
    mi = tp.method(*key)
    body = mi.decl.body
    if an.recursive(key):
        return "recursive"
    if len(body) > max_stmts:
        return "body too long"
    rets = [n for n in A.walk_stmts(body) if isinstance(n, A.Return)]
    if rets and (len(rets) > 1 or body[-1] is not rets[0]):
        return "return before the end"
    if rets and rets[0].value is not None and tp.types[rets[0].value.nid] != mi.ret:
        return "return converts its value"
    return None


def _call_contexts(tp, body):
    """(statement, call, context) for calls that form a whole statement."""
    for lst in _lists(body):
        for s in lst:
            if isinstance(s, A.ExprStmt):
                yield s, s.expr, "expr"
            elif isinstance(s, A.VarDecl) and len(s.decls) == 1 and isinstance(s.decls[0].init, A.Call):
                yield s, s.decls[0].init, "decl"
            elif isinstance(s, A.Assign) and s.op == "=" and _local_name(tp, s.target) \
                    and isinstance(s.value, A.Call):
                yield s, s.value, "assign"
            elif isinstance(s, A.Return) and isinstance(s.value, A.Call):
                yield s, s.value, "return"


def detect_inline_candidates(tp, profile, thresholds=None, prog=None):
    th = thresholds or Thresholds()
    prog = prog or ProgramFacts(tp, profile)
    out = []
    if profile is None:
        return out
    an = prog.an
    calls = profile.method_calls(tp)
    for m in tp.methods():
        caller_vars = {p for p, _ in m.params} | declared_in(m.decl.body)
        seen = {}
        for stmt, call, ctx in _call_contexts(tp, m.decl.body):
            t = tp.calls[call.nid]
            if t.kind != "user" or t.cls != m.cls:
                continue
            if call.recv is not None and not isinstance(call.recv, A.This):
                continue
            key = (t.cls, t.method)
            k = seen[key] = seen.get(key, -1) + 1
            if key == (m.cls, m.name) or calls.get(key, 0) < th.min_calls:
                continue
            if _callee_shape(tp, an, key, th.max_inline_stmts) is not None:
                continue
            callee = tp.method(*key)
            fnames = {n.id for n in A.walk_stmts(callee.decl.body)
                      if isinstance(n, A.Name) and tp.names.get(n.nid) == "field"}
            if fnames & caller_vars:
                continue
            body = callee.decl.body
            ret = body[-1].value if body and isinstance(body[-1], A.Return) else None
            if ctx == "expr" and ret is not None and not isinstance(ret, A.Call) \
                    and not isinstance(ret, (A.Name, A.IntLit, A.FloatLit, A.BoolLit, A.CharLit,
                                             A.NullLit, A.This)):
                continue
            out.append(prog.suggestion(
                "InnerMethodInline", prog.block_of(stmt), m, (stmt, call),
                {"stmt": stmt.nid, "call": call.nid, "context": ctx, "callee": list(key),
                 "calls": calls[key], "key": f"{t.method}#{k}",
                 "summary": f"inline {callee.qualname} ({calls[key]} profiled calls)"},
                f"{callee.qualname} is not recursive and has {len(body)} statement(s); its "
                f"definition is kept"))
    out.extend(_getters(prog))
    return out


def _getters(prog):
    tp = prog.tp
    out = []
    for mi in tp.methods():
        body = mi.decl.body
        if mi.params or len(body) != 1 or not isinstance(body[0], A.Return):
            continue
        v = body[0].value
        if not (isinstance(v, A.Name) and tp.names.get(v.nid) == "field"):
            continue
        if tp.classes[mi.cls].fields[v.id][0] != mi.ret:
            continue
        sites = []
        for m in tp.methods():
            if m.cls == mi.cls:
                continue
            for n in A.walk_stmts(m.decl.body):
                if isinstance(n, A.Call) and n.recv is not None:
                    t = tp.calls[n.nid]
                    if t.kind == "user" and (t.cls, t.method) == (mi.cls, mi.name):
                        sites.append(n)
        if not sites:
            continue
        site = prog.g.blocks[prog.g.entry[(mi.cls, mi.name)]].id
        out.append(Suggestion(
            "InterClassGetterInline", site, mi.cls, mi.name, tuple(n.pos for n in sites),
            tuple(n.nid for n in sites), prog.fp,
            {"field": v.id, "calls": [n.nid for n in sites], "key": mi.qualname,
             "summary": f"read {mi.cls}.{v.id} directly at {len(sites)} call site(s) of "
                        f"{mi.qualname}"},
            GETTER_NOTE.format(f=v.id, c=mi.cls), True))
    return out


# ------------------------------------------------------------------ loop-invariant motion


_LITS = (A.IntLit, A.FloatLit, A.BoolLit, A.CharLit, A.NullLit, A.This)


def _temp_base(e):
    if isinstance(e, A.Call):
        if isinstance(e.recv, A.Name):
            return f"{e.recv.id.rstrip('_')}_{e.name}"
        return f"{e.name}_v"
    if isinstance(e, A.FieldAccess):
        if isinstance(e.obj, A.Name):
            return f"{e.obj.id.rstrip('_')}_{e.name.rstrip('_')}"
        return f"{e.name.rstrip('_')}_v"
    if isinstance(e, A.Name):
        return f"{e.id.rstrip('_')}_v"
    if isinstance(e, A.Binary):
        for side in (e.left, e.right):
            if not isinstance(side, _LITS):
                return _temp_base(side)
    if isinstance(e, (A.Unary, A.Cast)):
        return _temp_base(e.operand)
    return "inv"


def type_ref(t):
    if t.kind == "array":
        r = type_ref(t.elem)
        return A.TypeRef(r.base, True, r.elem)
    if t.kind == "object":
        return A.TypeRef(t.name, False, t.elem)
    return A.TypeRef(t.kind)


class _LoopScan:
    """Collects hoisting candidates inside one outermost loop."""

    def __init__(self, prog, m):
        self.prog = prog
        self.m = m
        self.tp = prog.tp
        self.exprs = []   # (expr, home loop)
        self.decls = []   # (VarDecl, home loop) whole-declaration hoists
        self.objdecls = []  # (VarDecl, outermost loop) loop-local object declarations

    def _home(self, e, chain, guard):
        """Outermost loop of ``chain`` before which ``e`` can be evaluated once."""
        for h, X in enumerate(chain):
            ctx = self.prog.loop_ctx(self.m.cls, X)
            if not ctx.expr_invariant(e):
                continue
            if ctx.can_fault(e):
                if guard is None or guard[0] > h:
                    continue
                need = [L for L in guard[1] if _index(chain, L) >= h]
                if not all((self.prog.min_trips(L) or 0) >= 1 for L in need):
                    continue
            return X
        return None

    def _worth(self, e, in_cond):
        t = self.tp.types.get(e.nid)
        if t is None or t.kind in ("void", "null") or isinstance(e, (A.New, A.NewArray)):
            return False
        if in_cond and t == T.BOOL:
            return False
        # a bare field read costs one Field_Reference; caching it is not worth a local
        return not isinstance(e, _LITS + (A.Name,))

    def expr(self, e, chain, guard, in_cond=False, top=True):
        if e is None:
            return
        if not (top and isinstance(e, A.Call) and self.tp.types.get(e.nid) == T.VOID):
            if self._worth(e, in_cond and top):
                h = self._home(e, chain, guard)
                if h is not None:
                    self.exprs.append((e, h))
                    return
        if isinstance(e, A.Binary) and e.op in ("&&", "||"):
            self.expr(e.left, chain, guard, in_cond, False)
            self.expr(e.right, chain, None, in_cond, False)
            return
        for c in A.children(e):
            self.expr(c, chain, guard, in_cond, False)

    def stmt(self, s, chain, guard):
        tp = self.tp
        if isinstance(s, A.VarDecl):
            if len(s.decls) == 1 and s.decls[0].init is not None:
                d = s.decls[0]
                t = tp.decl_types[s.nid]
                X = self._home(d.init, chain, guard)
                if X is not None and not _assigned(X.body, d.name) and self._worth(d.init, False):
                    self.decls.append((s, X))
                    return
                if t.kind == "object":
                    self.objdecls.append((s, chain[0]))
            for d in s.decls:
                self.expr(d.init, chain, guard)
        elif isinstance(s, A.Assign):
            if not isinstance(s.target, A.Name):
                for c in A.children(s.target):
                    self.expr(c, chain, guard, top=False)
            self.expr(s.value, chain, guard)
        elif isinstance(s, A.IncDec):
            pass
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr, chain, guard)
        elif isinstance(s, A.Return):
            self.expr(s.value, chain, guard)
        elif isinstance(s, A.If):
            self.expr(s.cond, chain, guard, in_cond=True)
            self.stmts(s.then, chain, None)
            if s.orelse is not None:
                self.stmts(s.orelse, chain, None)
        elif isinstance(s, (A.For, A.While)):
            if isinstance(s, A.For) and s.init is not None:
                self.stmt(s.init, chain, guard)
            self.loop(s, chain, guard)

    def stmts(self, stmts, chain, guard):
        for s in stmts:
            self.stmt(s, chain, guard)
            if guard is not None and (_has((s,), A.Break) or _has((s,), A.Return)):
                guard = None

    def loop(self, L, chain, guard):
        chain = chain + (L,)
        h = len(chain) - 1
        cg = (h, ()) if guard is None else guard
        self.expr(L.cond, chain, cg, in_cond=True)
        bg = (h, (L,)) if guard is None else (guard[0], guard[1] + (L,))
        self.stmts(L.body, chain, bg)


def _index(chain, L):
    return next(k for k, x in enumerate(chain) if x is L)


def detect_loop_invariant(tp, profile=None, prog=None):
    prog = prog or ProgramFacts(tp, profile)
    out = []
    for m in tp.methods():
        taken = method_names(m.decl) | set(tp.classes[m.cls].fields)
        for X0, chain in _loops(m.decl.body):
            if chain:
                continue
            scan = _LoopScan(prog, m)
            scan.loop(X0, (), None)
            for plan in _plans(prog, m, X0, scan, taken):
                out.append(plan)
    return out


def _visible_after(body, loop_nid):
    """Statements sharing a scope with a declaration placed just before the loop."""
    lst = _enclosing(body, loop_nid)
    i = next(k for k, s in enumerate(lst) if s.nid == loop_nid)
    return lst[i:]


def _enclosing(stmts, nid):
    for lst in _lists(stmts):
        if any(s.nid == nid for s in lst):
            return lst
    return None


def _name_clash(tp, region, name, own):
    for n in A.walk_stmts(region):
        if isinstance(n, A.VarDecl) and n.nid != own and any(d.name == name for d in n.decls):
            return True
        if isinstance(n, A.Name) and n.id == name and tp.names.get(n.nid) == "field":
            return True
    return False


def _nonescaping_params(prog):
    """(cls, method, index) of object parameters that never leave their method."""
    tp = prog.tp
    cand = set()
    for mi in tp.methods():
        for k, (pn, pt) in enumerate(mi.params):
            if pt.kind == "object" and not _assigned(mi.decl.body, pn):
                cand.add((mi.cls, mi.name, k))
    changed = True
    while changed:
        changed = False
        for key in sorted(cand):
            mi = tp.method(key[0], key[1])
            pn = mi.params[key[2]][0]
            if not _uses_ok(tp, mi.decl.body, pn, cand):
                cand.discard(key)
                changed = True
    return cand


def _uses_ok(tp, nodes, name, cand, skip=()):
    """Every read of local ``name`` is a field access base or a non-escaping argument."""
    ok = set(skip)
    for n in A.walk_stmts(nodes):
        if isinstance(n, A.FieldAccess) and _local_name(tp, n.obj, name):
            ok.add(n.obj.nid)
        elif isinstance(n, A.Call):
            t = tp.calls[n.nid]
            for k, a in enumerate(n.args):
                if _local_name(tp, a, name) and t.kind == "user" and (t.cls, t.method, k) in cand:
                    ok.add(a.nid)
    for n in A.walk_stmts(nodes):
        if _local_name(tp, n, name) and n.nid not in ok:
            return False
    return True


def _reuse_ok(prog, lst, idx, cand):
    """``T x = new T();`` followed by writes of every field, with x never escaping."""
    tp = prog.tp
    s = lst[idx]
    d = s.decls[0]
    t = tp.decl_types[s.nid]
    if not isinstance(d.init, A.New) or t.name not in tp.classes:
        return False
    fields = set(tp.classes[t.name].fields)
    if not fields:
        return False
    seen = set()
    for s2 in lst[idx + 1:]:
        if not (isinstance(s2, A.Assign) and s2.op == "=" and isinstance(s2.target, A.FieldAccess)
                and _local_name(tp, s2.target.obj, d.name)):
            break
        if any(_local_name(tp, n, d.name) for n in A.walk(s2.value)):
            break
        seen.add(s2.target.name)
        if seen >= fields:
            break
    if seen < fields:
        return False
    rest = lst[idx + 1:]
    if _assigned(rest, d.name):
        return False
    return _uses_ok(tp, rest, d.name, cand)


def _plans(prog, m, X0, scan, base_taken):
    """Group candidates by the loop they are hoisted out of; one suggestion per loop."""
    tp = prog.tp
    body = m.decl.body
    by_loop = {}
    for e, X in scan.exprs:
        by_loop.setdefault(X.nid, (X, []))[1].append(("expr", e))
    for s, X in scan.decls:
        by_loop.setdefault(X.nid, (X, []))[1].append(("decl", s))
    cand = None
    for s, X in scan.objdecls:
        lst = _enclosing(body, s.nid)
        idx = next(k for k, x in enumerate(lst) if x.nid == s.nid)
        if cand is None:
            cand = _nonescaping_params(prog)
        kind = "reuse" if _reuse_ok(prog, lst, idx, cand) else "bare"
        by_loop.setdefault(X.nid, (X, []))[1].append((kind, s))
    out = []
    for nid in sorted(by_loop, key=lambda n: _order(body, n)):
        X, items = by_loop[nid]
        taken = set(base_taken)  # each plan is applied on its own
        vis = _visible_after(body, X.nid)
        hoists, decls, objs, texts = [], [], [], []
        inits = {}  # init text -> name declared before the loop
        for kind, node in items:
            if kind == "decl":
                d = node.decls[0]
                key = format_expr(d.init)
                if key in inits:
                    decls.append({"stmt": node.nid, "name": d.name, "alias": inits[key]})
                    texts.append(f"{d.name} = {key} (shared)")
                    continue
                name = d.name
                if _name_clash(tp, vis, name, node.nid):
                    name = _fresh(name, taken)
                inits[key] = name
                decls.append({"stmt": node.nid, "name": name, "alias": ""})
                texts.append(format_simple(node))
        for kind, node in items:
            if kind == "expr":
                key = format_expr(node)
                if key in inits:
                    hoists.append({"expr": node.nid, "name": inits[key], "new": False})
                    continue
                name = inits[key] = _fresh(_temp_base(node), taken)
                hoists.append({"expr": node.nid, "name": name, "new": True,
                               "type": str(tp.types[node.nid])})
                texts.append(f"{name} = {key}")
        for kind, node in items:
            if kind in ("bare", "reuse"):
                d = node.decls[0]
                name = d.name
                if _name_clash(tp, vis, name, node.nid) or name in {h["name"] for h in hoists} \
                        or name in {x["name"] for x in decls}:
                    name = _fresh(name, taken)
                objs.append({"stmt": node.nid, "name": name, "reuse": kind == "reuse"})
                what = "reuse one object" if kind == "reuse" else "declare once"
                texts.append(f"{what}: {format_simple(node)}")
        if not (hoists or decls or objs):
            continue
        head = format_expr(X.cond)
        out.append(prog.suggestion(
            "LoopInvariantMotion", prog.body_id(X), m, (X,),
            {"loop": X.nid, "hoists": hoists, "decls": decls, "objects": objs,
             "key": "; ".join(sorted(texts)),
             "summary": f"hoist out of the loop on `{head}`: " + "; ".join(texts)},
            "hoisted expressions are not written inside the loop and call only pure code; "
            "those that could fault are hoisted only where profiles show the loop always runs"))
    return out


def _order(body, nid):
    for k, n in enumerate(A.walk_stmts(body)):
        if isinstance(n, A.Stmt) and n.nid == nid:
            return k
    return 0


def _fresh(base, taken):
    from .rewrite import fresh
    return fresh(base, taken)


# ------------------------------------------------------------------ unrolling


def induction(tp, loop):
    """(var, start, bound, step, update form) of ``for (i = a; i < B; i += s)`` or None."""
    if not isinstance(loop, A.For) or loop.init is None or loop.update is None:
        return None
    init = loop.init
    if isinstance(init, A.VarDecl) and len(init.decls) == 1 and init.decls[0].init is not None \
            and tp.decl_types[init.nid] == T.INT:
        var, start = init.decls[0].name, init.decls[0].init
    elif isinstance(init, A.Assign) and init.op == "=" and _local_name(tp, init.target) \
            and tp.types[init.target.nid] == T.INT:
        var, start = init.target.id, init.value
    else:
        return None
    c = loop.cond
    if not (isinstance(c, A.Binary) and c.op == "<" and _local_name(tp, c.left, var)):
        return None
    u = loop.update
    step, form = None, None
    if isinstance(u, A.IncDec) and u.op == "++" and _local_name(tp, u.target, var):
        step, form = 1, "inc"
    elif isinstance(u, A.Assign) and _local_name(tp, u.target, var):
        if u.op == "+=" and isinstance(u.value, A.IntLit):
            step, form = u.value.value, "plus_eq"
        elif u.op == "=" and isinstance(u.value, A.Binary) and u.value.op == "+":
            a, b = u.value.left, u.value.right
            if _local_name(tp, a, var) and isinstance(b, A.IntLit):
                step, form = b.value, "add"
            elif _local_name(tp, b, var) and isinstance(a, A.IntLit):
                step, form = a.value, "add"
    if step is None or step <= 0:
        return None
    return var, start, c.right, step, form


def detect_unroll(tp, profile=None, thresholds=None, prog=None):
    th = thresholds or Thresholds()
    prog = prog or ProgramFacts(tp, profile)
    out = []
    for m in tp.methods():
        for L, _ in _loops(m.decl.body):
            ind = induction(tp, L)
            if ind is None:
                continue
            var, start, bound, step, _ = ind
            if _assigned(L.body, var) or _has(L.body, A.Return) or _breaks_out(L.body):
                continue
            if not prog.loop_ctx(m.cls, L).expr_invariant(bound):
                continue
            if isinstance(start, A.IntLit) and isinstance(bound, A.IntLit):
                trips = {max(0, math.ceil((bound.value - start.value) / step))}
                source = "constant bounds"
            elif prog.profile is not None and prog.profile.trips.get(prog.body_id(L)):
                trips = set(prog.profile.trips[prog.body_id(L)])
                source = f"{sum(prog.profile.trips[prog.body_id(L)].values())} profiled executions"
            else:
                continue
            factor = None
            for f in sorted(th.unroll_factors, reverse=True):
                if f >= 2 and len(L.body) * f <= th.max_unrolled_stmts and max(trips) >= f \
                        and all(t % f == 0 for t in trips):
                    factor = f
                    break
            if factor is None:
                continue
            out.append(prog.suggestion(
                "LoopUnroll", prog.body_id(L), m, (L,),
                {"loop": L.nid, "factor": factor, "step": step, "key": f"x{factor}",
                 "trips": sorted(trips),
                 "summary": f"unroll {factor}x: stride {step} -> {step * factor}, "
                            f"trip counts {sorted(trips)[:4]} -> "
                            f"{[t // factor for t in sorted(trips)[:4]]}"},
                f"no remainder loop: every trip count seen ({source}) is a multiple of {factor}; "
                f"inputs giving other trip counts are not covered"))
    return out


# ------------------------------------------------------------------ library substitution


def _copy_shape(prog, cls, lst, k):
    """(dst, src, bound decl or None) if ``lst[k]`` is an elementwise full-range copy loop."""
    tp, an = prog.tp, prog.an
    L = lst[k]
    ind = induction(tp, L)
    if ind is None:
        return None
    var, start, bound, step, _ = ind
    if not (isinstance(start, A.IntLit) and start.value == 0) or len(L.body) != step:
        return None
    dst = src = None
    for j, s in enumerate(L.body):
        if not isinstance(s, A.ExprStmt):
            return None
        put = s.expr
        if tp.calls[put.nid].lib != "Buffer.put" or len(put.args) != 1:
            return None
        get = put.args[0]
        if not isinstance(get, A.Call) or tp.calls[get.nid].lib != "Buffer.get":
            return None
        idx = get.args[0]
        if j == 0:
            ok = _local_name(tp, idx, var)
        else:
            ok = (isinstance(idx, A.Binary) and idx.op == "+" and _local_name(tp, idx.left, var)
                  and isinstance(idx.right, A.IntLit) and idx.right.value == j)
        if not ok:
            return None
        if dst is None:
            dst, src = put.recv, get.recv
        elif put.recv != dst or get.recv != src:
            return None
    if not an.distinct_objects(cls, dst, src):
        return None
    decl = None
    if isinstance(bound, A.Call):
        ok = tp.calls[bound.nid].lib == "Buffer.limit" and bound.recv == src
    elif _local_name(tp, bound) and k > 0 and isinstance(lst[k - 1], A.VarDecl):
        decl = lst[k - 1]
        d = decl.decls[0]
        ok = (len(decl.decls) == 1 and d.name == bound.id and isinstance(d.init, A.Call)
              and tp.calls[d.init.nid].lib == "Buffer.limit" and d.init.recv == src)
    else:
        ok = False
    return (dst, src, decl) if ok else None


def detect_library_substitution(tp, prog=None):
    prog = prog or ProgramFacts(tp)
    out = []
    for m in tp.methods():
        for lst in _lists(m.decl.body):
            for k, s in enumerate(lst):
                if not isinstance(s, A.For):
                    continue
                shape = _copy_shape(prog, m.cls, lst, k)
                if shape is None:
                    continue
                dst, src, decl = shape
                txt = f"{format_expr(dst)}.putAll({format_expr(src)})"
                nodes = (s,) if decl is None else (s, decl)
                out.append(prog.suggestion(
                    "LibrarySubstitution", prog.body_id(s), m, nodes,
                    {"loop": s.nid, "bound_decl": -1 if decl is None else decl.nid,
                     "key": txt, "summary": f"replace the copy loop by `{txt};`"},
                    f"{format_expr(dst)} and {format_expr(src)} always hold distinct private "
                    f"buffers and the loop copies every element in order"))
    return out


# ------------------------------------------------------------------ all


def detect_all(tp, profile=None, thresholds=None, prog=None):
    prog = prog or ProgramFacts(tp, profile)
    out = []
    out += detect_if_combination(tp, prog)
    out += detect_inline_candidates(tp, profile, thresholds, prog)
    out += detect_loop_invariant(tp, profile, prog)
    out += detect_unroll(tp, profile, thresholds, prog)
    out += detect_library_substitution(tp, prog)
    return out
