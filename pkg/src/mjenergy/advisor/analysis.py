"""Static facts the detectors rely on: effect summaries, purity, recursion,
aliasing of library-object fields and loop invariance.

All of it is conservative.  An effect summary over-approximates what a
method may touch; a miss only means a suggestion is not emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Set, Tuple

from ..minilang import ast as A
from ..minilang.library import BY_ID
from ..minilang import types as T

# pure library calls that can never fault, whatever their receiver holds
SAFE_ACCESSORS = {"List.size", "List.isEmpty", "Buffer.limit", "Buffer.position"}
# library functions that keep no reference to their arguments
NON_RETAINING = {"Buffer.putAll", "Buffer.put", "IO.print", "Math.max", "Math.pow", "Math.sqrt",
                 "List.get", "Buffer.get", "List.remove"}


@dataclass
class Effects:
    """What executing some code may read or change.

    Fields are ``(class, field)`` pairs; ``mutates`` / ``lib_reads`` hold
    library owner names (``List``, ``Buffer``) whose objects are changed or
    inspected; ``io`` covers print, input and the random generator.
    """

    writes: Set[Tuple[str, str]] = field(default_factory=set)
    reads: Set[Tuple[str, str]] = field(default_factory=set)
    mutates: Set[str] = field(default_factory=set)
    lib_reads: Set[str] = field(default_factory=set)
    array_writes: bool = False
    io: bool = False
    allocates: bool = False
    locals_written: Set[str] = field(default_factory=set)
    calls: Set[Tuple[str, str]] = field(default_factory=set)
    mutated_receivers: Set[object] = field(default_factory=set)  # receiver exprs of mutator calls

    def merge(self, o, with_locals=False):
        self.writes |= o.writes
        self.reads |= o.reads
        self.mutates |= o.mutates
        self.lib_reads |= o.lib_reads
        self.array_writes |= o.array_writes
        self.io |= o.io
        self.allocates |= o.allocates
        self.calls |= o.calls
        if with_locals:
            self.locals_written |= o.locals_written
            self.mutated_receivers |= o.mutated_receivers

    @property
    def side_effect_free(self):
        return not (self.writes or self.mutates or self.array_writes or self.io)

    @property
    def pure(self):
        """No effects and no allocation: same result when evaluated once or many times."""
        return self.side_effect_free and not self.allocates


def _owner(t):
    if t is not None and t.kind == "object" and t.name in ("List", "Buffer"):
        return t.name
    return None


class Analysis:
    """Effect summaries for every method of a TypedProgram, closed over calls."""

    def __init__(self, tp):
        self.tp = tp
        self.direct = {}
        for m in tp.methods():
            self.direct[(m.cls, m.name)] = self._collect(m.cls, m.decl.body,
                                                         self._fresh_locals(m.decl.body))
        self.sccs = self._sccs()
        self.summary = self._close()
        self.unshared = self._unshared_fields()

    # -- collection ---------------------------------------------------------

    def _collect(self, cls, nodes, fresh=frozenset()):
        eff = Effects()
        for n in A.walk_stmts(nodes) if isinstance(nodes, (tuple, list)) else A.walk(nodes):
            self._node(cls, n, eff, fresh)
        return eff

    def _fresh_locals(self, body):
        """Locals that only ever hold an object allocated by this very invocation.

        Field writes through them cannot touch any object that existed when
        the method was called, so callers may ignore them.
        """
        ok, bad = set(), set()
        for n in A.walk_stmts(body):
            if isinstance(n, A.VarDecl):
                for d in n.decls:
                    (ok if isinstance(d.init, A.New) else bad).add(d.name)
            elif isinstance(n, A.Assign) and isinstance(n.target, A.Name) \
                    and self.tp.names.get(n.target.nid) == "local":
                (ok if isinstance(n.value, A.New) and n.op == "=" else bad).add(n.target.id)
        return frozenset(ok - bad)

    def field_key(self, cls, e):
        """(class, field) of a field-valued expression, or None for locals."""
        if isinstance(e, A.Name) and self.tp.names.get(e.nid) == "field":
            return (cls, e.id)
        if isinstance(e, A.FieldAccess):
            ot = self.tp.types.get(e.obj.nid)
            if ot is not None and ot.kind == "object":
                return (ot.name, e.name)
        return None

    def _target(self, cls, target, eff, fresh=frozenset()):
        if isinstance(target, A.Name):
            if self.tp.names.get(target.nid) == "local":
                eff.locals_written.add(target.id)
            else:
                eff.writes.add((cls, target.id))
        elif isinstance(target, A.FieldAccess):
            if isinstance(target.obj, A.Name) and target.obj.id in fresh \
                    and self.tp.names.get(target.obj.nid) == "local":
                return
            k = self.field_key(cls, target)
            if k is not None:
                eff.writes.add(k)
        elif isinstance(target, A.Index):
            eff.array_writes = True

    def _node(self, cls, n, eff, fresh=frozenset()):
        if isinstance(n, (A.Assign, A.IncDec)):
            self._target(cls, n.target, eff, fresh)
        elif isinstance(n, A.VarDecl):
            for d in n.decls:
                eff.locals_written.add(d.name)
        elif isinstance(n, A.For) and isinstance(n.init, A.VarDecl):
            pass
        elif isinstance(n, (A.Name, A.FieldAccess)):
            k = self.field_key(cls, n)
            if k is not None:
                eff.reads.add(k)
        elif isinstance(n, (A.New, A.NewArray)):
            eff.allocates = True
        elif isinstance(n, A.Call):
            t = self.tp.calls[n.nid]
            if t.kind == "user":
                eff.calls.add((t.cls, t.method))
            else:
                owner, name = t.lib.split(".")
                if owner == "IO" or t.lib == "Math.random":
                    eff.io = True
                elif owner in ("List", "Buffer"):
                    if BY_ID[t.lib].pure:
                        eff.lib_reads.add(owner)
                    else:
                        eff.mutates.add(owner)
                        eff.mutated_receivers.add(n.recv)
                        if t.lib == "Buffer.putAll":
                            eff.lib_reads.add("Buffer")

    # -- call graph ---------------------------------------------------------

    def _sccs(self):
        """Tarjan's algorithm; maps each method key to its component id."""
        index, low, on, stack, comp = {}, {}, set(), [], {}
        counter = [0]

        def visit(v):
            index[v] = low[v] = counter[0]
            counter[0] += 1
            stack.append(v)
            on.add(v)
            for w in sorted(self.direct[v].calls):
                if w not in index:
                    visit(w)
                    low[v] = min(low[v], low[w])
                elif w in on:
                    low[v] = min(low[v], index[w])
            if low[v] == index[v]:
                cid = len(set(comp.values()))
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp[w] = cid
                    if w == v:
                        break

        for v in sorted(self.direct):
            if v not in index:
                visit(v)
        return comp

    def recursive(self, key):
        cid = self.sccs[key]
        if key in self.direct[key].calls:
            return True
        return sum(1 for c in self.sccs.values() if c == cid) > 1

    def _close(self):
        summ = {k: Effects() for k in self.direct}
        for k, e in self.direct.items():
            summ[k].merge(e)
        changed = True
        while changed:
            changed = False
            for k in sorted(summ):
                s = summ[k]
                before = (len(s.writes), len(s.reads), len(s.mutates), len(s.lib_reads),
                          s.array_writes, s.io, s.allocates, len(s.calls))
                for c in sorted(self.direct[k].calls):
                    s.merge(summ[c])
                after = (len(s.writes), len(s.reads), len(s.mutates), len(s.lib_reads),
                         s.array_writes, s.io, s.allocates, len(s.calls))
                changed |= before != after
        return summ

    def effects_of(self, cls, nodes):
        """Transitive effects of a statement list or expression inside ``cls``."""
        eff = self._collect(cls, nodes)
        out = Effects()
        out.merge(eff, with_locals=True)
        for c in sorted(eff.calls):
            out.merge(self.summary[c])
        return out

    def method_pure(self, key):
        return self.summary[key].pure and not self.recursive(key)

    # -- aliasing -----------------------------------------------------------

    def _unshared_fields(self):
        """Library-typed fields that always hold a private, freshly allocated object.

        A field qualifies when every assignment to it stores ``new X()`` or
        ``null`` and every read of it is the receiver of a library call or an
        argument a library call does not retain.  Two distinct unshared
        fields can then never name the same object.
        """
        cands = set()
        for cname, ci in self.tp.classes.items():
            for fname, (ft, _) in ci.fields.items():
                if _owner(ft):
                    cands.add((cname, fname))
        ok_reads = set()
        for m in self.tp.methods():
            for n in A.walk_stmts(m.decl.body):
                if isinstance(n, A.Assign):
                    k = self.field_key(m.cls, n.target)
                    if k in cands and not isinstance(n.value, (A.New, A.NullLit)):
                        cands.discard(k)
                    if k in cands:
                        ok_reads.add(n.target.nid)
                elif isinstance(n, A.Call):
                    t = self.tp.calls[n.nid]
                    if t.kind == "lib":
                        if n.recv is not None:
                            ok_reads.add(n.recv.nid)
                        if t.lib in NON_RETAINING:
                            ok_reads.update(a.nid for a in n.args)
        for m in self.tp.methods():
            for n in A.walk_stmts(m.decl.body):
                if isinstance(n, (A.Name, A.FieldAccess)):
                    k = self.field_key(m.cls, n)
                    if k in cands and n.nid not in ok_reads:
                        cands.discard(k)
        return frozenset(cands)

    def distinct_objects(self, cls, a, b):
        """True when expressions ``a`` and ``b`` provably name different objects."""
        ka, kb = self.field_key(cls, a), self.field_key(cls, b)
        return (ka is not None and kb is not None and ka != kb
                and ka in self.unshared and kb in self.unshared)


# ------------------------------------------------------------------ invariance


def declared_in(stmts):
    out = set()
    for n in A.walk_stmts(stmts):
        if isinstance(n, A.VarDecl):
            out.update(d.name for d in n.decls)
    return out


def local_names(tp, node):
    return {n.id for n in A.walk(node) if isinstance(n, A.Name) and tp.names.get(n.nid) == "local"}


class LoopContext:
    """Effects of one loop (condition, update and body) for invariance queries."""

    def __init__(self, an, cls, loop):
        self.an = an
        self.cls = cls
        self.loop = loop
        parts = [loop.cond, *loop.body]
        if isinstance(loop, A.For):
            # the initializer runs between a pre-loop hoist and the first test
            parts.extend(s for s in (loop.init, loop.update) if s is not None)
        self.eff = Effects()
        for p in parts:
            self.eff.merge(an.effects_of(cls, p), with_locals=True)
        self.inner_decls = declared_in(loop.body)
        if isinstance(loop, A.For) and isinstance(loop.init, A.VarDecl):
            self.inner_decls |= {d.name for d in loop.init.decls}

    def expr_invariant(self, e):
        """Value of ``e`` is the same at every evaluation inside the loop."""
        tp = self.an.tp
        if isinstance(e, (A.IntLit, A.FloatLit, A.BoolLit, A.CharLit, A.NullLit, A.This)):
            return True
        if isinstance(e, A.Name):
            if tp.names.get(e.nid) == "local":
                return e.id not in self.eff.locals_written and e.id not in self.inner_decls
            return (self.cls, e.id) not in self.eff.writes
        if isinstance(e, A.FieldAccess):
            ot = tp.types[e.obj.nid]
            if ot.kind == "array":
                return self.expr_invariant(e.obj)
            return self.expr_invariant(e.obj) and (ot.name, e.name) not in self.eff.writes
        if isinstance(e, (A.Unary, A.Cast)):
            return self.expr_invariant(e.operand)
        if isinstance(e, A.Binary):
            return self.expr_invariant(e.left) and self.expr_invariant(e.right)
        if isinstance(e, A.Call):
            t = tp.calls[e.nid]
            if not all(self.expr_invariant(a) for a in e.args):
                return False
            if e.recv is not None and not (isinstance(e.recv, A.Name) and e.recv.id == "Math"
                                           and t.kind == "lib" and t.lib.startswith("Math.")):
                if not self.expr_invariant(e.recv):
                    return False
            if t.kind == "lib":
                if not BY_ID[t.lib].pure or t.lib == "Math.random":
                    return False
                owner = t.lib.split(".")[0]
                if owner in self.eff.mutates:
                    # only mutations of provably different objects are harmless
                    # (and mutations buried in user calls are never excused)
                    if any(self.an.summary[c].mutates & {owner} for c in self.eff.calls):
                        return False
                    for r in self.eff.mutated_receivers:
                        rt = tp.types.get(r.nid) if r is not None else None
                        if rt is not None and rt.name != owner:
                            continue
                        if r is None or not self.an.distinct_objects(self.cls, e.recv, r):
                            return False
                return True
            key = (t.cls, t.method)
            if not self.an.method_pure(key):
                return False
            s = self.an.summary[key]
            if s.reads & self.eff.writes or s.lib_reads & self.eff.mutates:
                return False
            return True
        return False

    def can_fault(self, e):
        """Whether evaluating ``e`` might raise (null receiver, bad index, zero divisor)."""
        tp = self.an.tp
        for n in A.walk(e):
            if isinstance(n, A.Binary) and n.op in ("/", "%") and tp.types[n.nid] == T.INT:
                return True
            if isinstance(n, (A.FieldAccess, A.Index)):
                return True
            if isinstance(n, A.Call):
                t = tp.calls[n.nid]
                if t.kind == "user" or not t.lib.startswith("Math."):
                    return True
        return False

    def has_ops(self, e):
        return not isinstance(e, (A.Name, A.IntLit, A.FloatLit, A.BoolLit, A.CharLit,
                                  A.NullLit, A.This)) or (
            isinstance(e, A.Name) and self.an.tp.names.get(e.nid) == "field")
