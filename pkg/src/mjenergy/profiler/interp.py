"""Counting tree-walking interpreter for typed MJ programs.

Each run compiles the AST into nested closures once, with the case's
ablation set baked in: an ablated block compiles to a no-op, so its
statements, ops and execution count all disappear while the surrounding
control flow still runs.  Every closure bumps the op counters of the block
it lives in, which gives exact per-block actual counts even when a block
is left early by ``break`` or ``return``.
"""

from __future__ import annotations

import json
import math
import random
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .. import energy_ops as E
from ..cfg import build_program_cfg
from ..errors import InvalidCase, RuntimeFault, StepBudgetExceeded, UnknownOpId
from ..minilang import ast as A
from ..minilang import types as T

DEFAULT_STEP_BUDGET = 10_000_000
DEFAULT_MAX_DEPTH = 400

BREAK = 1
RETURN = 2

_NOPS = len(E.CATALOG_IDS)


# ------------------------------------------------------------------ domain types


@dataclass(frozen=True)
class ExecutionCase:
    case_id: str
    inputs: Tuple[float, ...] = ()
    ablated: Tuple[str, ...] = ()
    duration_s: float = 1.0
    seed: int = 0

    def to_record(self):
        return {"case_id": self.case_id, "inputs": list(self.inputs),
                "ablated": sorted(self.ablated), "duration_s": self.duration_s,
                "seed": self.seed}

    @classmethod
    def from_record(cls, rec):
        try:
            return cls(str(rec["case_id"]), tuple(rec.get("inputs", ())),
                       tuple(sorted(rec.get("ablated", ()))), float(rec["duration_s"]),
                       int(rec.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidCase(f"bad case record {rec!r}: {exc}") from None


@dataclass
class CountVector:
    counts: Dict[str, int]
    duration_s: float = 0.0

    def __post_init__(self):
        for k, v in self.counts.items():
            if k not in E.INDEX:
                raise UnknownOpId(f"unknown operation {k!r}")
            if v < 0:
                raise ValueError(f"negative count for {k}")
        self.counts = {k: v for k, v in self.counts.items() if v}

    def __getitem__(self, op_id):
        return self.counts.get(op_id, 0)

    def get(self, op_id, default=0):
        return self.counts.get(op_id, default)

    def row(self):
        """Counts in catalog order."""
        return [self.counts.get(k, 0) for k in E.CATALOG_IDS]

    @classmethod
    def from_row(cls, values, duration_s):
        return cls({k: int(v) for k, v in zip(E.CATALOG_IDS, values) if v}, duration_s)


@dataclass
class RunResult:
    case_id: str
    block_exec: Dict[str, int]
    block_counts: Dict[str, Dict[str, int]]
    counts: CountVector
    outputs: List[str]
    steps: int
    status: str = "ok"
    partial: bool = False
    partial_blocks: Tuple[str, ...] = ()
    input_exhausted: bool = False
    site_calls: Dict[int, int] = field(default_factory=dict)
    trip_counts: Dict[str, Dict[int, int]] = field(default_factory=dict)

    @property
    def duration_s(self):
        return self.counts.duration_s

    def to_json(self):
        rec = {
            "case_id": self.case_id, "status": self.status, "steps": self.steps,
            "partial": self.partial, "partial_blocks": list(self.partial_blocks),
            "input_exhausted": self.input_exhausted,
            "block_exec": self.block_exec, "block_counts": self.block_counts,
            "counts": self.counts.counts, "duration_s": self.counts.duration_s,
            "outputs": self.outputs,
            "trip_counts": {k: {str(t): n for t, n in sorted(v.items())}
                            for k, v in self.trip_counts.items()},
        }
        return json.dumps(rec, sort_keys=True)


# ------------------------------------------------------------------ runtime values


class Obj:
    __slots__ = ("cls", "f")

    def __init__(self, cls, fields):
        self.cls = cls
        self.f = fields


class MJList:
    __slots__ = ("items",)

    def __init__(self):
        self.items = []


class MJBuffer:
    """Growable float buffer: ``put`` writes at the cursor, ``clear`` rewinds it.

    ``limit()`` is the high-water mark of written elements and ``get`` reads
    any index below it, so a cleared buffer is refilled in place.
    """

    __slots__ = ("data", "pos")

    def __init__(self):
        self.data = []
        self.pos = 0

    def put(self, v):
        if self.pos < len(self.data):
            self.data[self.pos] = v
        else:
            self.data.append(v)
        self.pos += 1


class MJArray:
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = items


def default_value(t):
    if t.kind == "int":
        return 0
    if t.kind == "float":
        return 0.0
    if t.kind == "bool":
        return False
    if t.kind == "char":
        return "\0"
    return None


def wrap32(x):
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


def java_idiv(a, b):
    q = abs(a) // abs(b)
    return wrap32(q if (a >= 0) == (b >= 0) else -q)


def java_imod(a, b):
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


def java_fdiv(a, b):
    if b == 0:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def java_fmod(a, b):
    try:
        return math.fmod(a, b)
    except ValueError:
        return math.nan


def float_to_int(x):
    if x != x:
        return 0
    if x >= 2147483647:
        return 2147483647
    if x <= -2147483648:
        return -2147483648
    return int(x)


def format_value(v, t):
    if t.kind == "bool":
        return "true" if v else "false"
    if t.kind == "float":
        return repr(float(v))
    if t.kind == "char":
        return v
    return str(v)


# ------------------------------------------------------------------ run state


class _State:
    def __init__(self, g, case, budget, max_depth):
        self.counts = [[0] * _NOPS for _ in g.blocks]
        self.execs = [0] * len(g.blocks)
        self.steps = 0
        self.budget = budget
        self.max_depth = max_depth
        self.depth = 0
        self.out = []
        self.inputs = list(case.inputs)
        self.in_pos = 0
        self.exhausted = False
        self.rng = random.Random(case.seed)
        self.sites = Counter()
        self.trips = {}


def _bump(cnt, ks):
    """Counter bump for a fixed op tuple, or None when there is nothing to count."""
    if not ks:
        return None
    if len(ks) == 1:
        k = ks[0]

        def f():
            cnt[k] += 1
        return f

    def g():
        for k in ks:
            cnt[k] += 1
    return g


class _Compiler:
    def __init__(self, tp, g, ablated, st, filename=None):
        self.tp = tp
        self.g = g
        self.ablated = ablated
        self.st = st
        self.filename = filename or tp.filename
        self.fns = {}
        self._own = {}

    # -- helpers ------------------------------------------------------------------

    def fault(self, msg, pos):
        return RuntimeFault(msg, pos[0], pos[1], filename=self.filename)

    def own(self, node):
        ks = self._own.get(node.nid)
        if ks is None:
            ks = tuple(E.INDEX[o] for o in E.own_ops(self.tp, node))
            self._own[node.nid] = ks
        return ks

    def ty(self, e):
        return self.tp.types[e.nid]

    def conv(self, fn, target, source):
        """Widen int to float where the target type demands it."""
        if target.kind == "float" and source.kind == "int":
            return lambda env: float(fn(env))
        return fn

    def compile_program(self):
        for c in self.tp.program.classes:
            for m in c.methods:
                self.fns[(c.name, m.name)] = [None]
        for c in self.tp.program.classes:
            for m in c.methods:
                self.fns[(c.name, m.name)][0] = self.method(c.name, m)
        return self.fns

    # -- methods ------------------------------------------------------------------

    def method(self, cls, m):
        info = self.tp.method(cls, m.name)
        self._ret = info.ret
        self.slots = {}
        self.nslots = 2  # 0: this, 1: return value
        self.scopes = [[]]
        pslots = []
        for name, _ in info.params:
            pslots.append(self.declare(name))
        entry = self.g.entry[(cls, m.name)]
        body = self.region(m.body, entry)
        st = self.st
        execs = st.execs
        size = self.nslots
        void = info.ret == T.VOID
        pos = m.pos

        def invoke(this, args):
            env = [None] * size
            env[0] = this
            for i, a in zip(pslots, args):
                env[i] = a
            execs[entry] += 1
            r = body(env)
            if r != RETURN and not void:
                raise self.fault(f"method {cls}.{m.name} ended without returning a value", pos)
            return env[1]
        return invoke

    def declare(self, name):
        slot = self.nslots
        self.nslots += 1
        self.slots[name] = slot
        self.scopes[-1].append(name)
        return slot

    def push(self):
        self.scopes.append([])

    def pop(self):
        for name in self.scopes.pop():
            del self.slots[name]

    # -- blocks -------------------------------------------------------------------

    def region(self, stmts, bi):
        """Compile ``stmts`` as the body of block ``bi`` (entry counting excluded)."""
        cnt = self.st.counts[bi]
        self.push()
        fns = tuple(self.stmt(s, cnt) for s in stmts)
        self.pop()
        st = self.st

        def run(env):
            for f in fns:
                st.steps += 1
                if st.steps > st.budget:
                    raise StepBudgetExceeded(f"step budget of {st.budget} statements exceeded")
                r = f(env)
                if r:
                    return r
            return 0
        return run

    def entered(self, stmts, bi):
        """A nested block: counts its entry and BlockGoto, or vanishes if ablated."""
        b = self.g.blocks[bi]
        if bi in self.ablated:
            return lambda env: 0
        runner = self.region(stmts, bi)
        execs = self.st.execs
        cnt = self.st.counts[bi]
        if b.goto_kind is None:
            def run(env):
                execs[bi] += 1
                return runner(env)
            return run
        gk = E.INDEX[E.BLOCK_GOTO[b.goto_kind]]

        def run_goto(env):
            execs[bi] += 1
            cnt[gk] += 1
            return runner(env)
        return run_goto

    # -- statements -----------------------------------------------------------------

    def stmt(self, s, cnt):
        if isinstance(s, A.VarDecl):
            return self.vardecl(s, cnt)
        if isinstance(s, A.Assign):
            return self.assign(s, cnt)
        if isinstance(s, A.IncDec):
            return self.incdec(s, cnt)
        if isinstance(s, A.ExprStmt):
            f = self.expr(s.expr, cnt)

            def run_expr(env):
                f(env)
                return 0
            return run_expr
        if isinstance(s, A.If):
            return self.if_(s, cnt)
        if isinstance(s, A.For):
            return self.for_(s, cnt)
        if isinstance(s, A.While):
            return self.while_(s, cnt)
        if isinstance(s, A.Break):
            return lambda env: BREAK
        if isinstance(s, A.Return):
            if s.value is None:
                return lambda env: RETURN
            f = self.conv(self.expr(s.value, cnt), self._ret, self.ty(s.value))

            def run_return(env):
                env[1] = f(env)
                return RETURN
            return run_return
        raise TypeError(type(s))  # pragma: no cover

    def vardecl(self, s, cnt):
        t = self.tp.decl_types[s.nid]
        parts = []
        for d in s.decls:
            init = None
            if d.init is not None:
                init = self.conv(self.expr(d.init, cnt), t, self.ty(d.init))
            parts.append((self.declare(d.name), init, default_value(t)))
        bump = _bump(cnt, self.own(s))
        parts = tuple(parts)

        def run(env):
            for slot, init, dv in parts:
                env[slot] = dv if init is None else init(env)
            if bump:
                bump()
            return 0
        return run

    def lvalue(self, target, cnt):
        """(getter-free) location: returns fn(env) -> (container, key)."""
        if isinstance(target, A.Name):
            if self.tp.names[target.nid] == "local":
                slot = self.slots[target.id]
                return "local", slot
            bump = _bump(cnt, self.own(target))
            name = target.id

            def loc_this(env):
                bump()
                return env[0].f, name
            return "loc", loc_this
        if isinstance(target, A.FieldAccess):
            of = self.expr(target.obj, cnt)
            bump = _bump(cnt, self.own(target))
            name = target.name
            pos = target.pos

            def loc_field(env):
                o = of(env)
                if o is None:
                    raise self.fault(f"null dereference writing field {name!r}", pos)
                bump()
                return o.f, name
            return "loc", loc_field
        if isinstance(target, A.Index):
            af = self.expr(target.array, cnt)
            ixf = self.expr(target.index, cnt)
            bump = _bump(cnt, self.own(target))
            pos = target.pos

            def loc_index(env):
                a = af(env)
                i = ixf(env)
                if a is None:
                    raise self.fault("null array dereference", pos)
                if not 0 <= i < len(a.items):
                    raise self.fault(f"index {i} out of bounds for length {len(a.items)}", pos)
                bump()
                return a.items, i
            return "loc", loc_index
        raise TypeError(type(target))  # pragma: no cover

    def assign(self, s, cnt):
        tt = self.ty(s.target)
        vt = self.ty(s.value)
        kind, loc = self.lvalue(s.target, cnt)
        vf = self.expr(s.value, cnt)
        bump = _bump(cnt, self.own(s))
        if s.op == "=":
            vf = self.conv(vf, tt, vt)
            if kind == "local":
                slot = loc

                def run_local(env):
                    env[slot] = vf(env)
                    if bump:
                        bump()
                    return 0
                return run_local

            def run_loc(env):
                c, k = loc(env)
                c[k] = vf(env)
                if bump:
                    bump()
                return 0
            return run_loc
        binop = self.arith(E.COMPOUND[s.op], T.arith_result(tt, vt), s.pos)
        widen = tt.kind == "float"
        if kind == "local":
            slot = loc

            def run_clocal(env):
                v = vf(env)
                r = binop(env[slot], v)
                env[slot] = float(r) if widen else r
                bump()
                return 0
            return run_clocal

        def run_cloc(env):
            c, k = loc(env)
            v = vf(env)
            r = binop(c[k], v)
            c[k] = float(r) if widen else r
            bump()
            return 0
        return run_cloc

    def incdec(self, s, cnt):
        kind, loc = self.lvalue(s.target, cnt)
        bump = _bump(cnt, self.own(s))
        d = 1 if s.op == "++" else -1
        if kind == "local":
            slot = loc

            def run_local(env):
                env[slot] = wrap32(env[slot] + d)
                bump()
                return 0
            return run_local

        def run_loc(env):
            c, k = loc(env)
            c[k] = wrap32(c[k] + d)
            bump()
            return 0
        return run_loc

    def if_(self, s, cnt):
        cond = self.expr(s.cond, cnt)
        then_i, else_i = self.g.if_blocks[s.nid]
        then_f = self.entered(s.then, then_i)
        else_f = self.entered(s.orelse or (), else_i)

        def run(env):
            if cond(env):
                return then_f(env)
            return else_f(env)
        return run

    def _loop_common(self, s):
        head_i, step_i, body_i = self.g.loop_blocks[s.nid]
        return head_i, step_i, body_i, self.g.blocks[body_i].id

    def for_(self, s, cnt):
        head_i, step_i, body_i, body_id = self._loop_common(s)
        self.push()
        init = self.stmt(s.init, cnt) if s.init is not None else None
        cond = self.expr(s.cond, self.st.counts[head_i])
        upd = self.stmt(s.update, self.st.counts[step_i]) if s.update is not None else None
        body = self.entered(s.body, body_i)
        self.pop()
        st = self.st
        execs = st.execs
        trips = st.trips.setdefault(body_id, Counter())

        def run(env):
            if init is not None:
                init(env)
            n = 0
            r = 0
            while True:
                st.steps += 1
                if st.steps > st.budget:
                    raise StepBudgetExceeded(f"step budget of {st.budget} statements exceeded")
                execs[head_i] += 1
                if not cond(env):
                    break
                n += 1
                r = body(env)
                if r == BREAK:
                    r = 0
                    break
                if r == RETURN:
                    break
                if upd is not None:
                    execs[step_i] += 1
                    upd(env)
            trips[n] += 1
            return r
        return run

    def while_(self, s, cnt):
        head_i, _, body_i, body_id = self._loop_common(s)
        cond = self.expr(s.cond, self.st.counts[head_i])
        body = self.entered(s.body, body_i)
        st = self.st
        execs = st.execs
        trips = st.trips.setdefault(body_id, Counter())

        def run(env):
            n = 0
            r = 0
            while True:
                st.steps += 1
                if st.steps > st.budget:
                    raise StepBudgetExceeded(f"step budget of {st.budget} statements exceeded")
                execs[head_i] += 1
                if not cond(env):
                    break
                n += 1
                r = body(env)
                if r == BREAK:
                    r = 0
                    break
                if r == RETURN:
                    break
            trips[n] += 1
            return r
        return run

    # -- expressions ------------------------------------------------------------------

    def arith(self, op, rt, pos):
        is_int = rt.kind == "int"
        if op == "+":
            return (lambda a, b: wrap32(a + b)) if is_int else (lambda a, b: a + b)
        if op == "-":
            return (lambda a, b: wrap32(a - b)) if is_int else (lambda a, b: a - b)
        if op == "*":
            return (lambda a, b: wrap32(a * b)) if is_int else (lambda a, b: a * b)
        if op == "/":
            if not is_int:
                return java_fdiv

            def idiv(a, b):
                if b == 0:
                    raise self.fault("integer division by zero", pos)
                return java_idiv(a, b)
            return idiv
        if op == "%":
            if not is_int:
                return java_fmod

            def imod(a, b):
                if b == 0:
                    raise self.fault("integer modulo by zero", pos)
                return java_imod(a, b)
            return imod
        raise ValueError(op)  # pragma: no cover

    def expr(self, e, cnt):
        if isinstance(e, (A.IntLit, A.FloatLit, A.BoolLit, A.CharLit)):
            v = e.value
            return lambda env: v
        if isinstance(e, A.NullLit):
            return lambda env: None
        if isinstance(e, A.This):
            return lambda env: env[0]
        if isinstance(e, A.Name):
            if self.tp.names[e.nid] == "local":
                slot = self.slots[e.id]
                return lambda env: env[slot]
            name = e.id
            k = self.own(e)[0]

            def this_field(env):
                cnt[k] += 1
                return env[0].f[name]
            return this_field
        if isinstance(e, A.FieldAccess):
            of = self.expr(e.obj, cnt)
            k = self.own(e)[0]
            name = e.name
            pos = e.pos
            if self.ty(e.obj).kind == "array":
                def length(env):
                    a = of(env)
                    if a is None:
                        raise self.fault("null array dereference", pos)
                    cnt[k] += 1
                    return len(a.items)
                return length

            def field_read(env):
                o = of(env)
                if o is None:
                    raise self.fault(f"null dereference reading field {name!r}", pos)
                cnt[k] += 1
                return o.f[name]
            return field_read
        if isinstance(e, A.Index):
            af = self.expr(e.array, cnt)
            ixf = self.expr(e.index, cnt)
            k = self.own(e)[0]
            pos = e.pos

            def index(env):
                a = af(env)
                i = ixf(env)
                if a is None:
                    raise self.fault("null array dereference", pos)
                if not 0 <= i < len(a.items):
                    raise self.fault(f"index {i} out of bounds for length {len(a.items)}", pos)
                cnt[k] += 1
                return a.items[i]
            return index
        if isinstance(e, A.Unary):
            of = self.expr(e.operand, cnt)
            k = self.own(e)[0]
            if e.op == "!":
                def not_(env):
                    v = of(env)
                    cnt[k] += 1
                    return not v
                return not_
            wrap = self.ty(e).kind == "int"

            def neg(env):
                v = of(env)
                cnt[k] += 1
                return wrap32(-v) if wrap else -v
            return neg
        if isinstance(e, A.Cast):
            of = self.expr(e.operand, cnt)
            k = self.own(e)[0]
            cv = float if e.target == "float" else float_to_int

            def cast(env):
                v = of(env)
                cnt[k] += 1
                return cv(v)
            return cast
        if isinstance(e, A.Binary):
            return self.binary(e, cnt)
        if isinstance(e, A.Call):
            return self.call(e, cnt)
        if isinstance(e, A.New):
            return self.new(e, cnt)
        if isinstance(e, A.NewArray):
            sf = self.expr(e.size, cnt)
            k = self.own(e)[0]
            dv = default_value(self.ty(e).elem)
            pos = e.pos

            def new_array(env):
                n = sf(env)
                if n < 0:
                    raise self.fault(f"negative array size {n}", pos)
                cnt[k] += 1
                return MJArray([dv] * n)
            return new_array
        raise TypeError(type(e))  # pragma: no cover

    def binary(self, e, cnt):
        lf = self.expr(e.left, cnt)
        rf = self.expr(e.right, cnt)
        k = self.own(e)[0]
        op = e.op
        if op == "&&":
            def and_(env):
                cnt[k] += 1
                return lf(env) and rf(env)
            return and_
        if op == "||":
            def or_(env):
                cnt[k] += 1
                return lf(env) or rf(env)
            return or_
        if op in E.ARITH_NAMES:
            fn = self.arith(op, self.ty(e), e.pos)
        elif op == "<":
            fn = lambda a, b: a < b  # noqa: E731
        elif op == "<=":
            fn = lambda a, b: a <= b  # noqa: E731
        elif op == ">":
            fn = lambda a, b: a > b  # noqa: E731
        elif op == ">=":
            fn = lambda a, b: a >= b  # noqa: E731
        else:
            ref = self.ty(e.left).is_reference or self.ty(e.right).is_reference
            if op == "==":
                fn = (lambda a, b: a is b) if ref else (lambda a, b: a == b)
            else:
                fn = (lambda a, b: a is not b) if ref else (lambda a, b: a != b)

        def bin_(env):
            a = lf(env)
            b = rf(env)
            cnt[k] += 1
            return fn(a, b)
        return bin_

    def new(self, e, cnt):
        k = self.own(e)[0]
        t = self.ty(e)
        if t.name == "List":
            def new_list(env):
                cnt[k] += 1
                return MJList()
            return new_list
        if t.name == "Buffer":
            def new_buffer(env):
                cnt[k] += 1
                return MJBuffer()
            return new_buffer
        info = self.tp.classes[t.name]
        defaults = tuple((n, default_value(ft)) for n, (ft, _) in info.fields.items())
        cname = t.name

        def new_obj(env):
            cnt[k] += 1
            return Obj(cname, dict(defaults))
        return new_obj

    def call(self, e, cnt):
        target = self.tp.calls[e.nid]
        bump = _bump(cnt, self.own(e))
        if target.kind == "lib":
            return self.lib_call(e, target.lib, cnt, bump)
        m = self.tp.method(target.cls, target.method)
        args = tuple(self.conv(self.expr(a, cnt), pt, self.ty(a))
                     for a, (_, pt) in zip(e.args, m.params))
        rf = self.expr(e.recv, cnt) if e.recv is not None else (lambda env: env[0])
        cell = self.fns[(target.cls, target.method)]
        st = self.st
        sites = st.sites
        nid = e.nid
        pos = e.pos
        qual = m.qualname

        def call_user(env):
            o = rf(env)
            if o is None:
                raise self.fault(f"null receiver calling {qual}", pos)
            vals = [a(env) for a in args]
            bump()
            sites[nid] += 1
            st.depth += 1
            if st.depth > st.max_depth:
                raise self.fault(f"call depth {st.max_depth} exceeded calling {qual}", pos)
            try:
                return cell[0](o, vals)
            finally:
                st.depth -= 1
        return call_user

    def lib_call(self, e, lid, cnt, bump):
        st = self.st
        pos = e.pos
        args = tuple(self.expr(a, cnt) for a in e.args)
        owner, name = lid.split(".")
        if owner == "IO":
            if name == "print":
                a0 = args[0]
                t = self.ty(e.args[0])
                out = st.out

                def io_print(env):
                    v = a0(env)
                    bump()
                    out.append(format_value(v, t))
                return io_print
            conv = int if name == "readInput" else float

            def io_read(env):
                bump()
                if st.in_pos < len(st.inputs):
                    v = st.inputs[st.in_pos]
                    st.in_pos += 1
                    return wrap32(int(v)) if conv is int else float(v)
                st.exhausted = True
                return conv(0)
            return io_read
        if owner == "Math":
            return self.math_call(name, args, bump, self.ty(e))
        rf = self.expr(e.recv, cnt)
        impl = _LIB_IMPL[lid]
        fault = self.fault

        def lib(env):
            o = rf(env)
            if o is None:
                raise fault(f"null receiver calling {lid}", pos)
            vals = [a(env) for a in args]
            bump()
            try:
                return impl(o, *vals)
            except IndexError as exc:
                raise fault(f"{lid}: {exc}", pos) from None
        return lib

    def math_call(self, name, args, bump, rt):
        st = self.st
        if name == "random":
            def m_random(env):
                bump()
                return st.rng.random()
            return m_random
        if name == "max":
            a0, a1 = args
            as_float = rt.kind == "float"

            def m_max(env):
                a = a0(env)
                b = a1(env)
                bump()
                r = a if a >= b else b
                return float(r) if as_float else r
            return m_max
        if name == "sqrt":
            a0 = args[0]

            def m_sqrt(env):
                a = a0(env)
                bump()
                return math.sqrt(a) if a >= 0 else math.nan
            return m_sqrt
        a0, a1 = args

        def m_pow(env):
            a = a0(env)
            b = a1(env)
            bump()
            try:
                return math.pow(a, b)
            except ValueError:
                return math.nan
            except OverflowError:
                return math.inf
        return m_pow


def _list_get(o, i):
    if not 0 <= i < len(o.items):
        raise IndexError(f"index {i} out of bounds for size {len(o.items)}")
    return o.items[i]


def _list_remove(o, i):
    if not 0 <= i < len(o.items):
        raise IndexError(f"index {i} out of bounds for size {len(o.items)}")
    return o.items.pop(i)


def _buf_get(o, i):
    if not 0 <= i < len(o.data):
        raise IndexError(f"index {i} out of bounds for limit {len(o.data)}")
    return o.data[i]


def _buf_put(o, v):
    o.put(float(v))


def _buf_put_all(o, src):
    if src is None:
        raise IndexError("null source buffer")
    for v in list(src.data):
        o.put(v)


def _buf_clear(o):
    o.pos = 0


_LIB_IMPL = {
    "List.add": lambda o, v: o.items.append(v),
    "List.get": _list_get,
    "List.size": lambda o: len(o.items),
    "List.isEmpty": lambda o: not o.items,
    "List.remove": _list_remove,
    "Buffer.put": _buf_put,
    "Buffer.putAll": _buf_put_all,
    "Buffer.get": _buf_get,
    "Buffer.limit": lambda o: len(o.data),
    "Buffer.position": lambda o: o.pos,
    "Buffer.clear": _buf_clear,
}


# ------------------------------------------------------------------ entry point


def validate_case(g, case):
    if not case.duration_s > 0:
        raise InvalidCase(f"case {case.case_id}: duration_s must be positive")
    for bid in case.ablated:
        b = g.by_id.get(bid)
        if b is None:
            raise InvalidCase(f"case {case.case_id}: unknown block {bid!r}")
        if not b.ablatable:
            raise InvalidCase(f"case {case.case_id}: block {bid!r} is not ablatable")


def run_case(tp, case, g=None, budget=DEFAULT_STEP_BUDGET, max_depth=DEFAULT_MAX_DEPTH):
    """Execute the entry point of ``tp`` under ``case``; deterministic."""
    g = g if g is not None else build_program_cfg(tp)
    validate_case(g, case)
    main = tp.entry()
    if main is None:
        raise InvalidCase("program has no entry point (a class with void main())")
    ablated = frozenset(g.by_id[b].index for b in case.ablated)
    st = _State(g, case, budget, max_depth)
    fns = _Compiler(tp, g, ablated, st).compile_program()
    need = 40 * max_depth + 2000
    old = sys.getrecursionlimit()
    if old < need:
        sys.setrecursionlimit(need)
    try:
        st.depth = 1
        fns[(main.cls, "main")][0](Obj(main.cls, {n: default_value(t) for n, (t, _) in
                                                  tp.classes[main.cls].fields.items()}), [])
    except RecursionError:
        raise RuntimeFault("interpreter recursion limit reached", *main.decl.pos,
                           filename=tp.filename) from None
    finally:
        if old < need:
            sys.setrecursionlimit(old)
    return _collect(g, case, st)


def _collect(g, case, st):
    total = [0] * _NOPS
    block_exec = {}
    block_counts = {}
    partial = []
    for b in g.blocks:
        row = st.counts[b.index]
        n = st.execs[b.index]
        block_exec[b.id] = n
        bc = {E.CATALOG_IDS[i]: v for i, v in enumerate(row) if v}
        if bc:
            block_counts[b.id] = bc
        for i, v in enumerate(row):
            total[i] += v
        want = {k: v * n for k, v in b.static_counts.items() if v * n}
        if bc != want:
            partial.append(b.id)
    counts = CountVector.from_row(total, case.duration_s)
    trips = {k: dict(v) for k, v in st.trips.items() if v}
    return RunResult(case.case_id, block_exec, block_counts, counts, st.out, st.steps,
                     "ok", bool(partial), tuple(partial), st.exhausted, dict(st.sites), trips)


def aggregate_counts(r):
    return r.counts


def static_recount(g, r):
    """Σ exec × static over blocks: the RunResult invariant, as a CountVector."""
    out = Counter()
    for b in g.blocks:
        n = r.block_exec.get(b.id, 0)
        for k, v in b.static_counts.items():
            out[k] += v * n
    return CountVector(dict(out), r.duration_s)
