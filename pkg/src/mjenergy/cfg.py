"""Per-method block structure with hierarchical block ids.

A block is the straight-line part of one statement list: the statements of
the list minus the bodies of nested constructs.  An ``if`` condition and a
``for`` initializer execute in the enclosing block; loop conditions and
``for`` updates get their own header blocks because their execution counts
differ from both the enclosing block and the body.

Block ids::

    Class.method()                      entry block
    Class.method().if_2                 then-branch of the 2nd if
    Class.method().if_2.else            else-branch (explicit or implicit)
    Class.method().for_1                body of the 1st for
    Class.method().for_1.head           condition test, once per test
    Class.method().for_1.step           update, once per completed iteration
    Class.method().while_1 / .head      body / condition of the 1st while

Ordinals count constructs of the same kind among siblings in source order.

Branch costs follow the jump model of compiled conditionals: entering an
else-branch (including the empty implicit one of an ``if`` without
``else``) costs one ``BlockGoto_if``; a then-branch is entered by fall
through and costs nothing.  Each loop-body entry costs one
``BlockGoto_for`` / ``BlockGoto_while``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import energy_ops as E
from .minilang import ast as A


@dataclass
class BasicBlock:
    id: str
    index: int
    cls: str
    method: str
    kind: str  # entry then else implicit_else body head step
    statements: Tuple[A.Node, ...]
    static_counts: Counter
    goto_kind: Optional[str]  # None, 'if', 'for', 'while'
    ablatable: bool
    construct: Optional[int] = None  # nid of the owning if/for/while
    parent: Optional[str] = None

    @property
    def method_key(self):
        return (self.cls, self.method)


@dataclass
class ProgramCFG:
    blocks: List[BasicBlock] = field(default_factory=list)
    by_id: Dict[str, BasicBlock] = field(default_factory=dict)
    entry: Dict[Tuple[str, str], int] = field(default_factory=dict)
    if_blocks: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    loop_blocks: Dict[int, Tuple[int, Optional[int], int]] = field(default_factory=dict)
    stmt_block: Dict[int, int] = field(default_factory=dict)

    def __getitem__(self, block_id):
        return self.by_id[block_id]

    def ablatable(self):
        return [b for b in self.blocks if b.ablatable]

    def method_blocks(self, cls, method):
        return [b for b in self.blocks if b.cls == cls and b.method == method]


def region_own_counts(tp, stmts):
    """Ops of one straight-line region, excluding nested bodies and headers."""
    out = Counter()
    for s in stmts:
        if isinstance(s, A.If):
            out.update(E.identify_ops(tp, s.cond))
        elif isinstance(s, A.For):
            if s.init is not None:
                out.update(E.identify_ops(tp, s.init))
        elif isinstance(s, A.While):
            pass
        else:
            out.update(E.identify_ops(tp, s))
    return out


class _Builder:
    def __init__(self, tp):
        self.tp = tp
        self.g = ProgramCFG()

    def add(self, bid, cls, method, kind, stmts, counts, goto, ablatable, construct=None, parent=None):
        if goto is not None:
            counts[E.BLOCK_GOTO[goto]] += 1
        b = BasicBlock(bid, len(self.g.blocks), cls, method, kind, tuple(stmts),
                       counts, goto, ablatable, construct, parent)
        assert bid not in self.g.by_id, bid
        self.g.blocks.append(b)
        self.g.by_id[bid] = b
        return b.index

    def region(self, bid, cls, method, kind, stmts, goto, ablatable, construct=None, parent=None):
        idx = self.add(bid, cls, method, kind, stmts, region_own_counts(self.tp, stmts),
                       goto, ablatable, construct, parent)
        for s in stmts:
            self.g.stmt_block[s.nid] = idx
        ordinals = Counter()
        for s in stmts:
            if isinstance(s, A.If):
                ordinals["if"] += 1
                name = f"{bid}.if_{ordinals['if']}"
                then_i = self.region(name, cls, method, "then", s.then, None, True, s.nid, bid)
                if s.orelse is not None:
                    else_i = self.region(f"{name}.else", cls, method, "else", s.orelse, "if",
                                         True, s.nid, bid)
                else:
                    else_i = self.add(f"{name}.else", cls, method, "implicit_else", (),
                                      Counter(), "if", False, s.nid, bid)
                self.g.if_blocks[s.nid] = (then_i, else_i)
            elif isinstance(s, A.For):
                ordinals["for"] += 1
                name = f"{bid}.for_{ordinals['for']}"
                body_i = self.region(name, cls, method, "body", s.body, "for", True, s.nid, bid)
                head_i = self.add(f"{name}.head", cls, method, "head", (s.cond,),
                                  E.identify_ops(self.tp, s.cond), None, False, s.nid, bid)
                step_i = None
                if s.update is not None:
                    step_i = self.add(f"{name}.step", cls, method, "step", (s.update,),
                                      E.identify_ops(self.tp, s.update), None, False, s.nid, bid)
                self.g.loop_blocks[s.nid] = (head_i, step_i, body_i)
            elif isinstance(s, A.While):
                ordinals["while"] += 1
                name = f"{bid}.while_{ordinals['while']}"
                # a while body usually holds the loop's progress, so removing it
                # would not terminate; only the blocks nested inside it are ablatable
                body_i = self.region(name, cls, method, "body", s.body, "while", False, s.nid, bid)
                head_i = self.add(f"{name}.head", cls, method, "head", (s.cond,),
                                  E.identify_ops(self.tp, s.cond), None, False, s.nid, bid)
                self.g.loop_blocks[s.nid] = (head_i, None, body_i)
        return idx


def build_cfg(tp, cls=None, method=None):
    """Blocks of one method, or of the whole program when no method is given."""
    g = build_program_cfg(tp)
    if cls is None:
        return g.blocks
    return g.method_blocks(cls, method)


def build_program_cfg(tp):
    b = _Builder(tp)
    for c in tp.program.classes:
        for m in c.methods:
            bid = f"{c.name}.{m.name}()"
            b.g.entry[(c.name, m.name)] = b.region(bid, c.name, m.name, "entry", m.body, None, False)
    return b.g


def block_static_counts(b):
    """Ops for one execution of ``b``, including its BlockGoto, if any."""
    return Counter(b.static_counts)
