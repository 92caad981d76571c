"""Energy-operation catalog: naming, identification and reporting classes.

An energy operation is a typed source construct that is costed as a unit
(``Addition_int_int``, ``Equal_Object_null``, ``Method_Invocation``...).
Library functions are atomic units named ``Owner.function``.

``catalog()`` is the single source of truth for column order in count
files; ``docs/op-catalog.tsv`` is generated from it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import UncataloguedConstruct
from .minilang import ast as A
from .minilang.library import LIBRARY, lib_id
from .minilang.types import op_type_name


class OpClass(str, Enum):
    ASSIGNMENTS = "Assignments"
    DECLARATIONS = "Declarations"
    CONTROL = "ControlOps"
    FUNCTION = "FunctionOps"
    BOOLEAN = "BooleanOps"
    ARITHMETIC = "ArithmeticOps"
    LIBRARY = "LibFunctions"
    ARRAY = "ArrayOps"


OP_CLASSES = tuple(OpClass)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: str  # 'op' or 'lib'
    op_class: OpClass
    signature: str
    pure: bool = True
    arity: int = 0


_ELEMS = ("int", "float", "bool", "char", "Object")
VALUE_TYPES = _ELEMS + tuple(t + "[]" for t in _ELEMS)
_NUM_PAIRS = (("int", "int"), ("int", "float"), ("float", "int"), ("float", "float"))

ARITH_NAMES = {"+": "Addition", "-": "Subtraction", "*": "Multi", "/": "Division", "%": "Modulo"}
CMP_NAMES = {"<": "Less", "<=": "LessEqual", ">": "Greater", ">=": "GreaterEqual"}
EQ_NAMES = {"==": "Equal", "!=": "NotEqual"}
COMPOUND = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%"}

BLOCK_GOTO = {"if": "BlockGoto_if", "for": "BlockGoto_for", "while": "BlockGoto_while"}


def _eq_pairs():
    pairs = list(_NUM_PAIRS) + [("bool", "bool"), ("char", "char"),
                                ("Object", "Object"), ("Object", "null")]
    for t in _ELEMS:
        pairs.append((t + "[]", t + "[]"))
        pairs.append((t + "[]", "null"))
    pairs.append(("null", "null"))
    return pairs


def _assign_pairs():
    pairs = [(t, t) for t in VALUE_TYPES]
    pairs.append(("float", "int"))
    pairs.append(("Object", "null"))
    pairs.extend((t + "[]", "null") for t in _ELEMS)
    return pairs


def _build_catalog():
    out = []

    def op(name, cls, sig, arity):
        out.append(CatalogEntry(name, "op", cls, sig, True, arity))

    for sym, name in ARITH_NAMES.items():
        for a, b in _NUM_PAIRS:
            op(f"{name}_{a}_{b}", OpClass.ARITHMETIC, f"{a} {sym} {b}", 2)
    for t in ("int", "float"):
        op(f"Negation_{t}", OpClass.ARITHMETIC, f"-{t}", 1)
    op("Increment", OpClass.ARITHMETIC, "int++", 1)
    op("Decrement", OpClass.ARITHMETIC, "int--", 1)
    op("Cast_int_float", OpClass.ARITHMETIC, "(float) int", 1)
    op("Cast_float_int", OpClass.ARITHMETIC, "(int) float", 1)
    for sym, name in CMP_NAMES.items():
        for a, b in _NUM_PAIRS + (("char", "char"),):
            op(f"{name}_{a}_{b}", OpClass.BOOLEAN, f"{a} {sym} {b}", 2)
    for sym, name in EQ_NAMES.items():
        for a, b in _eq_pairs():
            op(f"{name}_{a}_{b}", OpClass.BOOLEAN, f"{a} {sym} {b}", 2)
    op("And", OpClass.BOOLEAN, "bool && bool", 2)
    op("Or", OpClass.BOOLEAN, "bool || bool", 2)
    op("Not", OpClass.BOOLEAN, "!bool", 1)
    for a, b in _assign_pairs():
        op(f"Assign_{a}_{b}", OpClass.ASSIGNMENTS, f"{a} = {b}", 2)
    for t in VALUE_TYPES:
        op(f"Declaration_{t}", OpClass.DECLARATIONS, f"{t} x", 1)
    op("New_Object", OpClass.DECLARATIONS, "new C()", 0)
    op("New_Array", OpClass.DECLARATIONS, "new T[n]", 1)
    for t in VALUE_TYPES:
        op(f"Parameter_{t}", OpClass.FUNCTION, f"param {t}", 1)
    for t in VALUE_TYPES:
        op(f"Return_{t}", OpClass.FUNCTION, f"returns {t}", 1)
    op("Method_Invocation", OpClass.CONTROL, "call", 0)
    op("Field_Reference", OpClass.CONTROL, "o.f", 1)
    for kind in ("if", "for", "while"):
        op(BLOCK_GOTO[kind], OpClass.CONTROL, f"enter {kind} block", 0)
    op("Array_Reference", OpClass.ARRAY, "a[i]", 2)
    for s in LIBRARY:
        sig = f"({', '.join(s.params)}) -> {s.ret}"
        out.append(CatalogEntry(lib_id(s.owner, s.name), "lib", OpClass.LIBRARY, sig,
                                s.pure, len(s.params)))
    return tuple(out)


CATALOG = _build_catalog()
CATALOG_IDS = tuple(e.id for e in CATALOG)
INDEX = {op_id: i for i, op_id in enumerate(CATALOG_IDS)}
BY_OP = {e.id: e for e in CATALOG}
LIB_IDS = tuple(e.id for e in CATALOG if e.kind == "lib")


def catalog():
    """All energy operations then all library functions, in stable order."""
    return list(CATALOG)


def is_libfunc(op_id):
    return BY_OP[op_id].kind == "lib"


def classify_op(op_id):
    try:
        return BY_OP[op_id].op_class
    except KeyError:
        raise UncataloguedConstruct(f"unknown operation {op_id!r}") from None


def catalog_tsv():
    lines = ["id\tclass\tsignature"]
    for e in CATALOG:
        lines.append(f"{e.id}\t{e.op_class.value}\t{e.signature}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- identification


def _checked(ops, node):
    for o in ops:
        if o not in INDEX:
            raise UncataloguedConstruct(
                f"construct {type(node).__name__} at {node.pos} maps to uncatalogued op {o!r}")
    return tuple(ops)


def _tn(tp, e):
    return op_type_name(tp.types[e.nid])


def _access_op(tp, target):
    """Op incurred by touching an lvalue location, or None for locals."""
    if isinstance(target, A.Index):
        return "Array_Reference"
    if isinstance(target, A.FieldAccess):
        return "Field_Reference"
    if isinstance(target, A.Name) and tp.names.get(target.nid) == "field":
        return "Field_Reference"
    return None


def _eq_name(name, a, b):
    if a == "null" and b != "null":
        a, b = b, "null"
    if "[]" not in a and a == "Object" and b == "Object":
        return f"{name}_Object_Object"
    return f"{name}_{a}_{b}"


def own_ops(tp, node):
    """Operations contributed by ``node`` itself, excluding its children."""
    ops = []
    if isinstance(node, A.Binary):
        a, b = _tn(tp, node.left), _tn(tp, node.right)
        if node.op in ARITH_NAMES:
            ops.append(f"{ARITH_NAMES[node.op]}_{a}_{b}")
        elif node.op in CMP_NAMES:
            ops.append(f"{CMP_NAMES[node.op]}_{a}_{b}")
        elif node.op in EQ_NAMES:
            ops.append(_eq_name(EQ_NAMES[node.op], a, b))
        elif node.op == "&&":
            ops.append("And")
        elif node.op == "||":
            ops.append("Or")
    elif isinstance(node, A.Unary):
        ops.append("Not" if node.op == "!" else f"Negation_{_tn(tp, node.operand)}")
    elif isinstance(node, A.Cast):
        ops.append(f"Cast_{_tn(tp, node.operand)}_{node.target}")
    elif isinstance(node, A.Name):
        if tp.names.get(node.nid) == "field":
            ops.append("Field_Reference")
    elif isinstance(node, A.FieldAccess):
        ops.append("Field_Reference")
    elif isinstance(node, A.Index):
        ops.append("Array_Reference")
    elif isinstance(node, A.Call):
        target = tp.calls[node.nid]
        ops.append("Method_Invocation")
        if target.kind == "lib":
            ops.append(target.lib)
        else:
            m = tp.method(target.cls, target.method)
            ops.extend(f"Parameter_{op_type_name(pt)}" for _, pt in m.params)
            if m.ret.kind != "void":
                ops.append(f"Return_{op_type_name(m.ret)}")
    elif isinstance(node, A.New):
        ops.append("New_Object")
    elif isinstance(node, A.NewArray):
        ops.append("New_Array")
    elif isinstance(node, A.VarDecl):
        t = op_type_name(tp.decl_types[node.nid])
        for d in node.decls:
            ops.append(f"Declaration_{t}")
            if d.init is not None:
                ops.append(f"Assign_{t}_{_tn(tp, d.init)}")
    elif isinstance(node, A.Assign):
        tt = _tn(tp, node.target)
        if node.op == "=":
            ops.append(f"Assign_{tt}_{_tn(tp, node.value)}")
        else:
            vt = _tn(tp, node.value)
            rt = "float" if "float" in (tt, vt) else "int"
            ops.append(f"{ARITH_NAMES[COMPOUND[node.op]]}_{tt}_{vt}")
            ops.append(f"Assign_{tt}_{rt}")
            acc = _access_op(tp, node.target)
            if acc:
                ops.append(acc)
    elif isinstance(node, A.IncDec):
        ops.append("Increment" if node.op == "++" else "Decrement")
        acc = _access_op(tp, node.target)
        if acc:
            ops.append(acc)
    return _checked(ops, node)


def identify_ops(tp, node):
    """Multiset of operations for ``node`` and everything beneath it.

    Control transfers (``BlockGoto_*``) are the CFG's business and never
    appear here.
    """
    out = Counter()
    for n in A.walk(node):
        out.update(own_ops(tp, n))
    return out


def identify_stmts(tp, stmts):
    out = Counter()
    for s in stmts:
        out.update(identify_ops(tp, s))
    return out


def class_totals(counts, costs=None):
    """Sum counts (or cost-weighted counts) per reporting class."""
    out = {c: 0.0 for c in OP_CLASSES}
    for op_id, n in counts.items():
        w = n if costs is None else n * costs.get(op_id, 0.0)
        out[classify_op(op_id)] += w
    return out


@lru_cache(maxsize=None)
def index_of(op_id):
    return INDEX[op_id]
