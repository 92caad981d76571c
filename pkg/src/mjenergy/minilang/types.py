from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SemType:
    kind: str  # int float bool char object array null void
    name: Optional[str] = None  # class name for objects
    elem: object = None  # SemType for arrays, element class name for List

    def __str__(self):
        if self.kind == "object":
            return self.name if self.elem is None else f"{self.name}<{self.elem}>"
        if self.kind == "array":
            return f"{self.elem}[]"
        return self.kind

    @property
    def is_numeric(self):
        return self.kind in ("int", "float")

    @property
    def is_reference(self):
        return self.kind in ("object", "array", "null")


INT = SemType("int")
FLOAT = SemType("float")
BOOL = SemType("bool")
CHAR = SemType("char")
NULL = SemType("null")
VOID = SemType("void")
PRIMITIVES = {"int": INT, "float": FLOAT, "bool": BOOL, "char": CHAR}


def obj(name, elem=None):
    return SemType("object", name, elem)


def array(elem):
    return SemType("array", None, elem)


BUFFER = obj("Buffer")


def op_type_name(t):
    """Operand-type spelling used inside energy-operation ids."""
    if t.kind == "object":
        return "Object"
    if t.kind == "array":
        return op_type_name(t.elem) + "[]"
    return t.kind


def assignable(target, source):
    if target == source:
        return True
    if target.kind == "float" and source.kind == "int":
        return True
    if source.kind == "null" and target.kind in ("object", "array"):
        return True
    return False


def arith_result(a, b):
    return FLOAT if FLOAT in (a, b) else INT
