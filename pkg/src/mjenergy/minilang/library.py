"""Built-in library surface: signatures and purity bits.

``E`` stands for a List's element class.  ``num`` accepts int or float and
the result of ``Math.max`` is int only when both arguments are int.
"""

from collections import namedtuple

LibSig = namedtuple("LibSig", "owner name params ret pure")

LIBRARY = (
    LibSig("List", "add", ("E",), "void", False),
    LibSig("List", "get", ("int",), "E", True),
    LibSig("List", "size", (), "int", True),
    LibSig("List", "isEmpty", (), "bool", True),
    LibSig("List", "remove", ("int",), "E", False),
    LibSig("Buffer", "put", ("float",), "void", False),
    LibSig("Buffer", "putAll", ("Buffer",), "void", False),
    LibSig("Buffer", "get", ("int",), "float", True),
    LibSig("Buffer", "limit", (), "int", True),
    LibSig("Buffer", "position", (), "int", True),
    LibSig("Buffer", "clear", (), "void", False),
    LibSig("Math", "max", ("num", "num"), "num", True),
    LibSig("Math", "pow", ("float", "float"), "float", True),
    LibSig("Math", "sqrt", ("float",), "float", True),
    LibSig("Math", "random", (), "float", False),
    LibSig("IO", "print", ("prim",), "void", False),
    LibSig("IO", "readInput", (), "int", False),
    LibSig("IO", "readFloat", (), "float", False),
)

BY_ID = {f"{s.owner}.{s.name}": s for s in LIBRARY}
GLOBAL_FUNCS = {s.name: f"IO.{s.name}" for s in LIBRARY if s.owner == "IO"}
LIB_CLASSES = ("List", "Buffer", "Math", "IO")
RESERVED_NAMES = set(LIB_CLASSES) | {"Object"} | set(GLOBAL_FUNCS)


def lib_id(owner, name):
    return f"{owner}.{name}"


def is_pure(lid):
    return BY_ID[lid].pure
