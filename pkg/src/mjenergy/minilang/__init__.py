"""MJ front end: parser, type checker and canonical formatter."""

from .checker import CallTarget, TypedProgram, load_typed, type_check
from .formatter import format_program
from .parser import parse_file, parse_program

__all__ = [
    "CallTarget", "TypedProgram", "format_program", "load_typed",
    "parse_file", "parse_program", "type_check",
]
