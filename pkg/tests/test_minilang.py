import pytest
from hypothesis import given, settings, strategies as st

from mjenergy.errors import (EmptySource, MJSyntaxError, MJTypeError, UnknownLibraryFunction,
                             UnresolvedName)
from mjenergy.minilang import format_program, load_typed, parse_program

from conftest import run, typed, wrap


def test_format_is_a_fixed_point(demos):
    for tp in demos.values():
        text = format_program(tp.program)
        again = format_program(parse_program(text))
        assert again == text


def test_parse_keeps_positions():
    p = parse_program("class A {\n  int x_;\n  void main() { x_ = 1; }\n}\n")
    c = p.classes[0]
    assert c.pos == (1, 1)
    assert c.fields[0].pos == (2, 3)


@pytest.mark.parametrize("src", ["", "   \n// nothing\n"])
def test_empty_source(src):
    with pytest.raises(EmptySource):
        parse_program(src)


def test_syntax_error_reports_expected_tokens():
    with pytest.raises(MJSyntaxError) as ei:
        parse_program("class A { void main() { int x = ; } }")
    assert ei.value.line == 1
    assert "expression" in ei.value.expected


def test_int_literal_range():
    with pytest.raises(MJSyntaxError):
        parse_program(wrap("int x = 2147483648;"))
    typed(wrap("int x = 2147483647;"))


def test_type_errors():
    with pytest.raises(MJTypeError):
        typed(wrap("int x = 1.5;"))
    with pytest.raises(MJTypeError):
        typed(wrap("bool b = 1;"))
    with pytest.raises(UnresolvedName):
        typed(wrap("y = 1;"))
    with pytest.raises(UnknownLibraryFunction):
        typed(wrap("List<M> l = new List<M>(); l.frob();"))


def test_nested_redeclaration_rejected_sibling_allowed():
    with pytest.raises(MJTypeError):
        typed(wrap("int i = 0; if (i == 0) { int i = 1; }"))
    typed(wrap("if (true) { int i = 0; } if (true) { int i = 1; }"))


def test_widening_and_cast():
    tp = typed(wrap("float f = 3; int k = (int) -2.7; print(f); print(k);"))
    assert run(tp).outputs == ["3.0", "-2"]


@given(st.integers(-2**31, 2**31 - 1), st.integers(-2**31, 2**31 - 1).filter(lambda b: b != 0))
@settings(max_examples=60, deadline=None)
def test_int_division_and_modulo_truncate_toward_zero(a, b):
    tp = typed(wrap("int a = readInput(); int b = readInput(); print(a / b); print(a % b);"))
    sign = 1 if (a < 0) == (b < 0) else -1
    q = sign * (abs(a) // abs(b))
    r = a - q * b
    wrap32 = lambda x: ((x + 2**31) % 2**32) - 2**31
    q = wrap32(q)  # -2^31 / -1 overflows like Java
    out = run(tp, (a, b)).outputs
    assert out == [str(q), str(r)]


def test_int_overflow_wraps():
    tp = typed(wrap("int x = 2147483647; x = x + 1; print(x);"))
    assert run(tp).outputs == ["-2147483648"]


def test_load_typed_reports_filename():
    with pytest.raises(MJTypeError) as ei:
        load_typed(wrap("int x = true;"), "bad.mj")
    assert "bad.mj" in str(ei.value)
