"""Operation identification, block structure and dynamic counts, against hand counts."""

from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from mjenergy import energy_ops as E
from mjenergy.cfg import build_program_cfg
from mjenergy.errors import CoverageImpossible, InvalidCase, RuntimeFault
from mjenergy.profiler import (ExecutionCase, InputTemplate, generate_cases, read_cases,
                               read_counts, run_case, run_suite, static_recount, write_cases,
                               write_counts)

from conftest import run, typed, wrap


def test_catalog_ids_unique_and_classified():
    ids = [e.id for e in E.CATALOG]
    assert len(ids) == len(set(ids))
    for op in ids:
        E.classify_op(op)
    for lib in ("List.size", "Buffer.putAll", "IO.print", "Math.sqrt"):
        assert E.is_libfunc(lib)
    assert not E.is_libfunc("Method_Invocation")


def test_straight_line_counts():
    tp = typed(wrap("int x = 1 + 2; f_ = x; print(x);", fields="int f_;"))
    assert run(tp).counts.counts == {
        "Declaration_int": 1, "Assign_int_int": 2, "Addition_int_int": 1,
        "Field_Reference": 1, "Method_Invocation": 1, "IO.print": 1}


def test_user_call_costs_invocation_parameters_and_return():
    tp = typed(wrap("int y = g(1, 2.0);", extra="int g(int a, float b) { return a; }"))
    assert run(tp).counts.counts == {
        "Declaration_int": 1, "Assign_int_int": 1, "Method_Invocation": 1,
        "Parameter_int": 1, "Parameter_float": 1, "Return_int": 1}


def test_compound_assignment_and_mixed_types():
    tp = typed(wrap("float f = 1.0; f += 2; int k = 3; k *= k;"))
    c = run(tp).counts.counts
    assert c["Addition_float_int"] == 1
    assert c["Assign_float_float"] == 2  # init, then the += store
    assert c["Multi_int_int"] == 1
    assert c["Declaration_float"] == c["Declaration_int"] == 1


def test_equality_on_objects_and_null():
    tp = typed(wrap("M m = null; if (m == null) { m = new M(); }"))
    c = run(tp).counts.counts
    assert c["Equal_Object_null"] == 1
    assert c["New_Object"] == 1
    assert "BlockGoto_if" not in c  # then-branch is fall-through


def test_if_else_goto_only_on_else_entry():
    tp = typed(wrap("int x = readInput(); if (x > 0) { print(1); } else { print(2); }"))
    assert run(tp, (0,)).counts["BlockGoto_if"] == 1
    assert run(tp, (5,)).counts.get("BlockGoto_if") == 0
    tp = typed(wrap("int x = readInput(); if (x > 0) { print(1); }"))
    assert run(tp, (0,)).counts["BlockGoto_if"] == 1  # empty implicit else


def test_for_loop_counts():
    tp = typed(wrap("for (int i = 0; i < 3; i++) { print(i); }"))
    r = run(tp)
    assert r.counts.counts == {"Declaration_int": 1, "Assign_int_int": 1, "Less_int_int": 4,
                               "Increment": 3, "BlockGoto_for": 3, "Method_Invocation": 3,
                               "IO.print": 3}
    assert r.outputs == ["0", "1", "2"]
    assert r.trip_counts["M.main().for_1"] == {3: 1}


def test_block_ids_are_hierarchical():
    tp = typed(wrap("while (true) { if (true) { break; } for (int i = 0; i < 1; i++) { } }"))
    ids = [b.id for b in build_program_cfg(tp).blocks]
    for want in ("M.main()", "M.main().while_1", "M.main().while_1.head",
                 "M.main().while_1.if_1", "M.main().while_1.if_1.else",
                 "M.main().while_1.for_1", "M.main().while_1.for_1.step"):
        assert want in ids


def test_ablated_block_runs_as_noop():
    tp = typed(wrap("for (int i = 0; i < 3; i++) { print(i); }"))
    r = run(tp, ablated=("M.main().for_1",))
    assert r.outputs == []
    assert r.counts.counts == {"Declaration_int": 1, "Assign_int_int": 1, "Less_int_int": 4,
                               "Increment": 3}


def test_unknown_or_fixed_block_in_case():
    tp = typed(wrap("print(1);"))
    with pytest.raises(InvalidCase):
        run(tp, ablated=("M.main().nope",))
    with pytest.raises(InvalidCase):
        run(tp, ablated=("M.main()",))


def test_runtime_faults():
    with pytest.raises(RuntimeFault):
        run(typed(wrap("int z = 0; print(1 / z);")))
    with pytest.raises(RuntimeFault):
        run(typed(wrap("int[] a = new int[2]; a[2] = 1;")))
    with pytest.raises(RuntimeFault):
        run(typed(wrap("M m = null; print(m.f_);", fields="int f_;")))


def test_exhausted_input_reads_zero():
    r = run(typed(wrap("print(readInput()); print(readInput());")), (7,))
    assert r.outputs == ["7", "0"]
    assert r.input_exhausted


def test_counts_equal_static_recount_on_demos(demos, cfgs):
    for name in ("clickmove", "orbit", "waves", "calibrate"):
        tp, g = demos[name], cfgs[name]
        r = run_case(tp, ExecutionCase("x", (5, 17, 3, 40, 8, 2), (), 1.0, 1), g)
        assert static_recount(g, r).counts == {k: v for k, v in r.counts.counts.items() if v}


def test_generated_cases_cover_every_ablatable_block(demos, cfgs):
    tp, g = demos["clickmove"], cfgs["clickmove"]
    cases = generate_cases(tp, [InputTemplate((3, 6), (0, 9))], 12, 3, g)
    assert not cases[0].ablated
    covered = set().union(*(c.ablated for c in cases))
    assert covered == {b.id for b in g.ablatable()}
    again = generate_cases(tp, [InputTemplate((3, 6), (0, 9))], 12, 3, g)
    assert again == cases
    with pytest.raises(CoverageImpossible):
        generate_cases(tp, [], 1, 0, g)


def test_suite_drops_blocks_whose_removal_faults():
    src = wrap("int[] a = null; if (true) { a = new int[1]; } a[0] = 1; print(a[0]);")
    tp = typed(src)
    cases = [ExecutionCase("c0"), ExecutionCase("c1", (), ("M.main().if_1",))]
    ran, results, banned = run_suite(tp, cases)
    assert banned == ["M.main().if_1"]
    assert ran[1].ablated == ()
    assert results[1].outputs == ["1"]


def test_case_and_count_files_round_trip(tmp_path, demos, cfgs):
    tp, g = demos["orbit"], cfgs["orbit"]
    cases = generate_cases(tp, [InputTemplate((3, 5), (0, 9))], 4, 1, g)
    write_cases(tmp_path / "c.jsonl", cases, {"k": 1})
    back, meta = read_cases(tmp_path / "c.jsonl")
    assert back == cases and meta == {"k": 1}
    _, results, _ = run_suite(tp, cases, g)
    rows = [(c.case_id, r.counts) for c, r in zip(cases, results)]
    write_counts(tmp_path / "k.csv", rows)
    got = read_counts(tmp_path / "k.csv")
    assert [(cid, v.counts, v.duration_s) for cid, v in got] == \
        [(cid, {k: n for k, n in v.counts.items() if n}, v.duration_s) for cid, v in rows]


@given(st.lists(st.integers(0, 40), min_size=0, max_size=6))
@settings(max_examples=40, deadline=None)
def test_identify_ops_matches_one_pass_of_straight_code(xs):
    # a straight-line body executes once, so dynamic counts equal the static census
    body = " ".join(f"int v{i} = {x} * 2 + {x};" for i, x in enumerate(xs)) or "print(0);"
    tp = typed(wrap(body))
    stat = E.identify_stmts(tp, tp.method("M", "main").decl.body)
    assert Counter(run(tp).counts.counts) == +stat
