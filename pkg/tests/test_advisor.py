"""Detectors, transforms, deltas and equivalence on small hand-checked programs."""

from collections import Counter

import pytest

from mjenergy.advisor import (Profile, Thresholds, apply_transform, detect_if_combination,
                              detect_inline_candidates, detect_library_substitution,
                              detect_loop_invariant, detect_unroll, dump_suggestions,
                              estimate, estimate_delta, load_suggestions, verify_equivalence)
from mjenergy.advisor.detect import ProgramFacts, detect_all
from mjenergy.advisor.rewrite import fingerprint
from mjenergy.accounting import energy_uj
from mjenergy.cfg import build_program_cfg
from mjenergy.errors import StaleSuggestion
from mjenergy.minilang import format_program
from mjenergy.profiler import ExecutionCase, run_case, static_recount

from conftest import run, typed

LOW = Thresholds(min_calls=10)


def diff(before, after, inputs=()):
    a, b = run(before, inputs).counts.counts, run(after, inputs).counts.counts
    return {k: a.get(k, 0) - b.get(k, 0) for k in set(a) | set(b) if a.get(k, 0) != b.get(k, 0)}


def profile(tp, *inputs_list):
    g = build_program_cfg(tp)
    rs = [run_case(tp, ExecutionCase(f"p{i}", tuple(x)), g) for i, x in enumerate(inputs_list)]
    return Profile.from_results(fingerprint(tp.program), rs)


def only(sugs, kind=None):
    sugs = [s for s in sugs if kind is None or s.kind == kind]
    assert len(sugs) == 1, [s.describe() for s in sugs]
    return sugs[0]


# ------------------------------------------------------------------ if combination

IFS = """
class M {
    List<M> kids_;
    int n_;
    void main() {
        if (readInput() > 0) {
            kids_ = new List<M>();
        }
        for (int r = 0; r < 3; r++) {
            step();
        }
    }
    void step() {
        if (kids_ != null) {
            n_ = n_ + 1;
        }
        print(n_);
        if (kids_ != null) {
            n_ = n_ + 2;
        }
    }
}
"""


def test_if_combination_counts():
    tp = typed(IFS)
    s = only(detect_if_combination(tp))
    after = apply_transform(tp, s)
    text = format_program(after.program)
    assert "} else {\n            print(n_);" in text
    # per execution of step(): one comparison and its field read fewer
    assert diff(tp, after, (1,)) == {"NotEqual_Object_null": 3, "Field_Reference": 3}
    # on the false path the second implicit else jump disappears too
    assert diff(tp, after, (0,)) == {"NotEqual_Object_null": 3, "Field_Reference": 3,
                                     "BlockGoto_if": 3}
    assert verify_equivalence(tp, after, [ExecutionCase("a", (0,)), ExecutionCase("b", (1,))]).ok


def test_if_combination_blocked_by_write_between():
    tp = typed(IFS.replace("print(n_);", "print(n_);\n        kids_ = null;"))
    assert detect_if_combination(tp) == []


def test_single_if_no_suggestion():
    i = IFS.rindex("if (kids_ != null)")
    j = IFS.index("}", i)
    tp = typed(IFS[:i] + IFS[j + 1:])
    assert detect_if_combination(tp) == []


def test_always_true_condition_delta(model):
    src = """
class M {
    int n_;
    void main() {
        for (int r = 0; r < 100; r++) {
            step(null);
        }
    }
    void step(M m) {
        if (m == null) {
            n_ = n_ + 1;
        }
        print(n_);
        if (m == null) {
            n_ = n_ + 2;
        }
    }
}
"""
    tp = typed(src)
    after = apply_transform(tp, only(detect_if_combination(tp)))
    d = estimate_delta(model, tp, after, [ExecutionCase("c")])
    assert d == pytest.approx(100 * model.cost("Equal_Object_null") * 1e-6, rel=1e-12)


# ------------------------------------------------------------------ inlining

INLINE = """
class T {
    int id_;
    int id() {
        return id_;
    }
}
class M {
    T t_;
    void main() {
        t_ = new T();
        int s = 0;
        for (int i = 0; i < 50; i++) {
            int v = sq(i);
            s = s + v;
        }
        print(s + t_.id());
        print(t_.id());
    }
    int sq(int a) {
        return a * a;
    }
}
"""


def test_inner_method_inline_removes_call_ops():
    tp = typed(INLINE)
    s = only(detect_inline_candidates(tp, profile(tp, ()), LOW), "InnerMethodInline")
    assert s.params["calls"] == 50
    after = apply_transform(tp, s)
    assert diff(tp, after) == {"Method_Invocation": 50, "Parameter_int": 50, "Return_int": 50}
    assert "int sq(int a)" in format_program(after.program)  # definition kept


def test_inline_needs_enough_calls_and_a_profile():
    tp = typed(INLINE)
    assert detect_inline_candidates(tp, None, LOW) == []
    assert [s for s in detect_inline_candidates(tp, profile(tp, ()))
            if s.kind == "InnerMethodInline"] == []


def test_recursive_method_excluded():
    src = """
class M {
    void main() {
        for (int i = 0; i < 20; i++) {
            down(3);
        }
    }
    void down(int n) {
        if (n > 0) {
            down(n - 1);
        }
    }
}
"""
    tp = typed(src)
    assert detect_inline_candidates(tp, profile(tp, ()), LOW) == []


def test_getter_inline_two_sites_opt_in():
    tp = typed(INLINE)
    s = only(detect_inline_candidates(tp, profile(tp, ()), LOW), "InterClassGetterInline")
    assert s.requires_opt_in and "public" in s.notes
    assert len(s.params["calls"]) == 2
    after = apply_transform(tp, s)
    text = format_program(after.program)
    assert "public int id_;" in text and "int id()" in text
    assert diff(tp, after) == {"Method_Invocation": 2, "Return_int": 2}


# ------------------------------------------------------------------ loop invariants

LICM = """
class M {
    List<M> kids_;
    int z_;
    void main() {
        kids_ = new List<M>();
        for (int k = 0; k < 5; k++) {
            kids_.add(new M());
        }
        for (int i = 0; i < kids_.size(); ++i) {
            M child = kids_.get(i);
            child.z_ = i;
        }
        print(kids_.size());
    }
}
"""


def test_hoist_size_and_declaration():
    tp = typed(LICM)
    s = only(detect_loop_invariant(tp))
    after = apply_transform(tp, s)
    text = format_program(after.program)
    assert "int kids_size = kids_.size();" in text
    assert "M child;" in text and "child = kids_.get(i);" in text
    # 6 condition tests become one call; 5 object declarations become one
    assert diff(tp, after) == {"Method_Invocation": 5, "List.size": 5, "Field_Reference": 5,
                               "Declaration_Object": 4, "Declaration_int": -1,
                               "Assign_int_int": -1}
    assert run(after).outputs == run(tp).outputs


def test_no_size_hoist_when_list_mutated():
    tp = typed(LICM.replace("child.z_ = i;", "child.z_ = i;\n            if (i > 9) { kids_.add(child); }"))
    for s in detect_loop_invariant(tp):
        assert "size" not in s.params["key"]


# ------------------------------------------------------------------ unrolling

UNROLL = """
class M {
    void main() {
        int[] a = new int[2112];
        for (int i = 0; i < 2112; i = i + 3) {
            a[i] = i;
            a[i + 1] = 1;
            a[i + 2] = 2;
        }
        print(a[2109] + a[2111]);
    }
}
"""


def test_unroll_by_eight_stride_24():
    tp = typed(UNROLL)
    s = only(detect_unroll(tp))
    assert s.params["factor"] == 8
    after = apply_transform(tp, s)
    assert "i = i + 24" in format_program(after.program)
    body = "M.main().for_1"
    assert run(tp).trip_counts[body] == {704: 1}
    assert run(after).trip_counts[body] == {88: 1}
    assert run(after).outputs == run(tp).outputs


def test_unroll_needs_divisible_factor():
    src = UNROLL.replace("2112", "10").replace("i = i + 3", "i++").replace("a[2109] + a[2111]", "a[9]")
    src = src.replace("a[i + 1] = 1;\n", "").replace("a[i + 2] = 2;\n", "")
    tp = typed(src)
    assert detect_unroll(tp, thresholds=Thresholds(unroll_factors=(4,))) == []
    assert detect_unroll(tp, thresholds=Thresholds(unroll_factors=(4, 5)))[0].params["factor"] == 5


def test_unroll_excludes_break():
    tp = typed(UNROLL.replace("a[i + 2] = 2;", "a[i + 2] = 2;\n            if (i > 3000) { break; }"))
    assert detect_unroll(tp) == []


# ------------------------------------------------------------------ library substitution

COPY = """
class M {
    Buffer src_;
    Buffer dst_;
    void main() {
        src_ = new Buffer();
        dst_ = new Buffer();
        for (int k = 0; k < 12; k++) {
            src_.put(k * 0.5);
        }
        for (int i = 0; i < src_.limit(); i = i + 3) {
            dst_.put(src_.get(i));
            dst_.put(src_.get(i + 1));
            dst_.put(src_.get(i + 2));
        }
        print(dst_.limit());
        print(dst_.get(11));
    }
}
"""


def test_copy_loop_becomes_put_all():
    tp = typed(COPY)
    s = only(detect_library_substitution(tp))
    after = apply_transform(tp, s)
    assert "dst_.putAll(src_);" in format_program(after.program)
    assert run(after).outputs == run(tp).outputs == ["12", "5.5"]
    assert run(after).counts["Buffer.putAll"] == 1


def test_partial_copy_or_extra_effect_rejected():
    tp = typed(COPY.replace("dst_.put(src_.get(i + 2));\n", "").replace("i = i + 3", "i = i + 3"))
    assert detect_library_substitution(tp) == []
    tp = typed(COPY.replace("dst_.put(src_.get(i + 2));", "dst_.put(src_.get(i + 2));\n            print(i);"))
    assert detect_library_substitution(tp) == []


# ------------------------------------------------------------------ deltas and equivalence


def test_identity_delta_is_zero(model, demos):
    tp = demos["orbit"]
    cases = [ExecutionCase("a", (3, 4, 5)), ExecutionCase("b", (9, 1))]
    assert estimate_delta(model, tp, tp, cases) == 0.0


def test_delta_matches_independent_recount(model, demos):
    tp = demos["orbit"]
    s = [x for x in detect_all(tp) if x.kind == "LoopUnroll"][0]
    after = apply_transform(tp, s)
    cases = [ExecutionCase("a", (3, 4, 5)), ExecutionCase("b", (9, 1))]
    d = estimate(model, tp, after, cases)

    def recount(p):
        g = build_program_cfg(p)
        return sum(energy_uj(model, static_recount(g, run_case(p, c, g))) for c in cases) * 1e-6

    ind = recount(tp) - recount(after)
    assert d.joules == pytest.approx(ind, rel=1e-9)
    assert d.joules > 0 and d.op_diff["BlockGoto_for"] > 0


def test_broken_transform_diverges_on_false_cases():
    tp = typed(IFS)
    after = apply_transform(tp, only(detect_if_combination(tp)))
    text = format_program(after.program)
    broken = typed(text.replace("} else {\n            print(n_);\n        }", "}"))
    rep = verify_equivalence(tp, broken, [ExecutionCase("t", (1,)), ExecutionCase("f", (0,))])
    assert [d.case_id for d in rep.divergent] == ["f"]
    assert rep.divergent[0].index == 0
    assert rep.matched == 1


def test_zero_cases_is_flagged_untested():
    tp = typed(IFS)
    rep = verify_equivalence(tp, tp, [])
    assert rep.ok and rep.untested and "untested" in rep.summary()


def test_stale_suggestion_rejected():
    tp = typed(IFS)
    s = only(detect_if_combination(tp))
    after = apply_transform(tp, s)
    with pytest.raises(StaleSuggestion):
        apply_transform(after, s)


def test_profile_must_match_program():
    tp = typed(INLINE)
    other = typed(IFS)
    with pytest.raises(ValueError):
        ProgramFacts(tp, profile(other, (1,)))


def test_suggestion_records_round_trip(demos):
    tp = demos["clickmove"]
    sugs = detect_all(tp)
    back = load_suggestions(dump_suggestions(sugs))
    assert [s.to_record() for s in back] == [s.to_record() for s in sugs]
    assert apply_transform(tp, back[0]).program is not None


def _demo_profile(tp, inputs):
    return profile(tp, inputs)


@pytest.mark.parametrize("name", ["clickmove", "orbit", "waves"])
def test_detection_is_idempotent(name, demos):
    tp = demos[name]
    inputs = (5, 3, 8, 1, 9, 4, 2)
    sugs = detect_all(tp, _demo_profile(tp, inputs))
    assert sugs
    for s in sugs:
        after = apply_transform(tp, s)
        again = detect_all(after, _demo_profile(after, inputs))
        assert s.key not in {x.key for x in again}, s.describe()


def test_demo_corpus_has_every_kind(demos):
    kinds = Counter()
    for name in ("clickmove", "orbit", "waves"):
        tp = demos[name]
        for s in detect_all(tp, profile(tp, (5, 3, 8, 1, 9, 4, 2)), LOW):
            kinds[s.kind] += 1
    assert set(kinds) == {"IfCombination", "InnerMethodInline", "InterClassGetterInline",
                          "LoopInvariantMotion", "LoopUnroll", "LibrarySubstitution"}
