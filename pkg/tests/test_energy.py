"""Meter simulation, cost regression and energy accounting."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mjenergy import energy_ops as E
from mjenergy import powersim as P
from mjenergy.accounting import (block_report, class_proportions, energy_uj, normalized_mj,
                                 rank_operations)
from mjenergy.errors import (EmptyTrace, LengthMismatch, MalformedTrace,
                             NegativeEnergyAfterIdleSubtraction, NonMonotoneTime, RankDeficient,
                             TooFewCases, UnknownOpId)
from mjenergy.fitter import (EnergyModel, assemble_design, cross_validate, detect_collinear, fit,
                             predict)
from mjenergy.profiler import CountVector, ExecutionCase, run_case

A, B, C = "Addition_int_int", "Multi_int_int", "Less_int_int"


def gt(costs, idle=0.0, sigma=0.0):
    return P.GroundTruthModel(dict(costs), {}, idle, sigma)


def em(costs, idle=0.0):
    return EnergyModel(dict(costs), {}, idle)


# ------------------------------------------------------------------ powersim


def test_idle_only_trace():
    t = P.simulate_trace(gt({}, idle=1.0), CountVector({}, 1.0), 0)
    assert len(t) == 30 and t.sample_rate_hz == 30.0
    assert np.all(t.samples == 1.0)


def test_dynamic_energy_spread_uniformly():
    t = P.simulate_trace(gt({A: 10.0}, idle=1.0), CountVector({A: 4}, 2.0), 0)
    assert len(t) == 60
    assert np.allclose(t.samples, 1 + 4 * 10e-6 / 2, rtol=0, atol=1e-15)


def test_integration_examples():
    assert P.integrate_energy(P.PowerTrace(30.0, np.full(30, 2.0))) == pytest.approx(2.0, abs=1e-15)
    assert P.integrate_energy(P.PowerTrace(30.0, np.array([3.0]))) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(EmptyTrace):
        P.integrate_energy(P.PowerTrace(30.0, np.array([])))


def test_noisy_trace_is_seeded():
    g = gt({A: 5.0}, idle=0.5, sigma=0.01)
    v = CountVector({A: 1000}, 1.5)
    a, b = P.simulate_trace(g, v, 42), P.simulate_trace(g, v, 42)
    assert P.dump_trace(a) == P.dump_trace(b)
    assert P.dump_trace(a) != P.dump_trace(P.simulate_trace(g, v, 43))


def test_noise_is_unbiased():
    g = gt({A: 5.0}, idle=0.5, sigma=0.01)
    v = CountVector({A: 1000}, 1.0)
    exact = P.modeled_energy_j(g, v)
    mean = np.mean([P.integrate_energy(P.simulate_trace(g, v, s)) for s in range(1000)])
    assert abs(mean - exact) / exact < 1e-3


def test_unknown_op_rejected():
    with pytest.raises(UnknownOpId):
        P.dynamic_energy_j(gt({}), {"Frobnicate": 1})
    with pytest.raises(UnknownOpId):
        P.GroundTruthModel({"Frobnicate": 1.0}, {})


@given(st.floats(0.01, 20.0))
@settings(max_examples=50, deadline=None)
def test_sample_count_law(d):
    t = P.simulate_trace(gt({}, idle=1.0), CountVector({}, d), 0)
    assert len(t) == math.ceil(round(d * 30.0, 9))


def test_default_ground_truth_anchors():
    g = P.default_ground_truth()
    assert (g.cost("BlockGoto_if"), g.cost("BlockGoto_for"), g.cost("BlockGoto_while")) == \
        (6.7, 4.1, 1.1)
    assert g.cost("Declaration_Object") == 2.97
    assert max(g.costs().values()) == g.cost("Method_Invocation")
    assert set(g.costs()) == set(E.CATALOG_IDS)


def test_load_trace(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("t_s,power_w\n0,1.0\n0.0333,1.0\n")
    t = P.load_trace(p)
    assert len(t) == 2 and list(t.samples) == [1.0, 1.0]
    p.write_text("0,1.0\n")
    with pytest.raises(MalformedTrace):
        P.load_trace(p)
    p.write_text("t_s,power_w\n0,1.0\n0.1,1.0\n0.05,1.0\n")
    with pytest.raises(NonMonotoneTime):
        P.load_trace(p)


def test_load_trace_resamples_off_rate(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("t_s,power_w\n0,0.0\n0.5,1.0\n1.0,2.0\n")
    t = P.load_trace(p)
    assert len(t) == 31
    assert t.samples[15] == pytest.approx(1.0)


def test_trace_file_round_trip(tmp_path):
    g = gt({A: 5.0}, idle=0.5, sigma=0.01)
    t = P.simulate_trace(g, CountVector({A: 10}, 1.0), 3)
    p = tmp_path / "t.csv"
    p.write_text(P.dump_trace(t))
    assert np.array_equal(P.load_trace(p).samples, t.samples)


# ------------------------------------------------------------------ fitter


def test_assemble_known_idle():
    d = assemble_design([CountVector({A: 4}, 2.0)], [2.00004], "known", 1.0, ops=[A])
    assert d.x.tolist() == [[4.0]]
    assert d.y[0] == pytest.approx(4.0e-5, rel=1e-9)


def test_assemble_fit_idle_and_errors():
    d = assemble_design([CountVector({A: 4}, 2.0)], [2.00004], "fit", ops=[A])
    assert d.columns[-1] == "duration_s" and d.x[0, -1] == 2.0
    with pytest.raises(NegativeEnergyAfterIdleSubtraction):
        assemble_design([CountVector({A: 1}, 2.0)], [1.9], "known", 1.0)
    with pytest.raises(LengthMismatch):
        assemble_design([CountVector({A: 1}, 2.0)], [], "known", 1.0)


def test_two_by_two_exact_solve():
    d = assemble_design([CountVector({A: 2, B: 1}, 1.0), CountVector({A: 1, B: 1}, 1.0)],
                        [5e-6, 3e-6], "known", 0.0, ops=[A, B])
    m, rep = fit(d)
    assert m.cost(A) == pytest.approx(2.0, rel=1e-12)
    assert m.cost(B) == pytest.approx(1.0, rel=1e-12)
    assert rep.r2 == pytest.approx(1.0, abs=1e-12)


def test_nonneg_active_set():
    rows = [{A: 2, B: 1}, {A: 1, B: 1}, {A: 1, B: 2}]
    energies = [(2 * r[A] - 1 * r[B]) * 1e-6 for r in rows]  # costs [2, -1]
    d = assemble_design([CountVector(r, 1.0) for r in rows], energies, "known", 0.0, ops=[A, B])
    m, rep = fit(d, nonneg=True)
    assert m.cost(B) == 0.0 and rep.clamped == [B]
    assert m.cost(A) == pytest.approx(7 / 6, rel=1e-12)  # refit of [2,1,1] on [3,1,0]
    assert m.unconstrained[B] == pytest.approx(-1.0, rel=1e-9)
    m2, _ = fit(d, nonneg=False)
    assert m2.cost(B) == pytest.approx(-1.0, rel=1e-9)


def test_collinear_columns_grouped_and_never_observed_flagged():
    rows = [CountVector({A: k, B: k, C: 3 - k}, 1.0) for k in (1, 2, 3)]
    d = assemble_design(rows, [1e-6 * (5 * k + 2 * (3 - k)) for k in (1, 2, 3)], "known", 0.0,
                        ops=[A, B, C, "Increment"])
    col = detect_collinear(d)
    assert col.groups == [[A, B]]
    assert col.never_observed == ["Increment"]
    with pytest.raises(RankDeficient) as ei:
        fit(d, merge=False)
    assert ei.value.groups == [[A, B]]
    m, rep = fit(d)
    # A and B always co-occur once each, so only their sum is identified
    assert m.cost(A) == m.cost(B)
    assert m.cost(A) + m.cost(B) == pytest.approx(5.0, rel=1e-9)
    assert m.merged_groups[0]["members"] == [A, B]
    with pytest.raises(UnknownOpId):
        m.cost("Increment")


def test_full_rank_random_matrix_has_no_groups():
    rng = np.random.default_rng(0)
    ops = list(E.CATALOG_IDS[:12])
    rows = [CountVector({o: int(rng.integers(1, 50)) for o in ops}, 1.0) for _ in range(30)]
    d = assemble_design(rows, [1.0] * 30, "known", 0.0, ops=ops)
    assert detect_collinear(d).groups == []


def test_too_few_cases():
    with pytest.raises(TooFewCases):
        fit(assemble_design([], [], "known", 0.0, ops=[A, B]))



def test_idle_tied_to_operations_is_rank_deficient():
    # two unknowns plus fitted idle from two cases: idle is not identifiable
    rows = [CountVector({A: 1, B: 2}, 1.0), CountVector({A: 3, B: 1}, 2.0)]
    with pytest.raises(RankDeficient) as ei:
        fit(assemble_design(rows, [1.0, 2.0], "fit", ops=[A, B]))
    assert any("duration_s" in g for g in ei.value.groups)


def _synthetic(n=80, seed=0, sigma=0.0, idle=0.2):
    rng = np.random.default_rng(seed)
    ops = list(E.CATALOG_IDS[:25])
    truth = {o: float(rng.uniform(0.5, 25)) for o in ops}
    rows = [CountVector({o: int(rng.integers(0, 200)) for o in ops}, float(rng.uniform(1, 3)))
            for _ in range(n)]
    g = gt(truth, idle, sigma)
    en = [P.integrate_energy(P.simulate_trace(g, v, i)) for i, v in enumerate(rows)]
    return ops, truth, rows, en


def test_exact_recovery_and_fitted_idle():
    ops, truth, rows, en = _synthetic()
    m, rep = fit(assemble_design(rows, en, "known", 0.2))
    assert max(abs(m.cost(o) - truth[o]) / truth[o] for o in ops) < 1e-9
    m, _ = fit(assemble_design(rows, en, "fit"))
    assert m.idle_power_w == pytest.approx(0.2, rel=1e-9)


def test_residuals_orthogonal_scale_and_permutation():
    ops, truth, rows, en = _synthetic(sigma=0.01)
    d = assemble_design(rows, en, "known", 0.2)
    m, rep = fit(d, nonneg=False)
    idx = [d.columns.index(o) for o in ops]
    x = d.x[:, idx]
    resid = d.y * 1e6 - x @ np.array([m.cost(o) for o in ops])
    scale = np.linalg.norm(x, axis=0) * np.linalg.norm(resid)
    assert np.all(np.abs(x.T @ resid) <= 1e-8 * scale)
    d2 = assemble_design(rows, [e * 3 for e in en], "known", 0.6)
    m2, _ = fit(d2, nonneg=False)
    for o in ops:
        assert m2.cost(o) == pytest.approx(3 * m.cost(o), rel=1e-9)
    perm = np.random.default_rng(1).permutation(len(rows))
    m3, _ = fit(assemble_design([rows[i] for i in perm], [en[i] for i in perm], "known", 0.2),
                nonneg=False)
    for o in ops:
        assert m3.cost(o) == pytest.approx(m.cost(o), rel=1e-9)


def test_cross_validation():
    ops, truth, rows, en = _synthetic()
    cv = cross_validate(rows, en, 5, 0, "known", 0.2)
    assert cv.mape < 1e-9 * 100 and len(cv.fold_mape) == 5
    _, _, rows, en = _synthetic(sigma=0.01)
    cv = cross_validate(rows, en, 5, 0, "known", 0.2)
    assert 0.0 < cv.mape < 3.0
    with pytest.raises(TooFewCases):
        cross_validate(rows[:3], en[:3], 5)


def test_model_file_round_trip(tmp_path):
    ops, truth, rows, en = _synthetic()
    m, _ = fit(assemble_design(rows, en, "known", 0.2))
    p = tmp_path / "m.json"
    p.write_text(m.to_json({"tool": "x"}))
    back = EnergyModel.load(p)
    assert back.costs() == m.costs() and back.idle_power_w == m.idle_power_w
    assert predict(back, rows[0]) == pytest.approx(en[0], rel=1e-12)


# ------------------------------------------------------------------ accounting


def test_rank_shares_example():
    rep = rank_operations(em({A: 6.7, B: 4.1, C: 1.1}), CountVector({A: 1, B: 1, C: 1}, 1.0))
    assert [r.op for r in rep.rows] == [A, B, C]
    assert [round(r.share, 1) for r in rep.rows] == [56.3, 34.5, 9.2]
    cum = rep.cumulative()
    assert cum == sorted(cum) and cum[-1] == pytest.approx(100.0, abs=1e-9)
    one = rank_operations(em({A: 2.0}), CountVector({A: 5}, 1.0))
    assert one.rows[0].share == 100.0


def test_rank_ties_by_id():
    rep = rank_operations(em({B: 1.0, A: 1.0}), CountVector({A: 1, B: 1}, 1.0))
    assert [r.op for r in rep.rows] == sorted([A, B])


def test_normalization_and_products():
    assert normalized_mj(30.6) == pytest.approx(91.8, abs=1e-12)
    assert energy_uj(em({"BlockGoto_if": 6.7}), {"BlockGoto_if": 1000}) / 1000 == \
        pytest.approx(6.7, abs=1e-12)


def test_class_proportions():
    m = em({"Method_Invocation": 31.0, "Assign_int_int": 31.0})
    p = class_proportions(m, {"Method_Invocation": 3})
    assert p[E.OpClass.CONTROL.value] == 100.0
    p = class_proportions(m, {"Method_Invocation": 1, "Assign_int_int": 1})
    assert p[E.OpClass.CONTROL.value] == pytest.approx(50.0)
    assert p[E.OpClass.ASSIGNMENTS.value] == pytest.approx(50.0)


def test_block_report_identities(demos, cfgs, model):
    tp, g = demos["clickmove"], cfgs["clickmove"]
    r = run_case(tp, ExecutionCase("x", (4, 9, 2, 7, 1), (), 1.0, 0), g)
    rep = block_report(model, g, r)
    total = energy_uj(model, r.counts) / 1e3
    assert rep.total_mj == pytest.approx(total, rel=1e-9)
    assert rank_operations(model, r.counts).total_mj == pytest.approx(total, rel=1e-9)
    for row in rep.rows:
        if not row.partial:
            assert row.in_app_mj == pytest.approx(row.single_uj * row.exec_count / 1e3,
                                                  rel=1e-9, abs=1e-12)
        if row.single_uj > 0:
            assert sum(row.classes.values()) == pytest.approx(100.0, abs=1e-9)
    never = [row for row in rep.rows if row.exec_count == 0]
    assert all(row.in_app_mj == 0 for row in never)
