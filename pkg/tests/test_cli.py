"""The command line front end, driven in-process through ``main(argv)``."""

import json

import pytest

from mjenergy.cli import main
from mjenergy.fitter import EnergyModel


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_catalog_and_parse(capsys, tmp_path):
    code, out, _ = cli(capsys, "ops")
    assert code == 0 and out.splitlines()[0].startswith("#") or "\t" in out
    code, out, _ = cli(capsys, "parse", "demo:clickmove")
    assert code == 0
    f = tmp_path / "c.mj"
    f.write_text(out)
    code, again, _ = cli(capsys, "parse", f)
    assert code == 0 and again == out


def test_user_errors_exit_1_with_prefix(capsys, tmp_path):
    bad = tmp_path / "bad.mj"
    bad.write_text("class M { void main() { int x = ; } }")
    code, _, err = cli(capsys, "parse", bad)
    assert code == 1 and err.startswith("ERROR SyntaxError:") and "bad.mj:1:" in err
    empty = tmp_path / "empty.mj"
    empty.write_text("  \n")
    assert cli(capsys, "parse", empty)[2].startswith("ERROR EmptySource:")
    code, _, err = cli(capsys, "parse", tmp_path / "missing.mj")
    assert code == 1 and err.startswith("ERROR Usage:")
    code, _, err = cli(capsys, "parse", "demo:nope")
    assert code == 1 and "ERROR Usage:" in err
    code, _, err = cli(capsys, "frobnicate")
    assert code == 1 and "ERROR Usage:" in err


def test_profile_simulate_fit_round_trip(capsys, tmp_path):
    counts, en = tmp_path / "counts.tsv", tmp_path / "energy.csv"
    model = tmp_path / "model.json"
    assert cli(capsys, "-n", 60, "profile", "demo:calibrate", "-o", counts)[0] == 0
    assert cli(capsys, "--sigma", 0, "simulate", "--counts", counts, "-o", en)[0] == 0
    code, out, _ = cli(capsys, "fit", "--counts", counts, "--energies", en, "-o", model)
    assert code == 0 and "r2=1.000000" in out
    m = EnergyModel.load(model)
    assert m.cost("Method_Invocation") > 0
    assert "config_hash" in json.loads(model.read_text())["provenance"]


def test_fit_rank_deficient_exits_1(capsys, tmp_path):
    counts, en = tmp_path / "counts.tsv", tmp_path / "energy.csv"
    assert cli(capsys, "-n", 30, "profile", "demo:clickmove", "-o", counts)[0] == 0
    # without ablation many operations always co-occur in fixed ratios
    assert cli(capsys, "-n", 30, "cases", "demo:clickmove", "--no-ablate",
               "-o", tmp_path / "cases.tsv")[0] == 0
    assert cli(capsys, "profile", "demo:clickmove", "--cases", tmp_path / "cases.tsv",
               "-o", counts)[0] == 0
    assert cli(capsys, "--sigma", 0, "simulate", "--counts", counts, "-o", en)[0] == 0
    code, _, err = cli(capsys, "fit", "--counts", counts, "--energies", en, "--no-merge")
    assert code == 1 and err.startswith("ERROR RankDeficient:") and "group:" in err
    code, out, err = cli(capsys, "fit", "--counts", counts, "--energies", en)
    assert code == 0 and "merged:" in err


def test_report_normalised(capsys, tmp_path):
    code, out, _ = cli(capsys, "report", "demo:clickmove", "--norm", 3000, "--top", 5,
                       "--json", tmp_path / "r.json")
    assert code == 0
    assert "operations by single-execution cost" in out and "top 5 blocks" in out
    rec = json.loads((tmp_path / "r.json").read_text())
    assert rec["norm_n"] == 3000
    b = rec["blocks"][0]
    assert b["normalized_mj"] == pytest.approx(b["single_uj"] * 1e-3 * 3000, rel=1e-12)


def test_advise_transform_verify(capsys, tmp_path):
    sug = tmp_path / "s.json"
    code, out, _ = cli(capsys, "advise", "demo:clickmove", "-o", sug)
    assert code == 0 and "mJ" in out
    recs = json.loads(sug.read_text())["suggestions"]
    getter = next(i for i, r in enumerate(recs) if r["kind"] == "InterClassGetterInline")
    code, _, err = cli(capsys, "transform", "demo:clickmove", "--suggestions", sug,
                       "--index", getter)
    assert code == 1 and "--allow-getter-inline" in err
    after = tmp_path / "after.mj"
    code, out, _ = cli(capsys, "transform", "demo:clickmove", "--suggestions", sug,
                       "--index", getter, "--allow-getter-inline", "-o", after)
    assert code == 0 and out.startswith("--- a/clickmove.mj")
    code, out, _ = cli(capsys, "verify", "demo:clickmove", after)
    assert code == 0 and "50/50 cases byte-identical" in out
    # a transform against the wrong program is stale
    code, _, err = cli(capsys, "transform", after, "--suggestions", sug, "--index", getter,
                       "--allow-getter-inline")
    assert code == 1 and err.startswith("ERROR StaleSuggestion:")


def test_verify_reports_divergence(capsys, tmp_path):
    a, b = tmp_path / "a.mj", tmp_path / "b.mj"
    a.write_text("class M { void main() { print(readInput()); } }")
    b.write_text("class M { void main() { print(readInput() + 1); } }")
    code, out, _ = cli(capsys, "verify", a, b)
    assert code == 1 and "0/50" in out and "differs" in out


def test_internal_error_exits_2(capsys, monkeypatch):
    import mjenergy.cli as C

    def boom(*a, **k):
        raise RuntimeError("invariant")

    monkeypatch.setattr(C, "format_program", boom)
    code, _, err = cli(capsys, "parse", "demo:waves")
    assert code == 2 and err.startswith("ERROR Internal:")
