"""Command line front end: ``mjenergy <subcommand> ...``.

Sources are MJ file paths or ``demo:NAME`` for a program shipped with the
package.  Exit status is 0 on success, 1 for user errors and 2 when an
internal invariant breaks; errors print as ``ERROR <code>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from . import __version__
from . import energy_ops as E
from .accounting import (block_report, format_block_report, format_op_report, rank_operations)
from .calibration import shipped_model, shipped_truth
from .cfg import build_program_cfg
from .config import RunConfig
from .demos import ALL as DEMO_NAMES
from .demos import demo_source
from .errors import MJError, TransformTypeError
from .fitter import EnergyModel, assemble_design, cross_validate, fit
from .minilang import format_program, load_typed
from .powersim import (GroundTruthModel, dump_trace, integrate_energy, load_trace,
                       simulate_trace, trace_seed)
from .profiler import generate_cases, read_cases, read_counts, run_case, run_suite, write_cases, \
    write_counts
from .profiler.cases import atomic_write

log = logging.getLogger("mjenergy")


class UsageError(Exception):
    code = "Usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ------------------------------------------------------------------ helpers


def read_source(spec):
    """(text, filename) for a path or ``demo:NAME``."""
    if spec.startswith("demo:"):
        name = spec[5:]
        if name not in DEMO_NAMES:
            raise UsageError(f"no demo named {name!r}; choose from {', '.join(DEMO_NAMES)}")
        return demo_source(name), f"{name}.mj"
    try:
        with open(spec) as fh:
            return fh.read(), spec
    except OSError as exc:
        raise UsageError(f"cannot read {spec}: {exc.strerror}") from None


def load_source(spec):
    text, name = read_source(spec)
    return load_typed(text, name)


def load_model(path):
    if path is None:
        return shipped_model()
    try:
        return EnergyModel.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read model {path}: {exc.strerror}") from None
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path} is not a model file: {exc}") from None


def load_truth(path):
    return shipped_truth() if path is None else GroundTruthModel.load(path)


def write_out(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _cases_for(args, cfg, tp, g, n=None, seed=None, ablate=False, prefix="case"):
    if getattr(args, "cases", None):
        cases, _ = read_cases(args.cases)
        return cases
    return generate_cases(tp, cfg.input_templates(), n or cfg.n_cases,
                          cfg.seed if seed is None else seed, g, cfg.p_ablate, ablate,
                          cfg.base_duration_s, cfg.per_input_s, prefix)


def read_energies(path):
    """``case_id,energy_j`` CSV (comment lines allowed) as a dict."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    if not rows or rows[0] != ["case_id", "energy_j"]:
        raise UsageError(f"{path}: expected header 'case_id,energy_j'")
    return {r[0]: float(r[1]) for r in rows[1:] if r}


def dump_energies(items, provenance):
    buf = io.StringIO()
    buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "energy_j"])
    for cid, e in items:
        w.writerow([cid, repr(float(e))])
    return buf.getvalue()


# ------------------------------------------------------------------ subcommands


def cmd_parse(args, cfg):
    tp = load_source(args.source)
    write_out(args.output, format_program(tp.program))
    return 0


def cmd_ops(args, cfg):
    if not args.sources:
        write_out(args.output, E.catalog_tsv())
        return 0
    buf = io.StringIO()
    for spec in args.sources:
        tp = load_source(spec)
        g = build_program_cfg(tp)
        total = {}
        for b in g.blocks:
            for op, n in b.static_counts.items():
                total[op] = total.get(op, 0) + n
        buf.write(f"# {tp.filename}: {len(total)} distinct operations, "
                  f"{sum(total.values())} static occurrences\n")
        for op in sorted(total, key=E.index_of):
            buf.write(f"{op}\t{E.classify_op(op).value}\t{total[op]}\n")
    write_out(args.output, buf.getvalue())
    return 0


def cmd_cfg(args, cfg):
    tp = load_source(args.source)
    g = build_program_cfg(tp)
    buf = io.StringIO()
    for b in g.blocks:
        ops = " ".join(f"{op}x{n}" for op, n in sorted(b.static_counts.items(),
                                                        key=lambda kv: E.index_of(kv[0])))
        flag = "ablatable" if b.ablatable else "fixed"
        buf.write(f"{b.id}\t{b.kind}\t{flag}\t{ops}\n")
    write_out(args.output, buf.getvalue())
    return 0


def cmd_cases(args, cfg):
    tp = load_source(args.source)
    g = build_program_cfg(tp)
    cases = generate_cases(tp, cfg.input_templates(), cfg.n_cases, cfg.seed, g, cfg.p_ablate,
                           not args.no_ablate, cfg.base_duration_s, cfg.per_input_s, args.prefix)
    if args.output is None:
        raise UsageError("cases needs -o FILE")
    write_cases(args.output, cases, cfg.provenance())
    print(f"{len(cases)} cases, {sum(1 for c in cases if c.ablated)} with ablation -> "
          f"{args.output}")
    return 0


def cmd_profile(args, cfg):
    tp = load_source(args.source)
    g = build_program_cfg(tp)
    cases = _cases_for(args, cfg, tp, g, ablate=True)
    cases, results, banned = run_suite(tp, cases, g)
    if args.output is None:
        raise UsageError("profile needs -o FILE")
    prov = dict(cfg.provenance(), source=tp.filename, dropped_blocks=banned)
    write_counts(args.output, [(c.case_id, r.counts) for c, r in zip(cases, results)], prov)
    if args.runs:
        atomic_write(args.runs, "".join(r.to_json() + "\n" for r in results))
    print(f"{len(results)} cases profiled -> {args.output}")
    for b in banned:
        print(f"dropped ablation of {b} (faults when removed)")
    return 0


def cmd_simulate(args, cfg):
    rows = read_counts(args.counts)
    truth = load_truth(args.truth).with_noise(cfg.noise_sigma_rel)
    seeds = {}
    if args.cases:
        seeds = {c.case_id: c.seed for c in read_cases(args.cases)[0]}
    out = []
    for k, (cid, v) in enumerate(rows):
        t = simulate_trace(truth, v, trace_seed(cfg.meter_seed, seeds.get(cid, k)), cfg.rate_hz)
        if args.traces:
            atomic_write(os.path.join(args.traces, f"{cid}.csv"), dump_trace(t))
        out.append((cid, integrate_energy(t)))
    write_out(args.output, dump_energies(out, cfg.provenance()))
    return 0


def cmd_fit(args, cfg):
    rows = read_counts(args.counts)
    if args.energies:
        en = read_energies(args.energies)
    elif args.traces:
        en = {cid: integrate_energy(load_trace(os.path.join(args.traces, f"{cid}.csv"),
                                               cfg.rate_hz)) for cid, _ in rows}
    else:
        raise UsageError("fit needs --energies FILE or --traces DIR")
    missing = [cid for cid, _ in rows if cid not in en]
    if missing:
        raise UsageError(f"no energy for case(s) {', '.join(missing[:5])}")
    counts = [v for _, v in rows]
    energies = [en[cid] for cid, _ in rows]
    d = assemble_design(counts, energies, cfg.idle_mode, cfg.idle_power_w, [c for c, _ in rows])
    model, rep = fit(d, nonneg=not args.unconstrained, merge=not args.no_merge)
    prov = cfg.provenance()
    if args.cv:
        cv = cross_validate(counts, energies, args.cv, cfg.seed, cfg.idle_mode, cfg.idle_power_w,
                            not args.unconstrained)
        model.fit["cv_mape"] = cv.mape
        model.fit["cv_folds"] = cv.k_folds
    write_out(args.output, model.to_json(prov))
    out = sys.stderr if args.output in (None, "-") else sys.stdout
    print(f"r2={rep.r2:.6f} mape={rep.mape:.3f}% condition={rep.condition:.1f} "
          f"rank={rep.rank}/{rep.n_columns} cases={rep.n_cases}", file=out)
    for g in rep.merged_groups:
        print(f"merged: {' '.join(g)}", file=out)
    if rep.clamped:
        print(f"clamped to zero: {' '.join(rep.clamped)}", file=out)
    if args.cv:
        print(f"{args.cv}-fold out-of-sample MAPE {model.fit['cv_mape']:.3f}%", file=out)
    return 0


def cmd_report(args, cfg):
    tp = load_source(args.source)
    g = build_program_cfg(tp)
    model = load_model(args.model or cfg.model)
    cases = _cases_for(args, cfg, tp, g, n=1)
    full = next((c for c in cases if not c.ablated), None)
    if full is None:
        raise UsageError("report needs a case without ablation (the in-application run)")
    r = run_case(tp, full, g)
    ops = rank_operations(model, r.counts)
    blocks = block_report(model, g, r, args.norm or cfg.norm_n)
    k = args.top or cfg.top_k
    text = (f"in-application run {full.case_id} of {tp.filename}\n\n"
            f"operations by single-execution cost\n{format_op_report(ops)}\n\n"
            f"top {k} blocks by in-application energy\n{format_block_report(blocks, k)}\n\n"
            f"top {k} blocks by single-execution cost\n"
            f"{format_block_report(blocks, k, order='single')}\n")
    write_out(args.output, text)
    if args.json:
        rec = {"provenance": cfg.provenance(), "case": full.case_id,
               "operations": [vars(x) for x in ops.rows], "bands": ops.bands,
               "total_dynamic_mj": ops.total_mj, "norm_n": blocks.norm_n,
               "blocks": [vars(x) for x in blocks.by_in_app()]}
        atomic_write(args.json, json.dumps(rec, indent=1, sort_keys=True) + "\n")
    return 0


def _advisor_suites(tp, cfg):
    from .advisor.pipeline import suites
    return suites(tp, cfg)


def cmd_advise(args, cfg):
    from .advisor.pipeline import advise
    from .advisor.suggestion import dump_suggestions
    tp = load_source(args.source)
    model = load_model(args.model or cfg.model)
    prof, delta, _ = _advisor_suites(tp, cfg)
    sugs = advise(tp, model, prof, delta, cfg.thresholds(), cfg.top_k)
    meta = dict(cfg.provenance(), source=tp.filename)
    if args.output:
        atomic_write(args.output, dump_suggestions(sugs, meta))
    for i, s in enumerate(sugs):
        opt = " [opt-in]" if s.requires_opt_in else ""
        print(f"{i:>3}  {s.predicted_delta_j * 1e3:>10.4f} mJ  {s.describe()}{opt}")
        if s.notes:
            print(f"     note: {s.notes}")
    if not sugs:
        print("no suggestions")
    return 0


def cmd_transform(args, cfg):
    from .advisor.suggestion import load_suggestions
    from .advisor.transform import apply_transform, unified_diff
    tp = load_source(args.source)
    with open(args.suggestions) as fh:
        sugs = load_suggestions(fh.read())
    if not 0 <= args.index < len(sugs):
        raise UsageError(f"suggestion index {args.index} out of range (0..{len(sugs) - 1})")
    s = sugs[args.index]
    if s.requires_opt_in and not args.allow_getter_inline:
        raise UsageError(f"{s.label} changes field visibility ({s.notes}); "
                         f"pass --allow-getter-inline to apply it")
    after = apply_transform(tp, s)
    if args.output:
        atomic_write(args.output, format_program(after.program))
    sys.stdout.write(unified_diff(tp, after, os.path.basename(tp.filename)))
    return 0


def cmd_verify(args, cfg):
    from .advisor.evaluate import verify_equivalence
    before, after = load_source(args.before), load_source(args.after)
    g = build_program_cfg(before)
    cases = _cases_for(args, cfg, before, g, n=cfg.equiv_cases, seed=cfg.equiv_seed,
                       prefix="equiv")
    rep = verify_equivalence(before, after, cases)
    print(rep.summary())
    return 0 if rep.ok else 1


def cmd_pipeline(args, cfg):
    from .advisor.pipeline import run_pipeline
    from .demos import load_demo
    if args.demo:
        name, tp = args.demo, load_demo(args.demo)
    elif args.source:
        tp = load_source(args.source)
        name = os.path.splitext(os.path.basename(tp.filename))[0]
    else:
        raise UsageError("pipeline needs --demo NAME or a source")
    model = load_model(args.model or cfg.model)
    truth = load_truth(args.truth)
    res = run_pipeline(name, tp, model, truth, cfg, allow_opt_in=not args.no_getter_inline)
    print(res.table())
    out = args.output or cfg.output_dir
    atomic_write(os.path.join(out, f"{name}.pipeline.json"), res.to_json())
    for k, src in enumerate(res.finals):
        atomic_write(os.path.join(out, f"{name}.series{k + 1}.mj"), src)
    print(f"\nartifacts in {out}/ (config {cfg.hash()})")
    return 0 if res.cumulative_positive() else 1


# ------------------------------------------------------------------ parser


def build_parser():
    p = _Parser(prog="mjenergy", description="Operation-based energy modeling for MJ programs.")
    p.add_argument("--version", action="version", version=f"mjenergy {__version__}")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--seed", type=int, help="case-generation seed")
    p.add_argument("-n", "--n-cases", type=int, dest="n_cases", help="number of cases")
    p.add_argument("--sigma", type=float, dest="noise_sigma_rel", help="relative meter noise")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "parse and type-check, print canonical source")
    sp.add_argument("source")
    sp.add_argument("-o", "--output")

    sp = add("ops", cmd_ops, "operation catalog, or per-file static census")
    sp.add_argument("sources", nargs="*")
    sp.add_argument("-o", "--output")

    sp = add("cfg", cmd_cfg, "list blocks with static operation counts")
    sp.add_argument("source")
    sp.add_argument("-o", "--output")

    sp = add("cases", cmd_cases, "generate execution cases with block ablation")
    sp.add_argument("source")
    sp.add_argument("-o", "--output")
    sp.add_argument("--no-ablate", action="store_true")
    sp.add_argument("--prefix", default="case")

    sp = add("profile", cmd_profile, "run cases, write the count CSV")
    sp.add_argument("source")
    sp.add_argument("--cases")
    sp.add_argument("-o", "--output")
    sp.add_argument("--runs", help="also write full run records (JSON lines)")

    sp = add("simulate", cmd_simulate, "counts and ground truth to meter energies")
    sp.add_argument("--counts", required=True)
    sp.add_argument("--truth", help="ground-truth model JSON (default: shipped)")
    sp.add_argument("--cases", help="case file, for per-case meter seeds")
    sp.add_argument("--traces", help="directory for per-case trace CSVs")
    sp.add_argument("-o", "--output")

    sp = add("fit", cmd_fit, "fit per-operation costs")
    sp.add_argument("--counts", required=True)
    sp.add_argument("--energies")
    sp.add_argument("--traces")
    sp.add_argument("--unconstrained", action="store_true", help="allow negative costs")
    sp.add_argument("--no-merge", action="store_true", help="fail on collinear columns")
    sp.add_argument("--cv", type=int, default=0, help="k-fold cross-validation")
    sp.add_argument("-o", "--output")

    sp = add("report", cmd_report, "operation and block energy reports")
    sp.add_argument("source")
    sp.add_argument("--model")
    sp.add_argument("--cases")
    sp.add_argument("--norm", type=int)
    sp.add_argument("--top", type=int)
    sp.add_argument("--json")
    sp.add_argument("-o", "--output")

    sp = add("advise", cmd_advise, "refactoring suggestions ranked by predicted saving")
    sp.add_argument("source")
    sp.add_argument("--model")
    sp.add_argument("-o", "--output", help="suggestions JSON")

    sp = add("transform", cmd_transform, "apply one suggestion, print the diff")
    sp.add_argument("source")
    sp.add_argument("--suggestions", required=True)
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--allow-getter-inline", action="store_true")
    sp.add_argument("-o", "--output", help="write the transformed program")

    sp = add("verify", cmd_verify, "compare outputs of two versions")
    sp.add_argument("before")
    sp.add_argument("after")
    sp.add_argument("--cases")

    sp = add("pipeline", cmd_pipeline, "end-to-end greedy refactoring of a demo")
    sp.add_argument("source", nargs="?")
    sp.add_argument("--demo", choices=[d for d in DEMO_NAMES if d != "calibrate"])
    sp.add_argument("--model")
    sp.add_argument("--truth")
    sp.add_argument("--no-getter-inline", action="store_true")
    sp.add_argument("-o", "--output", help="artifact directory")
    return p


def main(argv=None):
    p = build_parser()
    try:
        args = p.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if args.cmd is None:
            p.print_help()
            return 1
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg = cfg.replace(seed=args.seed, n_cases=args.n_cases,
                          noise_sigma_rel=args.noise_sigma_rel)
        return args.fn(args, cfg)
    except TransformTypeError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 2
    except MJError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        for g in getattr(exc, "groups", []) or []:
            print(f"  group: {' '.join(g)}", file=sys.stderr)
        return 1
    except UsageError as exc:
        print(f"ERROR Usage: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"ERROR Internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
