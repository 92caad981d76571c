"""Ranking suggestions, and the greedy end-to-end refactoring run on a demo.

A run is a list of *series*.  Each series starts from the original program
and walks its stages in order; a stage repeatedly re-profiles the current
version, detects suggestions of its kind in the costly blocks, predicts the
saving of each candidate on the delta suite and applies the best positive
one, until nothing positive is left or ``max_per_kind`` changes were made.
Every applied change is checked on the equivalence suite and its predicted
saving is compared with a simulated meter measurement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List

from ..accounting import energy_uj
from ..minilang import ast as A
from ..minilang import format_program
from ..profiler import generate_cases
from .detect import ProgramFacts, detect_all
from .evaluate import J_PER_UJ, estimate, measured_delta, run_all, verify_equivalence
from .rewrite import fingerprint
from .suggestion import Profile
from .transform import apply_transform, unified_diff

# stages per series; the loop of the rendering demo is either unrolled or
# replaced by the bulk copy, so the substitution gets its own series
PLANS = {
    "clickmove": [["IfCombination", "InnerMethodInline", "InterClassGetterInline",
                   "LoopInvariantMotion"]],
    "orbit": [["LoopInvariantMotion", "LoopUnroll"], ["LibrarySubstitution"]],
    "waves": [["InnerMethodInline", "LoopInvariantMotion"]],
}

TOLERANCE = 0.05  # predicted vs measured, relative


def suites(tp, cfg):
    """Profile, delta and equivalence suites: full runs drawn from the original program."""
    tm = cfg.input_templates()

    def gen(n, seed, prefix):
        return generate_cases(tp, tm, n, seed, ablate=False, base_duration=cfg.base_duration_s,
                              per_input=cfg.per_input_s, prefix=prefix)

    return (gen(cfg.profile_cases, cfg.profile_seed, "prof"),
            gen(cfg.delta_cases, cfg.delta_seed, "delta"),
            gen(cfg.equiv_cases, cfg.equiv_seed, "equiv"))


def profile_of(tp, cases, model=None):
    return Profile.from_results(fingerprint(tp.program), run_all(tp, cases), model)


def _call_blocks(prog, nids):
    """Block of the innermost statement holding each call expression."""
    want, out = set(nids), {}
    for mi in prog.tp.methods():
        for st in A.walk_stmts(mi.decl.body):
            if st.nid in prog.g.stmt_block:
                for n in A.walk(st):
                    if n.nid in want:
                        out[n.nid] = prog.block_of(st)
    return sorted(set(out.values()))


def related_blocks(prog, s):
    """Blocks whose cost a suggestion can change: its site region, the callee for
    inlines and the call sites for getters."""
    out = [s.site]
    if s.kind == "InnerMethodInline":
        c = s.params["callee"]
        out.append(f"{c[0]}.{c[1]}()")
    elif s.kind == "InterClassGetterInline":
        out += _call_blocks(prog, s.params["calls"])
    return out


def in_scope(prog, s, hot):
    for b in related_blocks(prog, s):
        if any(h == b or h.startswith(b + ".") for h in hot):
            return True
    return False


def rank(model, tp, sugs, cases, before_results=None):
    """Fill ``predicted_delta_j`` on ``cases`` and sort by it, largest saving first."""
    rb = before_results if before_results is not None else run_all(tp, cases)
    out = []
    for s in sugs:
        after = apply_transform(tp, s)
        ra = run_all(after, cases)
        s.predicted_delta_j = estimate(model, tp, after, cases, rb, ra).joules
        out.append((s, after, ra))
    out.sort(key=lambda p: (-p[0].predicted_delta_j, p[0].kind, p[0].site,
                            str(p[0].params.get("key", ""))))
    return out


def advise(tp, model, profile_cases, delta_cases, thresholds=None, top_k=10, kinds=None):
    """Ranked suggestions for one program version, scoped to its ``top_k`` costly blocks."""
    prof = profile_of(tp, profile_cases, model)
    prog = ProgramFacts(tp, prof)
    sugs = [s for s in detect_all(tp, prof, thresholds, prog)
            if (kinds is None or s.kind in kinds) and in_scope(prog, s, prof.top_blocks(top_k))]
    return [p[0] for p in rank(model, tp, sugs, delta_cases)]


@dataclass
class Step:
    series: int
    index: int
    suggestion: dict
    predicted_j: float
    measured_j: float
    equivalence: str
    equivalent: bool
    cumulative_j: float
    cumulative_rel: float
    diff: str

    @property
    def agreement(self):
        if self.measured_j == 0:
            return 0.0 if self.predicted_j == 0 else math.inf
        return abs(self.predicted_j - self.measured_j) / abs(self.measured_j)

    def to_record(self):
        return {"series": self.series, "index": self.index, "suggestion": self.suggestion,
                "predicted_delta_j": self.predicted_j, "measured_delta_j": self.measured_j,
                "agreement_rel": self.agreement, "equivalence": self.equivalence,
                "equivalent": self.equivalent, "cumulative_saving_j": self.cumulative_j,
                "cumulative_saving_rel": self.cumulative_rel, "diff": self.diff}


@dataclass
class PipelineResult:
    demo: str
    baseline_j: float  # modeled dynamic energy of the original over the delta suite
    steps: List[Step] = field(default_factory=list)
    rejected: List[dict] = field(default_factory=list)
    finals: List[str] = field(default_factory=list)  # formatted final program per series
    provenance: dict = field(default_factory=dict)

    def series_steps(self, k):
        return [s for s in self.steps if s.series == k]

    def to_json(self):
        d = {"demo": self.demo, "baseline_modeled_j": self.baseline_j,
             "steps": [s.to_record() for s in self.steps], "rejected": self.rejected,
             "final_sources": self.finals, "provenance": self.provenance}
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    def cumulative_positive(self):
        """Every change strictly increases the series' cumulative modeled saving."""
        for k in range(len(self.finals)):
            prev = 0.0
            for s in self.series_steps(k):
                if not s.cumulative_j > prev:
                    return False
                prev = s.cumulative_j
        return bool(self.steps)

    def table(self):
        lines = [f"cumulative modeled savings, {self.demo} "
                 f"(original {self.baseline_j * 1e3:.3f} mJ over the delta suite)"]
        hdr = (f"{'':4} {'change':<24} {'site':<34} {'pred mJ':>9} {'meas mJ':>9} "
               f"{'agree':>7} {'cum mJ':>9} {'cum %':>7}  bar")
        for k in range(len(self.finals)):
            lines.append("")
            lines.append(f"series {k + 1}")
            lines.append(hdr)
            for s in self.series_steps(k):
                bar = "#" * max(1, int(round(40 * s.cumulative_rel))) if s.cumulative_j > 0 else ""
                lines.append(f"{s.index:>3}. {'+' + s.suggestion['label']:<24} "
                             f"{s.suggestion['site']:<34} {s.predicted_j * 1e3:>9.4f} "
                             f"{s.measured_j * 1e3:>9.4f} {s.agreement * 100:>6.2f}% "
                             f"{s.cumulative_j * 1e3:>9.4f} {s.cumulative_rel * 100:>6.2f}%  {bar}")
            if not self.series_steps(k):
                lines.append("     (no change applied)")
        if self.rejected:
            lines.append("")
            lines.append("rejected:")
            for r in self.rejected:
                lines.append(f"  {r['label']} at {r['site']}: {r['reason']}")
        return "\n".join(lines)


def _modeled_j(model, results):
    return math.fsum(energy_uj(model, r.counts) for r in results) * J_PER_UJ


def run_pipeline(demo, tp, model, truth, cfg, plans=None, allow_opt_in=True):
    """Greedy cumulative refactoring of ``tp``; deterministic for a given config."""
    plans = plans if plans is not None else PLANS.get(demo, [[k] for k in (
        "IfCombination", "InnerMethodInline", "LoopInvariantMotion", "LoopUnroll",
        "LibrarySubstitution")])
    thresholds = cfg.thresholds()
    prof_cases, delta_cases, equiv_cases = suites(tp, cfg)
    base_delta = run_all(tp, delta_cases)
    base_equiv = run_all(tp, equiv_cases)
    baseline = _modeled_j(model, base_delta)
    meter = truth.with_noise(cfg.noise_sigma_rel)
    res = PipelineResult(demo, baseline, provenance=cfg.provenance())
    for k, stages in enumerate(plans):
        cur, cur_delta, cur_equiv = tp, base_delta, base_equiv
        index = 0
        for kind in stages:
            done, tried = 0, set()
            while done < cfg.max_per_kind:
                prof = profile_of(cur, prof_cases, model)
                prog = ProgramFacts(cur, prof)
                hot = prof.top_blocks(cfg.top_k)
                sugs = [s for s in detect_all(cur, prof, thresholds, prog)
                        if s.kind == kind and s.key not in tried and in_scope(prog, s, hot)
                        and (allow_opt_in or not s.requires_opt_in)]
                if not sugs:
                    break
                ranked = rank(model, cur, sugs, delta_cases, cur_delta)
                best, after, after_delta = ranked[0]
                if not best.predicted_delta_j > 0:
                    break
                tried.add(best.key)
                eq = verify_equivalence(cur, after, equiv_cases, cur_equiv)
                if not eq.ok:
                    res.rejected.append({"label": best.label, "site": best.site,
                                         "reason": eq.summary()})
                    continue
                measured = measured_delta(meter, cur, after, delta_cases, cfg.meter_seed,
                                          cur_delta, after_delta, cfg.rate_hz)
                cum = baseline - _modeled_j(model, after_delta)
                index += 1
                res.steps.append(Step(k, index, best.to_record(), best.predicted_delta_j, measured,
                                      eq.summary(), eq.ok, cum, cum / baseline if baseline else 0.0,
                                      unified_diff(cur, after, f"{demo}.mj")))
                cur, cur_delta, cur_equiv = after, after_delta, eq.results
                done += 1
        res.finals.append(format_program(cur.program))
    return res


__all__ = ["PLANS", "PipelineResult", "Step", "advise", "in_scope", "profile_of", "rank",
           "run_pipeline", "suites"]
