"""Energy deltas and behavioural equivalence between two program versions."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..accounting import energy_uj
from ..cfg import build_program_cfg
from ..errors import CaseMappingFailure, MJError
from ..powersim import DEFAULT_RATE_HZ, integrate_energy, simulate_trace, trace_seed
from ..profiler import run_case

J_PER_UJ = 1e-6


def map_cases(cases, g_after):
    """Check every ablated block still exists in the transformed program."""
    for c in cases:
        missing = [b for b in c.ablated if b not in g_after.by_id]
        if missing:
            raise CaseMappingFailure(f"case {c.case_id}: ablated block(s) {', '.join(missing)} "
                                     f"do not exist after the transform")
    return list(cases)


def run_all(tp, cases, g=None):
    g = g if g is not None else build_program_cfg(tp)
    return [run_case(tp, c, g) for c in cases]


@dataclass
class Delta:
    joules: float
    before_j: float
    after_j: float
    op_diff: Counter  # before - after, per operation

    @property
    def relative(self):
        return self.joules / self.before_j if self.before_j else 0.0


def estimate(model, before, after, cases, before_results=None, after_results=None):
    """Modeled dynamic energy saved by going from ``before`` to ``after`` over ``cases``."""
    ga = build_program_cfg(after)
    map_cases(cases, ga)
    rb = before_results if before_results is not None else run_all(before, cases)
    ra = after_results if after_results is not None else run_all(after, cases, ga)
    cb, ca = Counter(), Counter()
    for r in rb:
        cb.update(r.counts.counts)
    for r in ra:
        ca.update(r.counts.counts)
    eb = math.fsum(energy_uj(model, r.counts) for r in rb) * J_PER_UJ
    ea = math.fsum(energy_uj(model, r.counts) for r in ra) * J_PER_UJ
    diff = Counter({k: cb.get(k, 0) - ca.get(k, 0) for k in set(cb) | set(ca)})
    return Delta(eb - ea, eb, ea, Counter({k: v for k, v in diff.items() if v}))


def estimate_delta(model, before, after, cases):
    """Σ model·counts(before) − Σ model·counts(after), in joules; positive means savings."""
    return estimate(model, before, after, cases).joules


def measured_delta(truth, before, after, cases, base_seed=0, before_results=None,
                   after_results=None, rate_hz=DEFAULT_RATE_HZ):
    """Simulated meter readings before minus after, with common meter noise per case.

    Both versions of a case get the same meter seed, so the noise is
    correlated the way repeated measurements of one scenario would be.
    """
    ga = build_program_cfg(after)
    map_cases(cases, ga)
    rb = before_results if before_results is not None else run_all(before, cases)
    ra = after_results if after_results is not None else run_all(after, cases, ga)
    tb = ta = 0.0
    for c, b, a in zip(cases, rb, ra):
        seed = trace_seed(base_seed, c.seed)
        tb += integrate_energy(simulate_trace(truth, b.counts, seed, rate_hz))
        ta += integrate_energy(simulate_trace(truth, a.counts, seed, rate_hz))
    return tb - ta


@dataclass
class Divergence:
    case_id: str
    index: int  # first differing output position, -1 for a fault
    before: Optional[str]
    after: Optional[str]


@dataclass
class EquivalenceReport:
    cases: int
    matched: int
    divergent: List[Divergence] = field(default_factory=list)
    results: list = field(default_factory=list, repr=False)  # after-version runs, None on fault

    @property
    def untested(self):
        return self.cases == 0

    @property
    def ok(self):
        return not self.divergent

    def summary(self):
        if self.untested:
            return "untested: no cases (vacuous pass)"
        s = f"{self.matched}/{self.cases} cases byte-identical"
        for d in self.divergent[:5]:
            if d.index < 0:
                s += f"\n  {d.case_id}: {d.after}"
            else:
                s += f"\n  {d.case_id}: output {d.index} differs: {d.before!r} vs {d.after!r}"
        return s


def _first_diff(a, b):
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i, x, y
    n = min(len(a), len(b))
    return n, (a[n] if n < len(a) else None), (b[n] if n < len(b) else None)


def verify_equivalence(before, after, cases, before_results=None):
    """Byte-exact comparison of the output streams of both versions per case."""
    rep = EquivalenceReport(len(cases), 0)
    gb, ga = build_program_cfg(before), build_program_cfg(after)
    for k, c in enumerate(cases):
        try:
            ob = before_results[k].outputs if before_results is not None else \
                run_case(before, c, gb).outputs
        except MJError as exc:
            rep.results.append(None)
            rep.divergent.append(Divergence(c.case_id, -1, None, f"original faults: {exc}"))
            continue
        try:
            ra = run_case(after, c, ga)
        except MJError as exc:
            rep.results.append(None)
            rep.divergent.append(Divergence(c.case_id, -1, None, f"transformed faults: {exc}"))
            continue
        rep.results.append(ra)
        oa = ra.outputs
        if ob == oa:
            rep.matched += 1
        else:
            i, x, y = _first_diff(ob, oa)
            rep.divergent.append(Divergence(c.case_id, i, x, y))
    return rep


def results_pair(before, after, cases) -> Tuple[list, list]:
    return run_all(before, cases), run_all(after, cases)
