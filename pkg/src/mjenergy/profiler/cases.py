"""Execution-case generation, suite running and the case/count file formats."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import random
import tempfile
from dataclasses import dataclass
from typing import Sequence, Tuple

from .. import energy_ops as E
from ..cfg import build_program_cfg
from ..errors import CoverageImpossible, InvalidCase, MalformedCounts, RuntimeFault, StepBudgetExceeded
from .interp import DEFAULT_STEP_BUDGET, CountVector, ExecutionCase, run_case

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InputTemplate:
    """Random input sequence: a length range and a value range."""

    length: Tuple[int, int] = (0, 0)
    values: Tuple[float, float] = (0, 9)
    kind: str = "int"
    prefix: Tuple[float, ...] = ()

    def draw(self, rng):
        n = rng.randint(self.length[0], self.length[1])
        lo, hi = self.values
        if self.kind == "int":
            body = [rng.randint(int(lo), int(hi)) for _ in range(n)]
        else:
            body = [round(rng.uniform(lo, hi), 6) for _ in range(n)]
        return tuple(self.prefix) + tuple(body)

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d.get("length", (0, 0))), tuple(d.get("values", (0, 9))),
                   d.get("kind", "int"), tuple(d.get("prefix", ())))

    def to_dict(self):
        return {"length": list(self.length), "values": list(self.values), "kind": self.kind,
                "prefix": list(self.prefix)}


def case_duration(inputs, base=1.0, per_input=0.1):
    return round(base + per_input * len(inputs), 9)


def generate_cases(tp, templates: Sequence[InputTemplate], n, seed, g=None, p_ablate=0.3,
                   ablate=True, base_duration=1.0, per_input=0.1, prefix="case"):
    """``n`` cases; case 0 is the full run, the rest ablate random block sets.

    Every ablatable block is ablated in at least one case: blocks the random
    draw missed are assigned round-robin to the ablation cases.  With
    ``ablate=False`` all cases are full runs that differ only in inputs and
    seeds (the equivalence and delta suites).
    """
    g = g if g is not None else build_program_cfg(tp)
    if n < 1:
        raise CoverageImpossible("at least one case is required")
    templates = list(templates) or [InputTemplate()]
    blocks = [b.id for b in g.ablatable()] if ablate else []
    if blocks and n < 2:
        raise CoverageImpossible(
            f"{len(blocks)} ablatable blocks need at least one ablation case besides the "
            f"full run; n={n}")
    rng = random.Random(seed)
    sets = [set()]
    for _ in range(1, n):
        sets.append({b for b in blocks if rng.random() < p_ablate} if blocks else set())
    covered = set().union(*sets)
    slot = 0
    for b in blocks:
        if b not in covered:
            sets[1 + slot % (n - 1)].add(b)
            slot += 1
    cases = []
    for i in range(n):
        inputs = templates[i % len(templates)].draw(rng)
        cseed = rng.randrange(2 ** 31)
        cases.append(ExecutionCase(f"{prefix}{i:03d}", inputs, tuple(sorted(sets[i])),
                                   case_duration(inputs, base_duration, per_input), cseed))
    return cases


def _faults(tp, case, g, budget):
    try:
        return None, run_case(tp, case, g, budget=budget)
    except (StepBudgetExceeded, RuntimeFault) as exc:
        return exc, None


def _with_ablated(c, ablated):
    return ExecutionCase(c.case_id, c.inputs, tuple(ablated), c.duration_s, c.seed)


def run_suite(tp, cases, g=None, budget=DEFAULT_STEP_BUDGET, adaptive_budget=True):
    """Run every case; an ablation case that faults is rerun without the culprit.

    A fault (runtime error or step budget) under ablation is blamed on one
    block found by bisection over the ablated list: the shortest prefix that
    still faults ends in the culprit.  The culprit is dropped from this and
    every later case, and each drop is logged.  With ``adaptive_budget`` the
    step budget after the first full run is capped at 50x its step count, so
    a non-terminating ablation is caught quickly.

    Returns (cases actually run, results, dropped block ids).
    """
    g = g if g is not None else build_program_cfg(tp)
    out_cases, results = [], []
    banned = []
    for c in cases:
        cur = _with_ablated(c, [b for b in c.ablated if b not in banned])
        while True:
            exc, r = _faults(tp, cur, g, budget)
            if exc is None:
                break
            if not cur.ablated:
                raise exc
            lo, hi = 1, len(cur.ablated)
            while lo < hi:
                mid = (lo + hi) // 2
                if _faults(tp, _with_ablated(cur, cur.ablated[:mid]), g, budget)[0] is None:
                    lo = mid + 1
                else:
                    hi = mid
            culprit = cur.ablated[lo - 1]
            banned.append(culprit)
            log.warning("case %s: ablating %s causes %s; dropped from this and later cases",
                        cur.case_id, culprit, exc.code)
            cur = _with_ablated(cur, [b for b in cur.ablated if b != culprit])
        if adaptive_budget and not cur.ablated:
            budget = min(budget, 50 * r.steps + 10_000)
        out_cases.append(cur)
        results.append(r)
    return out_cases, results, banned


# ------------------------------------------------------------------ files


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_cases(cases, meta=None):
    lines = []
    if meta is not None:
        lines.append(json.dumps({"meta": meta}, sort_keys=True))
    lines.extend(json.dumps(c.to_record(), sort_keys=True) for c in cases)
    return "\n".join(lines) + "\n"


def write_cases(path, cases, meta=None):
    atomic_write(path, dump_cases(cases, meta))


def read_cases(path):
    """Returns (cases, meta); the meta record is optional."""
    meta = None
    cases = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidCase(f"{path}:{n}: {exc}") from None
            if "meta" in rec and "case_id" not in rec:
                meta = rec["meta"]
                continue
            cases.append(ExecutionCase.from_record(rec))
    return cases, meta


def dump_counts(rows, provenance=None):
    """Count CSV: ``case_id``, catalog columns in catalog order, ``duration_s``."""
    buf = io.StringIO()
    if provenance is not None:
        buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", *E.CATALOG_IDS, "duration_s"])
    for case_id, v in rows:
        w.writerow([case_id, *v.row(), repr(float(v.duration_s))])
    return buf.getvalue()


def write_counts(path, rows, provenance=None):
    atomic_write(path, dump_counts(rows, provenance))


def read_counts(path):
    """Returns a list of (case_id, CountVector); unknown columns are errors."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    r = csv.reader(lines)
    try:
        header = next(r)
    except StopIteration:
        raise MalformedCounts(f"{path}: empty count file") from None
    if header[0] != "case_id" or header[-1] != "duration_s":
        raise MalformedCounts(f"{path}: count header must start with case_id and end with duration_s")
    ops = header[1:-1]
    rows = []
    for rec in r:
        if not rec:
            continue
        if len(rec) != len(header):
            raise MalformedCounts(f"{path}: row for {rec[0]} has {len(rec)} fields")
        counts = {op: int(x) for op, x in zip(ops, rec[1:-1]) if int(x)}
        rows.append((rec[0], CountVector(counts, float(rec[-1]))))
    return rows
