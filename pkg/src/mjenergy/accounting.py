"""Energy reports: operation ranking, block totals and per-class proportions.

All shares are over dynamic (application) energy; idle energy is reported
separately and never enters a percentage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

from . import energy_ops as E

UJ_PER_MJ = 1000.0


def _counts(v):
    return v.counts if hasattr(v, "counts") else dict(v)


@dataclass
class OpRow:
    op: str
    unit_cost_uj: float
    count: int
    in_app_mj: float
    share: float  # percent of dynamic energy


@dataclass
class OpReport:
    rows: List[OpRow]
    total_mj: float
    bands: List[dict]

    def cumulative(self):
        out, acc = [], 0.0
        for r in self.rows:
            acc += r.share
            out.append(acc)
        return out


def rank_operations(model, v, bands: Sequence[int] = (10, 30)):
    """Ops observed in ``v`` ranked by unit cost (ties by id).

    ``bands`` are cumulative rank cut-offs: (10, 30) reports the share of
    ranks 1-10 and of ranks 11-30.
    """
    counts = _counts(v)
    rows = []
    for op, n in counts.items():
        if n:
            c = model.cost(op)
            rows.append(OpRow(op, c, n, c * n / UJ_PER_MJ, 0.0))
    rows.sort(key=lambda r: (-r.unit_cost_uj, r.op))
    total = math.fsum(r.in_app_mj for r in rows)
    for r in rows:
        r.share = 100.0 * r.in_app_mj / total if total > 0 else 0.0
    out_bands = []
    lo = 0
    for hi in bands:
        sel = rows[lo:hi]
        out_bands.append({"ranks": f"{lo + 1}-{hi}", "ops": len(sel),
                          "energy_mj": math.fsum(r.in_app_mj for r in sel),
                          "share": math.fsum(r.share for r in sel)})
        lo = hi
    return OpReport(rows, total, out_bands)


@dataclass
class BlockRow:
    block: str
    exec_count: int
    single_uj: float
    in_app_mj: float
    normalized_mj: float
    classes: Dict[str, float]
    partial: bool = False


@dataclass
class BlockReport:
    rows: List[BlockRow]
    norm_n: int
    total_mj: float
    approximate: bool = False

    def by_in_app(self):
        return sorted(self.rows, key=lambda r: (-r.in_app_mj, r.block))

    def by_single(self):
        return sorted(self.rows, key=lambda r: (-r.single_uj, r.block))

    def top(self, k=10):
        return self.by_in_app()[:k]


def energy_uj(model, counts):
    return math.fsum(model.cost(op) * n for op, n in _counts(counts).items() if n)


def class_proportions(model, counts):
    """Percent of the block's energy per reporting class; all zero if it has none."""
    per = {c.value: 0.0 for c in E.OP_CLASSES}
    terms = {c.value: [] for c in E.OP_CLASSES}
    for op, n in _counts(counts).items():
        if n:
            terms[E.classify_op(op).value].append(model.cost(op) * n)
    total = math.fsum(t for ts in terms.values() for t in ts)
    if total <= 0:
        return per
    for k, ts in terms.items():
        per[k] = 100.0 * math.fsum(ts) / total
    return per


def block_report(model, g, result, norm_n=3000):
    """Per-block energies for one full run.

    ``single_uj`` is the static one-execution cost; ``in_app_mj`` uses the
    ops the block actually executed, which equals single × exec count unless
    the block was left early (flagged ``partial``).
    """
    rows = []
    partial = set(getattr(result, "partial_blocks", ()))
    for b in g.blocks:
        single = energy_uj(model, b.static_counts)
        actual = result.block_counts.get(b.id, {})
        in_app = energy_uj(model, actual) / UJ_PER_MJ
        rows.append(BlockRow(b.id, result.block_exec.get(b.id, 0), single, in_app,
                             single * norm_n / UJ_PER_MJ, class_proportions(model, b.static_counts),
                             b.id in partial))
    total = math.fsum(r.in_app_mj for r in rows)
    return BlockReport(rows, norm_n, total, bool(partial))


def normalized_mj(single_uj, norm_n=3000):
    return single_uj * norm_n / UJ_PER_MJ


# ------------------------------------------------------------------ text


def format_op_report(rep, limit=30):
    lines = [f"{'rank':>4}  {'operation':<28} {'unit uJ':>9} {'count':>10} {'in-app mJ':>11} "
             f"{'share%':>7} {'cum%':>7}"]
    cum = rep.cumulative()
    for i, r in enumerate(rep.rows[:limit], 1):
        lines.append(f"{i:>4}  {r.op:<28} {r.unit_cost_uj:>9.3f} {r.count:>10d} "
                     f"{r.in_app_mj:>11.3f} {r.share:>7.2f} {cum[i - 1]:>7.2f}")
    for b in rep.bands:
        lines.append(f"ranks {b['ranks']}: {b['share']:.1f}% of dynamic energy ({b['ops']} ops)")
    lines.append(f"total dynamic energy: {rep.total_mj:.3f} mJ")
    return "\n".join(lines)


_CLASS_ABBR = ("Assi.", "Decl.", "Cont.", "Func.", "Bool.", "Arit.", "Libr.", "Arr.")


def format_block_report(rep, k=10, order="in_app"):
    rows = rep.by_in_app() if order == "in_app" else rep.by_single()
    lines = [f"{'block':<44} {'execs':>8} {'single uJ':>10} {'in-app mJ':>10} "
             f"{f'x{rep.norm_n} mJ':>10}  " + " ".join(f"{a:>6}" for a in _CLASS_ABBR)]
    for r in rows[:k]:
        shares = " ".join(f"{r.classes[c.value]:>6.1f}" for c in E.OP_CLASSES)
        flag = "*" if r.partial else ""
        lines.append(f"{r.block + flag:<44} {r.exec_count:>8d} {r.single_uj:>10.2f} "
                     f"{r.in_app_mj:>10.3f} {r.normalized_mj:>10.3f}  {shares}")
    lines.append(f"total: {rep.total_mj:.3f} mJ over {len(rep.rows)} blocks")
    if rep.approximate:
        lines.append("* left early at least once; single x execs is approximate for these blocks")
    return "\n".join(lines)
