"""Per-operation cost regression over execution cases.

Each case contributes one equation: measured energy = idle power × duration
+ Σ cost(op) × count(op).  Costs are solved in µJ by scaled pivoted QR;
columns that the cases cannot tell apart are reported and merged, and
columns that never occur are flagged instead of being given a cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .. import energy_ops as E
from ..errors import (LengthMismatch, NegativeEnergyAfterIdleSubtraction, RankDeficient,
                      TooFewCases, UnknownOpId)
from .qr import column_scales, lstsq, null_space

UJ_PER_J = 1e6
DURATION_COL = "duration_s"


@dataclass
class DesignMatrix:
    x: np.ndarray
    y: np.ndarray  # joules; dynamic energy in 'known' idle mode
    columns: List[str]
    durations: np.ndarray
    energies: np.ndarray
    idle_mode: str = "known"
    idle_power_w: Optional[float] = None
    case_ids: List[str] = field(default_factory=list)

    @property
    def op_columns(self):
        return [c for c in self.columns if c != DURATION_COL]


def assemble_design(counts, energies, idle="known", idle_power_w=None, case_ids=None, ops=None):
    """Rows are cases, columns catalog ops (plus ``duration_s`` in 'fit' mode)."""
    if len(counts) != len(energies):
        raise LengthMismatch(f"{len(counts)} count vectors but {len(energies)} energies")
    if idle not in ("known", "fit"):
        raise ValueError(f"idle mode must be 'known' or 'fit', not {idle!r}")
    ops = list(ops) if ops is not None else list(E.CATALOG_IDS)
    x = np.array([[v.get(o, 0) for o in ops] for v in counts], dtype=float).reshape(len(counts), len(ops))
    d = np.array([v.duration_s for v in counts], dtype=float)
    e = np.array(energies, dtype=float)
    if idle == "known":
        if idle_power_w is None:
            raise ValueError("idle mode 'known' needs idle_power_w")
        y = e - idle_power_w * d
        bad = np.flatnonzero(y < 0)
        if bad.size:
            i = int(bad[0])
            raise NegativeEnergyAfterIdleSubtraction(
                f"case {i}: energy {e[i]!r} J is below idle {idle_power_w} W x {d[i]} s; "
                "the idle estimate is too high")
        cols = ops
    else:
        x = np.hstack([x, d[:, None]])
        y = e
        cols = ops + [DURATION_COL]
    ids = list(case_ids) if case_ids is not None else [f"row{i}" for i in range(len(counts))]
    return DesignMatrix(x, y, cols, d, e, idle, idle_power_w, ids)


# ------------------------------------------------------------------ collinearity


@dataclass
class Collinearity:
    groups: List[List[str]]
    never_observed: List[str]


def _components(n, supports):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for sup in supports:
        for j in sup[1:]:
            a, b = find(sup[0]), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    comps = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return [c for c in comps.values() if len(c) > 1]


def dependent_sets(x, tol=1e-8):
    """Index groups of columns joined by numerical linear dependencies."""
    ns = null_space(x, tol)
    supports = []
    for c in range(ns.shape[1]):
        v = np.abs(ns[:, c])
        supports.append(list(np.flatnonzero(v > 1e-6 * v.max())))
    return sorted(_components(x.shape[1], supports))


def detect_collinear(d, tol=1e-8):
    live = [j for j, c in enumerate(d.columns) if c == DURATION_COL or np.any(d.x[:, j] != 0)]
    live_set = set(live)
    never = [c for j, c in enumerate(d.columns) if j not in live_set]
    sets = dependent_sets(d.x[:, live], tol) if live else []
    groups = [[d.columns[live[i]] for i in s] for s in sets]
    return Collinearity(groups, never)


# ------------------------------------------------------------------ fitting


@dataclass
class FitReport:
    r2: float
    residuals_rel: List[float]
    mape: float  # percent
    condition: float
    merged_groups: List[List[str]]
    never_observed: List[str]
    rank: int
    n_cases: int
    n_columns: int
    clamped: List[str] = field(default_factory=list)

    def to_dict(self):
        return {"r2": self.r2, "mape": self.mape, "condition": self.condition,
                "rank": self.rank, "n_cases": self.n_cases, "n_columns": self.n_columns,
                "merged_groups": self.merged_groups, "never_observed": self.never_observed,
                "clamped": self.clamped}


@dataclass
class EnergyModel:
    op_costs: Dict[str, float]  # µJ
    libfunc_costs: Dict[str, float]  # µJ
    idle_power_w: float
    merged_groups: List[dict] = field(default_factory=list)
    never_observed: List[str] = field(default_factory=list)
    unconstrained: Dict[str, float] = field(default_factory=dict)
    fit: Dict[str, object] = field(default_factory=dict)

    def cost(self, op_id):
        if op_id in self.op_costs:
            return self.op_costs[op_id]
        if op_id in self.libfunc_costs:
            return self.libfunc_costs[op_id]
        if op_id in E.INDEX:
            raise UnknownOpId(f"operation {op_id!r} was never observed; the model has no cost for it")
        raise UnknownOpId(f"unknown operation {op_id!r}")

    def costs(self):
        return {**self.op_costs, **self.libfunc_costs}

    def to_dict(self):
        return {"op_costs_uj": self.op_costs, "libfunc_costs_uj": self.libfunc_costs,
                "idle_power_w": self.idle_power_w, "merged_groups": self.merged_groups,
                "never_observed": self.never_observed, "unconstrained_uj": self.unconstrained,
                "fit": self.fit}

    def to_json(self, provenance=None):
        d = self.to_dict()
        if provenance is not None:
            d["provenance"] = provenance
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(dict(d["op_costs_uj"]), dict(d["libfunc_costs_uj"]), float(d["idle_power_w"]),
                   list(d.get("merged_groups", [])), list(d.get("never_observed", [])),
                   dict(d.get("unconstrained_uj", {})), dict(d.get("fit", {})))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _reduce(d, groups, never):
    """Columns of the solve: singles plus one summed column per merged group."""
    index = {c: j for j, c in enumerate(d.columns)}
    grouped = {c for g in groups for c in g}
    units = [[c] for c in d.columns if c not in grouped and c not in never]
    units += [list(g) for g in groups]
    units.sort(key=lambda u: index[u[0]])
    xr = np.column_stack([d.x[:, [index[c] for c in u]].sum(axis=1) for u in units]) \
        if units else np.zeros((d.x.shape[0], 0))
    return units, xr


def _condition(xr):
    if xr.shape[1] == 0:
        return 1.0
    sv = np.linalg.svd(xr / column_scales(xr), compute_uv=False)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")


def fit(d, nonneg=True, merge=True, tol=1e-8):
    """Least-squares costs; returns (EnergyModel, FitReport).

    ``merge=False`` refuses to merge dependent columns and raises
    RankDeficient listing them.  With ``nonneg`` negative costs are clamped
    to zero and the remaining columns refit until none is negative (an
    active-set approximation, not full NNLS); the unconstrained solution is
    kept in ``EnergyModel.unconstrained``.
    """
    col = detect_collinear(d, tol)
    tied = [g for g in col.groups if DURATION_COL in g]
    if tied:
        raise RankDeficient(
            "idle power cannot be separated from these operations: add cases with other "
            "durations, or use idle mode 'known'", tied)
    if col.groups and not merge:
        raise RankDeficient(
            "design matrix is rank deficient: add execution cases that ablate blocks "
            "containing these operations separately", col.groups)
    units, xr = _reduce(d, col.groups if merge else [], col.never_observed)
    m, n = xr.shape
    if m < n or m == 0:
        raise TooFewCases(f"{m} cases for {n} independent columns")
    y = d.y * UJ_PER_J
    res = lstsq(xr, y, tol)
    if res.rank < n:
        rest = dependent_sets(xr, tol)
        raise RankDeficient(
            "design matrix is still rank deficient after merging collinear columns; "
            "add execution cases that ablate more blocks",
            [[c for i in s for c in units[i]] for s in rest])
    coef = res.x
    unconstrained = coef.copy()
    active = np.ones(n, dtype=bool)
    while nonneg and np.any(coef[active] < 0):
        active &= coef >= 0
        coef = np.zeros(n)
        if active.any():
            coef[active] = lstsq(xr[:, active], y, tol).x
    pred = xr @ coef
    resid = y - pred
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(y != 0, resid / y, 0.0)
    mape = float(np.mean(np.abs(rel)) * 100.0)

    op_costs, lib_costs, merged, uncon, clamped = {}, {}, [], {}, []
    idle_w = d.idle_power_w
    for u, c, c0, a in zip(units, coef, unconstrained, active):
        if not a:
            clamped.extend(u)
        if u == [DURATION_COL]:
            idle_w = float(c) / UJ_PER_J
            continue
        if len(u) > 1:
            merged.append({"members": list(u), "cost_uj": float(c)})
        for op in u:
            (lib_costs if E.is_libfunc(op) else op_costs)[op] = float(c)
            uncon[op] = float(c0)
    report = FitReport(r2, rel.tolist(), mape, _condition(xr), [list(g) for g in col.groups],
                       list(col.never_observed), res.rank, m, n, clamped)
    model = EnergyModel(op_costs, lib_costs, float(idle_w if idle_w is not None else 0.0),
                        merged, list(col.never_observed), uncon,
                        {"r2": r2, "mape": mape, "condition": report.condition,
                         "n_cases": m, "idle_mode": d.idle_mode, "nonneg": bool(nonneg)})
    return model, report


def predict(model, v, include_idle=True):
    """Modeled energy (J) of one CountVector; never-observed ops cost nothing."""
    costs = model.costs()
    dyn = sum(costs.get(op, 0.0) * n for op, n in v.counts.items()) / UJ_PER_J
    return dyn + (model.idle_power_w * v.duration_s if include_idle else 0.0)


@dataclass
class CrossValidation:
    fold_mape: List[float]
    mape: float
    k_folds: int
    seed: int


def cross_validate(counts, energies, k_folds=5, seed=0, idle="known", idle_power_w=None,
                   nonneg=True, tol=1e-8):
    """Seeded k-fold split; out-of-sample MAPE (percent) on dynamic energy."""
    n = len(counts)
    if len(energies) != n:
        raise LengthMismatch(f"{n} count vectors but {len(energies)} energies")
    if k_folds < 2 or n < k_folds:
        raise TooFewCases(f"{n} cases cannot be split into {k_folds} folds")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k_folds)
    fold_mape = []
    for f in folds:
        test = set(f.tolist())
        tr = [i for i in range(n) if i not in test]
        d = assemble_design([counts[i] for i in tr], [energies[i] for i in tr], idle, idle_power_w)
        model, _ = fit(d, nonneg=nonneg, tol=tol)
        errs = []
        for i in sorted(test):
            idle_j = model.idle_power_w * counts[i].duration_s
            actual = energies[i] - idle_j
            pred = predict(model, counts[i], include_idle=False)
            if actual != 0:
                errs.append(abs(actual - pred) / abs(actual))
        fold_mape.append(float(np.mean(errs) * 100.0) if errs else 0.0)
    return CrossValidation(fold_mape, float(np.mean(fold_mape)), k_folds, seed)
