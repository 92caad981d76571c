"""Simulated power meter: ground-truth model to 30 Hz traces and back.

The simulator stands in for an external power monitor.  A case's modeled
energy (idle plus ``Σ cost × count``) is spread evenly over
``ceil(duration × rate)`` samples, so the left-rectangle integral of a
noiseless trace returns the modeled energy exactly.  Relative Gaussian meter
noise is applied per sample and clamped at zero.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from . import energy_ops as E
from .errors import EmptyTrace, MalformedTrace, NonMonotoneTime, UnknownOpId

UJ_PER_J = 1e6
DEFAULT_RATE_HZ = 30.0

# anchors carried over from published measurements; everything else is drawn
ANCHORS_UJ = {
    "BlockGoto_if": 6.7,
    "BlockGoto_for": 4.1,
    "BlockGoto_while": 1.1,
    "Declaration_Object": 2.97,
}
METHOD_INVOCATION_UJ = 31.0


@dataclass
class GroundTruthModel:
    op_costs: Dict[str, float]
    libfunc_costs: Dict[str, float]
    idle_power_w: float = 0.3
    noise_sigma_rel: float = 0.0

    def __post_init__(self):
        for k, v in {**self.op_costs, **self.libfunc_costs}.items():
            if k not in E.INDEX:
                raise UnknownOpId(f"unknown operation {k!r} in ground-truth model")
            if v < 0:
                raise ValueError(f"negative cost for {k}")
        if self.idle_power_w < 0 or self.noise_sigma_rel < 0:
            raise ValueError("idle power and noise must be nonnegative")

    def cost(self, op_id):
        if op_id in self.op_costs:
            return self.op_costs[op_id]
        if op_id in self.libfunc_costs:
            return self.libfunc_costs[op_id]
        raise UnknownOpId(f"no cost for operation {op_id!r}")

    def costs(self):
        return {**self.op_costs, **self.libfunc_costs}

    def to_json(self):
        return json.dumps({"op_costs_uj": self.op_costs, "libfunc_costs_uj": self.libfunc_costs,
                           "idle_power_w": self.idle_power_w,
                           "noise_sigma_rel": self.noise_sigma_rel}, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(dict(d["op_costs_uj"]), dict(d["libfunc_costs_uj"]), float(d["idle_power_w"]),
                   float(d.get("noise_sigma_rel", 0.0)))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def with_noise(self, sigma):
        return GroundTruthModel(dict(self.op_costs), dict(self.libfunc_costs), self.idle_power_w,
                                sigma)


def default_ground_truth(seed=2024, idle_power_w=0.3, noise_sigma_rel=0.0):
    """The shipped demo model: anchors fixed, other costs uniform in (0.5, 25) µJ."""
    rng = np.random.default_rng(seed)
    ops, libs = {}, {}
    for e in E.CATALOG:
        c = round(float(rng.uniform(0.5, 25.0)), 3)
        (libs if e.kind == "lib" else ops)[e.id] = c
    ops.update(ANCHORS_UJ)
    ops["Method_Invocation"] = METHOD_INVOCATION_UJ
    return GroundTruthModel(ops, libs, idle_power_w, noise_sigma_rel)


def _items(v):
    return v.counts.items() if hasattr(v, "counts") else v.items()


def dynamic_energy_j(g, v):
    """Σ cost × count in joules for a CountVector (or plain mapping)."""
    terms = []
    for op_id, n in _items(v):
        if op_id not in E.INDEX:
            raise UnknownOpId(f"unknown operation {op_id!r}")
        if n:
            terms.append(g.cost(op_id) * n)
    return math.fsum(terms) / UJ_PER_J


def modeled_energy_j(g, v, duration_s=None):
    d = v.duration_s if duration_s is None else duration_s
    return g.idle_power_w * d + dynamic_energy_j(g, v)


@dataclass
class PowerTrace:
    sample_rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate_hz


def sample_count(duration_s, rate_hz=DEFAULT_RATE_HZ):
    return max(1, math.ceil(round(duration_s * rate_hz, 9)))


def trace_seed(base_seed, case_seed):
    """Meter seed for one case; equal cases get equal noise across program versions."""
    return (int(base_seed) * 1_000_003 + int(case_seed)) % (2 ** 32)


def simulate_trace(g, v, seed, rate_hz=DEFAULT_RATE_HZ, duration_s=None):
    d = v.duration_s if duration_s is None else duration_s
    n = sample_count(d, rate_hz)
    total = modeled_energy_j(g, v, d)
    base = total * rate_hz / n
    samples = np.full(n, base, dtype=float)
    if g.noise_sigma_rel > 0:
        eps = np.random.default_rng(seed).normal(0.0, g.noise_sigma_rel, n)
        samples = np.maximum(samples * (1.0 + eps), 0.0)
    return PowerTrace(float(rate_hz), samples)


def integrate_energy(t):
    if len(t.samples) == 0:
        raise EmptyTrace("trace has no samples")
    return math.fsum(t.samples.tolist()) / t.sample_rate_hz


def dump_trace(t):
    buf = io.StringIO()
    buf.write("t_s,power_w\n")
    for i, p in enumerate(t.samples.tolist()):
        buf.write(f"{i / t.sample_rate_hz!r},{p!r}\n")
    return buf.getvalue()


def load_trace(path, rate_hz=DEFAULT_RATE_HZ):
    """Read a ``t_s,power_w`` CSV; off-rate traces are linearly resampled.

    Sample spacing within 2% of ``1/rate`` keeps the samples as they are;
    anything else is interpolated onto a uniform grid starting at the first
    timestamp.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#")) if r]
    if not rows or [c.strip() for c in rows[0]] != ["t_s", "power_w"]:
        raise MalformedTrace(f"{path}: expected header 't_s,power_w'")
    ts, ps = [], []
    for n, r in enumerate(rows[1:], 2):
        if len(r) != 2:
            raise MalformedTrace(f"{path}:{n}: expected 2 fields, got {len(r)}")
        try:
            ts.append(float(r[0]))
            ps.append(float(r[1]))
        except ValueError:
            raise MalformedTrace(f"{path}:{n}: non-numeric field") from None
    if not ts:
        raise EmptyTrace(f"{path}: no samples")
    t = np.array(ts)
    p = np.array(ps)
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 3
        raise NonMonotoneTime(f"{path}:{bad}: timestamps must strictly increase")
    if len(t) > 1:
        dt = np.diff(t)
        if np.max(np.abs(dt * rate_hz - 1.0)) > 0.02:
            n = math.floor(round((t[-1] - t[0]) * rate_hz, 9)) + 1
            grid = t[0] + np.arange(n) / rate_hz
            p = np.interp(grid, t, p)
    return PowerTrace(float(rate_hz), np.maximum(p, 0.0))
