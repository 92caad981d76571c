"""Run configuration shared by every CLI subcommand.

Every field has a default; the whole config is serialised canonically and
hashed, and the hash plus the tool version go into every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from . import __version__
from .profiler import InputTemplate

DEFAULT_TEMPLATE = {"length": [3, 14], "values": [0, 99], "kind": "int", "prefix": []}


@dataclass
class RunConfig:
    sources: List[str] = field(default_factory=list)
    # case generation
    n_cases: int = 200
    seed: int = 7
    p_ablate: float = 0.3
    templates: List[dict] = field(default_factory=lambda: [dict(DEFAULT_TEMPLATE)])
    base_duration_s: float = 1.0
    per_input_s: float = 0.1
    # meter and idle handling
    idle_mode: str = "known"
    idle_power_w: float = 0.3
    noise_sigma_rel: float = 0.01
    meter_seed: int = 0
    rate_hz: float = 30.0
    truth_seed: int = 2024
    # reporting
    norm_n: int = 3000
    top_k: int = 10
    # advisor
    min_calls: int = 1000
    max_inline_stmts: int = 5
    unroll_factors: List[int] = field(default_factory=lambda: [8])
    max_unrolled_stmts: int = 32
    profile_cases: int = 10
    profile_seed: int = 303
    delta_cases: int = 10
    delta_seed: int = 101
    equiv_cases: int = 50
    equiv_seed: int = 202
    max_per_kind: int = 3
    model: Optional[str] = None  # None: the model shipped with the package
    output_dir: str = "out"

    def to_dict(self):
        return asdict(self)

    def canonical(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]

    def provenance(self):
        return {"tool": "mjenergy", "version": __version__, "config_hash": self.hash(),
                "config": self.to_dict()}

    def input_templates(self):
        return [InputTemplate.from_dict(t) for t in self.templates]

    def thresholds(self):
        from .advisor.detect import Thresholds
        return Thresholds(self.min_calls, self.max_inline_stmts, tuple(self.unroll_factors),
                          self.max_unrolled_stmts)

    def replace(self, **kw):
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(d)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
