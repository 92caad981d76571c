"""Suggestion records and the profile the detectors consult."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

KINDS = ("IfCombination", "InnerMethodInline", "InterClassGetterInline", "LoopInvariantMotion",
         "LoopUnroll", "LibrarySubstitution")


@dataclass
class Suggestion:
    """One refactoring opportunity, bound to the program version it was found in.

    ``nids`` and ``params`` locate the construct in that version; they are
    meaningless against any other one, which is why ``fingerprint`` is
    checked before a transform is applied.
    """

    kind: str
    site: str  # block id
    cls: str
    method: str
    positions: Tuple[Tuple[int, int], ...]
    nids: Tuple[int, ...]
    fingerprint: str
    params: Dict[str, object] = field(default_factory=dict)
    notes: str = ""
    requires_opt_in: bool = False
    predicted_delta_j: Optional[float] = None

    @property
    def label(self):
        if self.kind == "LoopUnroll":
            return f"LoopUnroll({self.params['factor']})"
        return self.kind

    @property
    def key(self):
        """Identity across program versions: kind, site and what it names."""
        return (self.kind, self.site, self.params.get("key", ""))

    def describe(self):
        line = self.positions[0][0] if self.positions else 0
        s = f"{self.label} at {self.site} (line {line})"
        if self.params.get("summary"):
            s += f": {self.params['summary']}"
        return s

    def to_record(self):
        return {"kind": self.kind, "label": self.label, "site": self.site, "class": self.cls,
                "method": self.method, "positions": [list(p) for p in self.positions],
                "nids": list(self.nids), "fingerprint": self.fingerprint,
                "params": _jsonable(self.params), "notes": self.notes,
                "requires_opt_in": self.requires_opt_in,
                "predicted_delta_j": self.predicted_delta_j}

    @classmethod
    def from_record(cls, rec):
        return cls(rec["kind"], rec["site"], rec["class"], rec["method"],
                   tuple(tuple(p) for p in rec["positions"]), tuple(rec["nids"]),
                   rec["fingerprint"], _unjson(rec.get("params", {})), rec.get("notes", ""),
                   bool(rec.get("requires_opt_in", False)), rec.get("predicted_delta_j"))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _unjson(v):
    # params only hold scalars, strings and (nested) lists; lists came from tuples
    if isinstance(v, dict):
        return {k: _unjson(x) for k, x in v.items()}
    if isinstance(v, list):
        return tuple(_unjson(x) for x in v)
    return v


def dump_suggestions(sugs, meta=None):
    return json.dumps({"meta": meta or {}, "suggestions": [s.to_record() for s in sugs]},
                      indent=2, sort_keys=True) + "\n"


def load_suggestions(text):
    doc = json.loads(text)
    return [Suggestion.from_record(r) for r in doc["suggestions"]]


@dataclass
class Profile:
    """Dynamic facts from full runs of one program version.

    ``site_calls`` sums user-call executions per call-expression id;
    ``trips`` maps loop-body block ids to the multiset of per-execution
    iteration counts; ``block_energy_uj`` is only filled when a model is
    known and is what scopes suggestions to the costly blocks.
    """

    fingerprint: str
    site_calls: Counter = field(default_factory=Counter)
    trips: Dict[str, Counter] = field(default_factory=dict)
    block_exec: Counter = field(default_factory=Counter)
    block_energy_uj: Dict[str, float] = field(default_factory=dict)
    runs: int = 0

    @classmethod
    def from_results(cls, fp, results, model=None):
        p = cls(fp)
        for r in results:
            p.runs += 1
            p.site_calls.update(r.site_calls)
            p.block_exec.update(r.block_exec)
            for b, tc in r.trip_counts.items():
                p.trips.setdefault(b, Counter()).update(tc)
        if model is not None:
            from ..accounting import energy_uj
            tot = {}
            for r in results:
                for b, c in r.block_counts.items():
                    tot[b] = tot.get(b, 0.0) + energy_uj(model, c)
            p.block_energy_uj = tot
        return p

    def method_calls(self, tp):
        """Profiled calls per user method, summed over its call sites."""
        out = Counter()
        for nid, n in self.site_calls.items():
            t = tp.calls.get(nid)
            if t is not None and t.kind == "user":
                out[(t.cls, t.method)] += n
        return out

    def min_trips(self, body_id):
        tc = self.trips.get(body_id)
        if not tc:
            return None
        return min(tc)

    def top_blocks(self, k=10):
        ranked = sorted(self.block_energy_uj.items(), key=lambda kv: (-kv[1], kv[0]))
        return [b for b, e in ranked[:k] if e > 0]
