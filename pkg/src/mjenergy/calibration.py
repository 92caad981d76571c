"""The calibration corpus behind the shipped model, and how to rebuild it.

The shipped model is fitted on simulated meter readings of the union of
the calibration workload and the three demo programs, so every operation
the demos (and their refactored versions) execute has a cost.  Run
``python -m mjenergy.calibration`` to regenerate ``data/*.json``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources

from . import __version__
from . import powersim as P
from .cfg import build_program_cfg
from .demos import load_demo
from .fitter import EnergyModel, assemble_design, fit
from .profiler import InputTemplate, generate_cases, run_suite


@dataclass(frozen=True)
class CorpusPart:
    name: str
    n: int
    length: tuple


CORPUS = (
    CorpusPart("calibrate", 200, (6, 6)),
    CorpusPart("clickmove", 150, (3, 30)),
    CorpusPart("orbit", 60, (3, 14)),
    CorpusPart("waves", 60, (3, 14)),
)
CORPUS_SEED = 7
SHIPPED_SIGMA = 0.0


def corpus_runs(parts=CORPUS, seed=CORPUS_SEED):
    """(cases, results) over every part, ablation cases included."""
    cases, results = [], []
    for part in parts:
        tp = load_demo(part.name)
        g = build_program_cfg(tp)
        cs = generate_cases(tp, [InputTemplate(part.length, (0, 99))], part.n, seed, g,
                            prefix=part.name)
        cs, rs, _ = run_suite(tp, cs, g)
        cases += cs
        results += rs
    return cases, results


def measure(truth, cases, results, sigma=0.0, meter_seed=0):
    """Meter readings (J) per case; with ``sigma == 0`` the exact modeled energy."""
    if sigma == 0:
        return [P.modeled_energy_j(truth, r.counts) for r in results]
    t = truth.with_noise(sigma)
    return [P.integrate_energy(P.simulate_trace(t, r.counts, P.trace_seed(meter_seed, c.seed)))
            for c, r in zip(cases, results)]


def build_model(truth, sigma=0.0, meter_seed=0, parts=CORPUS, seed=CORPUS_SEED):
    cases, results = corpus_runs(parts, seed)
    energies = measure(truth, cases, results, sigma, meter_seed)
    d = assemble_design([r.counts for r in results], energies, "known", truth.idle_power_w,
                        [c.case_id for c in cases])
    model, report = fit(d, nonneg=True)
    return model, report


def _data(name):
    return resources.files(__package__).joinpath("data", name)


def shipped_truth():
    return P.GroundTruthModel.from_json(_data("ground_truth.json").read_text())


def shipped_model():
    return EnergyModel.from_dict(json.loads(_data("model.json").read_text()))


def main():
    out = os.path.join(os.path.dirname(__file__), "data")
    os.makedirs(out, exist_ok=True)
    truth = P.default_ground_truth()
    with open(os.path.join(out, "ground_truth.json"), "w") as fh:
        fh.write(truth.to_json())
    model, report = build_model(truth, SHIPPED_SIGMA)
    prov = {"tool": "mjenergy", "version": __version__, "corpus_seed": CORPUS_SEED,
            "corpus": [[p.name, p.n, list(p.length)] for p in CORPUS],
            "truth": "default_ground_truth(seed=2024)", "noise_sigma_rel": SHIPPED_SIGMA,
            "meter_seed": 0}
    with open(os.path.join(out, "model.json"), "w") as fh:
        fh.write(model.to_json(prov))
    print(f"{len(model.costs())} costs, r2={report.r2:.12f}, condition={report.condition:.1f}")


if __name__ == "__main__":
    main()
