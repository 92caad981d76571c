import sys

import pytest

from mjenergy.calibration import shipped_model, shipped_truth
from mjenergy.cfg import build_program_cfg
from mjenergy.demos import load_demo
from mjenergy.minilang import load_typed
from mjenergy.profiler import ExecutionCase, run_case


def typed(src, name="t.mj"):
    return load_typed(src, name)


def run(tp, inputs=(), ablated=(), duration=1.0, seed=0):
    return run_case(tp, ExecutionCase("t", tuple(inputs), tuple(ablated), duration, seed))


def wrap(body, fields="", extra=""):
    """A one-class program whose main() is ``body``."""
    return f"class M {{\n{fields}\nvoid main() {{\n{body}\n}}\n{extra}\n}}\n"


@pytest.fixture(scope="session")
def model():
    return shipped_model()


@pytest.fixture(scope="session")
def truth():
    return shipped_truth()


@pytest.fixture(scope="session")
def demos():
    return {n: load_demo(n) for n in ("calibrate", "clickmove", "orbit", "waves")}


@pytest.fixture(scope="session")
def cfgs(demos):
    return {n: build_program_cfg(tp) for n, tp in demos.items()}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(mod.TITLES):
        if n in mod.RESULTS:
            ok, detail = mod.RESULTS[n]
            tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {mod.TITLES[n]}: {detail}")
        else:
            tr.write_line(f"[----] {n}. {mod.TITLES[n]}: not run")
