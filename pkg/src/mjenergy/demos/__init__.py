"""MJ demo programs: the calibration workload and three scenario analogs."""

from importlib import resources

DEMOS = ("clickmove", "orbit", "waves")
ALL = ("calibrate",) + DEMOS


def demo_source(name):
    if name not in ALL:
        raise KeyError(f"no demo named {name!r}; choose from {', '.join(ALL)}")
    return resources.files(__name__).joinpath(f"{name}.mj").read_text()


def load_demo(name):
    from ..minilang import load_typed
    return load_typed(demo_source(name), f"{name}.mj")
