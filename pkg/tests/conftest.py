import functools

import numpy as np
import pytest

from patchfront.cauchy import Grid, initial_datum, solve
from patchfront.reaction import Reaction
from patchfront.stationary import PatchModel, construct_half_bump

L = Reaction.logistic
C = Reaction.cubic

ACCEPTANCE_LINES = {}


def indicator(grid, a=-1.0, b=1.0, height=1.0):
    return initial_datum("indicator", dict(a=a, b=b, height=height), grid)


@functools.lru_cache(maxsize=None)
def run(name: str):
    """Named desk-scale scenarios shared by the analysis and acceptance tests."""
    g = Grid.covering(0.05, -20.0, 20.0)
    if name == "kpp_kpp":
        m = PatchModel(1.0, 2.0, 1.0, L(1), L(2))
        return m, solve(m, indicator(g), 80.0, output_times=np.arange(1, 81))
    if name == "kpp_kpp_unit":
        m = PatchModel(1.0, 1.0, 1.0, L(1), L(2))
        return m, solve(m, indicator(g), 100.0, output_times=np.arange(1, 101))
    if name == "blocking_mass":
        m = PatchModel(1.0, 1.0, 1.0, L(1), C(4, 3))
        return m, solve(m, indicator(g), 100.0, output_times=np.arange(1, 101))
    if name == "blocking_small":
        m = PatchModel(1.0, 1.0, 1.0, L(0.5), C(4, 1))
        return m, solve(m, indicator(g, height=0.9), 100.0, output_times=np.arange(1, 101))
    if name == "blocking_l1":
        m = PatchModel(1.0, 1.0, 1.0, L(1), C(4, 3))
        return m, solve(m, indicator(g, height=1e-2), 100.0, output_times=np.arange(1, 101))
    if name == "propagation":
        m = PatchModel(1.0, 1.0, 1.0, L(4), C(4, 1))
        return m, solve(m, indicator(g), 80.0, output_times=np.arange(1, 81))
    if name == "virtual":
        m = PatchModel(1.0, 1.0, 1.0, L(4), C(0.4, 0.2))
        return m, solve(m, indicator(g), 200.0, output_times=np.arange(5, 201, 5))
    if name == "extinction":
        m = PatchModel(1.0, 1.0, 1.0, C(1, 0.6), C(1, 0.7))
        return m, solve(m, indicator(g), 100.0, output_times=np.arange(1, 101))
    if name == "kpp_kpp_early":
        # same model and datum as kpp_kpp, sampled at the Gaussian-bound times
        m = PatchModel(1.0, 2.0, 1.0, L(1), L(2))
        return m, solve(m, indicator(g), 10.0, output_times=[1.0, 5.0, 10.0])
    if name == "balanced_4":
        m = PatchModel(1.0, 1.0, 1.0, L(4), C(4, 2))
        return m, solve(m, indicator(g), 200.0, output_times=np.arange(5, 201, 5))
    if name == "half_bump":
        m = PatchModel(1.0, 1.0, 1.0, L(1), C(4, 1))
        p = construct_half_bump(m.f2, m.d2, 2.0)
        u0 = initial_datum("half_bump", dict(x0=p.radius + 1.0, profile=p), g)
        return m, solve(m, u0, 80.0, output_times=np.arange(1, 81))
    raise KeyError(name)


@pytest.fixture
def scenario():
    return run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
