import numpy as np
import pytest

from phaseflow.discretize import Field1D, FunctionalSpec, Grid1D
from phaseflow.potential import quartic

ACCEPTANCE_LINES = []


def record_criterion(name, ok, elapsed, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}  [{elapsed:.1f}s]  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def quartic_well():
    return quartic()


def make_spec(k, q_lower=None, norm="frobenius", eps=1.0):
    return FunctionalSpec.make(k, q_lower=q_lower, norm=norm, eps=eps)


def unit_interval_field(fn, n=510, fixed_edges=0):
    grid = Grid1D(0.0, 1.0, n)
    values = np.asarray(fn(grid.nodes), dtype=float)
    fixed = np.zeros(grid.num_nodes, bool)
    if fixed_edges:
        fixed[:fixed_edges] = True
        fixed[-fixed_edges:] = True
    return Field1D(grid, values, fixed)
