import math

import numpy as np
import pytest

from phaseflow import gamma
from phaseflow.discretize import Field1D, FunctionalSpec, Grid1D
from phaseflow.errors import UsageError

M1_ANALYTIC = 8.0 / 3.0


def dense_table(value):
    angles = np.linspace(0.0, math.pi, 17, endpoint=False)
    return gamma.GTable(tuple(angles), tuple([value] * angles.size))


def test_predicted_limit_1d():
    iface = gamma.InterfaceSpec.single_jump(0.0)
    assert gamma.predicted_limit(iface, 2.1) == pytest.approx(2.1)
    three = gamma.InterfaceSpec(dimension=1, jumps=(-0.5, 0.0, 0.5))
    assert gamma.predicted_limit(three, 2.0) == pytest.approx(6.0)


def test_predicted_limit_2d_additivity():
    table = dense_table(2.5)
    one = gamma.InterfaceSpec.flat_2d((0.0, 1.0), length=1.0)
    assert gamma.predicted_limit(one, table) == pytest.approx(2.5)

    half_a = ((-0.5, 0.0), (0.0, 0.0), (0.0, 1.0))
    half_b = ((0.0, 0.0), (0.5, 0.0), (0.0, 1.0))
    split = gamma.InterfaceSpec(dimension=2, segments=(half_a, half_b))
    assert gamma.predicted_limit(split, table) == pytest.approx(2.5)


def test_gtable_requires_angular_coverage():
    with pytest.raises(UsageError):
        gamma.GTable((0.0, 1.5), (1.0, 1.0))  # gap far beyond pi/16


def test_gtable_lookup_wraps():
    table = dense_table(1.0)
    angles = np.array(table.angles)
    values = np.array(table.values).copy()
    values[0] = 3.0
    table = gamma.GTable(tuple(angles), tuple(values))
    assert table.lookup((1.0, 0.0)) == pytest.approx(3.0)
    assert table.lookup((-1.0, 0.0)) == pytest.approx(3.0)  # antipodal normal


def test_run_gamma_1d_k1():
    spec = FunctionalSpec.make(1)
    report = gamma.run_gamma_1d(spec, [0.08, 0.04, 0.02], m_hat=M1_ANALYTIC)
    assert not report.unbounded
    assert report.predicted == pytest.approx(M1_ANALYTIC)
    assert report.energies[-1] == pytest.approx(M1_ANALYTIC, rel=0.02)
    # near-monotone approach to the limit
    gaps = [abs(e - report.predicted) for e in report.energies]
    assert all(b <= a + 0.01 * report.predicted for a, b in zip(gaps, gaps[1:]))
    # two-sided bounds at the smallest eps
    assert report.energies[-1] >= 0.95 * report.predicted
    assert report.recovery_energies[-1] <= 1.05 * report.predicted
    assert all(r >= e - 1e-9 for e, r in zip(report.energies, report.recovery_energies))
    assert report.transitions[-1] == 1
    assert report.l2_dists[-1] < 0.05
    assert report.jump_error_cells <= 1.0


def test_run_gamma_1d_no_forced_transition():
    spec = FunctionalSpec.make(1)
    report = gamma.run_gamma_1d(spec, [0.08, 0.04], bc=(1.0, 1.0), m_hat=0.0)
    assert report.predicted == 0.0
    assert report.energies[-1] == pytest.approx(0.0, abs=1e-8)
    assert report.transitions[-1] == 0


def test_run_gamma_1d_unbounded_regime():
    spec = FunctionalSpec.make(2, q_lower=[-6.0])
    report = gamma.run_gamma_1d(spec, [0.1, 0.05], m_hat=1.0)
    assert report.unbounded


def test_run_gamma_2d_flat_interface():
    spec = FunctionalSpec.make(1, norm="operatorial")
    iface = gamma.InterfaceSpec.flat_2d((0.0, 1.0), length=1.0)
    report = gamma.run_gamma_2d(spec, iface, [0.1, 0.05], g_hat=M1_ANALYTIC)
    assert not report.unbounded
    assert report.energies[-1] == pytest.approx(M1_ANALYTIC, rel=0.05)
    assert report.recovery_energies[-1] <= 1.05 * report.predicted
    assert report.energies[-1] >= 0.95 * report.predicted
    # recovery field is admissible, so minimization can only go down
    assert all(e <= r + 1e-9 for e, r in zip(report.energies, report.recovery_energies))
    assert report.l2_dists[-1] < 0.05
    assert report.jump_error_cells <= 1.0


def test_run_gamma_2d_recovery_factorizes():
    # by the product structure of the flat-interface trace, its 2D energy is
    # the 1D transition energy times the interface length (up to quadrature)
    from phaseflow import profile1d
    from phaseflow.discretize import assemble_energy

    spec = FunctionalSpec.make(1, norm="operatorial")
    iface = gamma.InterfaceSpec.flat_2d((0.0, 1.0), length=1.0)
    report = gamma.run_gamma_2d(spec, iface, [0.05], g_hat=M1_ANALYTIC)
    prob = profile1d.make_problem(spec.reduced_1d((0.0, 1.0)).with_eps(1.0), T=10.0, ppu=200)
    sol = profile1d.solve_profile(prob)
    assert report.recovery_energies[0] == pytest.approx(sol.energy, rel=0.02)


def test_compactness_probe_tanh_family():
    spec = FunctionalSpec.make(1)
    fields, energies = [], []
    for eps in (0.2, 0.1, 0.05):
        grid = Grid1D(-1.0, 1.0, 400)
        f = Field1D.from_callable(grid, lambda t: np.tanh(t / eps))
        fields.append(f)
        from phaseflow.discretize import assemble_energy

        energies.append(assemble_energy(f, spec.with_eps(eps)).total)
    probe = gamma.compactness_probe(fields, energies)
    assert probe.ok
    assert probe.distances[0] > probe.distances[-1]  # distance shrinks with eps
    assert all(tr == 1 for tr in probe.transitions)
    # tanh tails put the distance at the sqrt(eps) scale
    assert probe.distances[-1] < 2.0 * math.sqrt(0.05)


def test_compactness_probe_constant_field():
    grid = Grid1D(-1.0, 1.0, 100)
    f = Field1D.from_callable(grid, lambda t: np.ones_like(t))
    probe = gamma.compactness_probe([f], [0.0])
    assert probe.distances[0] == 0.0
    assert probe.transitions[0] == 0


def test_compactness_probe_declines_unbounded_energies():
    grid = Grid1D(-1.0, 1.0, 100)
    fields = [Field1D.from_callable(grid, lambda t: np.sin(40 * t)) for _ in range(3)]
    probe = gamma.compactness_probe(fields, [1.0, 10.0, 100.0])
    assert probe.declined
    assert "bound" in probe.reason


def test_interface_validation():
    with pytest.raises(UsageError):
        gamma.InterfaceSpec(dimension=1)
    with pytest.raises(UsageError):
        gamma.InterfaceSpec(dimension=2, segments=(((0, 0), (1, 0), (0.0, 2.0)),))
    with pytest.raises(UsageError):
        gamma.run_gamma_1d(FunctionalSpec.make(1), [0.05, 0.1], m_hat=1.0)  # increasing eps
