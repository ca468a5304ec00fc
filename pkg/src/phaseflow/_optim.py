"""Limited-memory quasi-Newton descent over the free nodes of a field.

Wraps scipy's L-BFGS-B with the diagnostics the experiments need: a hard
abort when the energy dives below -1e6 mid-iteration, a below-threshold
certificate (a converged energy that is negative beyond quadrature noise is
impossible when the coefficients are admissible, since the energy then
dominates a positive multiple of its all-positive-coefficient counterpart),
and a grid-scale oscillation detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .discretize import Field1D, assemble_energy_and_gradient

HARD_ABORT_ENERGY = -1e6


class _Diverged(Exception):
    pass


@dataclass
class SolverOptions:
    gtol: float = 1e-8
    maxiter: int = 5000
    maxcor: int = 10
    ftol: float = 1e-14


@dataclass
class OptResult:
    field: object
    energy: float
    report: object
    converged: bool
    iterations: int
    grad_norm: float
    below_threshold: bool
    oscillatory: bool
    aborted: bool


def _domain_measure(field) -> float:
    if isinstance(field, Field1D):
        return field.grid.length
    return field.grid.side**2


def oscillation_crossings(field) -> int:
    """Sign changes of the first difference; grid-scale wiggle shows up here."""
    d = np.diff(np.asarray(field.values).ravel())
    s = np.sign(d[np.abs(d) > 1e-12])
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def minimize_field(field, spec, options: SolverOptions | None = None) -> OptResult:
    """Descend the discrete energy on the Free nodes from the given field."""
    opts = options or SolverOptions()
    template = field

    def fun(x):
        f = template.with_free_values(x)
        report, grad = assemble_energy_and_gradient(f, spec)
        if report.total < HARD_ABORT_ENERGY:
            raise _Diverged
        return report.total, grad[~template.fixed]

    x0 = field.free_values()
    aborted = False
    try:
        res = optimize.minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": opts.ftol, "maxcor": opts.maxcor},
        )
        x_best, iterations = res.x, int(res.nit)
    except _Diverged:
        aborted = True
        x_best, iterations = x0, 0

    final = template.with_free_values(x_best)
    report, grad = assemble_energy_and_gradient(final, spec)
    grad_norm = float(np.max(np.abs(grad))) if grad.size else 0.0

    # The highest-order term makes the 1D Hessian stiff enough that L-BFGS
    # stalls well above gtol; a banded-Newton polish finishes the descent.
    if isinstance(final, Field1D) and not aborted and grad_norm >= opts.gtol:
        from ._newton1d import newton_polish

        polished, energy_p, grad_p, _, steps = newton_polish(final, spec, gtol=opts.gtol)
        if energy_p <= report.total:
            final = polished
            report, grad = assemble_energy_and_gradient(final, spec)
            grad_norm = grad_p
            iterations += steps

    neg_tol = 1e-6 * (1.0 + _domain_measure(field) / spec.eps)
    below = aborted or report.total < -neg_tol
    n_nodes = np.asarray(field.values).ravel().size
    oscillatory = oscillation_crossings(final) > n_nodes / 4
    return OptResult(
        field=final,
        energy=report.total,
        report=report,
        converged=(not aborted) and grad_norm < opts.gtol,
        iterations=iterations,
        grad_norm=grad_norm,
        below_threshold=below,
        oscillatory=oscillatory,
        aborted=aborted,
    )


def pool_map(pool, fn, items):
    """Order-preserving map through an optional executor-like pool."""
    items = list(items)
    if pool is None or len(items) <= 1:
        return [fn(it) for it in items]
    return list(pool.map(fn, items))


def multistart_minimize(inits, spec, options=None, pool=None):
    """Minimize from several inits; returns (best, spread, all results).

    The best result is the lowest energy among non-aborted runs (ties keep
    the earliest start for reproducibility); the spread is the energy range
    across successful starts, a cheap non-uniqueness indicator.
    """
    results = pool_map(pool, lambda f: minimize_field(f, spec, options), list(inits))
    usable = [r for r in results if not r.aborted]
    pick_from = usable if usable else results
    lowest = min(r.energy for r in pick_from)
    tie_tol = 1e-8 * max(1.0, abs(lowest))
    best = next(r for r in pick_from if r.energy <= lowest + tie_tol)
    energies = [r.energy for r in usable]
    spread = float(max(energies) - min(energies)) if len(energies) > 1 else 0.0
    return best, spread, results
