"""Damped-Newton polish for one-dimensional energies.

The 1D discrete Hessian is banded (diagonal well curvature plus stencil
normal matrices), so a sparse direct factorization turns the final descent
into a handful of Newton steps.  Levenberg damping keeps every step a
descent direction even where the well is concave or coefficients are
negative; the loop is monotone in energy by construction.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.sparse import csc_matrix, identity
from scipy.sparse.linalg import splu

from .discretize import Field1D, FunctionalSpec, assemble_energy_and_gradient, stencil
from .potential import eval_potential_curvature
from .tensors import WFROB


@lru_cache(maxsize=32)
def _stencil_matrix(n: int, order: int):
    """Sparse clamped-extension stencil operator on n nodes (h factored out)."""
    offs, coefs = stencil(order)
    rows, cols, data = [], [], []
    for i in range(n):
        for off, c in zip(offs, coefs):
            if c == 0.0:
                continue
            rows.append(i)
            cols.append(min(max(i + off, 0), n - 1))
            data.append(c)
    return csc_matrix((data, (rows, cols)), shape=(n, n))


def _hessian(field: Field1D, spec: FunctionalSpec) -> csc_matrix:
    u = field.values
    n = u.size
    h = field.grid.h
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    diag = w * eval_potential_curvature(spec.well, u) / spec.eps
    hess = csc_matrix((diag, (np.arange(n), np.arange(n))), shape=(n, n))
    for ell in range(1, spec.k + 1):
        nspec = spec.norms[ell - 1]
        scale = nspec.weight_for((0,) * ell) if nspec.kind == WFROB else 1.0
        d = _stencil_matrix(n, ell) / h**ell
        factor = 2.0 * spec.q[ell - 1] * spec.eps ** (2 * ell - 1) * scale
        hess = hess + factor * (d.T @ csc_matrix((w, (np.arange(n), np.arange(n))), shape=(n, n)) @ d)
    return hess


def newton_polish(field: Field1D, spec: FunctionalSpec, gtol: float = 1e-8, max_steps: int = 40):
    """Monotone damped-Newton refinement from a near-minimizer.

    Returns (field, energy, grad_inf, converged, steps).
    """
    free = ~field.fixed
    current = field
    report, grad = assemble_energy_and_gradient(current, spec)
    energy = report.total
    steps = 0
    for _ in range(max_steps):
        g_free = grad[free]
        g_inf = float(np.max(np.abs(g_free))) if g_free.size else 0.0
        if g_inf < gtol:
            return current, energy, g_inf, True, steps
        hess = _hessian(current, spec)
        h_ff = hess[free][:, free].tocsc()
        tau = 0.0
        improved = False
        for _ in range(10):
            try:
                mat = h_ff if tau == 0.0 else (h_ff + tau * identity(h_ff.shape[0], format="csc"))
                step = splu(mat).solve(-g_free)
            except RuntimeError:
                tau = max(10.0 * tau, 1e-8)
                continue
            slope = float(np.dot(step, g_free))
            if not np.isfinite(slope) or slope >= 0.0:
                tau = max(10.0 * tau, 1e-8)
                continue
            alpha = 1.0
            for _ in range(30):
                trial = current.with_free_values(current.free_values() + alpha * step)
                trial_report, trial_grad = assemble_energy_and_gradient(trial, spec)
                if trial_report.total <= energy + 1e-4 * alpha * slope:
                    current, energy, grad = trial, trial_report.total, trial_grad
                    improved = True
                    break
                alpha *= 0.5
            if improved:
                break
            tau = max(10.0 * tau, 1e-8)
        if not improved:
            break
        steps += 1
    g_free = grad[free]
    g_inf = float(np.max(np.abs(g_free))) if g_free.size else 0.0
    return current, energy, g_inf, g_inf < gtol, steps
