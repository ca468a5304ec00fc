"""Transition ramps used as boundary data and initial guesses.

The reference ramp is the unique odd polynomial of degree 2k-1 on
[-1/8, 1/8] that reaches -1 and +1 with k-1 vanishing derivatives at the
junctions (the smoothstep family), extended by the well values.  Traces of
one-dimensional transitions across rotated 2D grids are built here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

RAMP_HALF_WIDTH = 0.125


@dataclass(frozen=True)
class BoundaryProfile:
    """C^(k-1) polynomial ramp from -1 to +1 across [-1/8, 1/8]."""

    k: int
    poly_coeffs: tuple  # coefficients of p(s) on s in [-1, 1], s = t / (1/8)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        s = np.clip(t / RAMP_HALF_WIDTH, -1.0, 1.0)
        return np.polynomial.polynomial.polyval(s, np.asarray(self.poly_coeffs))

    def derivative(self, t, order: int = 1):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < RAMP_HALF_WIDTH
        s = np.clip(t / RAMP_HALF_WIDTH, -1.0, 1.0)
        dcoeffs = np.polynomial.polynomial.polyder(np.asarray(self.poly_coeffs), order)
        vals = np.polynomial.polynomial.polyval(s, dcoeffs) / RAMP_HALF_WIDTH**order
        return np.where(inside, vals, 0.0)

    def transition_energy(self, spec, n_quad: int = 4001) -> float:
        """Energy of the ramp at scale 1 with |q_l| weights; finite and positive."""
        from .potential import eval_potential

        t = np.linspace(-RAMP_HALF_WIDTH, RAMP_HALF_WIDTH, n_quad)
        total = float(np.trapezoid(eval_potential(spec.well, self(t)), t))
        for ell in range(1, spec.k + 1):
            total += abs(spec.q[ell - 1]) * float(np.trapezoid(self.derivative(t, ell) ** 2, t))
        return total


def build_boundary_profile(k: int) -> BoundaryProfile:
    """Construct the degree-(2k-1) ramp and verify its invariants numerically."""
    if not 1 <= k <= 4:
        raise UsageError("k must be between 1 and 4")
    # p'(s) proportional to (1 - s^2)^(k-1); integrate and normalize to p(1) = 1.
    raw = np.zeros(2 * k)
    for j in range(k):
        raw[2 * j + 1] = math.comb(k - 1, j) * (-1.0) ** j / (2 * j + 1)
    coeffs = raw / raw.sum()
    profile = BoundaryProfile(k=k, poly_coeffs=tuple(coeffs))

    edge = RAMP_HALF_WIDTH
    if abs(profile(edge) - 1.0) > 1e-12 or abs(profile(-edge) + 1.0) > 1e-12:
        raise AssertionError("ramp endpoints off")
    inner = np.linspace(-edge, edge, 2001)
    if np.max(np.abs(profile(inner))) > 1.0 + 1e-12:
        raise AssertionError("ramp exceeds the wells")
    for order in range(1, k):
        # Vanishing junction derivatives keep the global extension C^(k-1).
        eps_in = edge * (1.0 - 1e-9)
        if abs(profile.derivative(eps_in, order)) > 1e-6 * (1 / edge) ** order:
            raise AssertionError(f"ramp derivative {order} does not vanish at the junction")
    return profile


def tabulated_transition(nodes: np.ndarray, values: np.ndarray):
    """Callable transition s -> u from a sampled profile, extended by the wells."""
    nodes = np.asarray(nodes, float)
    values = np.asarray(values, float)

    def trace(s):
        return np.interp(np.asarray(s, float), nodes, values, left=-1.0, right=1.0)

    return trace


def trace_values_1d(grid, eps: float, transition) -> np.ndarray:
    """Sample t -> transition(t / eps) on a 1D grid."""
    return np.asarray(transition(grid.nodes / eps), float)


def trace_values_2d(grid, eps: float, transition) -> np.ndarray:
    """Sample x -> transition((x . nu) / eps) on a rotated 2D grid."""
    t = grid.normal_coord()
    return np.asarray(transition(t / eps), float)
