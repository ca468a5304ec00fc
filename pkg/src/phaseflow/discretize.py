"""Uniform grids, high-order finite-difference stencils, and the discrete energy.

The energy of a sampled field u on a grid with spacing h is

    (1/eps) * int W(u) + sum_{l=1..k} q_l eps^(2l-1) * int |D^(l) u|_l^2

assembled with trapezoidal quadrature and centered second-order stencils.
Nodes near the boundary see the constraint-mask values through a clamped
extension (values repeat past the edge), never phantom extrapolation, so the
discrete energy is an exact function of the nodal values and its gradient is
the exact adjoint of the stencils.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.ndimage import correlate1d

from . import tensors as tensors_mod
from .errors import NumericError, UsageError
from .potential import PotentialSpec, eval_potential, eval_potential_slope, quartic
from .tensors import FROBENIUS, MAXCOMP, OPERATORIAL, WFROB, NormSpec, SymTensor

FREE = 0
FIXED = 1

_BINARY_MAGIC = b"PHF1"


# ---------------------------------------------------------------------------
# stencils


@lru_cache(maxsize=None)
def stencil(order: int):
    """Centered stencil (offsets, coefficients) for the given derivative order.

    Uses the narrowest symmetric point set with second-order accuracy; the
    coefficients solve the Taylor moment system offsets^r / r! -> delta_{r,order}.
    """
    if order < 1:
        raise UsageError("derivative order must be >= 1")
    half = (order + 1) // 2
    offsets = np.arange(-half, half + 1)
    npoints = offsets.size
    system = np.array([[off**r / math.factorial(r) for off in offsets] for r in range(npoints)])
    rhs = np.zeros(npoints)
    rhs[order] = 1.0
    coeffs = np.linalg.solve(system, rhs)
    coeffs[np.abs(coeffs) < 1e-14] = 0.0
    return offsets, coeffs


@lru_cache(maxsize=None)
def one_sided_stencil(order: int, forward: bool = True):
    """One-sided stencil of the given order with at least first-order accuracy."""
    npoints = order + 2
    offsets = np.arange(0, npoints) if forward else np.arange(-(npoints - 1), 1)
    system = np.array([[off**r / math.factorial(r) for off in offsets] for r in range(npoints)])
    rhs = np.zeros(npoints)
    rhs[order] = 1.0
    coeffs = np.linalg.solve(system, rhs)
    return offsets, coeffs


def apply_stencil(values: np.ndarray, order: int, h: float, axis: int = -1) -> np.ndarray:
    """Derivative of `order` along `axis` with clamped (nearest) extension."""
    offs, coefs = stencil(order)
    if values.shape[axis] < offs.size:
        raise UsageError(f"grid too coarse for an order-{order} stencil ({values.shape[axis]} nodes)")
    return correlate1d(values, coefs, axis=axis, mode="nearest") / h**order


def apply_stencil_adjoint(values: np.ndarray, order: int, h: float, axis: int = -1) -> np.ndarray:
    """Exact adjoint of apply_stencil, including the clamped-edge folds."""
    offs, coefs = stencil(order)
    out = correlate1d(values, coefs[::-1], axis=axis, mode="constant", cval=0.0)
    moved = np.moveaxis(out, axis, -1)
    v = np.moveaxis(values, axis, -1)
    n = v.shape[-1]
    for off, c in zip(offs, coefs):
        if c == 0.0:
            continue
        if off < 0:
            moved[..., 0] += c * v[..., : -off].sum(axis=-1)
        elif off > 0:
            moved[..., n - 1] += c * v[..., n - off :].sum(axis=-1)
    return np.moveaxis(moved, -1, axis) / h**order


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [a, b] with n interior nodes; spacing h = (b-a)/(n+1)."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if self.b <= self.a:
            raise UsageError("interval must have positive length")
        if self.n < 2:
            raise UsageError("need at least 2 interior nodes")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def num_nodes(self) -> int:
        return self.n + 2

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n + 2)

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Grid2D:
    """Rotated square frame: center, unit normal nu, tangent nu1, side length.

    Axis 0 runs along the tangent, axis 1 along the normal.  Node (i, j) sits
    at center + s_i * nu1 + t_j * nu with s, t in [-side/2, side/2].
    tangent_sign flips the tangent orientation (the only basis freedom in 2D).
    """

    center: tuple
    normal: tuple
    side: float
    counts: tuple
    tangent_sign: int = 1

    def __post_init__(self):
        nu = np.asarray(self.normal, float)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise UsageError("normal must be a unit vector")
        if self.side <= 0:
            raise UsageError("side must be positive")
        if self.tangent_sign not in (-1, 1):
            raise UsageError("tangent_sign must be +1 or -1")
        n0, n1 = self.counts
        if n0 < 3 or n1 < 3:
            raise UsageError("need at least 3 nodes per axis")
        if abs(self.side / (n0 - 1) - self.side / (n1 - 1)) > 1e-12:
            raise UsageError("spacing must agree on both axes")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "normal", (float(nu[0]), float(nu[1])))
        object.__setattr__(self, "counts", (int(n0), int(n1)))

    @property
    def tangent(self) -> tuple:
        nx, ny = self.normal
        return (self.tangent_sign * ny, -self.tangent_sign * nx)

    @property
    def h(self) -> float:
        return self.side / (self.counts[0] - 1)

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.linspace(-self.side / 2, self.side / 2, self.counts[axis])

    def node_xy(self):
        """Ambient coordinates of every node, as two (n0, n1) arrays."""
        s = self.axis_coords(0)[:, None]
        t = self.axis_coords(1)[None, :]
        tx, ty = self.tangent
        nx, ny = self.normal
        x = self.center[0] + s * tx + t * nx
        y = self.center[1] + s * ty + t * ny
        return x, y

    def normal_coord(self) -> np.ndarray:
        """Signed distance along nu of every node, as an (n0, n1) array."""
        t = self.axis_coords(1)[None, :]
        return np.broadcast_to(t, self.counts).copy()


def _check_mask_values(values, fixed):
    values = np.asarray(values, dtype=float)
    fixed = np.asarray(fixed, dtype=bool)
    if values.shape != fixed.shape:
        raise UsageError("values and mask shapes differ")
    return values, fixed


@dataclass(frozen=True)
class Field1D:
    """Sampled scalar field on a Grid1D with a per-node Free/Fixed mask."""

    grid: Grid1D
    values: np.ndarray
    fixed: np.ndarray

    def __post_init__(self):
        values, fixed = _check_mask_values(self.values, self.fixed)
        if values.shape != (self.grid.num_nodes,):
            raise UsageError("values shape does not match grid")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fixed", fixed)

    @staticmethod
    def from_callable(grid: Grid1D, fn, fixed=None) -> "Field1D":
        vals = np.asarray(fn(grid.nodes), dtype=float)
        mask = np.zeros(grid.num_nodes, bool) if fixed is None else fixed
        return Field1D(grid, vals, mask)

    @property
    def free_count(self) -> int:
        return int((~self.fixed).sum())

    def free_values(self) -> np.ndarray:
        return self.values[~self.fixed]

    def with_free_values(self, x: np.ndarray) -> "Field1D":
        vals = self.values.copy()
        vals[~self.fixed] = x
        return replace(self, values=vals)

    def with_values(self, values: np.ndarray) -> "Field1D":
        values = np.asarray(values, float)
        if not np.array_equal(values[self.fixed], self.values[self.fixed]):
            raise UsageError("fixed nodes must retain their values")
        return replace(self, values=values)


@dataclass(frozen=True)
class Field2D:
    """Sampled scalar field on a Grid2D with a per-node Free/Fixed mask."""

    grid: Grid2D
    values: np.ndarray
    fixed: np.ndarray

    def __post_init__(self):
        values, fixed = _check_mask_values(self.values, self.fixed)
        if values.shape != self.grid.counts:
            raise UsageError("values shape does not match grid")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fixed", fixed)

    @staticmethod
    def from_callable(grid: Grid2D, fn, fixed=None) -> "Field2D":
        x, y = grid.node_xy()
        vals = np.asarray(fn(x, y), dtype=float)
        mask = np.zeros(grid.counts, bool) if fixed is None else fixed
        return Field2D(grid, vals, mask)

    @property
    def free_count(self) -> int:
        return int((~self.fixed).sum())

    def free_values(self) -> np.ndarray:
        return self.values[~self.fixed]

    def with_free_values(self, x: np.ndarray) -> "Field2D":
        vals = self.values.copy()
        vals[~self.fixed] = x
        return replace(self, values=vals)


# ---------------------------------------------------------------------------
# functional definition


@dataclass(frozen=True)
class FunctionalSpec:
    """The tuple (k, coefficients, per-order norms, eps, well) defining the energy.

    q has length k with q[k-1] = 1; intermediate coefficients may be negative.
    """

    k: int
    q: tuple
    norms: tuple
    eps: float
    well: PotentialSpec

    def __post_init__(self):
        if not 1 <= self.k <= 4:
            raise UsageError("k must be between 1 and 4")
        q = tuple(float(v) for v in self.q)
        if len(q) != self.k:
            raise UsageError(f"expected {self.k} coefficients, got {len(q)}")
        if abs(q[-1] - 1.0) > 1e-15:
            raise UsageError("the highest-order coefficient is normalized to 1")
        norms = tuple(self.norms)
        if len(norms) != self.k:
            raise UsageError(f"expected {self.k} norm choices, got {len(norms)}")
        if self.eps <= 0:
            raise UsageError("eps must be positive")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "norms", norms)

    @staticmethod
    def make(k: int, q_lower=None, norm="frobenius", eps: float = 1.0, well: PotentialSpec | None = None) -> "FunctionalSpec":
        """Convenience constructor: q_lower lists q_1..q_{k-1} (default zeros)."""
        if q_lower is None:
            q_lower = [0.0] * (k - 1)
        q = tuple(q_lower) + (1.0,)
        if isinstance(norm, str):
            norm = tensors_mod.parse_norm_token(norm)
        norms = tuple([norm] * k) if isinstance(norm, NormSpec) else tuple(norm)
        return FunctionalSpec(k=k, q=q, norms=norms, eps=eps, well=well or quartic())

    def with_eps(self, eps: float) -> "FunctionalSpec":
        return replace(self, eps=eps)

    def with_q_lower(self, q_lower) -> "FunctionalSpec":
        return replace(self, q=tuple(q_lower) + (1.0,))

    def all_positive(self) -> "FunctionalSpec":
        """Same orders and norms with every coefficient set to 1 (lower-bound reference)."""
        return replace(self, q=tuple([1.0] * self.k))

    def direction_factors(self, nu) -> tuple:
        """|nu^(tensor l)|_l for each order: the per-order cost of a planar wave along nu."""
        nu = np.asarray(nu, float)
        out = []
        for ell in range(1, self.k + 1):
            spec = self.norms[ell - 1]
            if spec.kind in (FROBENIUS, OPERATORIAL):
                out.append(float(np.linalg.norm(nu) ** ell))
            else:
                comps = {idx: float(np.prod(nu[list(idx)])) for idx in tensors_mod.sorted_indices(2, ell)}
                out.append(tensors_mod.norm_value(SymTensor(2, ell, comps), spec))
        return tuple(out)

    def reduced_1d(self, nu) -> "FunctionalSpec":
        """The one-dimensional functional seen along lines parallel to nu.

        A planar profile u(x) = phi(x . nu) has |grad^(l) u|_l = |phi^(l)| * f_l
        with f_l = |nu^(tensor l)|_l; the factors enter as 1D weighted norms so
        that the normalization q_k = 1 is preserved.
        """
        factors = self.direction_factors(nu)
        norms = []
        for ell, f in enumerate(factors, start=1):
            if abs(f - 1.0) < 1e-14:
                norms.append(NormSpec(kind=FROBENIUS))
            else:
                norms.append(NormSpec(kind=WFROB, weights={(0,) * ell: f * f}))
        return replace(self, norms=tuple(norms))


@dataclass(frozen=True)
class EnergyReport:
    """Total energy with the per-term breakdown (potential plus each order)."""

    total: float
    potential: float
    derivative: tuple

    def term(self, ell: int) -> float:
        return self.derivative[ell - 1]

    def as_dict(self):
        return {
            "total": self.total,
            "potential": self.potential,
            **{f"order_{i + 1}": v for i, v in enumerate(self.derivative)},
        }


# ---------------------------------------------------------------------------
# per-node tensor norms (vectorized over the grid)


def _binom_weights(ell: int) -> np.ndarray:
    return np.array([math.comb(ell, j) for j in range(ell + 1)], dtype=float)


def _wfrob_weights_2d(spec: NormSpec, ell: int) -> np.ndarray:
    return np.array([spec.weight_for((0,) * (ell - j) + (1,) * j) for j in range(ell + 1)])


@lru_cache(maxsize=None)
def _angle_basis(ell: int, n_theta: int = 128):
    theta = np.linspace(0.0, np.pi, n_theta, endpoint=False)
    return theta


def _trig_poly(comps, ell, theta):
    """p(theta) = T(xi, ..., xi) for xi = (cos theta, sin theta); comps stacked on axis 0."""
    binom = _binom_weights(ell)
    c, s = np.cos(theta), np.sin(theta)
    val = np.zeros(np.broadcast(comps[0], theta).shape)
    for j in range(ell + 1):
        val = val + binom[j] * comps[j] * c ** (ell - j) * s**j
    return val


def _trig_poly_derivs(comps, ell, theta):
    binom = _binom_weights(ell)
    c, s = np.cos(theta), np.sin(theta)
    d1 = np.zeros_like(theta)
    d2 = np.zeros_like(theta)
    for j in range(ell + 1):
        a, b = ell - j, j
        base = binom[j] * comps[j]
        term1 = np.zeros_like(theta)
        if a > 0:
            term1 -= a * c ** (a - 1) * s ** (b + 1)
        if b > 0:
            term1 += b * c ** (a + 1) * s ** (b - 1)
        d1 += base * term1
        term2 = -(2.0 * a * b + a + b) * c**a * s**b
        if a >= 2:
            term2 = term2 + a * (a - 1) * c ** (a - 2) * s ** (b + 2)
        if b >= 2:
            term2 = term2 + b * (b - 1) * c ** (a + 2) * s ** (b - 2)
        d2 += base * term2
    return d1, d2


def _operatorial_sq_2d(comps: np.ndarray, ell: int, want_sens: bool):
    """Squared direction-sup norm per node, with the attaining direction's sensitivities."""
    if ell == 1:
        normsq = comps[0] ** 2 + comps[1] ** 2
        sens = 2.0 * comps if want_sens else None
        return normsq, sens
    if ell == 2:
        a, b, c = comps[0], comps[1], comps[2]
        mean = 0.5 * (a + c)
        half = 0.5 * (a - c)
        root = np.sqrt(half * half + b * b)
        lam_hi, lam_lo = mean + root, mean - root
        lam = np.where(np.abs(lam_hi) >= np.abs(lam_lo), lam_hi, lam_lo)
        normsq = lam * lam
        if not want_sens:
            return normsq, None
        # Eigenvector for the attaining eigenvalue; fall back to an axis when
        # the matrix is (numerically) a multiple of the identity.
        v1 = np.where(np.abs(b) + np.abs(lam - a) > 1e-300, b, 1.0)
        v2 = np.where(np.abs(b) + np.abs(lam - a) > 1e-300, lam - a, 0.0)
        isotropic = (np.abs(b) < 1e-300) & (np.abs(lam - a) < 1e-300)
        v1 = np.where(isotropic, 1.0, v1)
        v2 = np.where(isotropic, 0.0, v2)
        nrm = np.sqrt(v1 * v1 + v2 * v2)
        v1, v2 = v1 / nrm, v2 / nrm
        sens = np.stack([2.0 * lam * v1 * v1, 4.0 * lam * v1 * v2, 2.0 * lam * v2 * v2])
        return normsq, sens
    # Higher orders: dense angular scan plus Newton polish on p(theta)^2.
    theta_grid = _angle_basis(ell)
    flat = comps.reshape(ell + 1, -1)
    vals = np.empty((theta_grid.size, flat.shape[1]))
    for t, th in enumerate(theta_grid):
        vals[t] = _trig_poly(flat, ell, th)
    best = np.argmax(np.abs(vals), axis=0)
    theta = theta_grid[best]
    for _ in range(4):
        p = _trig_poly(flat, ell, theta)
        d1, d2 = _trig_poly_derivs(flat, ell, theta)
        f1 = 2.0 * p * d1
        f2 = 2.0 * (d1 * d1 + p * d2)
        step = np.where(f2 < -1e-300, f1 / f2, 0.0)
        theta = theta - np.clip(step, -0.05, 0.05)
    p = _trig_poly(flat, ell, theta)
    normsq = (p * p).reshape(comps.shape[1:])
    if not want_sens:
        return normsq, None
    binom = _binom_weights(ell)
    c, s = np.cos(theta), np.sin(theta)
    sens = np.stack([(2.0 * p * binom[j] * c ** (ell - j) * s**j).reshape(comps.shape[1:]) for j in range(ell + 1)])
    return normsq, sens


def _norm_sq_2d(comps: np.ndarray, ell: int, spec: NormSpec, want_sens: bool):
    """Squared norm per node for stacked components (axis 0 = symmetry class)."""
    if spec.kind == FROBENIUS:
        mult = _binom_weights(ell).reshape((-1,) + (1,) * (comps.ndim - 1))
        normsq = (mult * comps * comps).sum(axis=0)
        return normsq, (2.0 * mult * comps if want_sens else None)
    if spec.kind == WFROB:
        w = _wfrob_weights_2d(spec, ell).reshape((-1,) + (1,) * (comps.ndim - 1))
        normsq = (w * comps * comps).sum(axis=0)
        return normsq, (2.0 * w * comps if want_sens else None)
    if spec.kind == MAXCOMP:
        amax = np.argmax(np.abs(comps), axis=0)
        pick = np.take_along_axis(comps, amax[None], axis=0)[0]
        normsq = pick * pick
        if not want_sens:
            return normsq, None
        sens = np.zeros_like(comps)
        np.put_along_axis(sens, amax[None], 2.0 * pick[None], axis=0)
        return normsq, sens
    return _operatorial_sq_2d(comps, ell, want_sens)


def _norm_sq_1d(deriv: np.ndarray, ell: int, spec: NormSpec, want_sens: bool):
    """In one dimension every norm is a positive multiple of the absolute value."""
    scale = spec.weight_for((0,) * ell) if spec.kind == WFROB else 1.0
    normsq = scale * deriv * deriv
    return normsq, (2.0 * scale * deriv if want_sens else None)


# ---------------------------------------------------------------------------
# frame rotation for anisotropic norms


@lru_cache(maxsize=None)
def _rotation_matrix_cached(tangent, normal, ell):
    rows = np.array([tangent, normal])
    size = ell + 1
    mat = np.zeros((size, size))
    for j_amb in range(size):
        beta = (0,) * (ell - j_amb) + (1,) * j_amb
        for gamma in itertools.product((0, 1), repeat=ell):
            prod = 1.0
            for g, b in zip(gamma, beta):
                prod *= rows[g, b]
            mat[j_amb, sum(gamma)] += prod
    return mat


def rotation_to_ambient(grid: Grid2D, ell: int) -> np.ndarray:
    """Matrix taking frame tensor components (sorted storage) to ambient ones."""
    return _rotation_matrix_cached(grid.tangent, grid.normal, ell)


def _frame_is_ambient(grid: Grid2D) -> bool:
    return abs(grid.normal[0]) < 1e-14 and abs(grid.normal[1] - 1.0) < 1e-14


# ---------------------------------------------------------------------------
# derivatives


def derivative_1d(field: Field1D, ell: int, one_sided: bool = False) -> Field1D:
    """Order-`ell` derivative of a 1D field (clamped extension at the edges).

    With ``one_sided=True`` the nodes whose centered stencil would leave the
    grid use one-sided stencils instead of the mask-backed clamped values.
    """
    vals = apply_stencil(field.values, ell, field.grid.h)
    if one_sided:
        offs, coefs = one_sided_stencil(ell, forward=True)
        roffs, rcoefs = one_sided_stencil(ell, forward=False)
        half = (ell + 1) // 2
        u, h = field.values, field.grid.h
        for i in range(half):
            vals[i] = sum(c * u[i + o] for o, c in zip(offs, coefs)) / h**ell
            j = u.size - 1 - i
            vals[j] = sum(c * u[j + o] for o, c in zip(roffs, rcoefs)) / h**ell
    return Field1D(field.grid, vals, np.zeros_like(field.fixed))


@dataclass(frozen=True)
class TensorField2D:
    """Per-node symmetric tensor of a given order, components in the grid frame.

    comps[j] holds the mixed partial with (order - j) tangent and j normal
    derivatives; ambient components are one rotation away.
    """

    grid: Grid2D
    order: int
    comps: np.ndarray

    def ambient_comps(self) -> np.ndarray:
        mat = rotation_to_ambient(self.grid, self.order)
        return np.tensordot(mat, self.comps, axes=(1, 0))

    def tensor_at(self, i: int, j: int, ambient: bool = True) -> SymTensor:
        comps = self.ambient_comps() if ambient else self.comps
        ell = self.order
        return SymTensor(2, ell, {(0,) * (ell - m) + (1,) * m: comps[m, i, j] for m in range(ell + 1)})


def grad_tensor_2d(field: Field2D, ell: int) -> TensorField2D:
    """All order-`ell` partial derivatives of a 2D field, one tensor per node."""
    h = field.grid.h
    comps = []
    for j in range(ell + 1):
        g = field.values
        if ell - j > 0:
            g = apply_stencil(g, ell - j, h, axis=0)
        if j > 0:
            g = apply_stencil(g, j, h, axis=1)
        comps.append(g)
    return TensorField2D(field.grid, ell, np.stack(comps))


# ---------------------------------------------------------------------------
# energy assembly


def _trapz_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def _check_finite(values, grid):
    if np.all(np.isfinite(values)):
        return
    bad = np.argwhere(~np.isfinite(values))[0]
    raise NumericError(f"non-finite field value at node {tuple(int(i) for i in bad)}", node=tuple(int(i) for i in bad))


def _assemble(field, spec: FunctionalSpec, want_grad: bool):
    u = field.values
    _check_finite(u, field.grid)
    eps = spec.eps
    if isinstance(field, Field1D):
        w = _trapz_weights(u.size, field.grid.h)
        dims = 1
    else:
        w0 = _trapz_weights(u.shape[0], field.grid.h)
        w1 = _trapz_weights(u.shape[1], field.grid.h)
        w = np.outer(w0, w1)
        dims = 2

    pot = float((w * eval_potential(spec.well, u)).sum() / eps)
    grad = (w * eval_potential_slope(spec.well, u)) / eps if want_grad else None

    terms = []
    for ell in range(1, spec.k + 1):
        q = spec.q[ell - 1]
        weight = eps ** (2 * ell - 1)
        nspec = spec.norms[ell - 1]
        if dims == 1:
            deriv = apply_stencil(u, ell, field.grid.h)
            normsq, sens = _norm_sq_1d(deriv, ell, nspec, want_grad)
            term = float(q * weight * (w * normsq).sum())
            if want_grad:
                grad += q * weight * apply_stencil_adjoint(w * sens, ell, field.grid.h)
        else:
            tf = grad_tensor_2d(field, ell)
            comps = tf.comps
            rotate = (not _frame_is_ambient(field.grid)) and nspec.kind in (MAXCOMP, WFROB)
            if rotate:
                mat = rotation_to_ambient(field.grid, ell)
                comps = np.tensordot(mat, comps, axes=(1, 0))
            normsq, sens = _norm_sq_2d(comps, ell, nspec, want_grad)
            term = float(q * weight * (w * normsq).sum())
            if want_grad:
                if rotate:
                    sens = np.tensordot(mat.T, sens, axes=(1, 0))
                h = field.grid.h
                for j in range(ell + 1):
                    g = w * sens[j]
                    if j > 0:
                        g = apply_stencil_adjoint(g, j, h, axis=1)
                    if ell - j > 0:
                        g = apply_stencil_adjoint(g, ell - j, h, axis=0)
                    grad += q * weight * g
        terms.append(term)

    total = pot + sum(terms)
    if not np.isfinite(total):
        raise NumericError("non-finite energy total", node=None)
    report = EnergyReport(total=total, potential=pot, derivative=tuple(terms))
    if want_grad:
        grad[field.fixed] = 0.0
        return report, grad
    return report, None


def assemble_energy(field, spec: FunctionalSpec) -> EnergyReport:
    """Trapezoidal assembly of the energy with its per-term breakdown."""
    report, _ = _assemble(field, spec, want_grad=False)
    return report


def assemble_gradient(field, spec: FunctionalSpec) -> np.ndarray:
    """Exact gradient of the discrete energy w.r.t. nodal values; 0 on Fixed nodes."""
    _, grad = _assemble(field, spec, want_grad=True)
    return grad


def assemble_energy_and_gradient(field, spec: FunctionalSpec):
    report, grad = _assemble(field, spec, want_grad=True)
    return report, grad


# ---------------------------------------------------------------------------
# serialization


def save_field_csv(field, path, meta_line: str | None = None) -> None:
    """CSV serialization: 1D rows are (t, u), 2D rows are (x, y, u)."""
    import csv as _csv

    with open(path, "w", newline="") as fh:
        if meta_line:
            fh.write(f"# {meta_line}\r\n")
        writer = _csv.writer(fh, lineterminator="\r\n")
        if isinstance(field, Field1D):
            writer.writerow(["t", "u"])
            for t, u in zip(field.grid.nodes, field.values):
                writer.writerow([format(t, ".17g"), format(u, ".17g")])
        else:
            writer.writerow(["x", "y", "u"])
            x, y = field.grid.node_xy()
            for i in range(field.values.shape[0]):
                for j in range(field.values.shape[1]):
                    writer.writerow([format(x[i, j], ".17g"), format(y[i, j], ".17g"), format(field.values[i, j], ".17g")])


def save_field_binary(field, path) -> None:
    """Compact binary format: magic PHF1, little-endian doubles, then the mask."""
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        if isinstance(field, Field1D):
            fh.write(struct.pack("<B", 1))
            fh.write(struct.pack("<ddQd", field.grid.a, field.grid.b, field.grid.n, field.grid.h))
        else:
            fh.write(struct.pack("<B", 2))
            g = field.grid
            fh.write(struct.pack("<dddddQQd", g.center[0], g.center[1], g.normal[0], g.normal[1], g.side, g.counts[0], g.counts[1], g.h))
        fh.write(field.values.astype("<f8").tobytes())
        fh.write(field.fixed.astype(np.uint8).tobytes())


def load_field_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BINARY_MAGIC:
            raise UsageError(f"{path}: bad magic {magic!r}")
        (dims,) = struct.unpack("<B", fh.read(1))
        if dims == 1:
            a, b, n, _h = struct.unpack("<ddQd", fh.read(32))
            grid = Grid1D(a, b, int(n))
            count = grid.num_nodes
            values = np.frombuffer(fh.read(8 * count), dtype="<f8").copy()
            fixed = np.frombuffer(fh.read(count), dtype=np.uint8).astype(bool)
            return Field1D(grid, values, fixed)
        if dims == 2:
            cx, cy, nx, ny, side, n0, n1, _h = struct.unpack("<dddddQQd", fh.read(64))
            grid = Grid2D((cx, cy), (nx, ny), side, (int(n0), int(n1)))
            count = int(n0) * int(n1)
            values = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(int(n0), int(n1)).copy()
            fixed = np.frombuffer(fh.read(count), dtype=np.uint8).reshape(int(n0), int(n1)).astype(bool)
            return Field2D(grid, values, fixed)
        raise UsageError(f"{path}: unsupported dims {dims}")
