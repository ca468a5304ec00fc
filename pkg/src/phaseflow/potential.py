"""Double-well potentials and machine checks of the structural hypotheses.

Wells are fixed at -1 and +1.  Two kinds are supported: the reference
quartic well (1 - s^2)^2 and tabulated wells interpolated with a
monotone-preserving cubic (PCHIP), pinned to exact zeros at the wells.
The three structural hypotheses (zero set, quadratic minorant, radial
quasi-monotonicity) are checked by finite sampling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PotentialConstructionError, PotentialRangeError

WELLS = (-1.0, 1.0)

QUARTIC = "quartic"
TABLE = "table"

_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """A double-well energy density W with wells pinned at -1 and +1.

    For ``kind == "table"`` the interpolant is the PCHIP fit of the sample
    points, tilted so that W(-1) = W(1) = 0 exactly and clamped below at 0.
    """

    kind: str
    table_s: np.ndarray | None = None
    table_w: np.ndarray | None = None
    _interp: object = field(default=None, repr=False, compare=False)

    @property
    def support(self):
        """Abscissa range on which the potential may be evaluated."""
        if self.kind == QUARTIC:
            return (-np.inf, np.inf)
        return (float(self.table_s[0]), float(self.table_s[-1]))


def quartic() -> PotentialSpec:
    """The reference well (1 - s^2)^2."""
    return PotentialSpec(kind=QUARTIC)


def from_table(s, w) -> PotentialSpec:
    """Build a table potential from sample abscissae and ordinates.

    The raw interpolant is corrected by the affine function through its
    values at the wells (so W(-1) = W(1) = 0 exactly) and clamped at 0.
    Construction is rejected if the corrected well vanishes at sampled
    states away from the wells, since the zero set must be exactly {-1, 1}.
    """
    s = np.asarray(s, dtype=float)
    w = np.asarray(w, dtype=float)
    if s.ndim != 1 or s.size < 4:
        raise PotentialConstructionError("table potential needs at least 4 samples")
    if not np.all(np.diff(s) > 0):
        raise PotentialConstructionError("table abscissae must be strictly increasing")
    if s[0] > -1.0 or s[-1] < 1.0:
        raise PotentialConstructionError("table must cover both wells [-1, 1]")
    if np.any(w < -_ZERO_TOL):
        raise PotentialConstructionError("table ordinates must be nonnegative")

    raw = PchipInterpolator(s, w, extrapolate=False)
    w_minus, w_plus = float(raw(-1.0)), float(raw(1.0))
    # Affine tilt through the well values; subtracting it pins exact zeros there.
    slope = (w_plus - w_minus) / 2.0
    intercept = (w_plus + w_minus) / 2.0

    def corrected(x):
        return np.maximum(np.asarray(raw(x)) - (intercept + slope * np.asarray(x)), 0.0)

    probe = np.linspace(s[0], s[-1], max(2001, 4 * s.size))
    vals = corrected(probe)
    zero = probe[vals <= _ZERO_TOL]
    far = zero[np.minimum(np.abs(zero - 1.0), np.abs(zero + 1.0)) > 2.0 * (probe[1] - probe[0])]
    if far.size:
        raise PotentialConstructionError(
            f"well vanishes away from the wells (e.g. at s={far[0]:.6g}); zero set must be {{-1, 1}}"
        )

    spec = PotentialSpec(kind=TABLE, table_s=s, table_w=w)
    object.__setattr__(spec, "_interp", (raw, slope, intercept))
    return spec


def from_csv(path) -> PotentialSpec:
    """Load a table potential from a two-column CSV with header line ``s,w``."""
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if [h.strip().lower() for h in header[:2]] != ["s", "w"]:
            raise PotentialConstructionError(f"{path}: expected header 's,w', got {header!r}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    data = np.array(rows)
    return from_table(data[:, 0], data[:, 1])


def eval_potential(spec: PotentialSpec, s):
    """Evaluate W(s); arrays broadcast elementwise."""
    s = np.asarray(s, dtype=float)
    if spec.kind == QUARTIC:
        return (1.0 - s * s) ** 2
    lo, hi = spec.support
    if np.any(s < lo) or np.any(s > hi):
        raise PotentialRangeError(f"state outside table range [{lo:g}, {hi:g}] and no extrapolation rule is set")
    raw, slope, intercept = spec._interp
    return np.maximum(np.asarray(raw(s)) - (intercept + slope * s), 0.0)


def eval_potential_slope(spec: PotentialSpec, s):
    """Evaluate dW/ds.  Zero on clamped (W = 0) regions of table potentials."""
    s = np.asarray(s, dtype=float)
    if spec.kind == QUARTIC:
        return -4.0 * s * (1.0 - s * s)
    lo, hi = spec.support
    if np.any(s < lo) or np.any(s > hi):
        raise PotentialRangeError(f"state outside table range [{lo:g}, {hi:g}] and no extrapolation rule is set")
    raw, slope, intercept = spec._interp
    value = np.asarray(raw(s)) - (intercept + slope * s)
    deriv = np.asarray(raw.derivative()(s)) - slope
    return np.where(value > 0.0, deriv, 0.0)


def eval_potential_curvature(spec: PotentialSpec, s):
    """Evaluate d2W/ds2 (zero on clamped regions); used by Newton solvers."""
    s = np.asarray(s, dtype=float)
    if spec.kind == QUARTIC:
        return 12.0 * s * s - 4.0
    lo, hi = spec.support
    if np.any(s < lo) or np.any(s > hi):
        raise PotentialRangeError(f"state outside table range [{lo:g}, {hi:g}] and no extrapolation rule is set")
    raw, slope, intercept = spec._interp
    value = np.asarray(raw(s)) - (intercept + slope * s)
    curv = np.asarray(raw.derivative(2)(s))
    return np.where(value > 0.0, curv, 0.0)


@dataclass(frozen=True)
class HypothesisCheck:
    passed: bool
    worst_s: float
    worst_violation: float


@dataclass(frozen=True)
class HypothesisReport:
    """Per-hypothesis pass/fail from a finite scan, with the worst sample."""

    h1: HypothesisCheck
    h2: HypothesisCheck
    h3: HypothesisCheck
    resolution: float
    alpha: float
    beta: float

    @property
    def all_passed(self) -> bool:
        return self.h1.passed and self.h2.passed and self.h3.passed

    def as_dict(self):
        return {
            "h1": vars(self.h1),
            "h2": vars(self.h2),
            "h3": vars(self.h3),
            "resolution": self.resolution,
            "alpha": self.alpha,
            "beta": self.beta,
            "all_passed": self.all_passed,
        }


def default_scan_grid(step: float = 1e-2):
    return np.arange(-3.0, 3.0 + step / 2, step)


def check_hypotheses(spec: PotentialSpec, sample_grid=None, alpha: float = 1.0, beta: float = 1.0) -> HypothesisReport:
    """Scan the three hypotheses on a sample grid.

    H1: W vanishes (below 1e-12) only near the wells.
    H2: W(s) >= alpha * min{(s+1)^2, (s-1)^2} up to 1e-12.
    H3: W(s) <= beta * W(t) + beta whenever |s| <= |t|, up to 1e-12.

    The generalized constants alpha, beta default to 1.  The checks are
    sampled, not proved; the report records the scan resolution.
    """
    if sample_grid is None:
        sample_grid = default_scan_grid()
    grid = np.asarray(sample_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty sample grid")
    grid = np.sort(grid)
    spacing = float(np.max(np.diff(grid))) if grid.size > 1 else np.inf

    w = eval_potential(spec, grid)

    # H1: zero set confined to the wells (up to one grid cell of slack).
    near_well = np.minimum(np.abs(grid - 1.0), np.abs(grid + 1.0)) <= max(2.0 * spacing, 1e-6)
    bad1 = (w <= _ZERO_TOL) & ~near_well
    if np.any(bad1):
        i = int(np.argmax(bad1))
        h1 = HypothesisCheck(False, float(grid[i]), float(_ZERO_TOL - w[i]))
    else:
        h1 = HypothesisCheck(True, float("nan"), 0.0)

    # H2: quadratic minorant.
    minorant = alpha * np.minimum((grid + 1.0) ** 2, (grid - 1.0) ** 2)
    gap2 = minorant - w
    i2 = int(np.argmax(gap2))
    h2 = HypothesisCheck(bool(gap2[i2] <= _ZERO_TOL), float(grid[i2]), float(max(gap2[i2], 0.0)))

    # H3: for |s| <= |t|, W(s) <= beta W(t) + beta.  The binding t for each s
    # is the one minimizing W over {|t| >= |s|}; a suffix minimum over the
    # |s|-sorted scan checks all pairs in O(n log n).
    order = np.argsort(np.abs(grid), kind="stable")
    w_sorted = w[order]
    suffix_min = np.minimum.accumulate(w_sorted[::-1])[::-1]
    gap3 = w_sorted - (beta * suffix_min + beta)
    i3 = int(np.argmax(gap3))
    h3 = HypothesisCheck(bool(gap3[i3] <= _ZERO_TOL), float(grid[order][i3]), float(max(gap3[i3], 0.0)))

    return HypothesisReport(h1=h1, h2=h2, h3=h3, resolution=spacing, alpha=alpha, beta=beta)
