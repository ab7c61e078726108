"""Uniformity and integration-error metrics.

Exact star discrepancy is computed over the critical grid (the point
coordinates plus 1 per dimension), evaluating at every grid corner both the
open-count deficiency ``vol(a) - #{x < a}/n`` and the closed-count excess
``#{x <= a}/n - vol(a)``; the supremum over half-open anchored boxes is
attained at one of these finitely many values.  Exact mode covers d <= 3
(the grid has ~(n+1)^d cells); higher dimensions get a uniform-grid lower
bound, clearly labeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .dyadic import WeightProfile
from .pointset import PointSet
from .regions import Region
from .transference import TransferenceTrail, combinatorial_disc, continuous_disc


class ExactModeUnavailableError(ValueError):
    """Exact star discrepancy is limited to d <= 3; see grid_star_discrepancy."""


class InfiniteVariationError(ValueError):
    """A zero coordinate weight meets a nonzero frequency."""


@dataclass(frozen=True)
class DiscrepancyReport:
    value: float
    argmax_corner: tuple[float, ...]
    method: str  # "exact-grid" or "uniform-grid lower bound (1/<res>)"


def _as_points(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.points
    return np.atleast_2d(np.asarray(points, dtype=np.float64))


def star_discrepancy_exact(points) -> DiscrepancyReport:
    """Exact star discrepancy (d <= 3) with the achieving corner."""
    pts = _as_points(points)
    n, d = pts.shape
    if d > 3:
        raise ExactModeUnavailableError(
            f"exact star discrepancy supports d <= 3 (got d={d}); "
            "use grid_star_discrepancy for a labeled lower bound"
        )
    grids = [np.unique(np.append(pts[:, j], 1.0)) for j in range(d)]
    if math.prod(len(g) + 1 for g in grids) > 1 << 27:
        raise ExactModeUnavailableError(
            "critical grid too large for exact mode; "
            "use grid_star_discrepancy"
        )
    # open[i] = #{x : x_j < grids[j][i_j] for all j}: a point contributes to
    # corners strictly above it, i.e. from searchsorted(..., 'right') on
    shape = tuple(len(g) + 1 for g in grids)
    open_c = np.zeros(shape, dtype=np.int64)
    closed_c = np.zeros(shape, dtype=np.int64)
    pos_r = tuple(np.searchsorted(grids[j], pts[:, j], side="right") for j in range(d))
    pos_l = tuple(np.searchsorted(grids[j], pts[:, j], side="left") for j in range(d))
    np.add.at(open_c, pos_r, 1)
    np.add.at(closed_c, pos_l, 1)
    for axis in range(d):
        open_c = np.cumsum(open_c, axis=axis)
        closed_c = np.cumsum(closed_c, axis=axis)
    inner = tuple(slice(0, len(g)) for g in grids)
    open_c = open_c[inner]
    closed_c = closed_c[inner]

    vol = grids[0].copy()
    for j in range(1, d):
        vol = vol[..., None] * grids[j]
    deficiency = vol - open_c / n
    excess = closed_c / n - vol
    stacked = np.maximum(deficiency, excess)
    flat = int(np.argmax(stacked))
    idx = np.unravel_index(flat, stacked.shape)
    corner = tuple(float(grids[j][idx[j]]) for j in range(d))
    return DiscrepancyReport(float(stacked[idx]), corner, "exact-grid")


def grid_star_discrepancy(points, resolution: int = 512) -> DiscrepancyReport:
    """Lower bound: both branches evaluated at uniform-grid corners i/res."""
    pts = _as_points(points)
    n, d = pts.shape
    if (resolution + 1) ** d > 1 << 27:
        raise ValueError(
            f"grid of {(resolution + 1) ** d} corners too large; "
            "reduce the resolution"
        )
    shape = (resolution + 2,) * d
    open_c = np.zeros(shape, dtype=np.int64)
    closed_c = np.zeros(shape, dtype=np.int64)
    scaled = pts * resolution
    # open: smallest i with x*res < i is floor + 1; closed: ceil
    pos_open = tuple(np.floor(scaled[:, j]).astype(np.int64) + 1 for j in range(d))
    pos_closed = tuple(np.ceil(scaled[:, j]).astype(np.int64) for j in range(d))
    np.add.at(open_c, pos_open, 1)
    np.add.at(closed_c, pos_closed, 1)
    for axis in range(d):
        open_c = np.cumsum(open_c, axis=axis)
        closed_c = np.cumsum(closed_c, axis=axis)
    inner = tuple(slice(0, resolution + 1) for _ in range(d))
    open_c = open_c[inner]
    closed_c = closed_c[inner]
    grid = np.arange(resolution + 1) / resolution
    vol = grid.copy()
    for _ in range(1, d):
        vol = vol[..., None] * grid
    stacked = np.maximum(vol - open_c / n, closed_c / n - vol)
    flat = int(np.argmax(stacked))
    idx = np.unravel_index(flat, stacked.shape)
    corner = tuple(float(grid[i]) for i in idx)
    return DiscrepancyReport(
        float(stacked[idx]), corner, f"uniform-grid lower bound (1/{resolution})"
    )


def integration_error(points, f, exact: float) -> float:
    """Sample mean of f over the points minus the exact integral."""
    pts = _as_points(points)
    vals = np.asarray(f(pts), dtype=np.float64)
    return float(vals.mean() - exact)


# ---------------------------------------------------------------------------
# variation functionals
# ---------------------------------------------------------------------------


@dataclass
class FourierPolynomial:
    """Finite-support Fourier sum: terms maps frequency vector to coefficient."""

    terms: dict[tuple[int, ...], complex]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty Fourier polynomial")
        ds = {len(k) for k in self.terms}
        if len(ds) != 1:
            raise ValueError("inconsistent frequency dimensions")
        self.terms = {tuple(int(v) for v in k): complex(c)
                      for k, c in self.terms.items()}

    @property
    def d(self) -> int:
        return len(next(iter(self.terms)))

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        for k, c in self.terms.items():
            neg = tuple(-v for v in k)
            if abs(self.terms.get(neg, 0j) - c.conjugate()) > tol:
                return False
        return True


def wso_variation(f: FourierPolynomial, profile: WeightProfile) -> float:
    """Weighted smoothed-out variation (squared), in closed form.

    The subset sum over nonempty u of prod_{j in u} |k_j| / gamma_j^2
    collapses to prod_j (1 + |k_j| / gamma_j^2) - 1.  Unit weights give the
    plain smoothed-out variation.
    """
    if f.d != profile.d:
        raise ValueError("polynomial/profile dimension mismatch")
    total = 0.0
    for k, c in f.terms.items():
        if all(v == 0 for v in k):
            continue
        inner = 1.0
        for v, g in zip(k, profile.gammas):
            if v == 0:
                continue
            if g == 0.0:
                raise InfiniteVariationError(
                    f"frequency {k} meets a zero weight: variation is infinite"
                )
            inner *= 1.0 + abs(v) / (g * g)
        total += (c.real * c.real + c.imag * c.imag) * (inner - 1.0)
    return total


def so_variation(f: FourierPolynomial) -> float:
    """Smoothed-out variation: the unit-weight special case."""
    return wso_variation(f, WeightProfile.unit(f.d))


# ---------------------------------------------------------------------------
# transference audit
# ---------------------------------------------------------------------------


def transference_audit(
    trail: TransferenceTrail,
    leaf: int,
    test_regions: Sequence[Region],
    exact: bool = False,
):
    """Max violation of the lineage identity over the given regions.

    For every region C the leaf's continuous discrepancy must equal the
    initial one plus the signed sum of per-level combinatorial discrepancies
    scaled by the nominal level sizes.  Returns 0 (exactly, in rational
    mode) on any untampered trail.
    """
    lineage = trail.lineage(leaf)
    leaf_pts = trail.initial_points[trail.leaf_point_indices(leaf)]
    worst = Fraction(0) if exact else 0.0
    for region in test_regions:
        h_leaf = continuous_disc(
            leaf_pts, region, trail.nominal_size(trail.T), exact=exact
        )
        acc = continuous_disc(trail.initial_points, region, trail.n0, exact=exact)
        for t, i, sigma in lineage:
            disc = sigma * combinatorial_disc(trail, region, t, i)
            if exact:
                acc += Fraction(disc, trail.nominal_size(t))
            else:
                acc += disc / trail.nominal_size(t)
        worst = max(worst, abs(h_leaf - acc))
    return worst


# ---------------------------------------------------------------------------
# error summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    n: int
    mae: float
    iqr_lo: float  # 25th percentile of the signed errors
    iqr_hi: float  # 75th percentile

    @property
    def iqr(self) -> float:
        return self.iqr_hi - self.iqr_lo


@dataclass
class ErrorSummary:
    errors: dict[int, np.ndarray] = field(default_factory=dict)
    rows: list[SummaryRow] = field(default_factory=list)
    alpha: float | None = None


def summarize(errors_by_n: Mapping[int, Sequence[float]]) -> ErrorSummary:
    """MAE and signed-error quartiles per n, plus the fitted log-log slope.

    Quantiles use linear interpolation (numpy's default, type 7) over the
    signed errors, so IQR captures the spread of the estimator around its
    bias.  The slope alpha comes from ordinary least squares of log MAE on
    log n, sign flipped; with fewer than two n values it is reported absent.
    """
    summary = ErrorSummary()
    for n in sorted(errors_by_n):
        errs = np.asarray(errors_by_n[n], dtype=np.float64)
        if errs.size < 2:
            raise ValueError(f"need >= 2 error samples per n (n={n})")
        summary.errors[n] = errs
        q25, q75 = np.percentile(errs, [25.0, 75.0])
        summary.rows.append(
            SummaryRow(n, float(np.abs(errs).mean()), float(q25), float(q75))
        )
    if len(summary.rows) >= 2:
        logn = np.log([row.n for row in summary.rows])
        logm = np.log([max(row.mae, 1e-300) for row in summary.rows])
        slope = np.polyfit(logn, logm, 1)[0]
        summary.alpha = float(-slope)
    return summary
