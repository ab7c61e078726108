"""Dyadic interval/box indexing, product weights, and sparse incidence vectors.

A dyadic box is a product of left-open intervals ``(offset/2^level,
(offset+1)/2^level]`` with ``level <= h`` per dimension; level 0 is the
trivial interval ``(0, 1]``.  Boxes are addressed by integer indices under a
fixed bijection per collection mode:

* ``full`` -- per-dimension interval index ``q = 0`` for trivial, else
  ``(2^level - 1) + offset`` in ``[1, 2^(h+1) - 2]``; the box index is the
  mixed-radix number ``sum_j q_j * R^j`` with radix ``R = 2^(h+1) - 1`` and
  dimension 0 least significant.
* ``truncation(s)`` -- the full scheme restricted to the first ``s``
  dimensions (all others trivial); the index space shrinks to ``R^s`` and
  index values coincide with the full scheme.
* ``superposition(s)`` -- boxes with at most ``s`` nontrivial dimensions,
  ordered by nontrivial-dimension count ``k``, then by the dimension subset
  in lexicographic order, then mixed-radix over the ``k`` nontrivial
  interval indices (first subset member least significant) with radix
  ``M = 2^(h+1) - 2``.

Index spaces must fit in a signed 64-bit integer; anything larger is far
beyond what the incidence constructions can materialize anyway.

Boundary convention: points are sampled in ``[0, 1)`` and a coordinate is
assigned to the interval ``floor(x * 2^level)`` even though intervals are
left-open.  The mismatch is confined to the measure-zero set of dyadic
rationals, which the random shift makes irrelevant.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

INT64_MAX = 2**63 - 1


class DimensionMismatchError(ValueError):
    """Box, profile, or point dimensions disagree."""


class IndexSpaceOverflowError(OverflowError):
    """The requested dyadic collection cannot be indexed in 64 bits."""


# ---------------------------------------------------------------------------
# modes and weight profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mode:
    """Collection mode: which dyadic boxes participate in incidence."""

    kind: str  # "full" | "superposition" | "truncation"
    s_eff: int | None = None

    def __post_init__(self):
        if self.kind not in ("full", "superposition", "truncation"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if self.kind == "full":
            if self.s_eff is not None:
                raise ValueError("full mode takes no s_eff")
        elif self.s_eff is None or self.s_eff < 1:
            raise ValueError(f"{self.kind} mode needs s_eff >= 1")


FULL = Mode("full")


def superposition(s_eff: int) -> Mode:
    return Mode("superposition", s_eff)


def truncation(s_eff: int) -> Mode:
    return Mode("truncation", s_eff)


@dataclass(frozen=True)
class WeightProfile:
    """Non-increasing per-coordinate product weights plus a collection mode."""

    gammas: tuple[float, ...]
    mode: Mode = FULL

    def __post_init__(self):
        g = self.gammas
        if len(g) == 0:
            raise ValueError("empty weight sequence")
        if any(w < 0 for w in g):
            raise ValueError("weights must be non-negative")
        if any(g[i] < g[i + 1] for i in range(len(g) - 1)):
            raise ValueError("weights must be non-increasing")
        if self.mode.s_eff is not None and self.mode.s_eff > len(g):
            raise ValueError("s_eff exceeds dimension")
        object.__setattr__(self, "gammas", tuple(float(w) for w in g))

    @property
    def d(self) -> int:
        return len(self.gammas)

    @staticmethod
    def full(gammas) -> "WeightProfile":
        return WeightProfile(tuple(gammas), FULL)

    @staticmethod
    def unit(d: int) -> "WeightProfile":
        return WeightProfile((1.0,) * d, FULL)

    @staticmethod
    def superposition(d: int, s_eff: int, gammas=None) -> "WeightProfile":
        g = (1.0,) * d if gammas is None else tuple(gammas)
        return WeightProfile(g, superposition(s_eff))

    @staticmethod
    def truncation(d: int, s_eff: int) -> "WeightProfile":
        # stored as the explicit 0/1 weight sequence
        g = (1.0,) * s_eff + (0.0,) * (d - s_eff)
        return WeightProfile(g, truncation(s_eff))


@dataclass(frozen=True)
class DyadicBox:
    """A d-tuple of (level, offset) pairs in the shifted dyadic system."""

    dims: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for level, offset in self.dims:
            if level < 0:
                raise ValueError("negative level")
            if not 0 <= offset < (1 << level) and not (level == 0 and offset == 0):
                raise ValueError(f"offset {offset} out of range at level {level}")

    @property
    def d(self) -> int:
        return len(self.dims)

    def nontrivial_dims(self) -> tuple[int, ...]:
        return tuple(j for j, (level, _) in enumerate(self.dims) if level > 0)

    def intervals(self) -> tuple[tuple[float, float], ...]:
        """Per-dimension (lo, hi] endpoints."""
        return tuple(
            (offset / (1 << level), (offset + 1) / (1 << level))
            for level, offset in self.dims
        )

    def contains(self, point) -> bool:
        """Membership under the floor-assignment boundary convention."""
        if len(point) != self.d:
            raise DimensionMismatchError("point/box dimension mismatch")
        return all(
            locate(x, level) == offset
            for x, (level, offset) in zip(point, self.dims)
        )


@dataclass
class SparseIncidence:
    """Weighted indicator of one point against a dyadic collection.

    ``entries`` maps box index to weight (strictly positive entries only);
    ``dimension_count`` is the total number of boxes in the ambient
    collection.
    """

    entries: dict[int, float]
    dimension_count: int

    def __post_init__(self):
        if any(w <= 0 for w in self.entries.values()):
            raise ValueError("incidence weights must be strictly positive")

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def norm_sq(self) -> float:
        return sum(w * w for w in self.entries.values())


# ---------------------------------------------------------------------------
# interval and box index arithmetic
# ---------------------------------------------------------------------------


def locate(x: float, level: int) -> int:
    """Offset of the level-`level` dyadic interval holding x in [0, 1)."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"coordinate {x} outside [0, 1)")
    if level < 0:
        raise ValueError("negative level")
    return int(x * (1 << level))


def interval_index(level: int, offset: int) -> int:
    """0 for the trivial interval, else (2^level - 1) + offset."""
    if level == 0:
        return 0
    return (1 << level) - 1 + offset


def interval_from_index(q: int) -> tuple[int, int]:
    level = (q + 1).bit_length() - 1
    return level, q + 1 - (1 << level)


def box_count(d: int, h: int, mode: Mode) -> int:
    """Number of admissible boxes (exact integer, may exceed 64 bits)."""
    if d < 1 or h < 0:
        raise ValueError("need d >= 1 and h >= 0")
    big_r = (1 << (h + 1)) - 1
    if mode.kind == "full":
        return big_r**d
    if mode.kind == "truncation":
        return big_r ** min(mode.s_eff, d)
    m = big_r - 1
    return sum(comb(d, k) * m**k for k in range(min(mode.s_eff, d) + 1))


def _check_space(d: int, h: int, mode: Mode) -> int:
    total = box_count(d, h, mode)
    if total > INT64_MAX:
        raise IndexSpaceOverflowError(
            f"dyadic index space of size {total} for d={d}, h={h}, "
            f"mode={mode.kind} does not fit in 64 bits"
        )
    return total


def _subset_rank(u: tuple[int, ...], d: int) -> int:
    """Lexicographic rank of a sorted k-subset of range(d)."""
    rank = 0
    prev = -1
    k = len(u)
    for i, j in enumerate(u):
        for v in range(prev + 1, j):
            rank += comb(d - 1 - v, k - 1 - i)
        prev = j
    return rank


def _subset_unrank(rank: int, d: int, k: int) -> tuple[int, ...]:
    out = []
    v = 0
    for i in range(k):
        while True:
            block = comb(d - 1 - v, k - 1 - i)
            if rank < block:
                break
            rank -= block
            v += 1
        out.append(v)
        v += 1
    return tuple(out)


def box_index(box: DyadicBox, h: int, mode: Mode) -> int:
    """Integer index of a box under the documented per-mode bijection."""
    d = box.d
    _check_space(d, h, mode)
    big_r = (1 << (h + 1)) - 1
    if any(level > h for level, _ in box.dims):
        raise ValueError(f"box level exceeds h={h}")
    if mode.kind in ("full", "truncation"):
        if mode.kind == "truncation" and any(
            j >= mode.s_eff for j in box.nontrivial_dims()
        ):
            raise ValueError("box nontrivial outside the truncation prefix")
        idx = 0
        for j in reversed(range(d)):
            idx = idx * big_r + interval_index(*box.dims[j])
        return idx
    u = box.nontrivial_dims()
    k = len(u)
    if k > mode.s_eff:
        raise ValueError(f"box has {k} nontrivial dimensions > s_eff={mode.s_eff}")
    m = big_r - 1
    base = sum(comb(d, kk) * m**kk for kk in range(k))
    digits = 0
    for i in reversed(range(k)):
        digits = digits * m + interval_index(*box.dims[u[i]]) - 1
    return base + _subset_rank(u, d) * m**k + digits


def box_from_index(idx: int, d: int, h: int, mode: Mode) -> DyadicBox:
    total = _check_space(d, h, mode)
    if not 0 <= idx < total:
        raise ValueError(f"box index {idx} out of range [0, {total})")
    big_r = (1 << (h + 1)) - 1
    if mode.kind in ("full", "truncation"):
        span = d if mode.kind == "full" else mode.s_eff
        dims = []
        rem = idx
        for _ in range(span):
            rem, q = divmod(rem, big_r)
            dims.append(interval_from_index(q))
        dims.extend((0, 0) for _ in range(d - span))
        return DyadicBox(tuple(dims))
    m = big_r - 1
    k = 0
    rem = idx
    while rem >= comb(d, k) * m**k:
        rem -= comb(d, k) * m**k
        k += 1
    rank, digits = divmod(rem, m**k)
    u = _subset_unrank(rank, d, k)
    dims = [(0, 0)] * d
    for i in range(k):
        digits, q = divmod(digits, m)
        dims[u[i]] = interval_from_index(q + 1)
    return DyadicBox(tuple(dims))


def enumerate_boxes(d: int, h: int, mode: Mode) -> Iterator[DyadicBox]:
    """All admissible boxes in index order (index == position)."""
    total = _check_space(d, h, mode)
    return (box_from_index(i, d, h, mode) for i in range(total))


# ---------------------------------------------------------------------------
# weights and incidence
# ---------------------------------------------------------------------------


def box_weight(box: DyadicBox, profile: WeightProfile) -> float:
    """Product of gamma_j over the box's nontrivial dimensions (empty = 1)."""
    if box.d != profile.d:
        raise DimensionMismatchError(
            f"box has d={box.d}, profile has d={profile.d}"
        )
    w = 1.0
    for j in box.nontrivial_dims():
        w *= profile.gammas[j]
    return w


@dataclass
class IncidencePattern:
    """Batch incidence for n points sharing one column layout.

    Row r of ``ids`` holds the box indices hit by point r; every point hits
    the same number of boxes with the same weights, so ``col_weights`` is a
    single shared vector.  ``space`` is the ambient box count.
    """

    ids: np.ndarray  # (n, P) int64
    col_weights: np.ndarray  # (P,) float64
    space: int

    @property
    def nnz_per_point(self) -> int:
        return self.ids.shape[1]


def _fold(points: np.ndarray, shift: np.ndarray) -> np.ndarray:
    folded = (points - shift) % 1.0
    # float rounding of the modulo can land exactly on 1.0; wrap it
    folded[folded >= 1.0] = 0.0
    return folded


def incidence_pattern(
    points: np.ndarray, h: int, profile: WeightProfile, shift: np.ndarray
) -> IncidencePattern:
    """Vectorized incidence of many points against the shifted system.

    Points are shifted by ``-shift`` mod 1 against a fixed dyadic system,
    which is equivalent to shifting the system and folding.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, d = points.shape
    if d != profile.d:
        raise DimensionMismatchError(f"points have d={d}, profile d={profile.d}")
    shift = np.asarray(shift, dtype=np.float64).reshape(d)
    if np.any((points < 0) | (points >= 1)) or np.any((shift < 0) | (shift >= 1)):
        raise ValueError("points and shift must lie in [0, 1)")
    mode = profile.mode
    space = _check_space(d, h, mode)
    big_r = (1 << (h + 1)) - 1
    folded = _fold(points, shift)

    # q[r, j, l-1] = nontrivial interval index of point r, dim j, level l
    levels = 1 << np.arange(1, h + 1, dtype=np.int64)
    offsets = np.floor(folded[:, :, None] * levels[None, None, :]).astype(np.int64)
    q = (levels - 1)[None, None, :] + offsets

    if mode.kind in ("full", "truncation"):
        active = [
            j for j in range(d if mode.kind == "full" else mode.s_eff)
            if profile.gammas[j] > 0
        ]
        ids = np.zeros((n, 1), dtype=np.int64)
        weights = np.ones(1, dtype=np.float64)
        for j in active:
            opt_ids = np.concatenate(
                [np.zeros((n, 1), dtype=np.int64), q[:, j, :]], axis=1
            )
            opt_w = np.concatenate(
                [[1.0], np.full(h, profile.gammas[j])]
            )
            radix = big_r**j
            ids = (ids[:, :, None] + opt_ids[:, None, :] * radix).reshape(n, -1)
            weights = (weights[:, None] * opt_w[None, :]).reshape(-1)
        return IncidencePattern(np.ascontiguousarray(ids), weights, space)

    # superposition: blocks ordered by subset size, subset rank, then
    # mixed-radix level combinations (first subset member least significant)
    s = mode.s_eff
    m = big_r - 1
    blocks_ids = [np.zeros((n, 1), dtype=np.int64)]
    blocks_w = [np.ones(1)]
    from itertools import combinations

    base = 1
    for k in range(1, s + 1):
        for rank, u in enumerate(combinations(range(d), k)):
            gamma_u = 1.0
            for j in u:
                gamma_u *= profile.gammas[j]
            if gamma_u <= 0:
                continue
            sub = np.zeros((n, 1), dtype=np.int64)
            for i, j in enumerate(u):
                sub = (
                    sub[:, :, None] + ((q[:, j, :] - 1) * m**i)[:, None, :]
                ).reshape(n, -1)
            blocks_ids.append(base + rank * m**k + sub)
            blocks_w.append(np.full(h**k, gamma_u))
        base += comb(d, k) * m**k
    ids = np.concatenate(blocks_ids, axis=1)
    weights = np.concatenate(blocks_w)
    return IncidencePattern(np.ascontiguousarray(ids), weights, space)


def incidence(
    point, h: int, profile: WeightProfile, shift=None
) -> SparseIncidence:
    """Weighted indicator of one point against the shifted dyadic system."""
    point = np.asarray(point, dtype=np.float64).reshape(1, -1)
    if shift is None:
        shift = np.zeros(point.shape[1])
    pat = incidence_pattern(point, h, profile, shift)
    entries = {
        int(i): float(w)
        for i, w in zip(pat.ids[0], pat.col_weights)
    }
    return SparseIncidence(entries, pat.space)


def norm_bound_sq(h: int, profile: WeightProfile) -> float:
    """Squared norm of any full incidence vector: prod_j (1 + h * gamma_j^2).

    In truncation/superposition modes this is an upper bound attained when
    all admissible boxes carry weight (exact for truncation).
    """
    if profile.mode.kind == "superposition":
        s = profile.mode.s_eff
        total = 0.0
        from itertools import combinations

        for k in range(s + 1):
            for u in combinations(range(profile.d), k):
                g = 1.0
                for j in u:
                    g *= profile.gammas[j] ** 2
                total += h**k * g
        return total
    return float(np.prod([1.0 + h * g * g for g in profile.gammas]))


def default_h(n: int, d: int, s_eff: int | None = None) -> int:
    """Dyadic refinement depth: ceil(log2(d*n)), or ceil(log2(s_eff*n))."""
    import math

    scale = d if s_eff is None else s_eff
    return max(1, math.ceil(math.log2(scale * n)))
