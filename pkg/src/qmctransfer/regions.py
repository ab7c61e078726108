"""Axis-aligned test regions with rational endpoints.

A region is a product of left-open intervals ``(lo_j, hi_j]``.  Membership
and volume support both float and exact :class:`fractions.Fraction`
arithmetic; the exact path is what makes the transference-identity audit a
zero-violation check rather than a tolerance test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Region:
    lows: tuple[Fraction, ...]
    highs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.lows) != len(self.highs):
            raise ValueError("lows/highs length mismatch")
        for lo, hi in zip(self.lows, self.highs):
            if not (0 <= lo <= hi <= 1):
                raise ValueError(f"need 0 <= lo <= hi <= 1, got ({lo}, {hi}]")

    @property
    def d(self) -> int:
        return len(self.lows)

    @staticmethod
    def corner(z) -> "Region":
        """Anchored corner (0, z_1] x ... x (0, z_d]."""
        z = [Fraction(v) if not isinstance(v, Fraction) else v for v in z]
        return Region(tuple(Fraction(0) for _ in z), tuple(z))

    @staticmethod
    def cube(d: int) -> "Region":
        return Region.corner([Fraction(1)] * d)

    @staticmethod
    def dyadic(levels, offsets) -> "Region":
        lows = tuple(Fraction(o, 1 << l) for l, o in zip(levels, offsets))
        highs = tuple(Fraction(o + 1, 1 << l) for l, o in zip(levels, offsets))
        return Region(lows, highs)

    def volume(self, exact: bool = False):
        vol = Fraction(1)
        for lo, hi in zip(self.lows, self.highs):
            vol *= hi - lo
        return vol if exact else float(vol)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership: lo_j < x_j <= hi_j for every dimension."""
        pts = np.atleast_2d(points)
        if pts.shape[1] != self.d:
            raise ValueError("points/region dimension mismatch")
        lows = np.array([float(v) for v in self.lows])
        highs = np.array([float(v) for v in self.highs])
        return np.all((pts > lows) & (pts <= highs), axis=1)


def random_dyadic_regions(d: int, count: int, max_level: int, rng) -> list[Region]:
    """Random dyadic boxes: independent level <= max_level per dimension."""
    out = []
    for _ in range(count):
        levels = [rng.integers(max_level + 1) for _ in range(d)]
        offsets = [rng.integers(1 << l) if l > 0 else 0 for l in levels]
        out.append(Region.dyadic(levels, offsets))
    return out


def read_regions(path, d: int) -> list[Region]:
    """Regions file: one region per line, ``lo_1 hi_1 ... lo_d hi_d``.

    Values are parsed as exact fractions (``p/q`` or decimal literals);
    blank lines and ``#`` comments are skipped.
    """
    regions = []
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 * d:
            raise ValueError(f"regions file line {ln}: expected {2 * d} values")
        vals = [Fraction(p) for p in parts]
        regions.append(Region(tuple(vals[0::2]), tuple(vals[1::2])))
    return regions


def write_regions(regions: list[Region], path) -> None:
    lines = []
    for r in regions:
        lines.append(" ".join(f"{lo}" + " " + f"{hi}" for lo, hi in zip(r.lows, r.highs)))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
