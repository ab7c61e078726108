"""Point sets in [0,1)^d with provenance metadata, and their file format.

File format ``qmcpts v1``: UTF-8 text, header line

    # qmcpts v1 d=<d> n=<n> seed=<seed> label=<string>

followed by one point per line, coordinates as decimal literals with 17
significant digits, space-separated.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PointSetMeta:
    d: int
    n: int
    seed: int
    label: str


@dataclass
class PointSet:
    """Ordered points in ``[0,1)^d``."""

    points: np.ndarray  # (n, d) float64
    meta: PointSetMeta

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if np.any((pts < 0.0) | (pts >= 1.0)):
            raise ValueError("coordinates must lie in [0, 1)")
        self.points = pts
        if pts.shape != (self.meta.n, self.meta.d):
            raise ValueError(
                f"points shape {pts.shape} does not match meta "
                f"(n={self.meta.n}, d={self.meta.d})"
            )

    @property
    def n(self) -> int:
        return self.meta.n

    @property
    def d(self) -> int:
        return self.meta.d

    @staticmethod
    def from_array(points, seed: int = 0, label: str = "unlabeled") -> "PointSet":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n, d = pts.shape
        return PointSet(pts, PointSetMeta(d=d, n=n, seed=seed, label=label))


_HEADER_RE = re.compile(
    r"^# qmcpts v1 d=(\d+) n=(\d+) seed=(-?\d+) label=(.*)$"
)


def write_pointset(ps: PointSet, path) -> None:
    """Atomic write (temp + rename); coordinates carry 17 significant digits
    so the float64 values round-trip exactly."""
    path = Path(path)
    lines = [
        f"# qmcpts v1 d={ps.d} n={ps.n} seed={ps.meta.seed} label={ps.meta.label}"
    ]
    for row in ps.points:
        lines.append(" ".join(f"{x:.16e}" for x in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_pointset(path) -> PointSet:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise ValueError(f"{path}: not a qmcpts v1 file (bad header)")
        d, n, seed, label = int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4)
        pts = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if pts.shape != (n, d):
        raise ValueError(
            f"{path}: header promises {n} x {d} points, file has {pts.shape}"
        )
    return PointSet(pts, PointSetMeta(d=d, n=n, seed=seed, label=label))
