"""Seeded random sources and baseline generators.

Three pieces live here: a counter-based SplitMix64 stream (the repo-wide
deterministic RNG), a Sobol' sequence generator driven by a shipped
direction-number table (optionally digital-shift or nested-uniform
scrambled), and the inverse normal CDF used by the option integrand.

All randomness is a pure function of 64-bit seeds; identical seeds give
identical output on every platform.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import erfc as _erfc

from .pointset import PointSet, PointSetMeta

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_PHI = 0x9E3779B97F4A7C15
_SOBOL_BITS = 32
_TABLE_FILE = "joe-kuo-64.txt"
_TABLE_SHA256 = "7479a3c29f692761b95d3c641d67c23cb27c0574bcb1fda73396d920f5e84d9b"


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def mix64(z: int) -> int:
    """Scalar splitmix64 finalizer (python ints)."""
    mask = (1 << 64) - 1
    z &= mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Deterministic sub-seed derivation: fold tags into the master seed."""
    out = seed & ((1 << 64) - 1)
    for t in tags:
        out = mix64(out ^ mix64(t ^ 0xA5A5A5A5A5A5A5A5))
    return out


class Rng:
    """Counter-based SplitMix64 stream: draw i is mix64(seed + (i+1)*phi)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & ((1 << 64) - 1)
        self._drawn = 0

    def uniform(self, count: int | None = None):
        """Next uniform(s) in [0, 1) as float64."""
        m = 1 if count is None else int(count)
        start = self._drawn + 1
        self._drawn += m
        with np.errstate(over="ignore"):
            ctr = np.arange(start, start + m, dtype=np.uint64) * np.uint64(_PHI)
            z = _mix64_np(ctr + np.uint64(self.seed))
        vals = (z >> np.uint64(11)).astype(np.float64) * (2.0**-53)
        return float(vals[0]) if count is None else vals

    def integers(self, high: int, count: int | None = None):
        """Uniform integers in [0, high) by rejection-free scaling."""
        u = self.uniform(count if count is not None else 1)
        out = np.minimum((np.atleast_1d(u) * high).astype(np.int64), high - 1)
        return int(out[0]) if count is None else out

    def spawn(self, tag: int) -> "Rng":
        return Rng(derive_seed(self.seed, tag))


def iid_uniform(n: int, d: int, seed: int) -> PointSet:
    """n IID uniform points in [0,1)^d, deterministic in the seed."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    pts = Rng(seed).uniform(n * d).reshape(n, d)
    return PointSet(pts, PointSetMeta(d=d, n=n, seed=seed, label="iid"))


# ---------------------------------------------------------------------------
# Sobol'
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DigitalShift:
    seed: int


@dataclass(frozen=True)
class Owen:
    seed: int


@dataclass(frozen=True)
class SobolSpec:
    d: int
    scramble: None | DigitalShift | Owen = None
    skip_first: bool = False


def _load_direction_table() -> list[tuple[int, int, list[int]]]:
    """Parse the shipped `d s a m_1..m_s` table; verify its checksum."""
    data = (
        resources.files("qmctransfer").joinpath("data").joinpath(_TABLE_FILE)
    ).read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != _TABLE_SHA256:
        raise RuntimeError(
            f"direction-number table checksum mismatch: {digest} "
            f"(expected {_TABLE_SHA256})"
        )
    rows = []
    for line in data.decode().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [int(x) for x in line.split()]
        dd, s, a, ms = parts[0], parts[1], parts[2], parts[3:]
        if len(ms) != s:
            raise ValueError(f"malformed table row for dimension {dd}")
        rows.append((s, a, ms))
    return rows


_TABLE_CACHE: list[tuple[int, int, list[int]]] | None = None


def _direction_numbers(d: int) -> np.ndarray:
    """(d, 32) uint64 matrix of direction numbers v_k scaled to 32 bits."""
    global _TABLE_CACHE
    if _TABLE_CACHE is None:
        _TABLE_CACHE = _load_direction_table()
    table = _TABLE_CACHE
    if d > len(table) + 1:
        raise ValueError(
            f"dimension {d} exceeds the shipped direction-number table "
            f"({len(table) + 1} dimensions)"
        )
    v = np.zeros((d, _SOBOL_BITS), dtype=np.uint64)
    # first dimension: van der Corput
    for k in range(_SOBOL_BITS):
        v[0, k] = 1 << (_SOBOL_BITS - 1 - k)
    for j in range(1, d):
        s, a, ms = table[j - 1]
        for k in range(min(s, _SOBOL_BITS)):
            v[j, k] = ms[k] << (_SOBOL_BITS - 1 - k)
        for k in range(s, _SOBOL_BITS):
            prev = v[j, k - s]
            val = prev ^ (prev >> np.uint64(s))
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    val ^= v[j, k - i]
            v[j, k] = val
    return v


def _sobol_ints(n: int, d: int) -> np.ndarray:
    """First n points of the Gray-code-ordered Sobol' sequence as uint64."""
    v = _direction_numbers(d)
    if n == 0:
        return np.zeros((0, d), dtype=np.uint64)
    steps = np.zeros((n, d), dtype=np.uint64)
    if n > 1:
        i = np.arange(1, n, dtype=np.uint64)
        # count trailing zeros of i = position of the Gray-code bit change
        ctz = np.zeros(n - 1, dtype=np.int64)
        rem = i.copy()
        while np.any(rem % np.uint64(2) == 0):
            even = rem % np.uint64(2) == 0
            ctz[even] += 1
            rem[even] >>= np.uint64(1)
        steps[1:] = v[:, :].T[ctz]
    return np.bitwise_xor.accumulate(steps, axis=0)


def _owen_scramble(x: np.ndarray, seed: int) -> np.ndarray:
    """Seeded nested uniform scrambling of 32-bit integer points.

    For each dimension, bit i of a point is flipped by a pseudo-random bit
    keyed on the point's original leading i bits (one independent bit per
    node of the binary prefix tree).
    """
    n, d = x.shape
    out = x.copy()
    for j in range(d):
        dimkey = np.uint64(derive_seed(seed, 0x50B01 + j))
        col = x[:, j]
        mask = np.zeros(n, dtype=np.uint64)
        for i in range(_SOBOL_BITS):
            prefix = col >> np.uint64(_SOBOL_BITS - i)
            node = (np.uint64(1) << np.uint64(i)) + prefix
            with np.errstate(over="ignore"):
                bits = _mix64_np((node * np.uint64(_PHI)) ^ dimkey) & np.uint64(1)
            mask |= bits << np.uint64(_SOBOL_BITS - 1 - i)
        out[:, j] = col ^ mask
    return out


def sobol(n: int, d: int, spec: SobolSpec | None = None) -> PointSet:
    """First n Sobol' points in d dimensions under the given spec."""
    spec = spec or SobolSpec(d=d)
    if spec.d != d:
        raise ValueError("spec dimension disagrees with d")
    if n > 2**32:
        raise ValueError("n exceeds the 32-bit sequence length")
    total = n + 1 if spec.skip_first else n
    ints = _sobol_ints(total, d)
    if spec.skip_first:
        ints = ints[1:]
    seed = 0
    if isinstance(spec.scramble, DigitalShift):
        words = np.array(
            [derive_seed(spec.scramble.seed, 0xD161 + j) & (2**_SOBOL_BITS - 1)
             for j in range(d)],
            dtype=np.uint64,
        )
        ints = ints ^ words[None, :]
        seed = spec.scramble.seed
    elif isinstance(spec.scramble, Owen):
        ints = _owen_scramble(ints, spec.scramble.seed)
        seed = spec.scramble.seed
    pts = ints.astype(np.float64) * (2.0**-_SOBOL_BITS)
    label = "sobol" if spec.scramble is None else (
        "sobol-digital" if isinstance(spec.scramble, DigitalShift) else "sobol-owen"
    )
    return PointSet(pts, PointSetMeta(d=d, n=n, seed=seed, label=label))


# ---------------------------------------------------------------------------
# inverse normal CDF
# ---------------------------------------------------------------------------

# Acklam's rational approximation, then one Halley refinement against the
# exact CDF (via erfc); absolute error is far below the documented 1e-9.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)
_ACK_SPLIT = 0.02425


def _acklam_tail(q: np.ndarray) -> np.ndarray:
    c, dd = _ACK_C, _ACK_D
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0
    return num / den


def _acklam(u: np.ndarray) -> np.ndarray:
    a, b = _ACK_A, _ACK_B
    x = np.empty_like(u)
    lo = u < _ACK_SPLIT
    hi = u > 1.0 - _ACK_SPLIT
    mid = ~(lo | hi)

    if np.any(mid):
        q = u[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = num * q / den
    if np.any(lo):
        x[lo] = _acklam_tail(np.sqrt(-2.0 * np.log(u[lo])))
    if np.any(hi):
        x[hi] = -_acklam_tail(np.sqrt(-2.0 * np.log(1.0 - u[hi])))
    return x


def inverse_normal_cdf(u):
    """Quantile of the standard normal: Phi^{-1}(u) for u in (0, 1)."""
    arr = np.asarray(u, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("inverse normal CDF needs arguments strictly in (0, 1)")
    # reflect the upper half: 1-u is exact for u >= 0.5, and the lower-tail
    # CDF evaluation keeps full relative precision in the Halley step
    flip = arr > 0.5
    arr[flip] = 1.0 - arr[flip]
    x = _acklam(arr)
    # one Halley step: e = Phi(x) - u, x <- x - t / (1 + x t / 2); skipped
    # in the far tail where exp(x^2/2) would overflow (|x| > 8 is already
    # far outside the documented accuracy window)
    ref = np.abs(x) <= 8.0
    if np.any(ref):
        xr = x[ref]
        e = 0.5 * _erfc(-xr / math.sqrt(2.0)) - arr[ref]
        t = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * xr * xr)
        x[ref] = xr - t / (1.0 + 0.5 * xr * t)
    x[flip] = -x[flip]
    return float(x[0]) if scalar else x
