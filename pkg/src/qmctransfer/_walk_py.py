"""Pure-Python fallback for the walk kernels in ``_walk_cy``.

Mirrors the compiled code statement for statement: same floating-point
accumulation order, same splitmix64 draw discipline.  Identical inputs
produce bit-identical colorings on both backends; this module is merely
slower.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_PHI = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class _SplitMix:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_uniform(self) -> float:
        self.state = (self.state + _PHI) & _MASK
        return float(_mix64(self.state) >> 11) * _INV53


def _choose_sign(dot: float, lam: float, greedy: bool, rng: _SplitMix) -> int:
    if greedy and (dot > lam or dot < -lam):
        return -1 if dot > 0 else 1
    p = 0.5 - dot / (2.0 * lam)
    if p < 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    return 1 if rng.next_uniform() < p else -1


def walk_pairs_uniform(ids, colw, order, wacc, lam, greedy, strict, seed, signs):
    npairs = len(order) // 2
    P = ids.shape[1]
    rng = _SplitMix(seed)
    wmax_seen = 0.0
    fail = -1

    for i in range(npairs):
        a = order[2 * i]
        b = order[2 * i + 1]
        row_a = ids[a]
        row_b = ids[b]
        dot = 0.0
        for p in range(P):
            dot += colw[p] * wacc[row_a[p]]
        for p in range(P):
            dot -= colw[p] * wacc[row_b[p]]
        if strict:
            if dot > lam or dot < -lam:
                fail = i
                break
            if wmax_seen > lam:
                cur = 0.0
                for r in range(2 * i):
                    row = ids[order[r]]
                    for p in range(P):
                        w = abs(wacc[row[p]])
                        if w > cur:
                            cur = w
                wmax_seen = cur
                if cur > lam:
                    fail = i
                    break
        c = _choose_sign(dot, lam, greedy, rng)
        signs[i] = c
        for p in range(P):
            wacc[row_a[p]] += c * colw[p]
            w = abs(wacc[row_a[p]])
            if w > wmax_seen:
                wmax_seen = w
        for p in range(P):
            wacc[row_b[p]] -= c * colw[p]
            w = abs(wacc[row_b[p]])
            if w > wmax_seen:
                wmax_seen = w

    for r in range(len(order)):
        row = ids[order[r]]
        for p in range(P):
            wacc[row[p]] = 0.0
    return fail


def walk_stream_csr(indptr, idx, vals, wacc, lam, greedy, strict, seed, signs):
    n = len(indptr) - 1
    rng = _SplitMix(seed)
    wmax_seen = 0.0
    fail = -1

    for j in range(n):
        dot = 0.0
        for p in range(indptr[j], indptr[j + 1]):
            dot += vals[p] * wacc[idx[p]]
        if strict:
            if dot > lam or dot < -lam:
                fail = j
                break
            if wmax_seen > lam:
                cur = 0.0
                for p in range(indptr[j]):
                    w = abs(wacc[idx[p]])
                    if w > cur:
                        cur = w
                wmax_seen = cur
                if cur > lam:
                    fail = j
                    break
        c = _choose_sign(dot, lam, greedy, rng)
        signs[j] = c
        for p in range(indptr[j], indptr[j + 1]):
            wacc[idx[p]] += c * vals[p]
            w = abs(wacc[idx[p]])
            if w > wmax_seen:
                wmax_seen = w

    for p in range(indptr[n]):
        wacc[idx[p]] = 0.0
    return fail
