"""Online vector balancing: the self-balancing walk and balanced colorings.

The walk assigns each incoming vector a sign, sampled with probability
``1/2 - <w, v>/(2*lambda)`` (clamped to [0, 1]) where ``w`` is the running
signed sum.  Two lambda regimes are supported:

* strict  -- ``lambda = 30 * ln(m * n / delta)``; the walk raises
  :class:`WalkFailure` if ``|<w, v>|`` or ``||w||_inf`` ever exceeds lambda.
* greedy  -- a small fixed lambda (default 1e-3); when ``|<w, v>| > lambda``
  the sign is forced to ``-sign(<w, v>)`` deterministically.

Balanced colorings are obtained by walking the difference vectors of
consecutive pairs; a pair sign +1 expands to (+1, -1), so the expanded
coloring always sums to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import walk_stream_csr
from .dyadic import SparseIncidence
from .sampling import derive_seed

DEFAULT_GREEDY_LAMBDA = 1e-3


class WalkFailure(RuntimeError):
    """Strict-mode walk violated its lambda bound at ``step``."""

    def __init__(self, step: int, what: str):
        self.step = step
        super().__init__(f"self-balancing walk failed at step {step}: {what}")


@dataclass(frozen=True)
class WalkConfig:
    """Walk regime, ambient dimension (strict lambda only), and seed."""

    lambda_mode: str = "greedy"  # "greedy" | "strict"
    lam: float = DEFAULT_GREEDY_LAMBDA  # greedy lambda
    delta: float = 0.01  # strict failure probability budget
    m: int | None = None  # ambient incidence dimension for strict lambda
    rng_seed: int = 0
    pre_shuffle: bool = False  # shuffle vectors before pairing

    def __post_init__(self):
        if self.lambda_mode not in ("greedy", "strict"):
            raise ValueError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.lambda_mode == "greedy" and self.lam <= 0:
            raise ValueError("greedy lambda must be positive")
        if self.lambda_mode == "strict" and not 0 < self.delta < 1:
            raise ValueError("strict delta must lie in (0, 1)")

    def lambda_for(self, n_vectors: int, m: int | None = None) -> float:
        """Effective lambda for a walk over ``n_vectors`` vectors."""
        if self.lambda_mode == "greedy":
            return self.lam
        m_eff = m if m is not None else self.m
        if m_eff is None:
            raise ValueError("strict mode needs the ambient dimension m")
        return 30.0 * math.log(m_eff * max(n_vectors, 1) / self.delta)


@dataclass
class Coloring:
    """A +-1 assignment; ``balanced`` guarantees the signs sum to zero."""

    signs: np.ndarray  # int8
    balanced: bool

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int8)
        if s.size and not np.all((s == 1) | (s == -1)):
            raise ValueError("signs must be +-1")
        if self.balanced and int(s.sum()) != 0:
            raise ValueError("balanced coloring must sum to zero")
        self.signs = s


def _pack_csr(vectors: Sequence[SparseIncidence]):
    """Concatenate sparse vectors to CSR with densely remapped coordinates."""
    counts = [v.nnz for v in vectors]
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    raw = np.empty(indptr[-1], dtype=np.int64)
    vals = np.empty(indptr[-1], dtype=np.float64)
    pos = 0
    for v in vectors:
        for key, w in v.entries.items():
            raw[pos] = key
            vals[pos] = w
            pos += 1
    uniq, dense = np.unique(raw, return_inverse=True)
    return indptr, dense.astype(np.int64), vals, len(uniq)


def _resolve_seed(config: WalkConfig, rng) -> int:
    if rng is None:
        return config.rng_seed
    if isinstance(rng, int):
        return rng
    return int(rng.seed)  # Rng-like


def self_balancing_walk(
    vectors: Sequence[SparseIncidence], config: WalkConfig, rng=None
) -> Coloring:
    """Sign each vector online; returns an (unbalanced) coloring.

    The caller is responsible for pre-normalizing the vectors to the norm
    bound its lambda regime assumes.
    """
    if not vectors:
        return Coloring(np.empty(0, dtype=np.int8), balanced=False)
    dim = vectors[0].dimension_count
    if any(v.dimension_count != dim for v in vectors):
        raise ValueError("vectors disagree on ambient dimension")
    indptr, idx, vals, nuniq = _pack_csr(vectors)
    lam = config.lambda_for(len(vectors))
    signs = np.zeros(len(vectors), dtype=np.int8)
    wacc = np.zeros(nuniq, dtype=np.float64)
    fail = walk_stream_csr(
        indptr, idx, vals, wacc, lam,
        config.lambda_mode == "greedy", config.lambda_mode == "strict",
        np.uint64(_resolve_seed(config, rng) & ((1 << 64) - 1)), signs,
    )
    if fail >= 0:
        raise WalkFailure(fail, "lambda bound exceeded")
    return Coloring(signs, balanced=False)


def expand_pair_signs(pair_signs: np.ndarray) -> np.ndarray:
    """Pair sign +1 -> (+1, -1); pair sign -1 -> (-1, +1)."""
    out = np.empty(2 * len(pair_signs), dtype=np.int8)
    out[0::2] = pair_signs
    out[1::2] = -pair_signs
    return out


def balanced_coloring(
    vectors: Sequence[SparseIncidence], config: WalkConfig, rng=None
) -> Coloring:
    """Balanced coloring via the walk on paired difference vectors."""
    n = len(vectors)
    if n % 2 != 0:
        raise ValueError(f"balanced coloring needs an even number of vectors, got {n}")
    if n == 0:
        return Coloring(np.empty(0, dtype=np.int8), balanced=True)
    dim = vectors[0].dimension_count
    if any(v.dimension_count != dim for v in vectors):
        raise ValueError("vectors disagree on ambient dimension")

    seed = _resolve_seed(config, rng)
    perm = np.arange(n)
    if config.pre_shuffle:
        shuffle_rng = np.random.default_rng(derive_seed(seed, 0x5F0F))
        perm = shuffle_rng.permutation(n)

    # difference vectors of consecutive pairs; duplicate coordinates between
    # the two halves are fine, the walk treats CSR entries additively
    diff_entries = []
    for i in range(n // 2):
        a, b = vectors[perm[2 * i]], vectors[perm[2 * i + 1]]
        keys = list(a.entries.items()) + [(k, -w) for k, w in b.entries.items()]
        diff_entries.append(keys)
    counts = [len(e) for e in diff_entries]
    indptr = np.zeros(n // 2 + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    raw = np.empty(indptr[-1], dtype=np.int64)
    vals = np.empty(indptr[-1], dtype=np.float64)
    pos = 0
    for entries in diff_entries:
        for k, w in entries:
            raw[pos] = k
            vals[pos] = w
            pos += 1
    uniq, dense = np.unique(raw, return_inverse=True)
    lam = config.lambda_for(n // 2)
    pair_signs = np.zeros(n // 2, dtype=np.int8)
    wacc = np.zeros(len(uniq), dtype=np.float64)
    fail = walk_stream_csr(
        indptr, dense.astype(np.int64), vals, wacc, lam,
        config.lambda_mode == "greedy", config.lambda_mode == "strict",
        np.uint64(seed & ((1 << 64) - 1)), pair_signs,
    )
    if fail >= 0:
        raise WalkFailure(fail, "lambda bound exceeded")
    expanded = expand_pair_signs(pair_signs)
    signs = np.empty(n, dtype=np.int8)
    signs[perm] = expanded
    return Coloring(signs, balanced=True)
