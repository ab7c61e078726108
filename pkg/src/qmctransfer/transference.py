"""Oversample-and-halve driver: balanced colorings on weighted dyadic
incidence vectors turn one large population into many low-discrepancy sets.

One run draws a single random shift, builds each point's incidence vector
once (a per-node one-hot identity coordinate is appended on the fly), and
then walks a binary splitting tree: every node's points are paired, signed
by the balanced-coloring walk, and partitioned by sign.  After
``T = log2(oversample_k)`` levels the ``k`` leaves each hold exactly ``n``
points.  The full audit trail (shift, per-node colorings, lineage) is
returned alongside the leaf sets.

Leaf order follows the split indexing ``minus -> 2i``, ``plus -> 2i + 1``,
so leaf index bits read the sign path from the first split (most
significant) down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from ._backend import walk_pairs_uniform
from .balance import Coloring, WalkConfig, WalkFailure, expand_pair_signs
from .dyadic import (
    SparseIncidence,
    WeightProfile,
    default_h,
    incidence_pattern,
    norm_bound_sq,
)
from .pointset import PointSet, PointSetMeta, read_pointset
from .regions import Region
from .sampling import Rng, derive_seed, iid_uniform, sobol, SobolSpec, DigitalShift, Owen

# above this many boxes, walk coordinates are remapped to the occupied set
_DENSE_CAP = 1 << 22


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class IIDInit:
    seed: int = 0


@dataclass(frozen=True)
class SobolInit:
    seed: int = 0
    scramble: str = "none"  # "none" | "digital" | "owen"

    def __post_init__(self):
        if self.scramble not in ("none", "digital", "owen"):
            raise ValueError(f"unknown scramble {self.scramble!r}")


@dataclass(frozen=True)
class ExternalInit:
    path: str


@dataclass(frozen=True)
class TransferenceConfig:
    n: int
    d: int
    profile: WeightProfile
    oversample_k: int = 16
    h_override: int | None = None
    init: IIDInit | SobolInit | ExternalInit = IIDInit(0)
    walk: WalkConfig = field(default_factory=WalkConfig)
    shift_seed: int = 0
    # explicit shift instead of drawing from shift_seed; the all-zero shift
    # runs the construction on the unshifted dyadic system
    shift_override: tuple[float, ...] | None = None

    def __post_init__(self):
        if not _is_pow2(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if not _is_pow2(self.oversample_k):
            raise ValueError(
                f"oversample_k must be a power of two, got {self.oversample_k}"
            )
        if self.profile.d != self.d:
            raise ValueError("profile dimension disagrees with d")
        if self.shift_override is not None:
            s = tuple(float(v) for v in self.shift_override)
            if len(s) != self.d or any(not 0.0 <= v < 1.0 for v in s):
                raise ValueError("shift_override must be d values in [0, 1)")
            object.__setattr__(self, "shift_override", s)

    @property
    def n0(self) -> int:
        return self.n * self.oversample_k

    @property
    def levels(self) -> int:
        return int(math.log2(self.oversample_k))

    @property
    def h(self) -> int:
        if self.h_override is not None:
            return self.h_override
        return default_h(self.n, self.d, self.profile.mode.s_eff)


@dataclass
class TrailNode:
    t: int
    i: int
    point_indices: np.ndarray  # indices into the initial population
    signs: np.ndarray  # int8 per point, aligned with point_indices


class TransferenceTrail:
    """Audit record of one run: shift, per-node colorings, leaf lineage."""

    def __init__(self, config: TransferenceConfig, shift: np.ndarray,
                 initial_points: np.ndarray):
        self.config = config
        self.shift = shift
        self.initial_points = initial_points
        self.n0 = config.n0
        self.T = config.levels
        self.nodes: dict[tuple[int, int], TrailNode] = {}
        self.leaves: list[np.ndarray] = []

    def node(self, t: int, i: int) -> TrailNode:
        try:
            return self.nodes[(t, i)]
        except KeyError:
            raise KeyError(f"no recorded node (t={t}, i={i})") from None

    def nominal_size(self, t: int) -> int:
        return self.n0 >> t

    def leaf_point_indices(self, leaf: int) -> np.ndarray:
        if not 0 <= leaf < len(self.leaves):
            raise IndexError(f"leaf {leaf} out of range [0, {len(self.leaves)})")
        return self.leaves[leaf]

    def lineage(self, leaf: int) -> list[tuple[int, int, int]]:
        """Path root->leaf as (t, node index, sigma_t).

        sigma_t is +1 when the lineage took the minus child at level t and
        -1 otherwise: the minus child inherits ``h + disc/n_t``, the plus
        child the negated increment.
        """
        if not 0 <= leaf < len(self.leaves):
            raise IndexError(f"leaf {leaf} out of range [0, {len(self.leaves)})")
        out = []
        for t in range(self.T):
            i = leaf >> (self.T - t)
            took_plus = (leaf >> (self.T - 1 - t)) & 1
            out.append((t, i, -1 if took_plus else 1))
        return out


def draw_shift(config: TransferenceConfig) -> np.ndarray:
    if config.shift_override is not None:
        return np.asarray(config.shift_override, dtype=np.float64)
    return Rng(config.shift_seed).uniform(config.d)


def initial_points(config: TransferenceConfig) -> PointSet:
    n0, d = config.n0, config.d
    init = config.init
    if isinstance(init, IIDInit):
        ps = iid_uniform(n0, d, init.seed)
    elif isinstance(init, SobolInit):
        scramble = {
            "none": None,
            "digital": DigitalShift(init.seed),
            "owen": Owen(init.seed),
        }[init.scramble]
        ps = sobol(n0, d, SobolSpec(d=d, scramble=scramble))
    else:
        ps = read_pointset(init.path)
        if ps.n != n0 or ps.d != d:
            raise ValueError(
                f"external init has {ps.n} x {ps.d} points, "
                f"run needs {n0} x {d}"
            )
    return ps


def _packed_incidence(config: TransferenceConfig, points: np.ndarray,
                      shift: np.ndarray):
    """Per-point walk rows: remapped box columns plus an identity column.

    Identity coordinates are conceptually re-indexed per node; since each
    point belongs to exactly one node per level, giving every point a
    globally unique identity coordinate is equivalent and lets the packed
    matrix be built once per run.
    """
    pat = incidence_pattern(points, config.h, config.profile, shift)
    n0 = points.shape[0]
    if pat.space <= _DENSE_CAP:
        ids = pat.ids
        width = pat.space
    else:
        uniq, dense = np.unique(pat.ids, return_inverse=True)
        ids = dense.reshape(pat.ids.shape).astype(np.int64)
        width = len(uniq)
    norm = math.sqrt(1.0 + norm_bound_sq(config.h, config.profile))
    ids_full = np.hstack([ids, (width + np.arange(n0, dtype=np.int64))[:, None]])
    colw = np.concatenate([pat.col_weights, [1.0]]) / norm
    return np.ascontiguousarray(ids_full), colw, width + n0


def run(config: TransferenceConfig) -> tuple[list[PointSet], TransferenceTrail]:
    """Execute one full transference run; deterministic given the config."""
    shift = draw_shift(config)
    init_ps = initial_points(config)
    points = init_ps.points
    trail = TransferenceTrail(config, shift, points)

    ids, colw, _ = _packed_incidence(config, points, shift)
    wacc = np.zeros(int(ids.max()) + 1 if ids.size else 1, dtype=np.float64)
    greedy = config.walk.lambda_mode == "greedy"
    box_space = incidence_space(config)

    level_nodes: list[np.ndarray] = [np.arange(config.n0, dtype=np.int64)]
    for t in range(config.levels):
        next_nodes: list[np.ndarray] = []
        for i, order in enumerate(level_nodes):
            n_t = len(order)
            lam = config.walk.lambda_for(n_t // 2, m=n_t + box_space)
            pair_signs = np.zeros(n_t // 2, dtype=np.int8)
            seed = derive_seed(config.walk.rng_seed, t, i)
            fail = walk_pairs_uniform(
                ids, colw, order, wacc, lam, greedy,
                config.walk.lambda_mode == "strict",
                np.uint64(seed & ((1 << 64) - 1)), pair_signs,
            )
            if fail >= 0:
                raise WalkFailure(
                    fail, f"strict walk failed at node (t={t}, i={i}), pair {fail}"
                )
            signs = expand_pair_signs(pair_signs)
            trail.nodes[(t, i)] = TrailNode(t, i, order, signs)
            next_nodes.append(order[signs == -1])
            next_nodes.append(order[signs == 1])
        level_nodes = next_nodes

    trail.leaves = level_nodes
    leaves = []
    for idx, order in enumerate(level_nodes):
        meta = PointSetMeta(
            d=config.d, n=len(order), seed=config.walk.rng_seed,
            label=f"{init_ps.meta.label}-transfer-{idx}",
        )
        leaves.append(PointSet(points[order], meta))
    return leaves, trail


def incidence_space(config: TransferenceConfig) -> int:
    """Number of boxes in the run's ambient incidence collection."""
    from .dyadic import box_count

    return box_count(config.d, config.h, config.profile.mode)


def incidence_block(
    point_set: PointSet, config: TransferenceConfig, shift: np.ndarray | None = None
) -> list[SparseIncidence]:
    """Per-point incidence vectors with the one-hot identity coordinate.

    Identity coordinates occupy indices ``space + j`` for position ``j``
    within the block, a disjoint range re-used per node.
    """
    if shift is None:
        shift = draw_shift(config)
    pat = incidence_pattern(point_set.points, config.h, config.profile, shift)
    out = []
    for j in range(point_set.n):
        entries = {int(b): float(w) for b, w in zip(pat.ids[j], pat.col_weights)}
        entries[pat.space + j] = 1.0
        out.append(SparseIncidence(entries, pat.space + point_set.n))
    return out


def combinatorial_disc(
    trail: TransferenceTrail, region: Region, t: int, i: int,
    in_shifted_system: bool = False,
) -> int:
    """Signed count (#+1 minus #-1) of the node's points inside the region.

    With ``in_shifted_system`` the region is interpreted in the shifted
    dyadic system, i.e. membership is evaluated on the folded points
    ``(x - shift) mod 1``.
    """
    node = trail.node(t, i)
    pts = trail.initial_points[node.point_indices]
    if in_shifted_system:
        pts = (pts - trail.shift) % 1.0
        pts[pts >= 1.0] = 0.0
    member = region.contains(pts)
    return int(node.signs[member].sum())


def node_coloring(trail: TransferenceTrail, t: int, i: int) -> Coloring:
    return Coloring(trail.node(t, i).signs.copy(), balanced=True)


def continuous_disc(
    points: np.ndarray, region: Region, nominal_n: int, exact: bool = False
):
    """h(C) = vol(C) - |C cap A| / n with the run's nominal n."""
    count = int(region.contains(points).sum())
    if exact:
        return region.volume(exact=True) - Fraction(count, nominal_n)
    return region.volume() - count / nominal_n


def fold_points(points: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """Points as seen by the shifted dyadic system: (x - shift) mod 1.

    Run outputs are never shifted; folding is a view for consumers that
    want the points in the shifted system's coordinates (uniformity
    measured there matches constructions that carry the shift on the
    points themselves).
    """
    folded = (np.asarray(points, dtype=np.float64) - shift) % 1.0
    folded[folded >= 1.0] = 0.0
    return folded
