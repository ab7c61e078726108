from fractions import Fraction

import numpy as np
import pytest

from qmctransfer.balance import WalkConfig
from qmctransfer.dyadic import WeightProfile, box_index, DyadicBox, FULL
from qmctransfer.pointset import PointSet, write_pointset
from qmctransfer.regions import Region, random_dyadic_regions
from qmctransfer.sampling import Rng, derive_seed
from qmctransfer.transference import (
    ExternalInit,
    IIDInit,
    TrailNode,
    TransferenceConfig,
    TransferenceTrail,
    combinatorial_disc,
    continuous_disc,
    incidence_block,
    run,
)


def make_config(n=8, d=2, k=16, mode="full", s_eff=None, seed=1, **kw):
    if mode == "full":
        profile = WeightProfile.unit(d)
    elif mode == "truncation":
        profile = WeightProfile.truncation(d, s_eff)
    else:
        profile = WeightProfile.superposition(d, s_eff)
    return TransferenceConfig(
        n=n, d=d, profile=profile, oversample_k=k,
        init=IIDInit(seed=derive_seed(seed, 1)),
        walk=WalkConfig(rng_seed=derive_seed(seed, 2)),
        shift_seed=derive_seed(seed, 3),
        **kw,
    )


def test_minimal_run_partitions_population():
    cfg = make_config(n=2, d=1, k=2, seed=7)
    leaves, trail = run(cfg)
    assert len(leaves) == 2
    assert all(leaf.n == 2 for leaf in leaves)
    combined = np.sort(np.concatenate([trail.leaf_point_indices(i) for i in (0, 1)]))
    assert np.array_equal(combined, np.arange(4))


@pytest.mark.parametrize(
    "n,d,k,mode,s_eff",
    [(8, 2, 16, "full", None), (4, 3, 8, "truncation", 2),
     (8, 3, 4, "superposition", 2), (16, 1, 4, "full", None)],
)
def test_partition_and_equal_sizes(n, d, k, mode, s_eff):
    leaves, trail = run(make_config(n, d, k, mode, s_eff, seed=3))
    assert len(leaves) == k
    assert all(leaf.n == n for leaf in leaves)
    combined = np.sort(np.concatenate(trail.leaves))
    assert np.array_equal(combined, np.arange(n * k))
    cube = Region.cube(d)
    for (t, i) in trail.nodes:
        assert combinatorial_disc(trail, cube, t, i) == 0


def test_identity_hand_traceable_exact():
    cfg = make_config(n=2, d=1, k=2, seed=11)
    _, trail = run(cfg)
    region = Region.corner([Fraction(1, 2)])
    for leaf in (0, 1):
        h_leaf = continuous_disc(
            trail.initial_points[trail.leaf_point_indices(leaf)],
            region, trail.nominal_size(trail.T), exact=True,
        )
        acc = continuous_disc(trail.initial_points, region, trail.n0, exact=True)
        for t, i, sigma in trail.lineage(leaf):
            acc += Fraction(sigma * combinatorial_disc(trail, region, t, i),
                            trail.nominal_size(t))
        assert h_leaf == acc


def test_identity_random_regions_float():
    from qmctransfer.metrics import transference_audit

    cfg = make_config(n=64, d=2, k=16, seed=5)
    leaves, trail = run(cfg)
    regions = random_dyadic_regions(2, 100, 6, Rng(44)) + [Region.cube(2)]
    worst = max(
        transference_audit(trail, leaf, regions) for leaf in range(len(leaves))
    )
    assert worst <= 1e-10


def test_leaf_lineage_signs():
    cfg = make_config(n=4, d=2, k=8, seed=9)
    _, trail = run(cfg)
    # leaf 0 always takes the minus child: sigma = +1 at every level
    assert [sig for _, _, sig in trail.lineage(0)] == [1, 1, 1]
    # last leaf always takes the plus child
    assert [sig for _, _, sig in trail.lineage(7)] == [-1, -1, -1]
    with pytest.raises(IndexError):
        trail.lineage(8)


def test_determinism_bit_identical():
    cfg = make_config(n=8, d=2, k=8, seed=13)
    leaves_a, trail_a = run(cfg)
    leaves_b, trail_b = run(cfg)
    for a, b in zip(leaves_a, leaves_b):
        assert np.array_equal(a.points, b.points)
    for key in trail_a.nodes:
        assert np.array_equal(trail_a.nodes[key].signs, trail_b.nodes[key].signs)


def test_shift_override():
    cfg = make_config(n=4, d=2, k=4, seed=2, shift_override=(0.0, 0.0))
    _, trail = run(cfg)
    assert np.array_equal(trail.shift, np.zeros(2))
    with pytest.raises(ValueError):
        make_config(n=4, d=2, k=4, shift_override=(0.5,))


def test_external_init_roundtrip(tmp_path):
    pts = Rng(3).uniform(8 * 2).reshape(8, 2)
    ps = PointSet.from_array(pts, seed=3, label="external")
    path = tmp_path / "init.txt"
    write_pointset(ps, path)
    cfg = TransferenceConfig(
        n=2, d=2, profile=WeightProfile.unit(2), oversample_k=4,
        init=ExternalInit(path=str(path)), walk=WalkConfig(rng_seed=1),
    )
    leaves, trail = run(cfg)
    assert np.array_equal(np.sort(np.concatenate(trail.leaves)), np.arange(8))

    bad = TransferenceConfig(
        n=4, d=2, profile=WeightProfile.unit(2), oversample_k=4,
        init=ExternalInit(path=str(path)), walk=WalkConfig(rng_seed=1),
    )
    with pytest.raises(ValueError):
        run(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        make_config(n=12)
    with pytest.raises(ValueError):
        make_config(k=3)
    with pytest.raises(ValueError):
        TransferenceConfig(n=4, d=3, profile=WeightProfile.unit(2))


def test_incidence_block_example_d1():
    cfg = TransferenceConfig(
        n=2, d=1, profile=WeightProfile.unit(1), oversample_k=1,
        h_override=1, shift_override=(0.0,),
    )
    ps = PointSet.from_array([[0.3], [0.8]])
    blocks = incidence_block(ps, cfg)
    trivial = box_index(DyadicBox(((0, 0),)), 1, FULL)
    lo = box_index(DyadicBox(((1, 0),)), 1, FULL)
    hi = box_index(DyadicBox(((1, 1),)), 1, FULL)
    assert blocks[0].entries == {trivial: 1.0, lo: 1.0, 3 + 0: 1.0}
    assert blocks[1].entries == {trivial: 1.0, hi: 1.0, 3 + 1: 1.0}
    assert blocks[0].norm_sq() == 3.0
    assert blocks[1].norm_sq() == 3.0


def test_incidence_block_truncation_and_superposition_counts():
    trunc_cfg = TransferenceConfig(
        n=2, d=3, profile=WeightProfile.truncation(3, 1), oversample_k=1,
        h_override=2, shift_override=(0.0, 0.0, 0.0),
    )
    blocks = incidence_block(PointSet.from_array([[0.3, 0.9, 0.1]]), trunc_cfg)
    assert blocks[0].nnz == 1 + (1 + 2)  # identity + (1 + h)

    sup_cfg = TransferenceConfig(
        n=2, d=2, profile=WeightProfile.superposition(2, 1), oversample_k=1,
        h_override=1, shift_override=(0.0, 0.0),
    )
    blocks = incidence_block(PointSet.from_array([[0.3, 0.7]]), sup_cfg)
    assert blocks[0].nnz == 4  # identity + trivial + two 1-dim boxes


def test_combinatorial_disc_direct_count():
    pts = np.array([[0.1], [0.9]])
    cfg = TransferenceConfig(n=1, d=1, profile=WeightProfile.unit(1),
                             oversample_k=2)
    trail = TransferenceTrail(cfg, np.zeros(1), pts)
    trail.nodes[(0, 0)] = TrailNode(0, 0, np.array([0, 1]),
                                    np.array([1, -1], dtype=np.int8))
    region = Region.corner([Fraction(1, 2)])
    assert combinatorial_disc(trail, region, 0, 0) == 1
    empty = Region(lows=(Fraction(1, 4),), highs=(Fraction(1, 4),))
    assert combinatorial_disc(trail, empty, 0, 0) == 0
    with pytest.raises(KeyError):
        combinatorial_disc(trail, region, 3, 0)


def test_disc_in_shifted_system():
    pts = np.array([[0.1], [0.9]])
    cfg = TransferenceConfig(n=1, d=1, profile=WeightProfile.unit(1),
                             oversample_k=2)
    trail = TransferenceTrail(cfg, np.array([0.25]), pts)
    trail.nodes[(0, 0)] = TrailNode(0, 0, np.array([0, 1]),
                                    np.array([1, -1], dtype=np.int8))
    region = Region.corner([Fraction(1, 2)])
    # folded points are 0.85 and 0.65: neither lies in (0, 1/2]
    assert combinatorial_disc(trail, region, 0, 0, in_shifted_system=True) == 0
    assert combinatorial_disc(trail, region, 0, 0) == 1


def test_strict_mode_run_end_to_end():
    cfg = TransferenceConfig(
        n=8, d=2, profile=WeightProfile.unit(2), oversample_k=8,
        init=IIDInit(seed=21),
        walk=WalkConfig(lambda_mode="strict", delta=0.01, rng_seed=22),
        shift_seed=23,
    )
    leaves, trail = run(cfg)
    assert len(leaves) == 8 and all(leaf.n == 8 for leaf in leaves)
    for (t, i), node in trail.nodes.items():
        assert int(node.signs.sum()) == 0
