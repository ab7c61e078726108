import math

import numpy as np
import pytest

from qmctransfer.dyadic import (
    FULL,
    DimensionMismatchError,
    DyadicBox,
    IndexSpaceOverflowError,
    SparseIncidence,
    WeightProfile,
    box_count,
    box_from_index,
    box_index,
    box_weight,
    enumerate_boxes,
    incidence,
    incidence_pattern,
    locate,
    norm_bound_sq,
    superposition,
    truncation,
)


def dyadic_gammas(rng, d, denom=64):
    """Non-increasing weights on the 1/denom grid: keeps the norm identity
    exact in floats (all products stay well inside 53 bits)."""
    g = np.sort(rng.integers(1, denom + 1, size=d))[::-1] / denom
    return tuple(g)


# ---------------------------------------------------------------------------
# locate
# ---------------------------------------------------------------------------


def test_locate_examples():
    assert locate(0.3, 2) == 1
    assert locate(0.0, 5) == 0
    assert locate(0.999, 1) == 1


def test_locate_domain():
    with pytest.raises(ValueError):
        locate(1.0, 1)
    with pytest.raises(ValueError):
        locate(-0.1, 1)


# ---------------------------------------------------------------------------
# box weights
# ---------------------------------------------------------------------------


def test_box_weight_examples():
    profile = WeightProfile.full((0.5, 0.25))
    box = DyadicBox(((0, 0), (1, 0)))  # (0,1] x (0,1/2]
    assert box_weight(box, profile) == 0.25

    trivial = DyadicBox(((0, 0), (0, 0)))
    assert box_weight(trivial, profile) == 1.0

    unit = WeightProfile.unit(3)
    anybox = DyadicBox(((2, 3), (0, 0), (1, 1)))
    assert box_weight(anybox, unit) == 1.0


def test_box_weight_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        box_weight(DyadicBox(((0, 0),)), WeightProfile.unit(2))


def test_weight_profile_validation():
    with pytest.raises(ValueError):
        WeightProfile.full((0.5, 1.0))  # increasing
    with pytest.raises(ValueError):
        WeightProfile.full((-0.5,))
    trunc = WeightProfile.truncation(5, 2)
    assert trunc.gammas == (1.0, 1.0, 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# enumeration and indexing
# ---------------------------------------------------------------------------


def test_enumerate_d1_h1():
    boxes = list(enumerate_boxes(1, 1, FULL))
    assert [b.intervals()[0] for b in boxes] == [(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)]


def test_box_counts_examples():
    assert box_count(1, 1, FULL) == 3
    assert box_count(2, 1, superposition(1)) == 5
    assert box_count(2, 0, FULL) == 1
    # count formulas
    for d, h in [(2, 3), (3, 2)]:
        r = 2 ** (h + 1) - 1
        assert box_count(d, h, FULL) == r**d
        for s in range(1, d + 1):
            assert box_count(d, h, truncation(s)) == r**s
            expect = sum(
                math.comb(d, k) * (r - 1) ** k for k in range(s + 1)
            )
            assert box_count(d, h, superposition(s)) == expect


@pytest.mark.parametrize(
    "d,h,mode",
    [(1, 2, FULL), (2, 1, FULL), (2, 2, superposition(1)),
     (3, 1, superposition(2)), (3, 2, truncation(2))],
)
def test_index_bijection(d, h, mode):
    seen = set()
    for i, box in enumerate(enumerate_boxes(d, h, mode)):
        assert box_index(box, h, mode) == i
        assert box_from_index(i, d, h, mode) == box
        seen.add(box)
    assert len(seen) == box_count(d, h, mode)


def test_enumerate_overflow_before_allocation():
    # (2^10 - 1)^8 ~ 1.2e24 does not fit 64 bits
    with pytest.raises(IndexSpaceOverflowError):
        enumerate_boxes(8, 9, FULL)


# ---------------------------------------------------------------------------
# incidence
# ---------------------------------------------------------------------------


def test_incidence_d1_h2_example():
    inc = incidence([0.3], 2, WeightProfile.unit(1))
    assert inc.nnz == 3
    assert inc.norm_sq() == 3.0  # 1 + h
    boxes = {box_index(DyadicBox(((0, 0),)), 2, FULL),
             box_index(DyadicBox(((1, 0),)), 2, FULL),
             box_index(DyadicBox(((2, 1),)), 2, FULL)}
    assert set(inc.entries) == boxes
    assert all(w == 1.0 for w in inc.entries.values())


def test_incidence_d2_h1_example():
    inc = incidence([0.3, 0.7], 1, WeightProfile.unit(2))
    assert inc.nnz == 4
    assert inc.norm_sq() == 4.0  # (1 + h)^2
    expected = {
        DyadicBox(((0, 0), (0, 0))),
        DyadicBox(((1, 0), (0, 0))),
        DyadicBox(((0, 0), (1, 1))),
        DyadicBox(((1, 0), (1, 1))),
    }
    assert set(inc.entries) == {box_index(b, 1, FULL) for b in expected}


def test_incidence_shift_folding():
    inc = incidence([0.1], 1, WeightProfile.unit(1), shift=[0.25])
    # folded point is 0.85: trivial box and (1/2, 1]
    expected = {box_index(DyadicBox(((0, 0),)), 1, FULL),
                box_index(DyadicBox(((1, 1),)), 1, FULL)}
    assert set(inc.entries) == expected


def test_incidence_rejects_out_of_range():
    with pytest.raises(ValueError):
        incidence([1.0], 1, WeightProfile.unit(1))


def test_norm_identity_exact_for_dyadic_weights():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = int(rng.integers(1, 5))
        h = int(rng.integers(1, 7))
        profile = WeightProfile.full(dyadic_gammas(rng, d))
        point = rng.random(d)
        shift = rng.random(d)
        inc = incidence(point, h, profile, shift)
        assert math.fsum(w * w for w in inc.entries.values()) == norm_bound_sq(h, profile)


def test_norm_identity_float_tolerance_generic_weights():
    rng = np.random.default_rng(12)
    for _ in range(50):
        d = int(rng.integers(1, 5))
        h = int(rng.integers(1, 7))
        g = tuple(np.sort(rng.random(d))[::-1])
        profile = WeightProfile.full(g)
        inc = incidence(rng.random(d), h, profile, rng.random(d))
        target = norm_bound_sq(h, profile)
        assert math.fsum(w * w for w in inc.entries.values()) == pytest.approx(
            target, rel=1e-12
        )


def test_superposition_count():
    rng = np.random.default_rng(13)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        s = int(rng.integers(1, min(d, 3) + 1))
        h = int(rng.integers(1, 5))
        inc = incidence(rng.random(d), h, WeightProfile.superposition(d, s))
        expect = sum(math.comb(d, k) * h**k for k in range(s + 1))
        assert inc.nnz == expect


def test_truncation_equals_full_on_prefix():
    rng = np.random.default_rng(14)
    for _ in range(25):
        d = int(rng.integers(3, 8))
        s = int(rng.integers(1, 4))
        h = int(rng.integers(1, 5))
        p = rng.random(d)
        shift = rng.random(d)
        trunc = incidence(p, h, WeightProfile.truncation(d, s), shift)
        full = incidence(p[:s], h, WeightProfile.unit(s), shift[:s])
        assert trunc.entries == full.entries
        assert trunc.dimension_count == full.dimension_count


def test_shift_equivalence():
    rng = np.random.default_rng(15)
    for _ in range(25):
        d = int(rng.integers(1, 4))
        h = int(rng.integers(1, 5))
        profile = WeightProfile.full(dyadic_gammas(rng, d))
        p, shift = rng.random(d), rng.random(d)
        a = incidence(p, h, profile, shift)
        b = incidence((p - shift) % 1.0, h, profile, np.zeros(d))
        assert a.entries == b.entries


def test_pattern_matches_per_point_incidence():
    rng = np.random.default_rng(16)
    for mode in (FULL, superposition(2), truncation(2)):
        d = 4
        profile = (WeightProfile.truncation(d, 2) if mode.kind == "truncation"
                   else WeightProfile((1.0, 0.75, 0.5, 0.5), mode))
        pts = rng.random((6, d))
        shift = rng.random(d)
        pat = incidence_pattern(pts, 3, profile, shift)
        for r in range(6):
            inc = incidence(pts[r], 3, profile, shift)
            assert inc.entries == {
                int(i): w for i, w in zip(pat.ids[r], pat.col_weights)
            }


def test_sparse_incidence_rejects_nonpositive_weights():
    with pytest.raises(ValueError):
        SparseIncidence({0: 0.0}, 3)
