from fractions import Fraction

import numpy as np
import pytest

from dhl.cover import (CoverResult, VParallelogram, density, exact_overlap,
                       intervals_intersect, interval_distance,
                       overlap_statistics, packing_check, rasterize,
                       rects_from_jsonl, rects_to_jsonl, select_cover,
                       seven_r_nesting, slope_gap_overlap_bound,
                       vertical_maximal, window_separation)


def rect(i_left, i_len, slope, cy, h):
    return VParallelogram(Fraction(i_left), Fraction(i_len), Fraction(slope),
                          Fraction(cy), Fraction(h))


FAT = rect("1/4", "1/2", 0, "1/2", "1/4")


def test_parallelogram_geometry():
    R = rect(0, "1/2", "1/2", "1/2", "1/4")
    assert R.area == Fraction(1, 8)
    lo, hi = R.uncertainty()
    assert (lo, hi) == (Fraction(1, 2) - Fraction(1, 2),
                        Fraction(1, 2) + Fraction(1, 2))
    big = R.dilate_height(7)
    assert big.height == 7 * R.height and big.I_len == R.I_len
    both = R.dilate_both(3)
    assert both.I_len == 3 * R.I_len and both.height == 3 * R.height


def test_interval_helpers():
    assert intervals_intersect((0, 1), (1, 2))
    assert not intervals_intersect((0, 1), (Fraction(3, 2), 2))
    assert interval_distance((0, 1), (2, 3)) == 1


def test_rasterize_area():
    shape = (64, 64)
    cells = rasterize(FAT, shape).sum()
    assert cells / (64 * 64) == pytest.approx(float(FAT.area), abs=0.02)


def test_vertical_maximal_dominates():
    rng = np.random.default_rng(0)
    a = np.abs(rng.standard_normal((16, 16)))
    assert np.all(vertical_maximal(a) >= a - 1e-12)


def test_select_cover_duplicates_prune_to_one():
    rects = [FAT] * 5
    res = select_cover(rects, (64, 64))
    assert len(res.selected) == 1
    assert len(res.pruned) == 4


def test_select_cover_deterministic_json():
    rng = np.random.default_rng(1)
    def batch():
        rs = []
        for _ in range(10):
            il = Fraction(int(rng.integers(0, 16)), 32)
            ln = Fraction(int(rng.integers(4, 16)), 32)
            sl = Fraction(int(rng.integers(-4, 5)), 16)
            cy = Fraction(int(rng.integers(0, 32)), 32)
            h = Fraction(int(rng.integers(2, 8)), 32)
            rs.append(VParallelogram(il, ln, sl, cy, h))
        return rs
    rects = batch()
    a = select_cover(list(rects), (64, 64)).to_json()
    b = select_cover(list(reversed(rects)), (64, 64)).to_json()
    assert a == b      # input order cannot matter


def test_select_cover_mode_validation():
    with pytest.raises(ValueError):
        select_cover([FAT], (32, 32), mode="bogus")
    with pytest.raises(ValueError):
        select_cover([FAT], (32, 32), mode="lipschitz_kakeya")
    u = np.zeros((32, 32))
    with pytest.raises(ValueError):
        select_cover([FAT], (32, 32), mode="lipschitz_kakeya", u=u, delta=2.0)
    with pytest.raises(ValueError):
        select_cover([FAT], (32, 32), mode="lipschitz_kakeya",
                     u=np.full((32, 32), 2.0), delta=0.5)


def test_select_cover_lipschitz_bound_enforced():
    # direction field with lip(u) * |I| > 1/30
    n = 32
    u = 0.5 * np.sin(2 * np.pi * np.arange(n) / n)[:, None] * np.ones((1, n))
    with pytest.raises(ValueError, match="1/30"):
        select_cover([FAT], (n, n), mode="lipschitz_kakeya", u=u, delta=0.1)


def test_select_cover_density_requirement():
    n = 64
    u = np.full((n, n), 0.9)      # far from slope 0: E(R) empty
    with pytest.raises(ValueError, match="density"):
        select_cover([FAT], (n, n), mode="lipschitz_kakeya", u=u, delta=0.5)
    # caller-supplied density overrides the raster estimate
    res = select_cover([FAT], (n, n), mode="lipschitz_kakeya", u=u,
                       delta=0.5, densities={FAT: 0.9})
    assert res.selected == [FAT]


def test_density_matches_raster():
    n = 64
    u = np.zeros((n, n))
    assert density(FAT, u, (n, n)) == pytest.approx(1.0)


def test_packing_check_single():
    res = select_cover([FAT], (32, 32))
    out = packing_check(res)
    assert out["holds"] and out["worst_ratio"] == 0


def test_packing_check_parallel_disjoint():
    rects = [rect("1/4", "1/2", 0, Fraction(1, 4) + k * Fraction(1, 8), "1/16")
             for k in range(4)]
    res = CoverResult(rects, [], 1e-4, (64, 64))
    out = packing_check(res)
    assert isinstance(out["holds"], bool)
    assert out["worst_ratio"] >= 0


def test_exact_overlap_identsical():
    assert exact_overlap(FAT, FAT) == FAT.area


def test_seven_r_nesting_contained():
    small = rect("3/8", "1/4", 0, "1/2", "1/32")
    out = seven_r_nesting(small, FAT)
    assert isinstance(out, dict)


def test_slope_gap_bound():
    a = rect("1/4", "1/2", 0, "1/2", "1/32")
    b = rect("1/4", "1/2", "1/2", "1/2", "1/32")
    out = slope_gap_overlap_bound(a, b)
    if not out["vacuous"]:
        assert exact_overlap(a, b) <= out["bound"] + Fraction(1, 10 ** 12)


def test_window_separation_keys():
    a = rect("1/4", "1/2", 0, "1/2", "1/32")
    b = rect("1/4", "1/2", "1/2", "1/2", "1/32")
    out = window_separation(a, b)
    assert isinstance(out, dict)


def test_overlap_statistics_totals():
    rects = [FAT, rect("1/4", "1/2", 0, "9/16", "1/4")]
    out = overlap_statistics(rects, shape=(64, 64))
    assert out["total_area"] == 2 * FAT.area
    assert out["pairs"]        # the two overlap
    assert out["raster_moments"][1] == pytest.approx(2 * float(FAT.area),
                                                     abs=0.03)


def test_rects_jsonl_roundtrip(tmp_path):
    rects = [FAT, rect("1/8", "3/4", "-1/4", "1/3", "1/16")]
    path = tmp_path / "rects.jsonl"
    rects_to_jsonl(rects, path)
    assert rects_from_jsonl(path) == rects
