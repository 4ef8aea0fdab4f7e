from fractions import Fraction

import pytest

from dhl.geometry import (convex_clip, intersection_area, point_in_convex,
                          poly_area, union_area)


UNIT = [(0, 0), (1, 0), (1, 1), (0, 1)]


def shift(poly, dx, dy):
    return [(Fraction(x) + dx, Fraction(y) + dy) for x, y in poly]


def test_poly_area_triangle():
    tri = [(0, 0), (1, 0), (0, 1)]
    assert poly_area(tri) == Fraction(1, 2)


def test_poly_area_orientation_invariant():
    assert abs(poly_area(UNIT)) == abs(poly_area(UNIT[::-1])) == 1


def test_intersection_area_exact_fraction():
    a = intersection_area(UNIT, shift(UNIT, Fraction(1, 3), Fraction(1, 4)))
    assert a == Fraction(2, 3) * Fraction(3, 4)


def test_intersection_area_disjoint():
    assert intersection_area(UNIT, shift(UNIT, 5, 5)) == 0


def test_convex_clip_contains():
    small = [(Fraction(1, 4), Fraction(1, 4)), (Fraction(3, 4), Fraction(1, 4)),
             (Fraction(3, 4), Fraction(3, 4)), (Fraction(1, 4), Fraction(3, 4))]
    out = convex_clip(small, UNIT)
    assert abs(poly_area(out)) == Fraction(1, 4)


def test_union_area_overlapping_squares():
    u = union_area([UNIT, shift(UNIT, Fraction(1, 2), 0)])
    assert u == pytest.approx(1.5, abs=1e-9)


def test_point_in_convex():
    assert point_in_convex(UNIT, Fraction(1, 2), Fraction(1, 2))
    assert not point_in_convex(UNIT, 2, 0)
    # boundary counts as inside unless strict
    assert point_in_convex(UNIT, 0, 0)
    assert not point_in_convex(UNIT, 0, 0, strict=True)
