"""Exact rational polygon primitives plus float unions.

Pairwise intersections of convex polygons (parallelograms in practice) are
computed exactly over the rationals with Sutherland-Hodgman clipping; areas
of unions of many polygons go through shapely in floating point (dyadic
vertex coordinates are exactly representable, so only the boolean ops are
approximate).
"""

from __future__ import annotations

from fractions import Fraction

from shapely.geometry import Polygon
from shapely.ops import unary_union


def poly_area(pts) -> Fraction:
    """Shoelace area (positive for counterclockwise order) over the rationals."""
    n = len(pts)
    acc = Fraction(0)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        acc += Fraction(x1) * Fraction(y2) - Fraction(x2) * Fraction(y1)
    return abs(acc) / 2


def _is_ccw(pts) -> bool:
    acc = Fraction(0)
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        acc += Fraction(x1) * Fraction(y2) - Fraction(x2) * Fraction(y1)
    return acc > 0


def convex_clip(subject, clip):
    """Exact intersection of two convex polygons (lists of (Fraction, Fraction)).

    Returns the vertex list of the intersection (possibly empty).
    """
    subject = [(Fraction(x), Fraction(y)) for x, y in subject]
    clip = [(Fraction(x), Fraction(y)) for x, y in clip]
    if not _is_ccw(subject):
        subject = subject[::-1]
    if not _is_ccw(clip):
        clip = clip[::-1]
    out = subject
    n = len(clip)
    for i in range(n):
        if not out:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        # keep points with cross((b-a), (p-a)) >= 0 (left of directed edge)
        def side(p):
            return (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
        new = []
        m = len(out)
        for j in range(m):
            cur, nxt = out[j], out[(j + 1) % m]
            sc, sn = side(cur), side(nxt)
            if sc >= 0:
                new.append(cur)
            if (sc > 0 and sn < 0) or (sc < 0 and sn > 0):
                denom = sc - sn
                t = sc / denom
                new.append((cur[0] + t * (nxt[0] - cur[0]),
                            cur[1] + t * (nxt[1] - cur[1])))
        out = new
    # drop duplicate vertices
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup if len(dedup) >= 3 else []


def intersection_area(poly_a, poly_b) -> Fraction:
    inter = convex_clip(poly_a, poly_b)
    return poly_area(inter) if inter else Fraction(0)


def union_area(polys) -> float:
    """Float area of the union of polygons (vertex lists)."""
    shapes = [Polygon([(float(x), float(y)) for x, y in p]) for p in polys]
    shapes = [s if s.is_valid else s.buffer(0) for s in shapes]
    return float(unary_union(shapes).area)


def point_in_convex(pts, x, y, strict=False) -> bool:
    """Exact containment test for a convex CCW polygon."""
    pts = [(Fraction(px), Fraction(py)) for px, py in pts]
    if not _is_ccw(pts):
        pts = pts[::-1]
    x, y = Fraction(x), Fraction(y)
    n = len(pts)
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        s = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        if s < 0 or (strict and s == 0):
            return False
    return True
