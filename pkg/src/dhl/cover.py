"""Covering arguments for families of slanted parallelograms.

A parallelogram R has a dyadic-style horizontal shadow I, a slope, a
vertical center, and a vertical side length H; its uncertainty interval
U(R) is the slope window of width 2 H / |I| centered at the slope.  The
greedy covering pass selects parallelograms in decreasing shadow length
and prunes everything already covered, in the maximal-function sense, by
the vertically dilated selections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import intersection_area, point_in_convex
from .maximal import uncentered_maximal

PRUNE_THRESHOLD = 1e-4


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class VParallelogram:
    """Vertical parallelogram: fibers {x} x [c(x) - H/2, c(x) + H/2] over
    x in [I_left, I_left + I_len), where c(x) = center_y + slope*(x - x_mid).
    """
    I_left: Fraction
    I_len: Fraction
    slope: Fraction
    center_y: Fraction
    height: Fraction

    def __post_init__(self):
        for name in ("I_left", "I_len", "slope", "center_y", "height"):
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if self.I_len <= 0 or self.height <= 0:
            raise ValueError("degenerate parallelogram")

    @property
    def x_mid(self) -> Fraction:
        return self.I_left + self.I_len / 2

    @property
    def area(self) -> Fraction:
        return self.I_len * self.height

    def center_line(self, x) -> Fraction:
        return self.center_y + self.slope * (_frac(x) - self.x_mid)

    def corners(self):
        xl, xr = self.I_left, self.I_left + self.I_len
        h = self.height / 2
        return [(xl, self.center_line(xl) - h), (xr, self.center_line(xr) - h),
                (xr, self.center_line(xr) + h), (xl, self.center_line(xl) + h)]

    def uncertainty(self):
        """U(R): slopes s with some line of slope s crossing both vertical
        sides inside R; width 2 H / |I| centered at the slope."""
        half = self.height / self.I_len
        return (self.slope - half, self.slope + half)

    def dilate_height(self, factor) -> "VParallelogram":
        """kR in the vertical-only convention (shadow and slope kept)."""
        return VParallelogram(self.I_left, self.I_len, self.slope,
                              self.center_y, self.height * _frac(factor))

    def dilate_both(self, factor) -> "VParallelogram":
        """kR dilated about its center in both directions."""
        k = _frac(factor)
        return VParallelogram(self.x_mid - k * self.I_len / 2, k * self.I_len,
                              self.slope, self.center_y, self.height * k)

    def contains(self, x, y, strict: bool = False) -> bool:
        x, y = _frac(x), _frac(y)
        if strict:
            if not (self.I_left < x < self.I_left + self.I_len):
                return False
        elif not (self.I_left <= x < self.I_left + self.I_len):
            return False
        d = abs(y - self.center_line(x))
        return d < self.height / 2 if strict else d <= self.height / 2


def intervals_intersect(a, b) -> bool:
    return not (a[1] < b[0] or b[1] < a[0])


def interval_distance(a, b) -> Fraction:
    if intervals_intersect(a, b):
        return Fraction(0)
    return max(b[0] - a[1], a[0] - b[1])


# ---------------------------------------------------------------------------
# rasterization
# ---------------------------------------------------------------------------

def rasterize(R: VParallelogram, shape) -> np.ndarray:
    """Indicator of R on cell centers of the unit-square raster."""
    n1, n2 = shape
    xs = (np.arange(n1) + 0.5) / n1
    ys = (np.arange(n2) + 0.5) / n2
    xl, ln = float(R.I_left), float(R.I_len)
    in_x = (xs >= xl) & (xs < xl + ln)
    c = float(R.center_y) + float(R.slope) * (xs - float(R.x_mid))
    h = float(R.height) / 2
    return in_x[:, None] & (np.abs(ys[None, :] - c[:, None]) <= h)


def cells_inside(R: VParallelogram, shape) -> np.ndarray:
    """Mask of raster cells contained in R (all four cell corners in R)."""
    n1, n2 = shape
    xs = np.arange(n1) / n1
    ys = np.arange(n2) / n2
    xl, ln = float(R.I_left), float(R.I_len)
    in_x = (xs >= xl) & (xs + 1.0 / n1 <= xl + ln)
    h = float(R.height) / 2
    cl = float(R.center_y) + float(R.slope) * (xs - float(R.x_mid))
    cr = float(R.center_y) + float(R.slope) * (xs + 1.0 / n1 - float(R.x_mid))
    lo = np.maximum(cl, cr) - h
    hi = np.minimum(cl, cr) + h
    return in_x[:, None] & (ys[None, :] >= lo[:, None]) \
        & (ys[None, :] + 1.0 / n2 <= hi[:, None])


def vertical_maximal(values: np.ndarray) -> np.ndarray:
    """Uncentered Hardy-Littlewood maximal along vertical fibers."""
    return uncentered_maximal(np.asarray(values, dtype=np.float64), axis=1)


def density_set(R: VParallelogram, u: np.ndarray, shape) -> np.ndarray:
    """E(R): raster cells in R whose direction lies in U(R)."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != tuple(shape):
        raise ValueError("direction field shape mismatch")
    lo, hi = R.uncertainty()
    return rasterize(R, shape) & (u >= float(lo)) & (u <= float(hi))


def density(R: VParallelogram, u: np.ndarray, shape) -> float:
    mask = rasterize(R, shape)
    total = int(mask.sum())
    if total == 0:
        return 0.0
    return int(density_set(R, u, shape).sum()) / total


# ---------------------------------------------------------------------------
# greedy cover selection
# ---------------------------------------------------------------------------

@dataclass
class CoverResult:
    selected: list
    pruned: list       # (pruned R, index of the selection step causing it)
    threshold: float
    shape: tuple

    def to_json(self) -> str:
        return json.dumps({
            "threshold": self.threshold,
            "shape": list(self.shape),
            "selected": [_rect_dict(R) for R in self.selected],
            "pruned": [{"rect": _rect_dict(R), "step": s}
                       for R, s in self.pruned],
        }, sort_keys=True)


def _sort_key(R: VParallelogram):
    # longest shadow first; deterministic lexicographic tie-break
    return (-R.I_len, R.I_left, R.slope, R.height, R.center_y)


def select_cover(rects, shape, mode: str = "basic", u: np.ndarray = None,
                 delta: float = None, threshold: float = PRUNE_THRESHOLD,
                 densities: dict = None) -> CoverResult:
    """Greedy covering pass.

    Repeatedly select the remaining parallelogram with the longest shadow,
    then prune every remaining R' all of whose raster cells fully inside R'
    satisfy M_V(sum of 1_{7R''} over selections) >= threshold.  R' with no
    fully inside cells are kept (conservative).  The selected R itself is
    always removed.

    mode "lipschitz_kakeya" additionally requires a direction field u and a
    density delta in (0, 1]: every R must satisfy |E(R)| >= delta |R| and
    |I(R)| lip(u) <= 1/30.  Densities of parallelograms the raster cannot
    resolve may be supplied by the caller via `densities`.
    """
    rects = sorted(rects, key=_sort_key)
    if mode not in ("basic", "lipschitz_kakeya"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "lipschitz_kakeya":
        if u is None or delta is None:
            raise ValueError("lipschitz_kakeya mode requires u and delta")
        if not (0.0 < delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        u = np.asarray(u, dtype=np.float64)
        if np.max(np.abs(u)) > 1.0 + 1e-12:
            raise ValueError("|u| <= 1 required")
        lip = _direction_lip(u)
        bad = [R for R in rects if float(R.I_len) * lip > 1.0 / 30 + 1e-12]
        if bad:
            raise ValueError(
                f"shadow length times direction Lipschitz constant exceeds "
                f"1/30 for {len(bad)} parallelograms, e.g. {_rect_dict(bad[0])}")
        thin = []
        for R in rects:
            d = densities[R] if densities and R in densities \
                else density(R, u, shape)
            if d < delta - 1e-12:
                thin.append(R)
        if thin:
            raise ValueError(
                f"density below delta={delta} for {len(thin)} parallelograms,"
                f" e.g. {_rect_dict(thin[0])}")
    remaining = list(rects)
    inside = {R: cells_inside(R, shape) for R in remaining}
    count = np.zeros(shape, dtype=np.float64)
    selected, pruned = [], []
    step = 0
    while remaining:
        R = remaining.pop(0)
        selected.append(R)
        count += rasterize(R.dilate_height(7), shape)
        mv = vertical_maximal(count)
        keep = []
        for Rp in remaining:
            m = inside[Rp]
            if m.any() and np.all(mv[m] >= threshold):
                pruned.append((Rp, step))
            else:
                keep.append(Rp)
        remaining = keep
        step += 1
    return CoverResult(selected, pruned, threshold, tuple(shape))


def _direction_lip(u: np.ndarray) -> float:
    n1, n2 = u.shape
    lip1 = np.max(np.abs(np.diff(u, axis=0))) * n1 if n1 > 1 else 0.0
    lip2 = np.max(np.abs(np.diff(u, axis=1))) * n2 if n2 > 1 else 0.0
    return float(max(lip1, lip2))


def packing_check(result: CoverResult) -> dict:
    """For each selected R', sum the heights of earlier selections R with
    R meeting R' and U(R) meeting U(100 R') (height-only dilation), and
    compare against H(R')."""
    sel = result.selected
    worst = Fraction(0)
    holds = True
    for j, Rp in enumerate(sel):
        u_big = Rp.dilate_height(100).uncertainty()
        total = Fraction(0)
        for R in sel[:j]:
            if intervals_intersect(R.uncertainty(), u_big) \
                    and exact_overlap(R, Rp) > 0:
                total += R.height
        if total > Rp.height:
            holds = False
        if Rp.height > 0:
            worst = max(worst, total / Rp.height)
    return {"holds": holds, "worst_ratio": worst}


# ---------------------------------------------------------------------------
# overlap statistics
# ---------------------------------------------------------------------------

def exact_overlap(R: VParallelogram, Rp: VParallelogram) -> Fraction:
    return intersection_area(R.corners(), Rp.corners())


def overlap_statistics(rects, shape=None, u=None, q_list=(1, 2, 3),
                       n_max: int = 4000):
    """Pairwise/triple exact overlap areas among U-intersecting tuples, plus
    raster integrals of powers of the overlap function."""
    rects = list(rects)
    out = {"pairs": {}, "triples": {}}
    if len(rects) > n_max:
        raise ValueError("collection too large for exact overlap statistics")
    for i, R in enumerate(rects):
        for j in range(i + 1, len(rects)):
            Rp = rects[j]
            if intervals_intersect(R.uncertainty(), Rp.uncertainty()):
                a = exact_overlap(R, Rp)
                if a > 0:
                    out["pairs"][(i, j)] = a
    for (i, j), aij in list(out["pairs"].items()):
        for k in range(j + 1, len(rects)):
            if (j, k) in out["pairs"] and (i, k) in out["pairs"]:
                # upper bound by the smallest pairwise area; exact triple
                # areas via iterated clipping
                from .geometry import convex_clip
                poly = convex_clip(
                    convex_clip(rects[i].corners(), rects[j].corners()),
                    rects[k].corners())
                if len(poly) >= 3:
                    from .geometry import poly_area
                    a = abs(poly_area(poly))
                    if a > 0:
                        out["triples"][(i, j, k)] = a
    if shape is not None:
        overlap = np.zeros(shape, dtype=np.float64)
        for R in rects:
            overlap += rasterize(R, shape)
        cell = 1.0 / (shape[0] * shape[1])
        out["raster_moments"] = {q: float((overlap ** q).sum() * cell)
                                 for q in q_list}
        if u is not None:
            e_overlap = np.zeros(shape, dtype=np.float64)
            for R in rects:
                e_overlap += density_set(R, u, shape)
            out["density_raster_moments"] = {
                q: float((e_overlap ** q).sum() * cell) for q in q_list}
    out["total_area"] = sum(R.area for R in rects)
    return out


# ---------------------------------------------------------------------------
# geometric predicates
# ---------------------------------------------------------------------------

def seven_r_nesting(R: VParallelogram, Rp: VParallelogram) -> dict:
    """If |I| <= |I'|, R meets R', and U(R') subset 2U(R), check 7R' under
    both-sides dilation contains R (vertical-convention hypothesis check)."""
    meets = exact_overlap(R, Rp) > 0
    uR, uRp = R.uncertainty(), Rp.uncertainty()
    c = R.slope
    two_u = (c - 2 * (c - uR[0]), c + 2 * (uR[1] - c))
    hyp = (Rp.I_len >= R.I_len and meets
           and uRp[0] >= two_u[0] and uRp[1] <= two_u[1])
    big = Rp.dilate_both(7)
    contains = all(point_in_convex(big.corners(), p[0], p[1])
                   for p in R.corners())
    return {"hypotheses": bool(hyp), "contains": bool(contains),
            "holds": (not hyp) or contains}


def slope_gap_overlap_bound(R: VParallelogram, Rp: VParallelogram) -> dict:
    """|R cap R'| <= H H' / dist(U, U'); vacuous when the windows meet."""
    d = interval_distance(R.uncertainty(), Rp.uncertainty())
    area = exact_overlap(R, Rp)
    if d == 0:
        return {"vacuous": True, "holds": True, "overlap": area}
    bound = R.height * Rp.height / d
    return {"vacuous": False, "holds": area <= bound,
            "overlap": area, "bound": bound}


def window_separation(R, Rp, Rpp=None) -> dict:
    """Window-size vs separation comparisons used by the covering lemmas:
    max(|U|,|U'|) against dist(U,U')/4, and with a third window the
    one-eighth condition on the middle separation."""
    uR, uRp = R.uncertainty(), Rp.uncertainty()
    wR, wRp = uR[1] - uR[0], uRp[1] - uRp[0]
    d = interval_distance(uR, uRp)
    out = {"separated": max(wR, wRp) <= d / 4 if d > 0 else False}
    if Rpp is not None:
        uRpp = Rpp.uncertainty()
        d2 = interval_distance(uR, uRpp)
        out["eighth"] = (uRpp[1] - uRpp[0]) <= d2 / 8 if d2 > 0 else False
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _rect_dict(R: VParallelogram) -> dict:
    return {"I_left": str(R.I_left), "I_len": str(R.I_len),
            "slope": str(R.slope), "center_y": str(R.center_y),
            "height": str(R.height)}


def rects_to_jsonl(rects, path):
    with open(path, "w") as fh:
        for R in rects:
            fh.write(json.dumps(_rect_dict(R), sort_keys=True) + "\n")


def rects_from_jsonl(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                d = json.loads(line)
                out.append(VParallelogram(d["I_left"], d["I_len"], d["slope"],
                                          d["center_y"], d["height"]))
    return out
