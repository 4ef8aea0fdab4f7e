"""Single-scale time-frequency tiles, wave packets, and tile-space sizes.

Tiles have fixed horizontal scale 1 (k1 = 0) and are generated by the
shearing matrix A = [[1, 0], [l, 2^k2]]: the spatial parallelogram is
A^-1([0,1]^2) + (n1, 2^-k2 n2) and the frequency parallelogram is
A^T([0,1] x [1,2]).  The intrinsic tile plane is embedded into the unit
torus by a global dilation w = 2^-unit_m, which leaves every quantity of
interest (slopes, sizes, sigma-ratios, correlations) invariant.

Wave packets are built spatially: a compactly supported bump in the first
sheared coordinate times a moment-corrected decaying oscillation in the
second, so that shear and scale separation produce honestly measurable
correlation decay rather than exact zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import simpson

from .geometry import intersection_area, poly_area, union_area
from .grid import Grid2D, SampledField

DECAY_ORDER = 8  # nominal decay/moment order C of the profile library


@dataclass(frozen=True)
class Tile:
    k2: int
    l: int
    n1: int
    n2: int

    @property
    def slope(self) -> Fraction:
        return Fraction(-self.l, 2 ** self.k2)

    def matrix(self):
        return ((Fraction(1), Fraction(0)),
                (Fraction(self.l), Fraction(2 ** self.k2)))

    def matrix_inv(self):
        p = Fraction(1, 2 ** self.k2)
        return ((Fraction(1), Fraction(0)), (-Fraction(self.l) * p, p))

    def offset(self):
        return (Fraction(self.n1), Fraction(self.n2, 2 ** self.k2))

    def spatial_corners(self):
        """Exact rational corners of A^-1([0,1]^2) + offset, CCW order."""
        inv = self.matrix_inv()
        ox, oy = self.offset()
        corners = []
        for cx, cy in ((0, 0), (1, 0), (1, 1), (0, 1)):
            x = inv[0][0] * cx + inv[0][1] * cy + ox
            y = inv[1][0] * cx + inv[1][1] * cy + oy
            corners.append((x, y))
        return corners

    def frequency_corners(self):
        """Exact rational corners of A^T([0,1] x [1,2])."""
        a = self.matrix()
        # A^T = [[1, l], [0, 2^k2]]
        corners = []
        for cx, cy in ((0, 1), (1, 1), (1, 2), (0, 2)):
            x = Fraction(cx) + Fraction(self.l) * cy
            y = a[1][1] * cy
            corners.append((x, y))
        return corners

    @property
    def area(self) -> Fraction:
        """Intrinsic spatial area |R| = det A^-1."""
        return Fraction(1, 2 ** self.k2)

    def uncertainty(self):
        """U(R): slope interval of width 2 H/|I| centered at the slope."""
        half = Fraction(1, 2 ** self.k2)
        return (self.slope - half, self.slope + half)


def tile_geometry(P: Tile):
    return {
        "spatial": P.spatial_corners(),
        "frequency": P.frequency_corners(),
        "slope": P.slope,
        "uncertainty": P.uncertainty(),
        "area": P.area,
    }


# ---------------------------------------------------------------------------
# profile library
# ---------------------------------------------------------------------------

def _bump01(u, kappa=1.0):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    v = u[inside]
    out[inside] = np.exp(kappa * (4.0 - 1.0 / (v * (1.0 - v))))
    return out


class _Correctors:
    """eta^(n) on [-1/2,1/2] with int x^m eta^(n) dx = 1_{m=n}, m,n <= order."""

    def __init__(self, order: int):
        self.order = order
        z = np.linspace(-0.5, 0.5, 4001)
        base = _bump01(z + 0.5)
        basis = np.stack([z ** i * base for i in range(order + 1)])
        M = np.array([[np.trapezoid(z ** m * basis[i], z)
                       for i in range(order + 1)] for m in range(order + 1)])
        self._coef = np.linalg.solve(M, np.eye(order + 1))
        self._z = z
        self._base = base

    def eval(self, n: int, y):
        y = np.asarray(y, dtype=np.float64)
        base = _bump01(y + 0.5)
        out = np.zeros_like(y)
        for i in range(self.order + 1):
            out += self._coef[i, n] * y ** i
        return out * base


_CORR = None


def _correctors() -> _Correctors:
    global _CORR
    if _CORR is None:
        _CORR = _Correctors(DECAY_ORDER)
    return _CORR


class PacketProfile:
    """Separable profile h(s1) g(s2) in sheared tile coordinates.

    h: smooth bump supported on [0,1].  g: modulated exponential-envelope
    oscillation centered at 1/2 with frequency content near [1,2] and
    moments 0..DECAY_ORDER zeroed by a Gaussian-weighted polynomial
    correction; decay is faster than (1+|s2|)^-C for every C, so the
    library sits inside the order-DECAY_ORDER class.
    """

    def __init__(self, beta: float, a: float, kappa: float, label: str):
        self.beta = beta
        self.a = a
        self.kappa = kappa
        self.label = label
        z = np.linspace(-40.0, 40.0, 160001)
        raw = np.exp(2j * np.pi * beta * z) / np.cosh(a * z)
        moments = np.array([np.trapezoid(z ** n * raw, z)
                            for n in range(DECAY_ORDER + 1)])
        self._moments = moments
        # collapse the correction into one polynomial under a Gaussian
        # window (its spectrum decays super-exponentially, so the
        # correction never dominates cross-scale correlations)
        gauss = np.exp(-np.pi * (z / 0.25) ** 2)
        M = np.array([[np.trapezoid(z ** (m + j) * gauss, z)
                       for j in range(DECAY_ORDER + 1)]
                      for m in range(DECAY_ORDER + 1)])
        self._corr_poly = np.linalg.solve(M, moments)
        g = raw - self._corr_eval(z)
        l2_g = np.sqrt(np.trapezoid(np.abs(g) ** 2, z))
        zs = np.linspace(0.0, 1.0, 4001)
        h = _bump01(zs, kappa)
        l2_h = np.sqrt(np.trapezoid(h ** 2, zs))
        self._gnorm = 1.0 / l2_g
        self._hnorm = 1.0 / l2_h

    def h(self, s1):
        return _bump01(np.asarray(s1, dtype=np.float64), self.kappa) * self._hnorm

    def _corr_eval(self, z):
        poly = np.zeros(z.shape, dtype=np.complex128)
        for c in self._corr_poly[::-1]:
            poly = poly * z + c
        return poly * np.exp(-np.pi * (z / 0.25) ** 2)

    def g(self, s2):
        s2 = np.asarray(s2, dtype=np.float64)
        z = s2 - 0.5
        # sech written via exp(-|az|) to avoid cosh overflow at large |z|
        e = np.exp(-np.abs(self.a * z))
        raw = np.exp(2j * np.pi * self.beta * z) * (2.0 * e / (1.0 + e * e))
        return (raw - self._corr_eval(z)) * self._gnorm


_LIBRARY = None
_PACKET_CACHE = {}


def profile_library():
    """Registered Phi_C dictionary (8 profiles)."""
    global _LIBRARY
    if _LIBRARY is None:
        specs = [(1.5, 4.0, 1.0), (1.5, 5.0, 1.0), (1.25, 4.0, 1.0),
                 (1.75, 4.0, 1.0), (1.5, 4.0, 2.0), (1.25, 5.0, 2.0),
                 (1.75, 5.0, 1.5), (1.4, 4.5, 1.2)]
        _LIBRARY = [PacketProfile(b, a, k, f"packet{i}")
                    for i, (b, a, k) in enumerate(specs)]
    return _LIBRARY


# ---------------------------------------------------------------------------
# sampling packets on the torus
# ---------------------------------------------------------------------------

def make_wave_packet(P: Tile, grid: Grid2D, p_norm=2.0, profile_id: int = 0,
                     unit_m: int = 4) -> SampledField:
    """Sample the periodized packet phi_P^(p) on the torus grid.

    phi_P^(inf)(x) = phi(A((x - x_P)/w)) with w = 2^-unit_m;
    phi_P^(p) = det(A/w)^(1/p) phi_P^(inf).  Recently built packets are
    cached; callers must not mutate the returned values in place.
    """
    key = (P, grid.m1, grid.m2, p_norm, profile_id, unit_m)
    cached = _PACKET_CACHE.get(key)
    if cached is not None:
        return cached
    prof = profile_library()[profile_id]
    w = 2.0 ** (-unit_m)
    n1g, n2g = grid.n1, grid.n2
    # frequency content in the second variable reaches ~ (beta + a) * 2^k2 / w
    fmax = (prof.beta + prof.a) * (2 ** P.k2) / w
    if fmax > grid.n2 / 2:
        raise ValueError(
            f"packet spectrum (~{fmax:.0f}) exceeds the grid Nyquist "
            f"{grid.n2 // 2}: scale too coarse for this grid")
    fmax1 = (8.0 + abs(P.l) * (prof.beta + prof.a)) / w
    if fmax1 > grid.n1 / 2:
        raise ValueError(
            f"sheared packet spectrum (~{fmax1:.0f}) exceeds the grid "
            f"Nyquist {grid.n1 // 2}: shear too steep for this grid")
    x1 = np.arange(n1g) / n1g
    x2 = np.arange(n2g) / n2g
    ox, oy = float(P.offset()[0]) * w, float(P.offset()[1]) * w
    d1 = (x1 - ox) % 1.0
    # intrinsic first coordinate; h supported on [0,1] and 1/w >= 1
    z1 = d1 / w
    hvals = prof.h(z1)
    active = np.nonzero(hvals != 0.0)[0]
    values = np.zeros((n1g, n2g), dtype=np.complex128)
    scale2 = (2 ** P.k2) / w     # second sheared coordinate per torus y-period
    d2 = ((x2 - oy) % 1.0)
    s2 = float(P.l) * z1[active, None] + (2 ** P.k2) * d2[None, :] / w
    acc = np.zeros(s2.shape, dtype=np.complex128)
    # periodize over enough images for the exponential envelope
    qlo = int(np.floor(-(60.0 / prof.a) / scale2)) - 1
    qhi = int(np.ceil((60.0 / prof.a + 1.0) / scale2)) + 1
    for q in range(qlo, qhi + 1):
        acc += prof.g(s2 - q * scale2)
    values[active] = hvals[active, None] * acc
    det = (2 ** P.k2) / w ** 2
    if p_norm == np.inf:
        factor = 1.0
    else:
        factor = det ** (1.0 / p_norm)
    out = SampledField(grid, values * factor)
    if len(_PACKET_CACHE) > 64:
        _PACKET_CACHE.clear()
    _PACKET_CACHE[key] = out
    return out


def inner(f: SampledField, g: SampledField) -> complex:
    return complex(np.mean(f.values * np.conj(g.values)))


def correlation(P: Tile, Pp: Tile, grid: Grid2D, profile_id: int = 0,
                unit_m: int = 4) -> float:
    a = make_wave_packet(P, grid, 2.0, profile_id, unit_m)
    b = make_wave_packet(Pp, grid, 2.0, profile_id, unit_m)
    return abs(inner(a, b))


def bessel_sum(f: SampledField, tiles, grid: Grid2D, profile_id: int = 0,
               unit_m: int = 4) -> float:
    total = 0.0
    for P in tiles:
        pk = make_wave_packet(P, grid, 2.0, profile_id, unit_m)
        total += abs(inner(f, pk)) ** 2
    return total


# ---------------------------------------------------------------------------
# sigma measure and sizes
# ---------------------------------------------------------------------------

def _dilate(corners, L):
    """Scale a polygon about its centroid by L."""
    cx = sum(Fraction(c[0]) for c in corners) / len(corners)
    cy = sum(Fraction(c[1]) for c in corners) / len(corners)
    Lf = Fraction(L)
    return [(cx + Lf * (Fraction(x) - cx), cy + Lf * (Fraction(y) - cy))
            for x, y in corners]


def sigma_measure(tiles, c_sigma: int = 10, corners_fn=None) -> float:
    """sigma(R) = sup_{L >= 1} L^-C |union of LR| over a dyadic L grid.

    L_max is chosen so that the trivial bound L^(2-C) sum|R| falls below the
    L=1 term; LR scales both side lengths about the center.
    """
    if not tiles:
        raise ValueError("sigma of an empty collection")
    if corners_fn is None:
        corners_fn = lambda P: P.spatial_corners()
    polys = [corners_fn(P) for P in tiles]
    total = sum(float(poly_area(p)) for p in polys)
    base = union_area(polys)
    best = base
    L = 2
    while L ** (2 - c_sigma) * total * len(polys) > base and L <= 2 ** 20:
        cand = union_area([_dilate(p, L) for p in polys]) * L ** (-c_sigma)
        best = max(best, cand)
        L *= 2
    return best


def tile_size(F: dict, tiles, p, c_sigma: int = 10) -> float:
    """Tile-space sizes: S^1 = sigma^-1 sum |R||F|, S^2 = S^1(F^2)^(1/2),
    S^inf = max |F|.  F maps tiles to values."""
    tiles = list(tiles)
    if p == np.inf:
        return max(abs(F[P]) for P in tiles)
    sig = sigma_measure(tiles, c_sigma)
    if p == 1:
        return sum(float(P.area) * abs(F[P]) for P in tiles) / sig
    if p == 2:
        return (sum(float(P.area) * abs(F[P]) ** 2 for P in tiles) / sig) ** 0.5
    raise ValueError("p must be 1, 2, or inf")


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

def energy_embedding(f: SampledField, tiles, grid: Grid2D, unit_m: int = 4,
                     profile_ids=None) -> dict:
    """F(R) = max over the dictionary of |<f, phi_R^(1)>|."""
    if profile_ids is None:
        profile_ids = range(len(profile_library()))
    out = {}
    for P in tiles:
        best = 0.0
        for pid in profile_ids:
            pk = make_wave_packet(P, grid, 1.0, pid, unit_m)
            best = max(best, abs(inner(f, pk)))
        out[P] = best
    return out


def _tile_mask(P: Tile, grid: Grid2D, unit_m: int) -> np.ndarray:
    """Raster of grid-cell centers inside the embedded spatial parallelogram."""
    w = 2.0 ** (-unit_m)
    x1 = np.arange(grid.n1) / grid.n1
    x2 = np.arange(grid.n2) / grid.n2
    ox, oy = float(P.offset()[0]) * w, float(P.offset()[1]) * w
    z1 = ((x1 - ox) % 1.0) / w
    z2 = ((x2 - oy) % 1.0) / w
    # second sheared coordinate s2 = l z1 + 2^k2 z2 must lie in [0,1)
    s2 = float(P.l) * z1[:, None] + (2 ** P.k2) * z2[None, :]
    per = (2 ** P.k2) / w   # s2 shift per torus y-period
    in1 = (z1 >= 0.0) & (z1 < 1.0)
    frac = np.mod(s2, per)
    return in1[:, None] & (frac >= 0.0) & (frac < 1.0)


def mass_embedding(g: SampledField, u: np.ndarray, tiles, grid: Grid2D,
                   unit_m: int = 4) -> dict:
    """G(R) = |R|^-1 int_{E_R} |g| with E_R = {z in R : u(z) in U(R)}."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != grid.shape:
        raise ValueError("direction field shape mismatch")
    if np.max(np.abs(u)) > 1.0 + 1e-12:
        raise ValueError("|u| <= 1 required")
    w = 2.0 ** (-unit_m)
    cell = 1.0 / (grid.n1 * grid.n2)
    out = {}
    ag = np.abs(g.values)
    for P in tiles:
        lo, hi = P.uncertainty()
        mask = _tile_mask(P, grid, unit_m) & (u >= float(lo)) & (u <= float(hi))
        area = float(P.area) * w ** 2
        out[P] = float(ag[mask].sum() * cell / area)
    return out


def embedded_corners(P: Tile, unit_m: int = 4):
    w = Fraction(1, 2 ** unit_m)
    return [(w * x, w * y) for x, y in P.spatial_corners()]


# ---------------------------------------------------------------------------
# splitting packets into compactly supported parts
# ---------------------------------------------------------------------------

@dataclass
class SplitPart:
    k: int
    weight: float            # 2^{-C k}
    values: np.ndarray       # sampled on (x1_axis, x2_axis)
    support_radius: float    # exact: zero outside |x2 - 1/2| <= radius


@dataclass
class PacketSplit:
    parts: list
    x1_axis: np.ndarray
    x2_axis: np.ndarray
    source: np.ndarray
    C: int

    def reconstruction(self) -> np.ndarray:
        out = np.zeros_like(self.source)
        for part in self.parts:
            out += part.weight * part.values
        return out


def _cutoff(y, radius):
    """Smooth cutoff: 1 for |y| <= radius/2, 0 for |y| >= radius."""
    z = np.abs(np.asarray(y, dtype=np.float64)) / radius
    out = np.ones_like(z)
    rise = (z > 0.5) & (z < 1.0)
    out[z >= 1.0] = 0.0
    v = (z[rise] - 0.5) / 0.5
    expo = np.clip(1.0 / v - 1.0 / (1.0 - v), -700.0, 700.0)
    out[rise] = 1.0 - 1.0 / (1.0 + np.exp(expo))
    return out


def split_packet(profile_id: int, C: int, K: int, samples_per_unit: int = 64):
    """Decompose phi = sum_k 2^{-Ck} phi_k with supp phi_k in B(0, 2^k)
    (second variable, about the packet center) and moments 0..C-2 of each
    phi_k zeroed by the eta^(n) corrections.

    The source profile must decay faster than (1+|x2|)^{-C'} for the
    measured C'; rejected otherwise.
    """
    if C > DECAY_ORDER:
        raise ValueError(f"target decay {C} exceeds library order {DECAY_ORDER}")
    prof = profile_library()[profile_id]
    x1 = np.linspace(0.0, 1.0, 65)
    halfspan = 2.0 ** K
    n2 = int(2 * halfspan * samples_per_unit) + 1
    y = np.linspace(-halfspan, halfspan, n2)      # x2 - 1/2, packet-centered
    dy = y[1] - y[0]
    g = prof.g(y + 0.5)
    # measured decay order: fit sup_{|y|>=R} |g| R^C' over a radius ladder
    radii = [2.0 ** j for j in range(1, K + 1)]
    sups = np.array([np.max(np.abs(g[np.abs(y) >= r])) for r in radii])
    if np.any(sups > 0):
        order = -np.polyfit(np.log([r for r, s in zip(radii, sups) if s > 0]),
                            np.log(sups[sups > 0]), 1)[0]
        if order < C:
            raise ValueError(f"insufficient source decay: measured order "
                             f"{order:.2f} < required {C}")
    phi = np.outer(prof.h(x1), g)
    corr = _correctors()
    # correctors rescaled to the shell: eta_k^(n)(y) = eta^(n)(y/2^k)/2^(k(n+1))
    # keeps the correction amplitudes (and hence the parts) bounded, so the
    # quadrature moments of each rescaled part stay at the rounding floor
    etas, mats = [], []
    for k in range(K + 1):
        s = 2.0 ** k
        etak = np.stack([corr.eval(n, y / s) / s ** (n + 1)
                         for n in range(C - 1)])
        mats.append(np.array([[simpson(y ** m * etak[n], dx=dy)
                               for n in range(C - 1)]
                              for m in range(C - 1)]))
        etas.append(etak)
    # rho_k = phi * cut_k with all moments up to C-2 zeroed at scale 2^k;
    # the parts 2^(Ck)(rho_k - rho_{k-1}) telescope to rho_K, and the
    # correction coefficients are the (rapidly decaying) tail moments
    parts = []
    prev_rho = np.zeros_like(phi)
    for k in range(K + 1):
        cut = _cutoff(y, 2.0 ** k)
        trunc = phi * cut[None, :]
        m = np.stack([simpson(trunc * (y ** n)[None, :], dx=dy, axis=1)
                      for n in range(C - 1)])
        rho = trunc - np.tensordot(np.linalg.solve(mats[k], m).T, etas[k],
                                   axes=(1, 0))
        vals = (rho - prev_rho) * 2.0 ** (C * k)
        # clean the rounding residual on the rescaled part directly
        m_res = np.stack([simpson(vals * (y ** n)[None, :], dx=dy, axis=1)
                          for n in range(C - 1)])
        vals = vals - np.tensordot(np.linalg.solve(mats[k], m_res).T,
                                   etas[k], axes=(1, 0))
        parts.append(SplitPart(k, 2.0 ** (-C * k), vals, 2.0 ** k))
        prev_rho = rho
    return PacketSplit(parts, x1, y, phi, C)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def tiles_to_jsonl(tiles, path):
    with open(path, "w") as fh:
        for P in tiles:
            fh.write(json.dumps({"k2": P.k2, "l": P.l, "n1": P.n1, "n2": P.n2})
                     + "\n")


def tiles_from_jsonl(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                d = json.loads(line)
                out.append(Tile(d["k2"], d["l"], d["n1"], d["n2"]))
    return out


def pairwise_sigma_overlap(tiles, unit_m=4):
    """Exact pairwise intersection areas of embedded tiles."""
    out = {}
    for i, P in enumerate(tiles):
        for Q in tiles[i + 1:]:
            a = intersection_area(embedded_corners(P, unit_m),
                                  embedded_corners(Q, unit_m))
            out[(P, Q)] = a
    return out
