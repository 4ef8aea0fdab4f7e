"""Outer measure structure on the upper half-space over the torus.

Fields live on (scale lattice) x (spatial grid).  Generating sets are
tents T(x,s) = {(y,t): dist(x,y) + t <= s} with sigma(T) = s^d.  Sizes are
averaged L^p quadratures over tents; the outer L^p quasi-norm is evaluated
by greedy tent stripping, which yields a certified upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_cdt

from .grid import Grid1D, Grid2D, SampledField, ScaleLattice
from .maximal import square_maximal_2d, uncentered_maximal


# ---------------------------------------------------------------------------
# fields on the upper half-space
# ---------------------------------------------------------------------------

class UpperHalfField:
    """Samples F(t, y) for t on a scale lattice and y on the base grid."""

    def __init__(self, grid, lattice: ScaleLattice, values):
        values = np.asarray(values, dtype=np.float64)
        expected = (len(lattice),) + grid.shape
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape}, expected {expected}")
        self.grid = grid
        self.lattice = lattice
        self.values = values

    @property
    def d(self) -> int:
        return 1 if isinstance(self.grid, Grid1D) else 2

    def copy(self) -> "UpperHalfField":
        return UpperHalfField(self.grid, self.lattice, self.values.copy())


def _torus_dist(grid, center) -> np.ndarray:
    """Euclidean torus distance from every grid point to `center`."""
    if isinstance(grid, Grid1D):
        x = grid.points()
        d = np.abs(x - float(center))
        return np.minimum(d, 1.0 - d)
    x1, x2 = grid.points()
    c1, c2 = center
    d1 = np.abs(x1 - c1)
    d1 = np.minimum(d1, 1.0 - d1)
    d2 = np.abs(x2 - c2)
    d2 = np.minimum(d2, 1.0 - d2)
    return np.hypot(d1[:, None], d2[None, :])


@dataclass(frozen=True)
class Tent:
    """Carleson tent over the ball B(center, s)."""

    center: object
    s: float

    def sigma(self, d: int) -> float:
        return float(self.s) ** d


def tent_mask(F: UpperHalfField, tent: Tent) -> np.ndarray:
    """Boolean array over (scale, space) of half-space points inside the tent."""
    dist = _torus_dist(F.grid, tent.center)
    t = F.lattice.scales()
    return dist[None, ...] + t.reshape((-1,) + (1,) * dist.ndim) <= tent.s + 1e-12


def size(F: UpperHalfField, tent: Tent, p) -> float:
    """S^p size: (s^-d integral over the tent of |F|^p dy dlog t)^(1/p)."""
    mask = tent_mask(F, tent)
    vals = np.abs(F.values[mask])
    if p == np.inf:
        return float(vals.max(initial=0.0))
    cell = F.lattice.dlog / np.prod(F.grid.shape)
    return float((tent.s ** (-F.d) * np.sum(vals ** p) * cell) ** (1.0 / p))


# ---------------------------------------------------------------------------
# greedy outer L^p
# ---------------------------------------------------------------------------

def _candidate_tents(F: UpperHalfField, max_centers=64):
    grid = F.grid
    tents = []
    if isinstance(grid, Grid1D):
        stride = max(1, grid.n // max_centers)
        centers = grid.points()[::stride]
    else:
        stride1 = max(1, grid.n1 // 8)
        stride2 = max(1, grid.n2 // 8)
        p1, p2 = grid.points()
        centers = [(a, b) for a in p1[::stride1] for b in p2[::stride2]]
    t_min = F.lattice.scales().min()
    s = 1.0
    heights = []
    while s >= t_min:
        heights.append(s)
        s /= 2.0
    for c in centers:
        for s in heights:
            tents.append(Tent(c, s))
    return tents


@dataclass
class GreedyCover:
    tents: list
    sizes: np.ndarray      # size at the moment of selection (nonincreasing)
    sigmas: np.ndarray
    residual_size: float   # max candidate size after all strips


def _greedy_strip(F: UpperHalfField, size_p, depth=60, stop_size=0.0, max_centers=64):
    cands = _candidate_tents(F, max_centers=max_centers)
    d = F.d
    cell = F.lattice.dlog / np.prod(F.grid.shape)
    masks = np.stack([tent_mask(F, T).ravel() for T in cands]).astype(np.float64)
    scale = np.array([T.s ** (-d) for T in cands])
    W = np.abs(F.values.ravel()).astype(np.float64)

    def all_sizes():
        if size_p == np.inf:
            # max over the tent: use masked max
            out = np.empty(len(cands))
            for i in range(len(cands)):
                m = masks[i] > 0
                out[i] = W[m].max(initial=0.0)
            return out
        return (scale * (masks @ (W ** size_p)) * cell) ** (1.0 / size_p)

    chosen, lam, sig = [], [], []
    for _ in range(depth):
        sizes = all_sizes()
        i = int(np.argmax(sizes))
        if sizes[i] <= stop_size or sizes[i] == 0.0:
            return GreedyCover(chosen, np.array(lam), np.array(sig), float(sizes[i]))
        chosen.append(cands[i])
        lam.append(float(sizes[i]))
        sig.append(cands[i].sigma(d))
        W[masks[i] > 0] = 0.0
    return GreedyCover(chosen, np.array(lam), np.array(sig),
                       float(all_sizes().max(initial=0.0)))


def superlevel_measure(F: UpperHalfField, lam: float, size_p, depth=200,
                       max_centers=64) -> float:
    """Upper bound for mu(size > lam): total sigma of greedily stripped tents
    after which every candidate tent has size <= lam."""
    cover = _greedy_strip(F, size_p, depth=depth, stop_size=lam,
                          max_centers=max_centers)
    if cover.residual_size > lam:
        return 1.0  # could not push below lam at this depth: cap at full measure
    return float(cover.sigmas.sum())


def outer_lp(F: UpperHalfField, p: float, size_p, depth=60, max_centers=64) -> float:
    """Upper bound for the outer L^p quasi-norm of F with the S^(size_p) size.

    Layer-cake over the greedy selection sequence: after stripping k tents
    the residual size is at most the (k+1)-st selection size, so
    mu(lambda) <= sum_{i<=k} sigma_i on [lambda_{k+1}, lambda_k).  Below the
    last recorded level the measure is capped by sigma of the full space.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    cover = _greedy_strip(F, size_p, depth=depth, max_centers=max_centers)
    lam = cover.sizes
    if lam.size == 0:
        return 0.0
    sig = np.cumsum(cover.sigmas)
    total = 0.0
    for k in range(len(lam) - 1):
        total += (lam[k] ** p - lam[k + 1] ** p) * sig[k]
    lam_last = lam[-1]
    lam_res = min(cover.residual_size, lam_last)
    total += (lam_last ** p - lam_res ** p) * sig[-1]
    # everything below the residual level: measure capped by the whole space
    total += lam_res ** p * min(1.0, sig[-1] + 1.0)
    return float(total ** (1.0 / p))


# ---------------------------------------------------------------------------
# test-function dictionaries
# ---------------------------------------------------------------------------

class Profile:
    """Vectorized profile z -> phi(z) with known support/decay radius."""

    def __init__(self, fn, radius, label, lip):
        self.fn = fn
        self.radius = float(radius)
        self.label = label
        self.lip = float(lip)  # measured bound for |phi'|

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=np.float64))


def _bump(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def _mean_zero_compact(weight_fn):
    """Mean-correct p(z)*bump(z) on a fine quadrature grid; exact support B(0,1)."""
    zs = np.linspace(-1.0, 1.0, 8193)
    b = _bump(zs)
    w = weight_fn(zs) * b
    c = np.trapezoid(w, zs) / np.trapezoid(b, zs)

    def fn(z, c=c):
        return (weight_fn(np.asarray(z, dtype=np.float64)) - c) * _bump(z)

    vals = fn(zs)
    lip = float(np.max(np.abs(np.gradient(vals, zs))))
    amp = float(np.max(np.abs(vals)))
    return fn, lip, amp


def compact_dictionary(count=16):
    """Mean-zero profiles supported in B(0,1), shared modulus of continuity.

    Polynomial and trigonometric weights against a smooth bump, mean-zeroed
    by explicit correction and normalized to unit sup.
    """
    weights = [lambda z, k=k: z ** k for k in range(1, 7)]
    weights += [lambda z, k=k: np.cos(2 * np.pi * k * z) for k in range(1, 6)]
    weights += [lambda z, k=k: np.sin(2 * np.pi * k * z) for k in range(1, 6)]
    profiles = []
    for i, wfn in enumerate(weights[:count]):
        fn, lip, amp = _mean_zero_compact(wfn)
        profiles.append(Profile(
            (lambda z, f=fn, a=amp: f(z) / a), 1.0, f"compact{i}", lip / amp))
    return profiles


def tailed_dictionary(count=16, decay=10):
    """Mean-zero Hermite-type profiles with |phi|, |phi'| <= (1+|z|)^-decay."""
    from numpy.polynomial.hermite_e import hermeval
    zs = np.linspace(-30.0, 30.0, 24001)
    profiles = []
    k = 1
    while len(profiles) < count:
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        vals = hermeval(zs, coef) * np.exp(-zs ** 2 / 2.0)
        dv = np.gradient(vals, zs)
        bound = (1.0 + np.abs(zs)) ** (-decay)
        amp = max(np.max(np.abs(vals) / bound), np.max(np.abs(dv) / bound))

        def fn(z, k=k, amp=amp):
            c = np.zeros(k + 1)
            c[k] = 1.0
            z = np.asarray(z, dtype=np.float64)
            return hermeval(z, c) * np.exp(-z ** 2 / 2.0) / amp

        lip = float(np.max(np.abs(dv)) / amp)
        profiles.append(Profile(fn, 30.0, f"hermite{k}", lip))
        k += 1
    return profiles


# ---------------------------------------------------------------------------
# embedding maps into the upper half-space
# ---------------------------------------------------------------------------

def _kernel_conv(f: SampledField, kernel_vals: np.ndarray) -> np.ndarray:
    """Cyclic convolution of f with a kernel sampled at grid offsets."""
    if f.ndim == 1:
        return np.real(np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(kernel_vals)))
    return np.real(np.fft.ifft2(np.fft.fft2(f.values) * np.fft.fft2(kernel_vals)))


def _offsets(grid):
    """Signed torus offsets from 0 to each grid point (nearest representative)."""
    if isinstance(grid, Grid1D):
        x = grid.points()
        return np.where(x > 0.5, x - 1.0, x)
    x1, x2 = grid.points()
    o1 = np.where(x1 > 0.5, x1 - 1.0, x1)
    o2 = np.where(x2 > 0.5, x2 - 1.0, x2)
    return o1, o2


def embed(f: SampledField, kind: str, lattice: ScaleLattice,
          dictionary=None) -> UpperHalfField:
    """Embedding maps f(y) -> F(y,t) on the upper half-space.

    kind:
      "A_c" -- boundary-truncated averages t^-d mean_{B(y,t)} |f|
      "D_c" -- sup over compact mean-zero test profiles of |<f, phi_{y,t}>|
      "A"   -- tailed averages with (1 + |x-y|/t)^-5 weight
      "D"   -- sup over tailed mean-zero test profiles
    """
    grid = f.grid
    d = 1 if isinstance(grid, Grid1D) else 2
    lattice.validate_for(grid)
    cell = 1.0 / np.prod(grid.shape)
    scales = lattice.scales()
    out = np.zeros((len(scales),) + grid.shape)
    if kind in ("A_c", "A"):
        absf = SampledField(grid, np.abs(f.values))
        if d == 1:
            off = _offsets(grid)
            r = np.abs(off)
        else:
            o1, o2 = _offsets(grid)
            r = np.hypot(o1[:, None], o2[None, :])
        for i, t in enumerate(scales):
            if kind == "A_c":
                ker = (r <= t + 1e-15).astype(np.float64)
            else:
                ker = (1.0 + r / t) ** (-5.0)
            ker /= ker.sum()     # discrete ball/weight mean
            out[i] = _kernel_conv(absf, ker)
        return UpperHalfField(grid, lattice, out)
    if kind in ("D_c", "D"):
        if dictionary is None:
            dictionary = compact_dictionary() if kind == "D_c" else tailed_dictionary()
        if d == 1:
            off = _offsets(grid)
        else:
            raise NotImplementedError("D embeddings are provided for d=1")
        for i, t in enumerate(scales):
            best = np.zeros(grid.shape)
            for prof in dictionary:
                ker = prof(off / t) * (t ** (-d)) * cell
                ker = ker - ker.mean()   # exact discrete cancellation
                conv = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(ker))
                np.maximum(best, np.abs(conv), out=best)
            out[i] = best
        return UpperHalfField(grid, lattice, out)
    raise ValueError(f"unknown embedding kind {kind!r}")


def wave_packet(grid, profile: Profile, y: float, t: float) -> SampledField:
    """phi_{y,t}(x) = t^-1 phi((x - y)/t) sampled on the torus."""
    x = grid.points()
    z = x - y
    z = np.where(z > 0.5, z - 1.0, np.where(z < -0.5, z + 1.0, z))
    return SampledField(grid, profile(z / t) / t)


def packet_inner(grid, prof, y, t, prof2, y2, t2) -> complex:
    a = wave_packet(grid, prof, y, t).values
    b = wave_packet(grid, prof2, y2, t2).values
    return complex(np.mean(a * np.conj(b)))


# ---------------------------------------------------------------------------
# Whitney decomposition and Calderon-Zygmund splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WhitneyCube:
    level: int           # side = 2^-level in torus units
    index: tuple         # block index per axis

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    def center(self):
        return tuple((i + 0.5) * self.side for i in self.index)

    def slices(self, grid):
        cells = [n >> self.level for n in grid.shape]
        return tuple(slice(i * c, (i + 1) * c) for i, c in zip(self.index, cells))


def _chessboard_distance(mask: np.ndarray) -> np.ndarray:
    """Torus sup-norm distance (in cells) from each True cell to the complement."""
    if mask.all():
        raise ValueError("open set covers the whole torus; no Whitney decomposition")
    tiled = np.tile(mask, (3,) * mask.ndim)
    dt = distance_transform_cdt(tiled, metric="chessboard")
    center = tuple(slice(n, 2 * n) for n in mask.shape)
    return dt[center].astype(np.float64)


def whitney(grid, mask: np.ndarray):
    """Maximal dyadic cubes Q inside the open set with dist(Q, complement) >= side.

    Distances are sup-norm, center-to-center, so the finest cells always
    qualify and the decomposition covers the set exactly; maximality gives
    the factor-4 upper bracket.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError("mask shape does not match grid")
    if not mask.any():
        return []
    n = grid.shape[0]
    m = int(np.log2(n))
    D = _chessboard_distance(mask) / n  # in torus length units
    covered = np.zeros_like(mask)
    cubes = []
    for level in range(0, m + 1):
        side = 2.0 ** (-level)
        blocks = [s >> level for s in grid.shape]
        if any(b == 0 for b in blocks):
            break
        view_shape = []
        for nn, b in zip(grid.shape, blocks):
            view_shape += [nn // b, b]
        inside = mask.reshape(view_shape)
        dmin = D.reshape(view_shape)
        cov = covered.reshape(view_shape)
        axes = tuple(range(1, 2 * mask.ndim, 2))
        ok = inside.all(axis=axes) & (dmin.min(axis=axes) >= side - 1e-12) \
            & ~cov.any(axis=axes)
        for idx in np.argwhere(ok):
            cube = WhitneyCube(level, tuple(int(i) for i in idx))
            cubes.append(cube)
            covered[cube.slices(grid)] = True
    return cubes


@dataclass
class CZDecomposition:
    good: SampledField
    atoms: list                  # (cube, SampledField supported on the cube)
    cubes: list
    lam: float
    maximal: np.ndarray

    def exceptional_tents(self):
        d = self.good.values.ndim
        return [Tent(c.center() if d == 2 else c.center()[0],
                     3.0 * np.sqrt(d) * c.side) for c in self.cubes]


def cz_decompose(f: SampledField, lam: float) -> CZDecomposition:
    """Split f = g + sum_i b_i at level lam over Whitney cubes of {Mf > lam}."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if f.ndim == 1:
        Mf = uncentered_maximal(np.abs(f.values))
    else:
        Mf = square_maximal_2d(f.values)
    mask = Mf > lam
    if mask.all():
        raise ValueError("lambda below the mean level: bad set covers the torus")
    cubes = whitney(f.grid, mask)
    g = f.values.copy()
    atoms = []
    for cube in cubes:
        sl = cube.slices(f.grid)
        mean = g[sl].mean()
        b = np.zeros_like(f.values)
        b[sl] = f.values[sl] - mean
        g[sl] = mean
        atoms.append((cube, SampledField(f.grid, b)))
    return CZDecomposition(SampledField(f.grid, g), atoms, cubes, lam, Mf)
