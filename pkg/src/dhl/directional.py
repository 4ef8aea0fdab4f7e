"""Directional singular and averaging operators on the 2-torus.

Includes a truncated directional Hilbert transform along variable
directions, single-scale directional averages, a dyadic martingale stack
with its square-function pieces, a Chang-Wilson-Wolff style exponential
good-lambda experiment, and maximal functions over finitely many
directions.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid2D, SampledField, apply_multiplier
from .maximal import square_maximal_2d, uncentered_maximal


# ---------------------------------------------------------------------------
# truncation profiles
# ---------------------------------------------------------------------------

def _bump_sym(u, kappa=1.0):
    """Even C^inf bump, 1 at 0, supported on [-1, 1]."""
    u = np.abs(np.asarray(u, dtype=np.float64))
    out = np.zeros_like(u)
    inside = u < 1.0
    v = u[inside]
    out[inside] = np.exp(kappa * (1.0 - 1.0 / (1.0 - v * v)))
    return out


class TruncationProfile:
    """Even smooth cutoff phi with phi(0) = 1, exact support [-1, 1], and
    moments of orders 0..n_moments zeroed (an even-polynomial correction
    under the bump, pinned at the origin)."""

    def __init__(self, n_moments: int = 4, kappa: float = 1.0):
        self.n_moments = n_moments
        self.kappa = kappa
        n_even = n_moments // 2 + 1
        z = np.linspace(-1.0, 1.0, 8001)
        base = _bump_sym(z, kappa)
        basis = np.stack([z ** (2 * i) * base for i in range(n_even + 1)])
        # constraints: phi(0) = 1 and even moments 0..n_moments vanish
        rows = [basis[:, z.size // 2]]
        for m in range(0, n_moments + 1, 2):
            rows.append(np.array([np.trapezoid(z ** m * basis[i], z)
                                  for i in range(n_even + 1)]))
        rhs = np.zeros(len(rows))
        rhs[0] = 1.0
        self._coef, *_ = np.linalg.lstsq(np.stack(rows), rhs, rcond=None)

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        base = _bump_sym(r, self.kappa)
        out = np.zeros_like(base)
        for i, c in enumerate(self._coef):
            out += c * r ** (2 * i)
        return out * base

    def moments(self, orders=None):
        z = np.linspace(-1.0, 1.0, 8001)
        vals = self(z)
        if orders is None:
            orders = range(self.n_moments + 1)
        return {m: float(np.trapezoid(z ** m * vals, z)) for m in orders}


# ---------------------------------------------------------------------------
# directional Hilbert transform
# ---------------------------------------------------------------------------

def _shift_linear(values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """values[i, j] -> values at (i, j + offset) by linear interpolation in
    the periodic second index; offsets in grid cells, per row (shape (n1,))
    or per cell (shape (n1, n2))."""
    n1, n2 = values.shape
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.ndim == 1:
        offsets = offsets[:, None]
    offsets = np.broadcast_to(offsets, (n1, n2))
    base = np.floor(offsets).astype(int)
    frac = offsets - base
    idx = (np.arange(n2)[None, :] + base) % n2
    idx1 = (idx + 1) % n2
    rows = np.arange(n1)[:, None]
    return (1.0 - frac) * values[rows, idx] + frac * values[rows, idx1]


def directional_hilbert(f: SampledField, u, truncation: str = "sharp",
                        profile: TruncationProfile = None) -> SampledField:
    """Truncated Hilbert transform along (1, u(x)):

        Hf(x) = sum_{0 < |k| <= N/2} w(k/N) f(x - (k/N)(1, u(x))) / k

    with symmetric +/- pairing; w = 1 for the sharp truncation and a smooth
    even cutoff in the smooth mode.  Fractional sample points use linear
    interpolation in the vertical coordinate.
    """
    grid = f.grid
    n1, n2 = grid.n1, grid.n2
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = np.full((n1,), float(u))
    if u.shape not in ((n1,), (n1, n2)):
        raise ValueError("direction field must have shape (n1,) or (n1, n2)")
    if np.max(np.abs(u)) > 1.0 + 1e-12:
        raise ValueError("|u| <= 1 required")
    if truncation == "smooth" and profile is None:
        profile = TruncationProfile()
    vals = f.values
    out = np.zeros_like(vals)
    for k in range(1, n1 // 2 + 1):
        r = k / n1
        w = 1.0 if truncation == "sharp" else float(profile(r))
        if w == 0.0:
            continue
        # f(x1 - r, x2 - r u(x1)): shift rows by k, then interpolate columns
        off = -r * u * n2
        plus = _shift_linear(np.roll(vals, k, axis=0), off)
        minus = _shift_linear(np.roll(vals, -k, axis=0), -off)
        out += w * (plus - minus) / k
    return SampledField(grid, out)


def curved_hilbert(f: SampledField, u, alpha: float, kind: str = "abs",
                   truncation: str = "sharp",
                   profile: TruncationProfile = None) -> SampledField:
    """Hilbert transform along the curve (t, u(x1) |t|^alpha) (kind="abs")
    or (t, u(x1) sgn(t) |t|^alpha) (kind="signed"); alpha > 0, alpha != 1.
    """
    if alpha <= 0 or alpha == 1.0:
        raise ValueError("alpha must be positive and different from 1")
    if kind not in ("abs", "signed"):
        raise ValueError("kind must be 'abs' or 'signed'")
    grid = f.grid
    n1, n2 = grid.n1, grid.n2
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = np.full((n1,), float(u))
    if u.shape != (n1,):
        raise ValueError("direction field must be defined per column")
    if truncation == "smooth" and profile is None:
        profile = TruncationProfile()
    vals = f.values
    out = np.zeros_like(vals)
    for k in range(1, n1 // 2 + 1):
        r = k / n1
        w = 1.0 if truncation == "sharp" else float(profile(r))
        if w == 0.0:
            continue
        curve = r ** alpha
        off_p = -curve * u * n2
        off_m = off_p if kind == "abs" else -off_p
        plus = _shift_linear(np.roll(vals, k, axis=0), off_p)
        minus = _shift_linear(np.roll(vals, -k, axis=0), off_m)
        out += w * (plus - minus) / k
    return SampledField(grid, out)


# ---------------------------------------------------------------------------
# single-scale averages
# ---------------------------------------------------------------------------

GAUSSIAN_WIDTH = 0.125


def gaussian_profile(r, s: float = GAUSSIAN_WIDTH):
    r = np.asarray(r, dtype=np.float64)
    return np.exp(-np.pi * r * r / (s * s)) / s


def gaussian_profile_hat(sigma, s: float = GAUSSIAN_WIDTH):
    sigma = np.asarray(sigma, dtype=np.float64)
    return np.exp(-np.pi * s * s * sigma * sigma)


def single_scale_average(f: SampledField, u, s: float = GAUSSIAN_WIDTH
                         ) -> SampledField:
    """A_u f(x) = int phi_s(t) f(x - t(1, u(x1))) dt by the grid quadrature
    t = k/N over one period, phi_s Gaussian of width s."""
    grid = f.grid
    n1, n2 = grid.n1, grid.n2
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = np.full((n1,), float(u))
    if u.shape not in ((n1,), (n1, n2)):
        raise ValueError("direction field must have shape (n1,) or (n1, n2)")
    vals = f.values
    out = np.zeros_like(vals)
    ks = np.arange(-(n1 // 2), n1 // 2)
    for k in ks:
        r = k / n1
        w = float(gaussian_profile(r, s)) / n1
        off = -r * u * n2
        out += w * _shift_linear(np.roll(vals, k, axis=0), off)
    return SampledField(grid, out)


def single_scale_square_function(f: SampledField, u, lattice, pair,
                                 s: float = GAUSSIAN_WIDTH) -> np.ndarray:
    """sqrt of sum over lattice scales of |P_t(A_u f) - A_u(P_t f)|^2 with
    P_t acting in the vertical variable."""
    from .filters import project
    af = single_scale_average(f, u, s)
    total = np.zeros(f.grid.shape, dtype=np.float64)
    for t in lattice.scales():
        lhs = project(af, t, pair, kind="P", axis=1, lattice=lattice)
        rhs = single_scale_average(
            project(f, t, pair, kind="P", axis=1, lattice=lattice), u, s)
        total += np.abs(lhs.values - rhs.values) ** 2
    return np.sqrt(total)


def lp_diag_defect_2d(f: SampledField, u, pair, lattice,
                      truncation: str = "sharp") -> SampledField:
    """Diagonal defect sum_t |(1 - P_t) H_u (Psi_t *_2 f)| with P_t and the
    band filter Psi_t acting in the vertical variable.

    The direction field must satisfy a per-column vertical Lipschitz bound
    of 1/100; when u is constant in y the defect vanishes identically
    because H_u then commutes with vertical multipliers.
    """
    grid = f.grid
    u = np.asarray(u, dtype=np.float64)
    if u.ndim <= 1:
        col_lip = 0.0
    else:
        if u.shape != grid.shape:
            raise ValueError("direction field shape mismatch")
        wrap = np.concatenate([u, u[:, :1]], axis=1)
        per_col = np.max(np.abs(np.diff(wrap, axis=1)), axis=1) * grid.n2
        worst = int(np.argmax(per_col))
        col_lip = float(per_col[worst])
        if col_lip > 0.01 + 1e-12:
            raise ValueError(
                f"per-column Lipschitz constant {col_lip:.4g} exceeds 1/100 "
                f"(worst column {worst})")
    from .filters import project
    total = np.zeros(grid.shape, dtype=np.float64)
    for t in lattice.scales():
        band = project(f, t, pair, kind="band", axis=1, lattice=lattice)
        if np.max(np.abs(band.values)) <= 1e-300:
            continue
        h = directional_hilbert(band, u, truncation)
        diag = h - project(h, t, pair, kind="P", axis=1, lattice=lattice)
        total += np.abs(diag.values)
    return SampledField(grid, total.astype(np.complex128))


# ---------------------------------------------------------------------------
# martingale stack
# ---------------------------------------------------------------------------

def martingale_average(f: SampledField, j: int) -> np.ndarray:
    """E_j f: average over dyadic squares of side 2^-j."""
    grid = f.grid
    side1, side2 = grid.n1 >> j, grid.n2 >> j
    if side1 < 1 or side2 < 1:
        raise ValueError("martingale level finer than the grid")
    v = f.values.reshape(2 ** j, side1, 2 ** j, side2)
    means = v.mean(axis=(1, 3))
    return np.repeat(np.repeat(means, side1, axis=0), side2, axis=1)


def martingale_stack(f: SampledField, j_max: int):
    """E_j for j = 0..j_max and differences Delta_j = E_{j+1} - E_j."""
    es = [martingale_average(f, j) for j in range(j_max + 1)]
    deltas = [es[j + 1] - es[j] for j in range(j_max)]
    return es, deltas


def cww_experiment(f: SampledField, j_max: int, lam: float, eps_list):
    """Exponential good-lambda statistics for the dyadic martingale:

    numerator  |{ |f - E_0 f| > 2 lam, S f <= eps lam }|
    denominator |{ M f >= lam }|

    with S the martingale square function and M the dyadic-square maximal
    function.  Returns one row per eps.
    """
    es, deltas = martingale_stack(f, j_max)
    sf = np.sqrt(sum(np.abs(d) ** 2 for d in deltas))
    dev = np.abs(f.values - es[0])
    mf = square_maximal_2d(np.abs(f.values))
    cell = 1.0 / (f.grid.n1 * f.grid.n2)
    denom = float((mf >= lam).sum() * cell)
    rows = []
    for eps in eps_list:
        num = float(((dev > 2 * lam) & (sf <= eps * lam)).sum() * cell)
        ratio = num / denom if denom > 0 else 0.0
        rows.append({"epsilon": float(eps), "lambda": float(lam),
                     "numerator": num, "denominator": denom, "ratio": ratio})
    return rows


def cww_rate_fit(rows):
    """Fit log(ratio) against 1/eps^2 over rows with positive ratio."""
    xs = [1.0 / r["epsilon"] ** 2 for r in rows if r["ratio"] > 0]
    ys = [np.log(r["ratio"]) for r in rows if r["ratio"] > 0]
    if len(xs) < 2:
        return None
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# maximal functions over directions
# ---------------------------------------------------------------------------

def n_direction_maximal(f: SampledField, directions,
                        s: float = GAUSSIAN_WIDTH) -> np.ndarray:
    """max over the given slopes of the smooth directional average along
    (1, u), computed as a Fourier multiplier phi_hat(xi1 + u xi2)."""
    grid = f.grid
    k1 = grid.frequencies(0)[:, None]
    k2 = grid.frequencies(1)[None, :]
    spec = np.fft.fft2(f.values)
    out = None
    for u in directions:
        mult = gaussian_profile_hat(k1 + u * k2, s)
        g = np.abs(np.fft.ifft2(spec * mult))
        out = g if out is None else np.maximum(out, g)
    return out


def q_vertical_maximal(f: SampledField, q: float) -> np.ndarray:
    """L^q vertical maximal function (M_V |f|^q)^(1/q), 1 < q < 2."""
    if not (1.0 < q < 2.0):
        raise ValueError("q must lie strictly between 1 and 2")
    power = np.abs(f.values) ** q
    return uncentered_maximal(power, axis=1) ** (1.0 / q)


def martingale_projection_bound(f: SampledField, j: int, k: int, q: float,
                                pair=None, lattice=None) -> dict:
    """Measure sup |Delta_j P_{2^-k} f| / (M_D M_{q,V} f) pointwise, where
    P is the vertical low-pass at scale 2^-k, M_D the dyadic-square maximal
    function and M_{q,V} the L^q vertical maximal function."""
    from .filters import make_filter_pair, project
    from .grid import ScaleLattice
    grid = f.grid
    if pair is None:
        pair = make_filter_pair()
    if lattice is None:
        lattice = ScaleLattice(0, grid.m2 - 2)
    t = 2.0 ** (-k)
    low = project(f, t, pair, kind="P", axis=1, lattice=lattice)
    es, deltas = martingale_stack(low, j + 1)
    num = np.abs(deltas[j])
    denom = square_maximal_2d(q_vertical_maximal(f, q)) + 1e-300
    ratio = num / denom
    qprime = q / (q - 1.0)
    return {"max_ratio": float(np.max(ratio)),
            "scale_factor": 2.0 ** (abs(j - k) / qprime),
            "normalized": float(np.max(ratio)) / 2.0 ** (abs(j - k) / qprime)}
