"""Band-pass filter pair for the diagonalization experiments.

The pair consists of a low-pass-defining cutoff psi_hat and a narrow
band-pass Psi_hat with

    psi_hat == 1 on +-[99/100, 103/100],   == 0 outside +-[98/100, 104/100],
    Psi_hat supported in +-[1, 101/100].

Because supp Psi_hat(t .) sits inside {psi_hat(t .) == 1}, the composition
(1 - P_t)(Psi_t * f) vanishes identically at every scale.  Psi_hat is
normalized so that sum_j |Psi_hat(r^-j xi)|^2 = 1 on the covered frequency
range, with lattice ratio r = 2^(1/substeps); substeps = 100 makes the sum
a reproducing partition for every nonzero frequency.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .grid import SampledField, ScaleLattice, apply_multiplier

# transition band edges of the cutoff
_PSI_EDGES = (0.98, 0.99, 1.03, 1.04)
# support of the band-pass profile
_BAND = (1.0, 1.01)


def _expstep(x: np.ndarray, kappa: float) -> np.ndarray:
    """C^infinity step: exactly 0 for x <= 0, exactly 1 for x >= 1."""
    x = np.asarray(x, dtype=np.float64)
    hp = np.zeros_like(x)
    hm = np.zeros_like(x)
    pos = x > 0
    neg = (1.0 - x) > 0
    hp[pos] = np.exp(-kappa / x[pos])
    hm[neg] = np.exp(-kappa / (1.0 - x)[neg])
    with np.errstate(invalid="ignore"):
        out = np.where(pos & ~neg, 1.0, np.where(pos, hp / (hp + hm), 0.0))
    return out


def _bump01(u: np.ndarray, kappa: float) -> np.ndarray:
    """Smooth bump on (0,1), exactly zero outside, peak value 1 at u=1/2."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    v = u[inside]
    out[inside] = np.exp(kappa * (4.0 - 1.0 / (v * (1.0 - v))))
    return out


@dataclass
class LPFilterPair:
    """Cutoff / band-pass pair with a reproducing normalization.

    kappa controls the sharpness of the exponential transitions; substeps is
    the per-octave refinement of the lattice against which the band-pass is
    square-normalized.
    """

    kappa: float = 1.0
    substeps: int = 100
    _norm_cache: dict = field(default_factory=dict, repr=False)

    def psi_hat(self, xi) -> np.ndarray:
        s = np.abs(np.asarray(xi, dtype=np.float64))
        a, b, c, d = _PSI_EDGES
        up = _expstep((s - a) / (b - a), self.kappa)
        down = 1.0 - _expstep((s - c) / (d - c), self.kappa)
        return up * down

    def _band_profile(self, xi) -> np.ndarray:
        s = np.abs(np.asarray(xi, dtype=np.float64))
        lo, hi = _BAND
        return _bump01((s - lo) / (hi - lo), self.kappa)

    def _norm_factor(self, s: np.ndarray) -> np.ndarray:
        """sqrt of sum_j B(r^-j s)^2 over the lattice orbit; r-periodic in log s."""
        r = 2.0 ** (1.0 / self.substeps)
        lo, hi = _BAND
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        pos = s > 0
        sp = s[pos]
        # only scales with r^-j * s in [lo, hi) contribute
        jlo = np.ceil(np.log(sp / hi) / np.log(r)).astype(int)
        jhi = np.floor(np.log(sp / lo) / np.log(r)).astype(int)
        acc = np.zeros_like(sp)
        width = int((jhi - jlo).max(initial=0)) + 1 if sp.size else 0
        for k in range(width):
            j = jlo + k
            mask = j <= jhi
            vals = np.zeros_like(sp)
            vals[mask] = self._band_profile(sp[mask] * r ** (-j[mask].astype(float))) ** 2
            acc += vals
        out[pos] = np.sqrt(acc)
        return out

    def Psi_hat(self, xi) -> np.ndarray:
        s = np.abs(np.asarray(xi, dtype=np.float64))
        b = self._band_profile(s)
        out = np.zeros_like(b)
        nz = b > 0
        if np.any(nz):
            out[nz] = b[nz] / self._norm_factor(s[nz])
        return out


def make_filter_pair(kappa: float = 1.0, substeps: int = 100) -> LPFilterPair:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return LPFilterPair(kappa=kappa, substeps=substeps)


def project(f: SampledField, t: float, pair: LPFilterPair, kind: str = "P",
            axis: int = 0, lattice: ScaleLattice | None = None) -> SampledField:
    """Apply P_t (cutoff) or the band-pass Psi_t as a Fourier multiplier.

    kind "P" gives the low-pass psi_hat(t xi); kind "band" gives
    Psi_hat(t xi).
    """
    if t <= 0:
        raise ValueError("scale t must be positive")
    if lattice is not None:
        scales = lattice.scales()
        if not np.any(np.isclose(scales, t, rtol=1e-12)):
            raise ValueError(f"scale {t} not on the supplied lattice")
    if kind == "P":
        return apply_multiplier(f, lambda k: pair.psi_hat(t * k), axis=axis)
    if kind == "band":
        return apply_multiplier(f, lambda k: pair.Psi_hat(t * k), axis=axis)
    raise ValueError(f"unknown filter kind {kind!r}")


@dataclass
class CalderonResult:
    field: SampledField
    uncovered: np.ndarray       # integer frequencies with deficient mass
    max_defect: float           # max |sum - 1| over nonzero covered frequencies

    @property
    def complete(self) -> bool:
        return self.uncovered.size == 0


def calderon_sum(f: SampledField, lattice: ScaleLattice, pair: LPFilterPair,
                 axis: int = 0, tol: float = 1e-8) -> CalderonResult:
    """sum_t Psi_t-bar * Psi_t * f over the lattice, with a coverage report.

    With lattice substeps equal to the pair's normalization substeps the
    multiplier sum_t |Psi_hat(t xi)|^2 equals 1 on every covered nonzero
    frequency and the sum reproduces f on those modes.
    """
    grid = f.grid
    k = grid.frequencies() if hasattr(grid, "frequencies") and f.ndim == 1 \
        else grid.frequencies(axis)
    total = np.zeros(k.shape, dtype=np.float64)
    for t in lattice.scales():
        total += pair.Psi_hat(t * k) ** 2
    out = apply_multiplier(f, total.astype(np.complex128), axis=axis)
    nz = k != 0
    defect = np.abs(total - 1.0)
    uncovered = np.sort(k[nz & (defect > tol)])
    max_def = float(defect[nz & (defect <= tol)].max(initial=0.0))
    return CalderonResult(out, uncovered, max_def)


def export_profiles_csv(pair: LPFilterPair, path, xi_min=0.9, xi_max=1.1, count=2001):
    """Write sampled filter profiles (xi, psi_hat, Psi_hat) to CSV."""
    xs = np.linspace(xi_min, xi_max, count)
    ps = pair.psi_hat(xs)
    bs = pair.Psi_hat(xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "psi_hat", "Psi_hat"])
        for x, p, b in zip(xs, ps, bs):
            w.writerow([repr(float(x)), repr(float(p)), repr(float(b))])
