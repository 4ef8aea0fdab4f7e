"""End-to-end acceptance suite: one test per headline property.

Each test freezes a configuration (grid, lattice, seeds) and a single
constant calibrated once on this code base; the assertions are the
inequality forms of the headline statements, never tuned per run.
"""

from fractions import Fraction

import numpy as np
from scipy.integrate import simpson

from dhl.cli import _beta_profiles, _random_rects
from dhl.cover import (VParallelogram, overlap_statistics, packing_check,
                       select_cover)
from dhl.directional import (cww_experiment, cww_rate_fit,
                             gaussian_profile, gaussian_profile_hat,
                             martingale_average, n_direction_maximal,
                             single_scale_average)
from dhl.filters import make_filter_pair, project
from dhl.geometry import union_area
from dhl.grid import (Grid1D, Grid2D, SampledField, ScaleLattice, lp_norm,
                      random_band_limited)
from dhl.halfplane import Tent, embed, outer_lp, superlevel_measure
from dhl.lipschitz import (LipschitzFunction, beta_tent_size, beta_weighted,
                           defect_operator, defect_scaling_sweep)
from dhl.tiles import (_PACKET_CACHE, Tile, correlation, embedded_corners,
                       energy_embedding, inner, make_wave_packet,
                       mass_embedding, sigma_measure, split_packet,
                       tile_size)


def random_field_2d(grid, rng, band):
    k1 = grid.frequencies(0)[:, None]
    k2 = grid.frequencies(1)[None, :]
    mask = (np.abs(k1) < band) & (np.abs(k2) < band)
    spec = (rng.standard_normal(grid.shape)
            + 1j * rng.standard_normal(grid.shape)) * mask
    return SampledField(grid, np.fft.ifft2(spec))


def test_criterion_01_diagonal_annihilation():
    grid = Grid1D(10)
    pair = make_filter_pair()
    rng = np.random.default_rng(0)
    for _ in range(100):
        f = random_band_limited(grid, rng, band=128)
        t = float(2.0 ** -rng.uniform(0.0, 8.0))
        band = project(f, t, pair, kind="band")
        resid = band.values - project(band, t, pair, kind="P").values
        err = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
        assert err <= 1e-10 * lp_norm(f, 2)


def test_criterion_02_defect_scaling():
    grid = Grid1D(11)
    pair = make_filter_pair()
    lattice = ScaleLattice(0, 10, substeps=20)
    eps_list = [1 / 800, 1 / 400, 1 / 200, 1 / 100]
    _, slopes = defect_scaling_sweep(
        grid, pair, lattice,
        lambda x: np.sin(2 * np.pi * 4 * x) / (8 * np.pi),
        eps_list, [2.0, 4.0], n_random=10, seed=0, band=256)
    for p, s in slopes.items():
        assert 0.8 <= s <= 1.2, (p, s)
    zero = LipschitzFunction(grid, np.zeros(grid.n))
    rng = np.random.default_rng(0)
    f = random_band_limited(grid, rng, band=256)
    d0 = lp_norm(defect_operator(f, zero, pair, lattice), 2.0)
    assert d0 <= 1e-9 * lp_norm(f, 2.0)


def test_criterion_03_beta_tent_sizes():
    grid = Grid1D(8)
    tents = [Tent(c, s) for c in (0.0, 0.25, 0.5, 0.75)
             for s in (0.25, 0.5, 1.0)]
    for name, vals in _beta_profiles(grid).items():
        A = LipschitzFunction(grid, vals)
        beta = beta_weighted(A, eps=0.25, sample_budget=300, n_max=2)
        if name == "zero":
            assert np.max(np.abs(beta.values)) == 0.0
            continue
        assert A.lip <= 1 / 100
        for tent in tents:
            assert beta_tent_size(beta, tent) <= 1.0 * A.lip


def test_criterion_04_carleson_embeddings():
    grid = Grid1D(7)
    lattice = ScaleLattice(1, 6, substeps=2)
    rng = np.random.default_rng(0)
    c_strong, c_weak = 3.0, 3.0
    for _ in range(20):
        f = random_band_limited(grid, rng, band=grid.n // 8)
        D = embed(f, "D_c", lattice)
        A = embed(f, "A_c", lattice)
        for p in (1.5, 2.0, 4.0):
            fn = lp_norm(f, p)
            assert outer_lp(D, p, size_p=2.0) <= c_strong * fn
            assert outer_lp(A, p, size_p=np.inf) <= c_strong * fn
        f1 = lp_norm(f, 1)
        for lam in np.geomspace(0.05, 2.0, 8):
            assert lam * superlevel_measure(D, lam, size_p=2.0) \
                <= c_weak * f1
            assert lam * superlevel_measure(A, lam, size_p=np.inf) \
                <= c_weak * f1


def test_criterion_05_wave_packets():
    # correlation ladders: decay order 8, required slope <= -(8 - 0.5)
    base = Tile(0, 0, 0, 1)
    g9 = Grid2D(9, 9)
    dls = list(range(1, 7))
    shear = [correlation(base, Tile(0, dl, 0, 1), g9, profile_id=1, unit_m=1)
             for dl in dls]
    slope = np.polyfit(np.log(dls), np.log(shear), 1)[0]
    assert slope <= -7.5, slope
    _PACKET_CACHE.clear()
    g11 = Grid2D(11, 11)
    dks = list(range(6))
    scale = [correlation(base, Tile(dk, 0, 0, 2 ** dk), g11,
                         profile_id=1, unit_m=1) for dk in dks]
    slope = np.polyfit(dks, np.log2(scale), 1)[0]
    assert slope <= -7.5, slope
    _PACKET_CACHE.clear()

    # Bessel sums on a 210-tile collection, 50 random fields
    grid = Grid2D(8, 8)
    tiles = [Tile(k2, l, n1, n2) for k2 in (0, 1, 2) for l in range(-3, 4)
             for n1 in (0, 1) for n2 in range(2 ** k2, 2 ** k2 + 5)]
    rng = np.random.default_rng(0)
    fs = [random_field_2d(grid, rng, band=64) for _ in range(50)]
    totals = np.zeros(len(fs))
    for P in tiles:
        pk = make_wave_packet(P, grid, 2.0, 0, 2)
        for i, f in enumerate(fs):
            totals[i] += abs(inner(f, pk)) ** 2
    for f, tot in zip(fs, totals):
        assert tot <= 1.0 * lp_norm(f, 2) ** 2
    _PACKET_CACHE.clear()

    # split reconstruction with exact supports and vanishing moments
    for C, K in ((6, 4), (8, 5)):
        sp = split_packet(0, C, K)
        bound = 2.0 ** (-C * K) * 2 * np.max(np.abs(sp.source))
        assert np.max(np.abs(sp.reconstruction() - sp.source)) <= bound
        dy = sp.x2_axis[1] - sp.x2_axis[0]
        for part in sp.parts:
            outside = np.abs(sp.x2_axis) > part.support_radius
            if outside.any():
                assert np.max(np.abs(part.values[:, outside])) == 0.0
            for n in range(C - 1):
                mom = simpson(part.values * (sp.x2_axis ** n)[None, :],
                              dx=dy, axis=1)
                assert np.max(np.abs(mom)) < 1e-9


def _dyadic_rects(rng, n):
    # dyadically aligned shadows: intersecting shadows are always nested,
    # which is the structural hypothesis behind the packing identity
    rects = []
    for _ in range(n):
        a = int(rng.choice([1, 2, 3]))
        ln = Fraction(1, 2 ** a)
        left = Fraction(int(rng.integers(0, 2 ** a)), 2 ** a)
        slope = Fraction(int(rng.integers(-4, 5)), 8)
        cy = Fraction(int(rng.integers(2, 15)), 16)
        h = Fraction(1, int(rng.choice([8, 16, 32])))
        rects.append(VParallelogram(left, ln, slope, cy, h))
    return rects


def test_criterion_06_covering():
    shape = (128, 128)
    rng = np.random.default_rng(0)
    for _ in range(50):
        rects = _dyadic_rects(rng, 12)
        res = select_cover(rects, shape)
        assert packing_check(res)["holds"]
        union = union_area([r.corners() for r in rects])
        total = float(sum(r.area for r in res.selected))
        assert total <= 1.0 * union
        # byte-exact determinism under input reordering
        rev = select_cover(list(reversed(rects)), shape)
        assert rev.to_json() == res.to_json()
        u = np.zeros(shape)
        ok = [r for r in rects
              if float(r.uncertainty()[0]) <= 0.0 <= float(r.uncertainty()[1])]
        if ok:
            res2 = select_cover(ok, shape, mode="lipschitz_kakeya", u=u,
                                delta=0.5, densities={r: 1.0 for r in ok})
            assert packing_check(res2)["holds"]
            union2 = union_area([r.corners() for r in ok])
            total2 = float(sum(r.area for r in res2.selected))
            assert total2 <= 1.0 * union2

    # delta-sweep on parallel sub-raster stacks of multiplicity 1/delta
    F = Fraction
    ratios = []
    deltas = (1 / 2, 1 / 4, 1 / 8, 1 / 16)
    for delta in deltas:
        K = int(round(1 / delta))
        H = F(1, 4096)
        stack = [VParallelogram(F(1, 4), F(1, 2), F(0),
                                F(1, 2) + k * H * F(delta), H)
                 for k in range(K)]
        res = select_cover(stack, (64, 64), mode="lipschitz_kakeya",
                           u=np.zeros((64, 64)), delta=delta,
                           densities={R: 1.0 for R in stack})
        sel = res.selected
        stats = overlap_statistics(sel)
        tot = float(sum(S.area for S in sel))
        l2sq = tot + 2 * float(sum(stats["pairs"].values()))
        ratios.append(l2sq / tot)
    slope = np.polyfit(np.log(deltas), np.log(ratios), 1)[0]
    assert -1.4 <= slope <= -0.6, slope


def test_criterion_07_single_scale_square_function():
    grid = Grid2D(6, 6)
    pair = make_filter_pair(substeps=2)
    lattice = ScaleLattice(0, 4, substeps=2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = random_field_2d(grid, rng, band=16)
        u = rng.uniform(-1.0, 1.0, size=grid.n1)
        total = np.zeros(grid.shape)
        for t in lattice.scales():
            pf = project(f, t, pair, kind="P", axis=1, lattice=lattice)
            total += np.abs(single_scale_average(pf, u).values) ** 2
        num = float(np.mean(np.sqrt(total) ** 4) ** 0.25)
        assert num <= 1.0 * lp_norm(f, 4)

    # u == const: exact multiplier oracle
    f = random_field_2d(grid, rng, band=16)
    u0 = 1.0
    avg = single_scale_average(f, np.full(grid.n1, u0))
    k1 = grid.frequencies(0)[:, None]
    k2 = grid.frequencies(1)[None, :]
    oracle = np.fft.ifft2(np.fft.fft2(f.values)
                          * gaussian_profile_hat(k1 + u0 * k2))
    assert np.max(np.abs(avg.values - oracle)) <= 1e-8 * lp_norm(f, 2)


def test_criterion_08_direction_count_sweep():
    grid = Grid2D(7, 7)
    rng = np.random.default_rng(0)
    k1 = grid.frequencies(0)[:, None]
    k2 = grid.frequencies(1)[None, :]
    rad = np.sqrt(k1 ** 2 + k2 ** 2)
    band = (rad > grid.n1 / 4) & (rad < grid.n1 / 2.5)
    phi_l1 = float(np.sum(np.abs(gaussian_profile(
        np.arange(-(grid.n1 // 2), grid.n1 // 2) / grid.n1))) / grid.n1)
    n_list = [1, 2, 4, 8, 16, 32, 64, 128, 256]
    for dset in ("structured", "random"):
        norms = {2.0: [], 3.0: []}
        for N in n_list:
            if dset == "structured":
                dirs = np.clip([2 * k / N for k in range(-(N // 2),
                                                         N - N // 2)],
                               -1.0, 1.0) if N > 1 else np.array([0.0])
            else:
                dirs = rng.uniform(-1.0, 1.0, size=N)
            for p in (2.0, 3.0):
                best = 0.0
                for _ in range(3):
                    spec = (rng.standard_normal(grid.shape)
                            + 1j * rng.standard_normal(grid.shape)) * band
                    f = SampledField(grid, np.fft.ifft2(spec))
                    mf = n_direction_maximal(f, dirs)
                    num = float(np.mean(mf ** p) ** (1 / p))
                    den = float(np.mean(np.abs(f.values) ** p) ** (1 / p))
                    best = max(best, num / den)
                norms[p].append(best)
                if N == 1:
                    assert best <= phi_l1 + 1e-6
        x = np.log(np.log(2.0 + np.array(n_list[1:])))
        for p, vals in norms.items():
            expo = np.polyfit(x, 2 * np.log(vals[1:]), 1)[0]
            assert 0.5 <= expo <= 1.6, (dset, p, expo)


def test_criterion_09_good_lambda_decay():
    grid = Grid2D(8, 8)
    rng = np.random.default_rng(0)
    f = random_band_limited(grid, rng, band=grid.n1 // 4)
    lam = float(np.quantile(np.abs(f.values), 0.5))
    rows = cww_experiment(f, 6, lam, [0.1, 0.2, 0.4, 0.8, 1.6])
    ratios = [r["ratio"] for r in rows]
    # nonincreasing along 1/eps^2, i.e. nondecreasing in eps
    assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))
    assert cww_rate_fit(rows) < 0.0
    coarse = SampledField(grid, martingale_average(f, 2).astype(complex))
    lam2 = float(np.quantile(np.abs(coarse.values), 0.5))
    for r in cww_experiment(coarse, 2, lam2, [0.1, 0.2, 0.4, 0.8, 1.6]):
        assert r["numerator"] == 0.0


def test_criterion_10_mass_energy_embeddings():
    grid = Grid2D(7, 7)
    um = 2
    w = 2.0 ** -um
    tiles = [Tile(k2, l, n1, n2) for k2 in (0, 1) for l in (-1, 0, 1)
             for n1 in (0, 1) for n2 in (2 ** k2, 2 ** k2 + 1)]
    corners = lambda P: embedded_corners(P, um)
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = random_field_2d(grid, rng, band=24)
        g = SampledField(grid, rng.standard_normal(grid.shape))
        u = rng.uniform(-1.0, 1.0, size=grid.shape)
        F = energy_embedding(f, tiles, grid, unit_m=um)
        G = mass_embedding(g, u, tiles, grid, unit_m=um)
        f2 = lp_norm(f, 2)
        # energy sweep: sigma of every superlevel selection against ||f||_2^2
        fmax_val = max(F.values())
        for lam in [fmax_val / 2 ** j for j in range(6)]:
            sel = [P for P in tiles if F[P] >= lam]
            if sel:
                sig = sigma_measure(sel, 10, corners_fn=corners)
                assert sig * lam ** 2 <= 1.0 * f2 ** 2
        # sup-norm form on a random subcollection
        sub = [tiles[i]
               for i in rng.choice(len(tiles), size=12, replace=False)]
        assert tile_size(F, sub, 2) <= 1.0 * float(np.abs(f.values).max())
        # mass sweep at both sigma exponents
        gmax = max(G.values())
        if gmax > 0:
            for q in (1.5, 2.0):
                gq = float(np.mean(np.abs(g.values) ** q))
                for lam in [gmax / 2 ** j for j in range(6)]:
                    sel = [P for P in tiles if G[P] >= lam]
                    for c_sigma in (6, 10):
                        sig = sigma_measure(sel, c_sigma, corners_fn=corners)
                        assert lam ** q * sig <= 1.0 * gq
        # pairing form at p = 4 (dual exponent (p/2)' = 2)
        pairing = sum(float(P.area) * w * w * F[P] ** 2 * G[P] for P in tiles)
        assert pairing <= 1.0 * lp_norm(f, 4) ** 2 * lp_norm(g, 2)
    _PACKET_CACHE.clear()
