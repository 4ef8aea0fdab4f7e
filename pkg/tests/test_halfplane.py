import numpy as np
import pytest

from dhl.grid import Grid1D, Grid2D, SampledField, ScaleLattice, lp_norm, \
    random_band_limited
from dhl.halfplane import (Tent, UpperHalfField, compact_dictionary,
                           cz_decompose, embed, outer_lp, size,
                           superlevel_measure, tailed_dictionary, whitney)


def const_field(grid, lattice, c):
    return UpperHalfField(grid, lattice, np.full((len(lattice),) + grid.shape, c))


@pytest.fixture(scope="module")
def lat():
    return ScaleLattice(1, 5, substeps=2)


def test_size_infinity_is_sup(lat):
    g = Grid1D(6)
    F = const_field(g, lat, 2.0)
    assert size(F, Tent(0.5, 0.5), np.inf) == 2.0


def test_size_monotone_in_values(lat):
    g = Grid1D(6)
    F1, F2 = const_field(g, lat, 1.0), const_field(g, lat, 3.0)
    t = Tent(0.25, 0.5)
    for p in (1.0, 2.0, np.inf):
        assert size(F2, t, p) >= size(F1, t, p)


def test_outer_lp_homogeneous(lat):
    g = Grid1D(6)
    rng = np.random.default_rng(0)
    vals = np.abs(rng.standard_normal((len(lat),) + g.shape))
    F = UpperHalfField(g, lat, vals)
    G = UpperHalfField(g, lat, 3.0 * vals)
    a = outer_lp(F, 2.0, 2.0)
    b = outer_lp(G, 2.0, 2.0)
    assert b == pytest.approx(3.0 * a, rel=1e-6)


def test_outer_lp_zero_field(lat):
    g = Grid1D(6)
    assert outer_lp(const_field(g, lat, 0.0), 2.0, 2.0) == 0.0


def test_superlevel_measure_monotone(lat):
    g = Grid1D(6)
    rng = np.random.default_rng(1)
    F = UpperHalfField(g, lat, np.abs(rng.standard_normal((len(lat),) + g.shape)))
    lams = [0.25, 0.5, 1.0, 2.0]
    mus = [superlevel_measure(F, lam, np.inf) for lam in lams]
    assert all(a >= b - 1e-12 for a, b in zip(mus, mus[1:]))


def test_embed_average_of_constant(lat):
    g = Grid1D(7)
    f = SampledField(g, np.full(g.n, 2.0))
    F = embed(f, "A_c", lat)
    # ball means of a constant are the constant
    assert np.max(np.abs(F.values - 2.0)) < 1e-12


def test_embed_dc_zero_on_constants(lat):
    g = Grid1D(7)
    f = SampledField(g, np.ones(g.n))
    F = embed(f, "D_c", lat)
    # mean-zero profiles annihilate constants
    assert np.max(F.values) < 1e-12
    G = embed(f, "D", lat)
    assert np.max(G.values) < 1e-12


def test_dictionaries_mean_zero():
    z = np.linspace(-60.0, 60.0, 400001)
    for prof in compact_dictionary(4) + tailed_dictionary(4):
        assert abs(np.trapezoid(prof(z), z)) < 1e-6


def test_compact_dictionary_supports():
    z = np.linspace(-60.0, 60.0, 400001)
    for prof in compact_dictionary(4):
        vals = prof(z)
        assert np.all(vals[np.abs(z) > 1.0] == 0.0)


def test_embed_unknown_kind(lat):
    g = Grid1D(6)
    f = SampledField(g, np.zeros(g.n))
    with pytest.raises(ValueError):
        embed(f, "bogus", lat)


def test_whitney_partitions_open_set():
    g = Grid2D(5, 5)
    mask = np.zeros(g.shape, dtype=bool)
    mask[4:20, 8:28] = True
    cubes = whitney(g, mask)
    counts = np.zeros(g.shape, dtype=int)
    for c in cubes:
        counts[c.slices(g)] += 1
    assert np.all(counts[mask] == 1)
    assert np.all(counts[~mask] == 0)


def test_whitney_separation():
    g = Grid2D(5, 5)
    mask = np.zeros(g.shape, dtype=bool)
    mask[4:20, 8:28] = True
    from dhl.halfplane import _chessboard_distance
    D = _chessboard_distance(mask) / g.shape[0]
    for c in whitney(g, mask):
        assert D[c.slices(g)].min() >= c.side - 1e-12


def test_cz_reconstruction_and_bounds():
    g = Grid1D(8)
    rng = np.random.default_rng(2)
    f = random_band_limited(g, rng)
    f = SampledField(g, f.values.real)
    lam = 1.5 * lp_norm(f, 1)
    dec = cz_decompose(f, lam)
    total = dec.good.values.copy()
    for _, b in dec.atoms:
        total += b.values
        assert abs(b.values.mean()) < 1e-12        # atoms are mean-free
    assert np.allclose(total, f.values, atol=1e-12)
    # good part bounded by a multiple of lambda
    assert np.max(np.abs(dec.good.values)) <= 4 * lam + 1e-12


def test_cz_rejects_tiny_lambda():
    g = Grid1D(6)
    f = SampledField(g, np.ones(g.n))
    with pytest.raises(ValueError):
        cz_decompose(f, 1e-6)


def test_embed_average_window_oracle():
    g = Grid1D(8)
    lat = ScaleLattice(2, 2, substeps=1)    # single scale t = 1/4
    f = SampledField(g, (g.points() < 0.5).astype(np.float64))
    F = embed(f, "A_c", lat)
    i = g.n // 4                            # x = 1/4: window is [0, 1/2]
    assert F.values[0, i] == pytest.approx(1.0, abs=2.0 / g.n)
