import numpy as np

from dhl.maximal import square_maximal_2d, uncentered_maximal


def brute_uncentered(a, lengths):
    n = a.size
    out = np.zeros(n)
    for i in range(n):
        best = 0.0
        for ln in lengths:
            for s in range(i - ln + 1, i + 1):
                w = np.take(a, range(s, s + ln), mode="wrap")
                best = max(best, np.abs(w).mean())
        out[i] = best
    return out


def test_uncentered_dominates_pointwise():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(64)
    m = uncentered_maximal(a)
    assert np.all(m >= np.abs(a) - 1e-12)


def test_uncentered_constant_fixed_point():
    a = np.full(32, 2.5)
    assert np.allclose(uncentered_maximal(a), 2.5)


def test_uncentered_matches_bruteforce():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(16)
    lengths = [1, 2, 4, 8]
    m = uncentered_maximal(a, lengths=lengths)
    assert np.allclose(m, brute_uncentered(a, lengths))


def test_square_maximal_dominates():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((16, 16))
    m = square_maximal_2d(a)
    assert np.all(m >= np.abs(a) - 1e-12)


def test_square_maximal_constant():
    a = np.full((8, 8), -1.5)
    assert np.allclose(square_maximal_2d(a), 1.5)
