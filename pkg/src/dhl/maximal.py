"""Uncentered maximal functions on periodic grids.

The core routine computes, along one axis, the maximal average of |f| over
all cyclic grid-aligned windows containing each sample.  Cost is
O(N^2 * other axes) via one sliding-max pass per window length.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter1d


def _window_means(a: np.ndarray, length: int) -> np.ndarray:
    """Cyclic window means along the last axis: out[..., j] = mean a[..., j:j+L]."""
    n = a.shape[-1]
    ext = np.concatenate([a, a[..., : length - 1]], axis=-1) if length > 1 else a
    c = np.cumsum(ext, axis=-1)
    zero = np.zeros(a.shape[:-1] + (1,), dtype=c.dtype)
    c = np.concatenate([zero, c], axis=-1)
    return (c[..., length : length + n] - c[..., :n]) / length


def _trailing_window_max(a: np.ndarray, length: int) -> np.ndarray:
    """Cyclic max over windows ending at j along the last axis."""
    if length == 1:
        return a
    origin = (length - 1) // 2
    return maximum_filter1d(a, size=length, axis=-1, mode="wrap", origin=origin)


def uncentered_maximal(values: np.ndarray, axis: int = -1, lengths=None) -> np.ndarray:
    """Uncentered Hardy-Littlewood maximal of |values| along one cyclic axis.

    M f(j) = max over grid intervals J (any length 1..N) containing j of the
    average of |f| over J.
    """
    a = np.abs(np.moveaxis(np.asarray(values), axis, -1)).astype(np.float64)
    n = a.shape[-1]
    if lengths is None:
        lengths = range(1, n + 1)
    out = np.zeros_like(a)
    for length in lengths:
        means = _window_means(a, int(length))
        np.maximum(out, _trailing_window_max(means, int(length)), out=out)
    return np.moveaxis(out, -1, axis)


def square_maximal_2d(values: np.ndarray, lengths=None) -> np.ndarray:
    """Uncentered maximal over axis-aligned dyadic-side squares on the torus.

    Comparable to the full Hardy-Littlewood maximal within an absolute
    factor; dyadic side lengths keep the cost at O(N^2 log N).
    """
    a = np.abs(np.asarray(values)).astype(np.float64)
    n1, n2 = a.shape
    if lengths is None:
        lengths = [1 << k for k in range(0, int(np.log2(min(n1, n2))) + 1)]
    out = np.zeros_like(a)
    for length in lengths:
        m = _window_means(a, length)                       # along axis 1
        m = _window_means(np.moveaxis(m, 0, -1), length)   # along axis 0
        m = np.moveaxis(m, -1, 0)
        t = _trailing_window_max(m, length)
        t = np.moveaxis(_trailing_window_max(np.moveaxis(t, 0, -1), length), -1, 0)
        np.maximum(out, t, out=out)
    return out
