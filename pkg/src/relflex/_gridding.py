"""Numba loops for Gaussian spreading and interpolation on periodic 3-D grids.

Lower-dimensional problems are padded with singleton axes (one tap of weight
one), so a single pair of kernels covers d = 1, 2, 3. Loops run serially over
points, which keeps the accumulation order, and hence the output, fixed.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def spread(grid, start, weights, taps, values):
    """grid[(start + k) mod n] += values[j] * prod_a weights[j, a, k_a]."""
    n0, n1, n2 = grid.shape
    t0, t1, t2 = taps[0], taps[1], taps[2]
    for j in range(values.shape[0]):
        c = values[j]
        s0, s1, s2 = start[j, 0], start[j, 1], start[j, 2]
        for k0 in range(t0):
            i0 = (s0 + k0) % n0
            c0 = c * weights[j, 0, k0]
            for k1 in range(t1):
                i1 = (s1 + k1) % n1
                c1 = c0 * weights[j, 1, k1]
                for k2 in range(t2):
                    grid[i0, i1, (s2 + k2) % n2] += c1 * weights[j, 2, k2]


@nb.njit(cache=True)
def interpolate(grid, start, weights, taps, out):
    """out[j] = sum_k grid[(start + k) mod n] * prod_a weights[j, a, k_a]."""
    n0, n1, n2 = grid.shape
    t0, t1, t2 = taps[0], taps[1], taps[2]
    for j in range(out.shape[0]):
        acc = 0j
        s0, s1, s2 = start[j, 0], start[j, 1], start[j, 2]
        for k0 in range(t0):
            i0 = (s0 + k0) % n0
            for k1 in range(t1):
                i1 = (s1 + k1) % n1
                w01 = weights[j, 0, k0] * weights[j, 1, k1]
                for k2 in range(t2):
                    acc += grid[i0, i1, (s2 + k2) % n2] * (w01 * weights[j, 2, k2])
        out[j] = acc


def gaussian_taps(u, width, beta, extra=None):
    """Start index and Gaussian weights ``exp(-beta (m - u)^2)`` for 2*width taps.

    ``extra``, if given, is a callable of the integer grid index whose value
    multiplies each weight (used to fold in grid-side deconvolution).
    """
    start = np.floor(u).astype(np.int64) - width + 1
    m = start[:, None] + np.arange(2 * width)
    w = np.exp(-beta * (m - u[:, None]) ** 2)
    if extra is not None:
        w = w * extra(m)
    return start, w
