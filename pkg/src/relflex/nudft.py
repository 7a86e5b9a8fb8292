"""Nonuniform discrete Fourier transforms between point and frequency sets.

Conventions (``xi`` in cycles, ``r`` in the same units as the point cloud)::

    forward:  F[s] = sum_l u[l] * exp(-2j*pi * xi[s] . r[l])
    adjoint:  w[i] = sum_s b[s] * exp(+2j*pi * xi[s] . r[i])

The ``*_direct`` functions sum every term and serve as the oracle. The
``*_fast`` functions use a Gaussian-gridding type-3 scheme: sources are
spread onto an oversampled grid, the grid is transformed by a uniform FFT,
the result is interpolated at the targets, and both Gaussian factors are
divided out analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import _gridding
from .core import LengthMismatchError, PointCloud, RelFlexError

#: Below this many frequencies the fast entry points evaluate directly.
DIRECT_CUTOFF = 64
#: Default cap on the number of complex cells in the oversampled grid.
MAX_GRID_CELLS = 2**26
#: Rows of the phase matrix materialized at once by the direct sums.
_CHUNK_ELEMS = 2**22


class GridTooLargeError(RelFlexError):
    pass


@dataclass(frozen=True)
class NufftAccuracy:
    """Target relative accuracy and fine-grid oversampling of the gridded path."""

    epsilon: float = 1e-6
    oversampling: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 0.1):
            raise RelFlexError(f"epsilon must lie in (0, 0.1], got {self.epsilon}")
        if not self.oversampling >= 2.0:
            raise RelFlexError(f"oversampling must be >= 2, got {self.oversampling}")

    @property
    def half_width(self) -> int:
        """Kernel half-width in grid cells.

        A Gaussian balanced between truncation and aliasing on a grid
        oversampled by ``R`` loses ``pi (R - 1) / (R - 1/2)`` nats of error
        per cell of half-width; one extra decade of headroom is added.
        """
        R = self.oversampling
        rate = math.pi * (R - 1.0) / (R - 0.5)
        return max(2, math.ceil(math.log(10.0 / self.epsilon) / rate))


def _check_inputs(cloud: PointCloud, values, freqs, n_values: int, what: str):
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.ndim == 1:
        freqs = freqs[:, None]
    if freqs.ndim != 2 or freqs.shape[1] != cloud.dim:
        raise LengthMismatchError(f"length mismatch: freqs must have {cloud.dim} columns, got shape {freqs.shape}")
    values = np.asarray(values)
    if values.ndim != 1:
        raise RelFlexError(f"{what} must be a vector")
    expected = cloud.length if what == "u" else freqs.shape[0]
    if values.shape[0] != expected:
        raise LengthMismatchError(f"length mismatch: {what} has {values.shape[0]} entries, expected {expected}")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(freqs))):
        raise RelFlexError("non-finite input")
    return values.astype(np.complex128), freqs


def _exp_sum(sources, strengths, targets, sign):
    """sum_j strengths[j] * exp(sign * 2j*pi * targets[k] . sources[j]), chunked over targets."""
    out = np.empty(targets.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK_ELEMS // max(1, sources.shape[0]))
    for lo in range(0, targets.shape[0], step):
        phase = targets[lo : lo + step] @ sources.T
        out[lo : lo + step] = np.exp((sign * 2j * np.pi) * phase) @ strengths
    return out


def nudft_forward_direct(cloud: PointCloud, u, freqs) -> np.ndarray:
    """Evaluate ``F[s] = sum_l u[l] exp(-2j pi xi_s . r_l)`` term by term, O(L*S)."""
    u, freqs = _check_inputs(cloud, u, freqs, cloud.length, "u")
    return _exp_sum(cloud.coords, u, freqs, -1.0)


def nudft_adjoint_direct(cloud: PointCloud, b, freqs) -> np.ndarray:
    """Evaluate ``w[i] = sum_s b[s] exp(+2j pi xi_s . r_i)`` term by term, O(L*S)."""
    b, freqs = _check_inputs(cloud, b, freqs, None, "b")
    return _exp_sum(freqs, b, cloud.coords, +1.0)


@dataclass(frozen=True)
class Type3Plan:
    """Geometry of one gridded type-3 transform.

    Computes ``sum_j c_j exp(1j * t_k . x_j)`` for angular targets ``t``.
    Per axis: ``x_center``/``t_center`` are the bounding-box midpoints,
    ``h`` is the source grid spacing, ``tau1``/``tau2`` the Gaussian variances
    of the spreading and interpolation kernels, ``n_src`` the extent of the
    spread data and ``n_fft`` the oversampled FFT length.
    """

    x_center: np.ndarray
    t_center: np.ndarray
    h: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    n_src: np.ndarray
    n_fft: np.ndarray
    width: int
    beta: float

    @property
    def cells(self) -> int:
        return int(np.prod(self.n_fft))


def make_plan(points, targets, acc: NufftAccuracy, max_cells: int = MAX_GRID_CELLS) -> Type3Plan:
    points = np.asarray(points, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    R = float(acc.oversampling)
    w = acc.half_width
    x_center = 0.5 * (points.max(axis=0) + points.min(axis=0))
    t_center = 0.5 * (targets.max(axis=0) + targets.min(axis=0))
    X = np.abs(points - x_center).max(axis=0)
    T = np.abs(targets - t_center).max(axis=0)
    # A flat axis still needs a finite grid spacing.
    T = np.where(T > 0, T, np.where(X > 0, 1.0 / np.where(X > 0, X, 1.0), 1.0))

    h = np.pi / (R * T)
    tau1 = (w * np.pi / (2 * R * (2 * R - 1))) / T**2
    n_src = 2 * (np.ceil(X / h).astype(np.int64) + w + 1)
    n_fft = np.array([scipy.fft.next_fast_len(int(math.ceil(R * n)), real=False) for n in n_src], dtype=np.int64)
    tau2 = (np.pi * w / (R * (R - 0.5))) / n_src.astype(np.float64) ** 2
    plan = Type3Plan(
        x_center=x_center,
        t_center=t_center,
        h=h,
        tau1=tau1,
        tau2=tau2,
        n_src=n_src,
        n_fft=n_fft,
        width=w,
        beta=np.pi * (R - 0.5) / (R * w),
    )
    if plan.cells > max_cells:
        raise GridTooLargeError(f"grid too large: {plan.cells} cells exceeds cap of {max_cells}")
    return plan


def _pad3(start, weights, d):
    n = start.shape[0]
    taps = weights.shape[2]
    s3 = np.zeros((n, 3), dtype=np.int64)
    w3 = np.zeros((n, 3, taps))
    w3[:, :, 0] = 1.0
    s3[:, :d] = start
    w3[:, :d] = weights
    t3 = np.ones(3, dtype=np.int64)
    t3[:d] = taps
    return s3, w3, t3


def type3(points, strengths, targets, plan: Type3Plan) -> np.ndarray:
    """Gridded evaluation of ``sum_j strengths[j] exp(1j t_k . points[j])``."""
    n, d = points.shape
    w = plan.width
    xs = points - plan.x_center
    ts = targets - plan.t_center
    c = strengths * np.exp(1j * (xs @ plan.t_center))

    # Spread: Gaussian exp(-(x - m h)^2 / (4 tau1)) in source-grid units, with
    # the interpolation kernel's deconvolution exp(tau2 m^2) folded in.
    starts, wts = [], []
    for a in range(d):
        tau2 = plan.tau2[a]
        s, wt = _gridding.gaussian_taps(
            xs[:, a] / plan.h[a], w, plan.beta, extra=lambda m, tau2=tau2: np.exp(tau2 * m.astype(np.float64) ** 2)
        )
        starts.append(s)
        wts.append(wt)
    s3, w3, t3 = _pad3(np.stack(starts, axis=1), np.stack(wts, axis=1), d)
    shape = tuple(int(v) for v in plan.n_fft) + (1,) * (3 - d)
    grid = np.zeros(shape, dtype=np.complex128)
    _gridding.spread(grid, s3, w3, t3, c)

    grid = scipy.fft.ifftn(grid, axes=tuple(range(d)), norm="forward", overwrite_x=True)

    starts, wts = [], []
    for a in range(d):
        v = ts[:, a] * plan.h[a] * plan.n_fft[a] / (2 * np.pi)
        beta2 = np.pi**2 / (plan.n_fft[a] ** 2 * plan.tau2[a])
        s, wt = _gridding.gaussian_taps(v, w, beta2)
        starts.append(s)
        wts.append(wt)
    s3, w3, t3 = _pad3(np.stack(starts, axis=1), np.stack(wts, axis=1), d)
    out = np.empty(targets.shape[0], dtype=np.complex128)
    _gridding.interpolate(grid, s3, w3, t3, out)

    # Undo both Gaussians: interpolation weight sqrt(pi/tau2)/N, source-side
    # trapezoid weight h over the kernel transform 2 sqrt(pi tau1) exp(-tau1 t^2).
    scale = np.sqrt(np.pi / plan.tau2) / plan.n_fft * plan.h / (2 * np.sqrt(np.pi * plan.tau1))
    out *= np.prod(scale) * np.exp(ts**2 @ plan.tau1)
    out *= np.exp(1j * (targets @ plan.x_center))
    return out


def _fast(sources, strengths, targets, sign, acc, force_gridded, max_cells):
    if acc is None:
        acc = NufftAccuracy()
    if not force_gridded and targets.shape[0] <= DIRECT_CUTOFF:
        return _exp_sum(sources, strengths, targets, sign)
    angular = (sign * 2 * np.pi) * targets
    plan = make_plan(sources, angular, acc, max_cells)
    return type3(sources, strengths, angular, plan)


def nudft_forward_fast(
    cloud: PointCloud, u, freqs, acc: NufftAccuracy | None = None, *, force_gridded=False, max_cells=MAX_GRID_CELLS
) -> np.ndarray:
    """Gridded approximation of :func:`nudft_forward_direct`.

    Relative L2 error is within ``10 * acc.epsilon``. With ``S <= 64``
    frequencies the direct sum is used unless ``force_gridded`` is set.
    """
    u, freqs = _check_inputs(cloud, u, freqs, cloud.length, "u")
    return _fast(cloud.coords, u, freqs, -1.0, acc, force_gridded, max_cells)


def nudft_adjoint_fast(
    cloud: PointCloud, b, freqs, acc: NufftAccuracy | None = None, *, force_gridded=False, max_cells=MAX_GRID_CELLS
) -> np.ndarray:
    """Gridded approximation of :func:`nudft_adjoint_direct`; see :func:`nudft_forward_fast`."""
    b, freqs = _check_inputs(cloud, b, freqs, None, "b")
    if not force_gridded and freqs.shape[0] <= DIRECT_CUTOFF:
        return _exp_sum(freqs, b, cloud.coords, +1.0)
    if acc is None:
        acc = NufftAccuracy()
    angular = 2 * np.pi * cloud.coords
    plan = make_plan(freqs, angular, acc, max_cells)
    return type3(freqs, b, angular, plan)
