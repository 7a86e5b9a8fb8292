"""Fast relative-position mask products.

The mask ``M[i, j] = sum_s a_s F_f(xi_s) cos(2 pi xi_s . (r_i - r_j))`` is
never formed by :func:`fastmult`: a vector is taken to frequency space at the
quadrature samples, weighted, and brought back to the points. The dense
builders here exist as oracles and as the naive benchmark baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import LengthMismatchError, ModulationFunction, PointCloud, QuadratureSet, RelFlexError
from .nudft import NufftAccuracy, nudft_adjoint_fast, nudft_forward_fast

log = logging.getLogger(__name__)

BACKENDS = ("direct", "gridded")


class ComplexMaskError(RelFlexError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    quad: QuadratureSet
    modulation: ModulationFunction = ModulationFunction()

    def weights(self) -> np.ndarray:
        """Per-sample products ``a_s * F_f(xi_s)``."""
        return self.quad.coeffs * self.modulation(self.quad.freqs)

    def diagonal(self) -> float:
        """Mask value at zero displacement, ``sum_s a_s F_f(xi_s)``."""
        return float(self.weights().sum())


@dataclass(frozen=True)
class BlendSchedule:
    """Warmup weight between the all-ones mask (0) and the full mask (1)."""

    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise RelFlexError(f"alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def cosine(cls, step: float, warmup_steps: float) -> "BlendSchedule":
        """``alpha = (1 - cos(pi * min(step / warmup_steps, 1))) / 2``."""
        frac = min(step / warmup_steps, 1.0) if warmup_steps > 0 else 1.0
        return cls(0.5 * (1.0 - np.cos(np.pi * frac)))


def _check(cloud: PointCloud, spec: MaskSpec):
    if not spec.quad.symmetric:
        raise ComplexMaskError("complex mask: fastmult needs a pair-symmetric quadrature")
    if spec.quad.dim != cloud.dim:
        raise LengthMismatchError(f"length mismatch: quadrature dim {spec.quad.dim} vs cloud dim {cloud.dim}")


def _as_columns(cloud, u):
    u = np.asarray(u, dtype=np.float64)
    if u.shape[:1] != (cloud.length,) or u.ndim > 2:
        raise LengthMismatchError(f"length mismatch: u has shape {u.shape}, cloud has {cloud.length} points")
    return u


def _discard_imag(w: np.ndarray, tol: float) -> np.ndarray:
    scale = np.linalg.norm(w)
    resid = np.linalg.norm(w.imag)
    if scale > 0 and resid > tol * scale:
        raise ComplexMaskError(f"complex mask: imaginary residue {resid / scale:.3e} exceeds {tol:.1e}")
    log.debug("discarding imaginary residue %.3e", resid / scale if scale else 0.0)
    return np.ascontiguousarray(w.real)


def fastmult(
    cloud: PointCloud,
    u,
    spec: MaskSpec,
    backend: str = "direct",
    acc: NufftAccuracy | None = None,
    *,
    force_gridded: bool = False,
) -> np.ndarray:
    """Apply the quadrature mask to ``u`` without forming it.

    Parameters
    ----------
    cloud : PointCloud
        Token positions ``r_i``.
    u : array of shape (L,) or (L, C)
        Vector, or columns applied independently.
    spec : MaskSpec
        Symmetric quadrature and modulation defining the mask.
    backend : {"direct", "gridded"}
        ``direct`` sums the exponentials exactly in O(L S); ``gridded`` uses
        the type-3 NUFFT at accuracy ``acc``.

    Returns
    -------
    ndarray
        ``M @ u``, same shape as ``u``.
    """
    _check(cloud, spec)
    u = _as_columns(cloud, u)
    if backend not in BACKENDS:
        raise RelFlexError(f"unknown backend {backend!r}")
    weights = spec.weights()
    xi = spec.quad.freqs

    if backend == "direct":
        # Real and imaginary parts kept as separate real arrays. With (xi, -xi)
        # pairs the imaginary part of the result cancels exactly in exact
        # arithmetic, so only the real part is formed.
        angle = (2 * np.pi) * (xi @ cloud.coords.T)  # S x L
        cos, sin = np.cos(angle), np.sin(angle)
        wts = weights if u.ndim == 1 else weights[:, None]
        spec_re = wts * (cos @ u)  # Re(b) where b = a F_f F_P
        spec_im = wts * (sin @ u)  # -Im(b)
        return cos.T @ spec_re + sin.T @ spec_im

    acc = acc or NufftAccuracy()
    cols = u[:, None] if u.ndim == 1 else u
    out = np.empty(cols.shape)
    for k in range(cols.shape[1]):
        spectrum = nudft_forward_fast(cloud, cols[:, k], xi, acc, force_gridded=force_gridded)
        w = nudft_adjoint_fast(cloud, weights * spectrum, xi, acc, force_gridded=force_gridded)
        out[:, k] = _discard_imag(w, 10 * acc.epsilon)
    return out[:, 0] if u.ndim == 1 else out


def dense_quadrature_mask(cloud: PointCloud, spec: MaskSpec) -> np.ndarray:
    """Materialize the mask entrywise from pairwise displacements (oracle only)."""
    _check(cloud, spec)
    weights = spec.weights()
    L = cloud.length
    M = np.zeros((L, L))
    buf = np.empty((L, L))
    # rows are (xi, -xi) pairs with equal weight; each pair gives 2 a cos(.)
    for xi, a_pos, a_neg in zip(spec.quad.freqs[0::2], weights[0::2], weights[1::2]):
        proj = (2 * np.pi) * (cloud.coords @ xi)
        np.subtract.outer(proj, proj, out=buf)
        np.cos(buf, out=buf)
        buf *= a_pos + a_neg
        M += buf
    return M


def dense_mask_bytes(L: int) -> int:
    """Peak bytes of L x L storage held by :func:`dense_quadrature_mask`."""
    return 3 * 8 * L * L


def ideal_mask_value(displacement, lam: float) -> np.ndarray:
    """Continuous mask ``f(z) = int exp(-lam |xi|) exp(2 pi i xi . z) dxi``.

    Closed forms for ``t = lam^2 + 4 pi^2 |z|^2``: ``2 lam / t`` (d=1),
    ``2 pi lam / t^1.5`` (d=2), ``8 pi lam / t^2`` (d=3). ``displacement`` may
    be a single vector or a stack of them along the leading axes.
    """
    z = np.asarray(displacement, dtype=np.float64)
    if z.ndim == 0:
        z = z[None]
    if not lam > 0:
        raise RelFlexError(f"lambda must be positive, got {lam}")
    d = z.shape[-1]
    t = lam**2 + 4 * np.pi**2 * np.sum(z**2, axis=-1)
    if d == 1:
        return 2 * lam / t
    if d == 2:
        return 2 * np.pi * lam / t**1.5
    if d == 3:
        return 8 * np.pi * lam / t**2
    raise RelFlexError(f"no closed form wired for d={d}")


def dense_ideal_mask(cloud: PointCloud, lam: float) -> np.ndarray:
    coords = cloud.coords
    return ideal_mask_value(coords[:, None, :] - coords[None, :, :], lam)


def blended_fastmult(
    cloud: PointCloud,
    u,
    spec: MaskSpec,
    sched: BlendSchedule,
    backend: str = "direct",
    acc: NufftAccuracy | None = None,
) -> np.ndarray:
    """Apply ``1 + alpha (M - 1)`` as ``(1 - alpha) * sum(u) + alpha * M u``."""
    _check(cloud, spec)
    u = _as_columns(cloud, u)
    out = (1.0 - sched.alpha) * np.broadcast_to(u.sum(axis=0), u.shape)
    if sched.alpha > 0:
        out = out + sched.alpha * fastmult(cloud, u, spec, backend, acc)
    return np.array(out)
