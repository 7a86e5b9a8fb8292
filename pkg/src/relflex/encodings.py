"""Quadrature constructions for specific positional encodings, and PointRoPE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloud, QuadratureSet, RelFlexError, make_rng


def spectral_mass(d: int, lam: float) -> float:
    """``Z_d = integral of exp(-lam |xi|)`` over R^d for d in {1, 2, 3}."""
    if d == 1:
        return 2.0 / lam
    if d == 2:
        return 2.0 * np.pi / lam**2
    if d == 3:
        return 8.0 * np.pi / lam**3
    raise RelFlexError(f"d must be 1, 2 or 3, got {d}")


def sample_cauchy_quadrature(d: int, S: int, lam: float, seed: int) -> QuadratureSet:
    """Monte Carlo quadrature from the density proportional to ``exp(-lam |xi|)``.

    ``S // 2`` frequencies are drawn as a uniform direction times a
    Gamma(d, lam) radius (a sum of ``d`` exponentials) and paired with their
    negatives. Coefficients are ``Z_d / (S * exp(-lam |xi|))``, so each
    sample contributes ``Z_d / S`` once the modulation is applied.
    """
    if S < 2 or S % 2:
        raise RelFlexError(f"quadrature size must be a positive even number, got {S}")
    if not lam > 0:
        raise RelFlexError(f"lambda must be positive, got {lam}")
    mass = spectral_mass(d, lam)
    rng = make_rng(seed)
    half = S // 2
    direction = rng.standard_normal((half, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.exponential(1.0 / lam, size=(half, d)).sum(axis=1)
    coeffs = mass / (S * np.exp(-lam * radius))
    return QuadratureSet.from_half(direction * radius[:, None], coeffs)


def rope_quadrature(theta: float) -> QuadratureSet:
    """Two samples at ``+-theta / (2 pi)`` with weight 1/2 each.

    Under constant-one modulation the induced 1-D mask is
    ``cos(theta (z_i - z_j))``.
    """
    if not theta > 0:
        raise RelFlexError(f"theta must be positive, got {theta}")
    return QuadratureSet.from_half([[theta / (2 * np.pi)]], 0.5)


def string_quadrature(freqs) -> QuadratureSet:
    """Cosine-average mask ``mean_k cos(omega_k . (r_i - r_j))`` as a quadrature.

    Each ``omega_k`` is an angular frequency; it becomes the pair
    ``+-omega_k / (2 pi)`` with weight ``1 / (2 m)``.
    """
    omega = np.asarray(freqs, dtype=np.float64)
    if omega.ndim == 1:
        omega = omega[:, None]
    if not np.all(np.isfinite(omega)):
        raise RelFlexError("non-finite input in freqs")
    m = omega.shape[0]
    return QuadratureSet.from_half(omega / (2 * np.pi), 1.0 / (2 * m))


@dataclass(frozen=True)
class RopeConfig:
    base: float = 10000.0
    thetas: np.ndarray | None = None

    def __post_init__(self):
        if not self.base > 0:
            raise RelFlexError(f"base must be positive, got {self.base}")
        if self.thetas is not None:
            thetas = np.asarray(self.thetas, dtype=np.float64)
            if not np.all(thetas > 0):
                raise RelFlexError("thetas must be strictly positive")
            object.__setattr__(self, "thetas", thetas)

    def axis_thetas(self, block: int) -> np.ndarray:
        """Rotation rates for one axis block: ``base ** (-2 j / block)``."""
        if self.thetas is not None:
            if self.thetas.shape != (block // 2,):
                raise RelFlexError(f"expected {block // 2} thetas, got {self.thetas.shape}")
            return self.thetas
        return self.base ** (-2.0 * np.arange(block // 2) / block)


def apply_point_rope(X, cloud: PointCloud, config: RopeConfig = RopeConfig()) -> np.ndarray:
    """Rotate features by 3-D position, one contiguous block per axis.

    Features are split into three blocks of ``d_head / 3``; inside the block
    for axis ``a``, consecutive pairs ``(2j, 2j+1)`` are rotated by the angle
    ``theta_j * r[a]``.
    """
    X = np.asarray(X, dtype=np.float64)
    if cloud.dim != 3:
        raise RelFlexError(f"PointRoPE needs 3-D coordinates, got d={cloud.dim}")
    L, d_head = X.shape
    if L != cloud.length:
        raise RelFlexError(f"length mismatch: {L} rows vs {cloud.length} points")
    if d_head % 6:
        raise RelFlexError(f"head dimension must be divisible by 6, got {d_head}")
    block = d_head // 3
    thetas = config.axis_thetas(block)
    out = np.empty_like(X)
    for a in range(3):
        angle = cloud.coords[:, a : a + 1] * thetas
        cos, sin = np.cos(angle), np.sin(angle)
        x = X[:, a * block : (a + 1) * block]
        even, odd = x[:, 0::2], x[:, 1::2]
        out[:, a * block : (a + 1) * block : 2] = even * cos - odd * sin
        out[:, a * block + 1 : (a + 1) * block : 2] = even * sin + odd * cos
    return out
