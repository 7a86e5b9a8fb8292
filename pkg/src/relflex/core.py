"""Domain types, validation and coordinate handling shared across the package.

Every container here is a frozen dataclass holding float64 numpy arrays that
are marked read-only after validation, so instances can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from os import PathLike
from typing import Optional

import numpy as np

MAX_SEED = 2**64 - 1


class RelFlexError(ValueError):
    """Base class for input errors raised by this package."""


class LengthMismatchError(RelFlexError):
    pass


class NonFiniteInputError(RelFlexError):
    pass


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise RelFlexError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"non-finite input in {name}")
    arr.setflags(write=False)
    return arr


def make_rng(seed: int) -> np.random.Generator:
    """Return the generator used by every seeded operation in the package."""
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise RelFlexError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class PointCloud:
    """Token positions, one row per token, ``d`` in {1, 2, 3} columns."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        coords = _frozen(coords, 2, "coords")
        if coords.shape[0] < 1:
            raise RelFlexError("point cloud needs at least one point")
        if coords.shape[1] not in (1, 2, 3):
            raise RelFlexError(f"point dimension must be 1, 2 or 3, got {coords.shape[1]}")
        object.__setattr__(self, "coords", coords)

    @property
    def length(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class QuadratureSet:
    """Frequency samples and their quadrature weights.

    With ``symmetric=True`` rows come in ``(xi, -xi)`` pairs carrying equal
    coefficients, which is what makes the induced mask real.
    """

    freqs: np.ndarray
    coeffs: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.float64)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        freqs = _frozen(freqs, 2, "freqs")
        coeffs = _frozen(self.coeffs, 1, "coeffs")
        if freqs.shape[0] < 1:
            raise RelFlexError("quadrature needs at least one sample")
        if coeffs.shape[0] != freqs.shape[0]:
            raise LengthMismatchError(
                f"length mismatch: {freqs.shape[0]} frequencies vs {coeffs.shape[0]} coefficients"
            )
        if self.symmetric:
            if freqs.shape[0] % 2:
                raise RelFlexError("symmetric quadrature needs an even number of samples")
            if not (np.array_equal(freqs[1::2], -freqs[0::2]) and np.array_equal(coeffs[1::2], coeffs[0::2])):
                raise RelFlexError("symmetric quadrature rows must come in (xi, -xi) pairs with equal coefficients")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def size(self) -> int:
        return self.freqs.shape[0]

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @classmethod
    def from_half(cls, half_freqs, half_coeffs) -> "QuadratureSet":
        """Pair-symmetrize ``half_freqs`` into interleaved ``xi, -xi`` rows."""
        half_freqs = np.asarray(half_freqs, dtype=np.float64)
        if half_freqs.ndim == 1:
            half_freqs = half_freqs[:, None]
        half_coeffs = np.broadcast_to(np.asarray(half_coeffs, dtype=np.float64), half_freqs.shape[:1])
        freqs = np.empty((2 * half_freqs.shape[0], half_freqs.shape[1]))
        freqs[0::2] = half_freqs
        freqs[1::2] = -half_freqs
        return cls(freqs, np.repeat(half_coeffs, 2), symmetric=True)


@dataclass(frozen=True)
class ModulationFunction:
    """Frequency-domain modulation ``F_f``.

    ``kind="exp-norm"`` evaluates ``exp(-lam * ||xi||)``; ``kind="constant-one"``
    evaluates to 1 everywhere and ignores ``lam``.
    """

    lam: float = 1.0
    kind: str = "exp-norm"

    def __post_init__(self):
        if self.kind not in ("exp-norm", "constant-one"):
            raise RelFlexError(f"unknown modulation kind {self.kind!r}")
        lam = float(self.lam)
        if self.kind == "exp-norm" and not (np.isfinite(lam) and lam > 0):
            raise RelFlexError(f"lambda must be positive and finite, got {self.lam}")
        object.__setattr__(self, "lam", lam)

    def __call__(self, freqs) -> np.ndarray:
        freqs = np.asarray(freqs, dtype=np.float64)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        if self.kind == "constant-one":
            return np.ones(freqs.shape[0])
        return np.exp(-self.lam * np.linalg.norm(freqs, axis=1))


@dataclass(frozen=True)
class AttentionBatch:
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        Q = _frozen(self.Q, 2, "Q")
        K = _frozen(self.K, 2, "K")
        V = _frozen(self.V, 2, "V")
        if not (Q.shape[0] == K.shape[0] == V.shape[0]):
            raise LengthMismatchError(
                f"length mismatch: Q, K, V have {Q.shape[0]}, {K.shape[0]}, {V.shape[0]} rows"
            )
        if Q.shape[1] != K.shape[1]:
            raise LengthMismatchError(f"length mismatch: Q has {Q.shape[1]} columns, K has {K.shape[1]}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "V", V)

    @property
    def length(self) -> int:
        return self.Q.shape[0]

    @property
    def d_qk(self) -> int:
        return self.Q.shape[1]

    @property
    def d_v(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class FeatureMap:
    """Nonnegative feature map used by low-rank attention.

    ``relu`` is the identity-sized map ``max(x, 0)``. ``positive-random`` holds
    an ``m x d_qk`` Gaussian projection; build one with :meth:`positive_random`.
    """

    kind: str = "relu"
    proj: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("relu", "positive-random"):
            raise RelFlexError(f"unknown feature map kind {self.kind!r}")
        if self.proj is not None:
            object.__setattr__(self, "proj", _frozen(self.proj, 2, "proj"))

    @classmethod
    def positive_random(cls, d_qk: int, m: int, seed: int) -> "FeatureMap":
        proj = make_rng(seed).standard_normal((int(m), int(d_qk)))
        return cls("positive-random", proj)

    def output_dim(self, d_qk: int) -> int:
        if self.kind == "relu":
            return d_qk
        return self.proj.shape[0]


def normalize_coords(cloud: PointCloud) -> PointCloud:
    """Center each axis and divide by one global standard deviation.

    A single scale is shared by all axes so Euclidean distances keep their
    relative geometry; the result has zero column means and mean squared
    deviation one over all entries.
    """
    coords = cloud.coords
    if coords.shape[0] < 2:
        raise RelFlexError("zero variance: need at least two points to normalize")
    centered = coords - coords.mean(axis=0)
    var = np.mean(centered**2)
    if var == 0.0:
        raise RelFlexError("zero variance: all points are identical")
    return PointCloud(centered / np.sqrt(var))


def validate_batch(batch: AttentionBatch, cloud: PointCloud) -> None:
    """Raise unless ``batch`` and ``cloud`` describe the same tokens."""
    for name in ("Q", "K", "V"):
        if not np.all(np.isfinite(getattr(batch, name))):
            raise NonFiniteInputError(f"non-finite input in {name}")
    if not np.all(np.isfinite(cloud.coords)):
        raise NonFiniteInputError("non-finite input in coords")
    if not (batch.Q.shape[0] == batch.K.shape[0] == batch.V.shape[0] == cloud.length):
        raise LengthMismatchError(
            f"length mismatch: batch has {batch.Q.shape[0]} rows, cloud has {cloud.length} points"
        )


def read_point_cloud(path: str | PathLike) -> PointCloud:
    """Parse the whitespace text format: one point per line, ``#`` comments.

    The column count is fixed by the first data line; later lines with a
    different count raise an error naming the offending line number.
    """
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                values = [float(tok) for tok in stripped.split()]
            except ValueError as exc:
                raise RelFlexError(f"line {lineno}: cannot parse {stripped!r}") from exc
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise RelFlexError(f"line {lineno}: expected {width} columns, found {len(values)}")
            rows.append(values)
    if not rows:
        raise RelFlexError(f"{path}: no points found")
    return PointCloud(np.array(rows))
