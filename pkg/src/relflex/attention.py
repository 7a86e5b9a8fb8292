"""Dense attention oracles, Performer attention, and masked low-rank attention.

All outputs carry the row normalizers that were actually divided by. Row
normalizers below ``DEN_FLOOR`` are clamped up to it and counted, since a
quadrature mask may be negative and can push a row sum to zero or below.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AttentionBatch, FeatureMap, LengthMismatchError, PointCloud, RelFlexError, validate_batch
from .fastmult import MaskSpec, dense_quadrature_mask, fastmult
from .nudft import NufftAccuracy

log = logging.getLogger(__name__)

DEN_FLOOR = 1e-8
MASKED_BACKENDS = ("dense-oracle", "fastmult-direct", "fastmult-gridded")


@dataclass(frozen=True)
class AttentionOutput:
    embeddings: np.ndarray
    denominators: np.ndarray
    n_clamped: int = 0


def _normalize(numer, den, floor=DEN_FLOOR) -> AttentionOutput:
    clamped = den < floor
    n_clamped = int(clamped.sum())
    if n_clamped:
        log.debug("clamped %d attention normalizers to %.1e", n_clamped, floor)
    den = np.where(clamped, floor, den)
    return AttentionOutput(numer / den[:, None], den, n_clamped)


def apply_feature_map(phi: FeatureMap, X) -> np.ndarray:
    """Map rows of ``X`` to nonnegative features.

    ``relu`` gives ``max(x, 0)``. ``positive-random`` gives
    ``exp(W x - |x|^2 / 2) / sqrt(m)``, whose inner products estimate
    ``exp(x . y)`` without bias.
    """
    X = np.asarray(X, dtype=np.float64)
    if phi.kind == "relu":
        return np.maximum(X, 0.0)
    if phi.proj is None:
        raise RelFlexError("positive-random feature map has no projection")
    if phi.proj.shape[1] != X.shape[1]:
        raise LengthMismatchError(f"length mismatch: projection expects {phi.proj.shape[1]} inputs, got {X.shape[1]}")
    m = phi.proj.shape[0]
    return np.exp(X @ phi.proj.T - 0.5 * np.sum(X**2, axis=1, keepdims=True)) / np.sqrt(m)


def _softmax_scores(batch: AttentionBatch) -> np.ndarray:
    scores = batch.Q @ batch.K.T
    scores /= np.sqrt(batch.d_qk)
    scores -= scores.max(axis=1, keepdims=True)
    return np.exp(scores)


def dense_softmax_attention(batch: AttentionBatch) -> AttentionOutput:
    """Softmax attention with ``1/sqrt(d_qk)`` scaling, row-max shifted.

    The reported denominators are the shifted row sums, each at least 1.
    """
    A = _softmax_scores(batch)
    return _normalize(A @ batch.V, A.sum(axis=1))


def dense_softmax_bytes(L: int) -> int:
    """Peak bytes of L x L storage held by :func:`dense_softmax_attention`."""
    return 2 * 8 * L * L


def dense_masked_attention(batch: AttentionBatch, M, kernel: str = "softmax", phi: FeatureMap | None = None):
    """Reference masked attention ``normalize_rows(A * M) @ V``.

    ``kernel="softmax"`` uses the row-shifted ``exp(Q K^T / sqrt(d_qk))``;
    ``kernel="lowrank"`` uses ``phi(Q) phi(K)^T`` and requires ``phi``.
    """
    M = np.asarray(M, dtype=np.float64)
    L = batch.length
    if M.shape != (L, L):
        raise LengthMismatchError(f"length mismatch: mask has shape {M.shape}, expected {(L, L)}")
    if kernel == "softmax":
        A = _softmax_scores(batch)
    elif kernel == "lowrank":
        if phi is None:
            raise RelFlexError("lowrank kernel needs a feature map")
        A = apply_feature_map(phi, batch.Q) @ apply_feature_map(phi, batch.K).T
    else:
        raise RelFlexError(f"unknown kernel {kernel!r}")
    A = A * M
    return _normalize(A @ batch.V, A.sum(axis=1))


def performer_attention(batch: AttentionBatch, phi: FeatureMap) -> AttentionOutput:
    """Low-rank attention in factored order; no L x L array is formed."""
    fq = apply_feature_map(phi, batch.Q)
    fk = apply_feature_map(phi, batch.K)
    return _normalize(fq @ (fk.T @ batch.V), fq @ fk.sum(axis=0))


def _apply_mask(cols, cloud, spec, backend, acc, threads):
    if backend == "dense-oracle":
        return dense_quadrature_mask(cloud, spec) @ cols
    inner = "direct" if backend == "fastmult-direct" else "gridded"
    if threads <= 1 or cols.shape[1] < 2:
        return fastmult(cloud, cols, spec, inner, acc)
    chunks = np.array_split(np.arange(cols.shape[1]), threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda idx: fastmult(cloud, cols[:, idx], spec, inner, acc), chunks)
        return np.concatenate(list(parts), axis=1)


def masked_lowrank_attention(
    batch: AttentionBatch,
    phi: FeatureMap,
    cloud: PointCloud,
    spec: MaskSpec,
    backend: str = "fastmult-direct",
    acc: NufftAccuracy | None = None,
    threads: int = 1,
) -> AttentionOutput:
    """Masked low-rank attention through repeated mask-vector products.

    Row ``i`` of the stacked input holds ``vec(phi(k_i) v_i^T)`` (row-major,
    feature index outer, value index inner) followed by ``phi(k_i)``. Each of
    the ``m*d_v + m`` columns is multiplied by the mask, and the output row is
    ``phi(q_i) . devec(numerator_i) / clamp(phi(q_i) . denominator_i)``.
    """
    if backend not in MASKED_BACKENDS:
        raise RelFlexError(f"unknown backend {backend!r}")
    validate_batch(batch, cloud)
    L, d_v = batch.length, batch.d_v
    fq = apply_feature_map(phi, batch.Q)
    fk = apply_feature_map(phi, batch.K)
    m = fk.shape[1]

    V1 = (fk[:, :, None] * batch.V[:, None, :]).reshape(L, m * d_v)
    masked = _apply_mask(np.concatenate([V1, fk], axis=1), cloud, spec, backend, acc, threads)
    D1 = masked[:, : m * d_v].reshape(L, m, d_v)
    D2 = masked[:, m * d_v :]

    numer = np.einsum("lm,lmv->lv", fq, D1)
    den = np.einsum("lm,lm->l", fq, D2)
    return _normalize(numer, den)
