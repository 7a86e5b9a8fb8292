"""Benchmark and error studies behind the CLI. Each returns a list of row dicts."""

from __future__ import annotations

import logging
import time
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .attention import (
    dense_softmax_attention,
    dense_softmax_bytes,
    masked_lowrank_attention,
    performer_attention,
)
from .core import AttentionBatch, FeatureMap, ModulationFunction, PointCloud, make_rng
from .encodings import sample_cauchy_quadrature
from .fastmult import MaskSpec, dense_ideal_mask, dense_mask_bytes, dense_quadrature_mask, fastmult, ideal_mask_value
from .nudft import NufftAccuracy

log = logging.getLogger(__name__)

#: Cap on L x L storage for the dense baselines, standing in for device OOM.
DENSE_CAP_BYTES = 2 * 2**30
OOM = "OOM-capped"


def time_call(fn: Callable[[], object], repeats: int) -> dict:
    """Median, 10th and 90th percentile wall time in ms, after one warmup call."""
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e3)
    p10, med, p90 = np.percentile(samples, [10, 50, 90])
    return {"median_ms": med, "p10_ms": p10, "p90_ms": p90, "status": "ok"}


def random_cloud(L: int, d: int, rng: np.random.Generator, distribution: str = "uniform") -> PointCloud:
    if distribution == "uniform":
        return PointCloud(rng.random((L, d)))
    if distribution == "gaussian":
        return PointCloud(rng.standard_normal((L, d)))
    raise ValueError(f"unknown cloud distribution {distribution!r}")


def random_batch(L: int, d_qk: int, d_v: int, rng: np.random.Generator) -> AttentionBatch:
    return AttentionBatch(
        rng.standard_normal((L, d_qk)) / d_qk**0.25,
        rng.standard_normal((L, d_qk)) / d_qk**0.25,
        rng.standard_normal((L, d_v)),
    )


def _feature_map(kind: str, d_qk: int, m: int, seed: int) -> FeatureMap:
    if kind == "relu":
        return FeatureMap("relu")
    return FeatureMap.positive_random(d_qk, m, seed)


def _capped_row(method, L):
    return {"method": method, "L": L, "median_ms": "", "p10_ms": "", "p90_ms": "", "status": OOM}


def bench_scaling(
    lengths: Sequence[int],
    dim: int = 3,
    S: int = 8,
    lam: float = 1.0,
    feature_map: str = "relu",
    features: int = 16,
    d_qk: int = 16,
    d_v: int = 16,
    backend: str = "fastmult-direct",
    epsilon: float = 1e-6,
    repeats: int = 3,
    seed: int = 0,
    threads: int = 1,
    distribution: str = "uniform",
    dense_cap_bytes: int = DENSE_CAP_BYTES,
) -> list[dict]:
    """Time dense softmax, Performer and masked low-rank attention against L."""
    rng = make_rng(seed)
    phi = _feature_map(feature_map, d_qk, features, seed)
    spec = MaskSpec(sample_cauchy_quadrature(dim, S, lam, seed), ModulationFunction(lam))
    acc = NufftAccuracy(epsilon)
    rows = []
    dense_capped = False
    for L in lengths:
        cloud = random_cloud(L, dim, rng, distribution)
        batch = random_batch(L, d_qk, d_v, rng)
        if dense_capped or dense_softmax_bytes(L) > dense_cap_bytes:
            dense_capped = True
            rows.append(_capped_row("transformer", L))
        else:
            rows.append({"method": "transformer", "L": L, **time_call(lambda: dense_softmax_attention(batch), repeats)})
        rows.append({"method": "performer", "L": L, **time_call(lambda: performer_attention(batch, phi), repeats)})
        rows.append(
            {
                "method": "relflexformer",
                "L": L,
                **time_call(lambda: masked_lowrank_attention(batch, phi, cloud, spec, backend, acc, threads), repeats),
            }
        )
        log.info("bench-scaling L=%d done", L)
    return rows


def bench_fastmult(
    lengths: Sequence[int],
    dim: int = 3,
    S: int = 8,
    lam: float = 1.0,
    epsilon: float = 1e-6,
    repeats: int = 3,
    seed: int = 0,
    distribution: str = "uniform",
    dense_cap_bytes: int = DENSE_CAP_BYTES,
    cloud: PointCloud | None = None,
) -> list[dict]:
    """Time naive (dense mask build + matvec) against both fastmult backends.

    The gridded rows always run the gridded transform, even at small S.
    """
    rng = make_rng(seed)
    spec = MaskSpec(sample_cauchy_quadrature(dim, S, lam, seed), ModulationFunction(lam))
    acc = NufftAccuracy(epsilon)
    clouds = [cloud] if cloud is not None else [random_cloud(L, dim, rng, distribution) for L in lengths]
    rows = []
    naive_capped = False
    for c in clouds:
        L = c.length
        u = rng.standard_normal(L)
        if naive_capped or dense_mask_bytes(L) > dense_cap_bytes:
            naive_capped = True
            rows.append(_capped_row("naive", L))
        else:
            rows.append({"method": "naive", "L": L, **time_call(lambda: dense_quadrature_mask(c, spec) @ u, repeats)})
        rows.append({"method": "fastmult-direct", "L": L, **time_call(lambda: fastmult(c, u, spec, "direct"), repeats)})
        rows.append(
            {
                "method": "fastmult-gridded",
                "L": L,
                **time_call(lambda: fastmult(c, u, spec, "gridded", acc, force_gridded=True), repeats),
            }
        )
    return rows


def fit_loglog(x, y) -> tuple[float, float]:
    """Least-squares slope of log(y) against log(x) and its standard error."""
    res = stats.linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.stderr)


def error_vs_s(
    sizes: Sequence[int],
    seeds: Sequence[int],
    dim: int = 3,
    lam: float = 1.0,
    L: int = 128,
    backend: str = "direct",
    epsilon: float = 1e-6,
    cloud_seed: int = 0,
    distribution: str = "uniform",
    cloud: PointCloud | None = None,
) -> tuple[list[dict], dict]:
    """Relative error of sampled-quadrature fastmult against the ideal-mask product.

    The cloud and input vector are fixed by ``cloud_seed``; each ``(S, seed)``
    draws a fresh quadrature. Returns per-sample rows and a summary with the
    fitted log-log slope over all samples.
    """
    rng = make_rng(cloud_seed)
    if cloud is None:
        cloud = random_cloud(L, dim, rng, distribution)
    dim = cloud.dim
    u = rng.standard_normal(cloud.length)
    exact = dense_ideal_mask(cloud, lam) @ u
    acc = NufftAccuracy(epsilon)
    rows = []
    for S in sizes:
        for seed in seeds:
            spec = MaskSpec(sample_cauchy_quadrature(dim, S, lam, seed), ModulationFunction(lam))
            approx = fastmult(cloud, u, spec, backend, acc)
            err = np.linalg.norm(approx - exact) / np.linalg.norm(exact)
            rows.append({"S": S, "seed": seed, "rel_error": err})
    slope, stderr = fit_loglog([r["S"] for r in rows], [r["rel_error"] for r in rows])
    return rows, {"slope": slope, "slope_stderr": stderr}


def default_distances(n: int = 30, lo: float = 1e-2, hi: float = 3.0) -> np.ndarray:
    """Zero followed by ``n`` log-spaced distances in ``[lo, hi]``."""
    return np.concatenate([[0.0], np.geomspace(lo, hi, n)])


def kernel_shape(
    seeds: Sequence[int],
    dim: int = 3,
    lam: float = 1.0,
    S: int = 1024,
    distances: Sequence[float] | None = None,
    pairs: int = 256,
    sigma: float = 1.0,
    pair_seed: int = 0,
) -> tuple[list[dict], dict]:
    """Quadrature mask values for random point pairs at controlled distances.

    For each distance, ``pairs`` pairs ``(p, p + distance * e)`` are drawn
    with ``p`` uniform in the unit cube and ``e`` a uniform direction; the
    pair geometry is shared across seeds. Each seed contributes the pair
    average of its mask, and rows report mean and standard deviation of
    those averages over seeds.
    """
    distances = default_distances() if distances is None else np.asarray(distances, dtype=np.float64)
    rng = make_rng(pair_seed)
    direction = rng.standard_normal((pairs, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    base = rng.random((pairs, dim))

    per_seed = np.empty((len(seeds), len(distances)))
    for k, seed in enumerate(seeds):
        spec = MaskSpec(sample_cauchy_quadrature(dim, S, lam, seed), ModulationFunction(lam))
        weights = spec.weights()
        xi = spec.quad.freqs
        for i, r in enumerate(distances):
            disp = base - (base + r * direction)
            per_seed[k, i] = np.mean(np.cos(2 * np.pi * (disp @ xi.T)) @ weights)

    mean = per_seed.mean(axis=0)
    std = per_seed.std(axis=0, ddof=1) if len(seeds) > 1 else np.zeros_like(mean)
    rows = []
    for i, r in enumerate(distances):
        rows.append(
            {
                "distance": r,
                "quadrature_mask_mean": mean[i],
                "quadrature_mask_std": std[i],
                "ideal_mask_value": float(ideal_mask_value(np.full(dim, r / np.sqrt(dim)), lam)),
                "rbf_reference": np.exp(-(r**2) / (2 * sigma**2)),
                "laplace_reference": np.exp(-r / sigma),
            }
        )
    rho = stats.spearmanr(distances, mean).statistic
    return rows, {"spearman": float(rho), "n_seeds": len(seeds)}
