"""Oracle-equivalence and invariant checks run by ``relflex verify``.

Each check compares a fast path with an independent dense or direct
evaluation and reports the worst relative error seen against its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .attention import dense_masked_attention, masked_lowrank_attention, performer_attention
from .core import AttentionBatch, FeatureMap, ModulationFunction, PointCloud, QuadratureSet, make_rng
from .encodings import rope_quadrature, sample_cauchy_quadrature, string_quadrature
from .fastmult import BlendSchedule, MaskSpec, blended_fastmult, dense_quadrature_mask
from .fastmult import fastmult as fastmult_op
from .nudft import NufftAccuracy, nudft_adjoint_direct, nudft_forward_direct, nudft_forward_fast

DEFAULT_LENGTHS = (1, 2, 17, 64, 256)
FAULTS = ("fastmult-sign",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tol: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<46s} max_err={self.error:.3e}  tol={self.tol:.1e}"


def rel(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.linalg.norm(b)
    diff = np.linalg.norm(a - b)
    return float(diff / scale) if scale > 0 else float(diff)


class _Suite:
    def __init__(self, lengths, dims, epsilon, seed, fastmult):
        self.lengths = lengths
        self.dims = dims
        self.acc = NufftAccuracy(epsilon)
        self.rng = make_rng(seed)
        self.fastmult = fastmult
        self.results: list[CheckResult] = []

    def record(self, name, errors, tol):
        err = max(errors) if errors else 0.0
        self.results.append(CheckResult(name, bool(err <= tol), err, tol))

    def cases(self):
        for d in self.dims:
            for L in self.lengths:
                cloud = PointCloud(self.rng.random((L, d)))
                spec = MaskSpec(sample_cauchy_quadrature(d, 16, 1.0, int(self.rng.integers(2**32))))
                yield cloud, spec

    def run_core(self):
        tol_fast = 10 * self.acc.epsilon
        fmult = self.fastmult
        errs = {k: [] for k in ("dense", "gridded", "lin", "sym", "trans", "perm", "adj", "nufft", "blend")}
        for cloud, spec in self.cases():
            L, d = cloud.length, cloud.dim
            u, v = self.rng.standard_normal((2, L))
            M = dense_quadrature_mask(cloud, spec)
            w = fmult(cloud, u, spec)
            errs["dense"].append(rel(w, M @ u))
            errs["gridded"].append(rel(fmult(cloud, u, spec, "gridded", self.acc, force_gridded=True), M @ u))
            errs["lin"].append(rel(fmult(cloud, 2.0 * u - 3.0 * v, spec), 2.0 * w - 3.0 * fmult(cloud, v, spec)))
            errs["sym"].append(abs(u @ fmult(cloud, v, spec) - v @ w) / max(np.linalg.norm(u) * np.linalg.norm(M @ v), 1e-300))
            shifted = PointCloud(cloud.coords + self.rng.standard_normal(d))
            errs["trans"].append(rel(fmult(shifted, u, spec), w))
            perm = self.rng.permutation(L)
            errs["perm"].append(rel(fmult(PointCloud(cloud.coords[perm]), u[perm], spec), w[perm]))
            sched0 = blended_fastmult(cloud, u, spec, BlendSchedule(0.0))
            sched1 = blended_fastmult(cloud, u, spec, BlendSchedule(1.0))
            errs["blend"].append(max(rel(sched0, np.full(L, u.sum())), rel(sched1, fastmult_op(cloud, u, spec))))

            xi = spec.quad.freqs
            c = self.rng.standard_normal(xi.shape[0]) + 1j * self.rng.standard_normal(xi.shape[0])
            lhs = np.vdot(c, nudft_forward_direct(cloud, u, xi))
            rhs = np.vdot(nudft_adjoint_direct(cloud, c, xi), u)
            errs["adj"].append(abs(lhs - rhs) / (np.linalg.norm(u) * np.linalg.norm(c) * np.sqrt(L * xi.shape[0])))
            errs["nufft"].append(
                rel(nudft_forward_fast(cloud, u, xi, self.acc, force_gridded=True), nudft_forward_direct(cloud, u, xi))
            )
        self.record("fastmult vs dense oracle", errs["dense"], 1e-10)
        self.record("fastmult gridded vs dense oracle", errs["gridded"], tol_fast)
        self.record("fastmult linearity", errs["lin"], 1e-12)
        self.record("fastmult symmetry", errs["sym"], 1e-10)
        self.record("fastmult translation invariance", errs["trans"], 1e-10)
        self.record("fastmult permutation equivariance", errs["perm"], 1e-12)
        self.record("warmup blend endpoints", errs["blend"], 1e-12)
        self.record("nudft adjointness", errs["adj"], 1e-12)
        self.record("nudft gridded vs direct", errs["nufft"], tol_fast)

    def run_grid_case(self):
        errors = []
        for N in (16, 64):
            x = np.arange(N)[:, None] / N
            u = self.rng.standard_normal(N)
            fast = nudft_forward_fast(PointCloud(x), u, np.arange(N)[:, None], self.acc, force_gridded=True)
            errors.append(rel(fast, np.fft.fft(u)))
        self.record("nudft grid case vs FFT", errors, 10 * self.acc.epsilon)

    def run_attention(self):
        errs = {"oracle": [], "direct": [], "gridded": [], "neutral": [], "perm": []}
        neutral = MaskSpec(QuadratureSet.from_half(np.zeros((1, 3)), 0.5), ModulationFunction(kind="constant-one"))
        for L in self.lengths:
            cloud = PointCloud(self.rng.random((L, 3)))
            batch = AttentionBatch(*self.rng.standard_normal((3, L, 4)))
            phi = FeatureMap("relu")
            # S above the direct cutoff so the gridded backend really grids.
            spec = MaskSpec(sample_cauchy_quadrature(3, 96, 1.0, int(self.rng.integers(2**32))))
            ref = dense_masked_attention(batch, dense_quadrature_mask(cloud, spec), "lowrank", phi)
            out = {b: masked_lowrank_attention(batch, phi, cloud, spec, b, self.acc) for b in ("dense-oracle", "fastmult-direct")}
            grid = masked_lowrank_attention(batch, phi, cloud, spec, "fastmult-gridded", self.acc)
            errs["oracle"].append(rel(out["dense-oracle"].embeddings, ref.embeddings))
            errs["direct"].append(rel(out["fastmult-direct"].embeddings, out["dense-oracle"].embeddings))
            errs["gridded"].append(rel(grid.embeddings, out["dense-oracle"].embeddings))
            errs["neutral"].append(
                rel(masked_lowrank_attention(batch, phi, cloud, neutral).embeddings, performer_attention(batch, phi).embeddings)
            )
            perm = self.rng.permutation(L)
            pb = AttentionBatch(batch.Q[perm], batch.K[perm], batch.V[perm])
            permuted = masked_lowrank_attention(pb, phi, PointCloud(cloud.coords[perm]), spec)
            errs["perm"].append(rel(permuted.embeddings, out["fastmult-direct"].embeddings[perm]))
        self.record("masked attention dense-oracle vs reference", errs["oracle"], 1e-10)
        self.record("masked attention fastmult-direct", errs["direct"], 1e-10)
        self.record("masked attention fastmult-gridded", errs["gridded"], 10 * self.acc.epsilon)
        self.record("neutral mask reduction", errs["neutral"], 1e-12)
        self.record("attention permutation equivariance", errs["perm"], 1e-12)

    def run_rope_string(self):
        rope, string = [], []
        const = ModulationFunction(kind="constant-one")
        for L in self.lengths:
            z = self.rng.uniform(-10, 10, L)
            theta = self.rng.uniform(0.05, 2.0)
            u = self.rng.standard_normal(L)
            cos_mask = np.cos(theta * (z[:, None] - z[None, :]))
            rope.append(rel(self.fastmult(PointCloud(z), u, MaskSpec(rope_quadrature(theta), const)), cos_mask @ u))

            r = self.rng.standard_normal((L, 3))
            omega = self.rng.standard_normal((8, 3))
            diff = r[:, None, :] - r[None, :, :]
            expected = np.mean(np.cos(diff @ omega.T), axis=-1)
            got = dense_quadrature_mask(PointCloud(r), MaskSpec(string_quadrature(omega), const))
            string.append(float(np.max(np.abs(got - expected))))
        self.record("rope exactness", rope, 1e-12)
        self.record("string recovery", string, 1e-12)


def _sign_flipped(fn: Callable) -> Callable:
    def wrapped(*args, **kwargs):
        return -fn(*args, **kwargs)

    return wrapped


def run_verify(
    lengths: Sequence[int] = DEFAULT_LENGTHS,
    dims: Sequence[int] = (1, 3),
    epsilon: float = 1e-6,
    seed: int = 0,
    fault: str | None = None,
    only: str | None = None,
) -> list[CheckResult]:
    """Run the suite; ``only="rope"`` restricts it to the RoPE/STRING checks.

    ``fault="fastmult-sign"`` negates every fastmult result, for exercising
    the failure path of the harness itself.
    """
    fastmult = fastmult_op
    if fault is not None:
        if fault not in FAULTS:
            raise ValueError(f"unknown fault {fault!r}")
        fastmult = _sign_flipped(fastmult_op)
    suite = _Suite(tuple(lengths), tuple(dims), epsilon, seed, fastmult)
    if only != "rope":
        suite.run_core()
        suite.run_grid_case()
        suite.run_attention()
    suite.run_rope_string()
    return suite.results
