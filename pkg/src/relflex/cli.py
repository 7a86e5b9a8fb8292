"""Command-line entry point: ``relflex <command> [flags]``.

Flags override values from ``--config FILE.json``, which override each
command's defaults. Every CSV starts with a ``#`` line recording the
resolved configuration, followed by the header row.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from . import studies
from .core import PointCloud, RelFlexError, normalize_coords, read_point_cloud
from .verify import FAULTS, run_verify

log = logging.getLogger("relflex")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    lengths: list = field(default_factory=lambda: [1024, 2048, 4096, 8192, 16384])
    dim: int = 3
    lam: float = 1.0
    quadrature_size: int = 8
    quadrature_sizes: list = field(default_factory=lambda: [8, 16, 32, 64, 128, 256, 512, 1024])
    seeds: list = field(default_factory=lambda: [0])
    feature_map: str = "relu"
    features: int = 16
    backend: str = "fastmult-direct"
    epsilon: float = 1e-6
    repeats: int = 3
    threads: int = 1
    normalize: bool = False
    distribution: str = "uniform"
    points: Optional[str] = None
    pairs: int = 256
    sigma: float = 1.0
    dense_cap_bytes: int = studies.DENSE_CAP_BYTES
    fault: Optional[str] = None
    output: Optional[str] = None

    def validate(self, command: str):
        if not self.lengths or not self.seeds:
            raise RelFlexError("lengths and seeds must be nonempty")
        if command.startswith("bench") and self.repeats < 3:
            raise RelFlexError("timing studies need repeats >= 3")
        if command.startswith("bench") and list(self.lengths) != sorted(self.lengths):
            raise RelFlexError("lengths must be ascending")
        if command == "error-vs-s" and len(self.quadrature_sizes) < 5:
            raise RelFlexError("error-vs-s needs at least 5 quadrature sizes")
        if command == "error-vs-s" and max(self.quadrature_sizes) < 4 * min(self.quadrature_sizes):
            raise RelFlexError("error-vs-s quadrature sizes must span at least two octaves")


COMMAND_DEFAULTS = {
    "verify": {"lengths": [1, 2, 17, 64, 256]},
    "rope-check": {"lengths": [1, 2, 17, 64, 256]},
    "bench-scaling": {},
    "bench-fastmult": {},
    "error-vs-s": {"lengths": [128], "seeds": list(range(20)), "backend": "direct"},
    "kernel-shape": {"quadrature_size": 1024, "seeds": list(range(20))},
}

def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    g = shared.add_argument_group("shared options")
    g.add_argument("--length", "--lengths", dest="lengths", type=_int_list, help="L value(s), comma separated")
    g.add_argument("--dim", type=int, choices=(1, 2, 3))
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--quadrature-size", dest="quadrature_size", type=int)
    g.add_argument("--quadrature-sizes", dest="quadrature_sizes", type=_int_list)
    g.add_argument("--seed", "--seeds", dest="seeds", type=_int_list)
    g.add_argument("--feature-map", choices=("relu", "positive-random"))
    g.add_argument("--features", type=int, help="random feature count m")
    g.add_argument("--backend", choices=("direct", "gridded", "fastmult-direct", "fastmult-gridded", "dense-oracle"))
    g.add_argument("--epsilon", type=float)
    g.add_argument("--repeats", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--normalize", action="store_true", default=None)
    g.add_argument("--distribution", choices=("uniform", "gaussian"))
    g.add_argument("--points", help="point-cloud text file replacing the synthetic cloud")
    g.add_argument("--pairs", type=int)
    g.add_argument("--sigma", type=float)
    g.add_argument("--dense-cap-bytes", type=int)
    g.add_argument("--config", help="JSON file of option values")
    g.add_argument("--output", help="CSV destination (default: stdout)")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="relflex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[shared], help="oracle and invariant suite").add_argument(
        "--fault", choices=FAULTS, help=argparse.SUPPRESS
    )
    sub.add_parser("rope-check", parents=[shared], help="RoPE and STRING exactness checks")
    sub.add_parser("bench-scaling", parents=[shared], help="attention time against L")
    sub.add_parser("bench-fastmult", parents=[shared], help="naive mask product against fastmult")
    sub.add_parser("error-vs-s", parents=[shared], help="quadrature error against S")
    sub.add_parser("kernel-shape", parents=[shared], help="mask value against distance")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(COMMAND_DEFAULTS[args.command])
    if args.config:
        with open(args.config) as fh:
            from_file = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(from_file) - known
        if unknown:
            raise RelFlexError(f"unknown config keys: {sorted(unknown)}")
        values.update(from_file)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            values[f.name] = value
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise RelFlexError(str(exc)) from exc
    config.validate(args.command)
    return config


def load_point_cloud(path: str, normalize: bool = False) -> PointCloud:
    cloud = read_point_cloud(path)
    return normalize_coords(cloud) if normalize else cloud


def _open_output(config: RunConfig):
    if config.output is None:
        return sys.stdout
    return open(config.output, "w", newline="")


def write_csv(config: RunConfig, command: str, rows: list[dict], trailer: dict | None = None):
    out = _open_output(config)
    try:
        out.write("# relflex " + command + " config=" + json.dumps(asdict(config), sort_keys=True) + "\n")
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        if trailer:
            out.write("# " + " ".join(f"{k}={v}" for k, v in trailer.items()) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _fastmult_backend(name: str) -> str:
    return {"fastmult-direct": "direct", "fastmult-gridded": "gridded"}.get(name, name)


def _attention_backend(name: str) -> str:
    return {"direct": "fastmult-direct", "gridded": "fastmult-gridded"}.get(name, name)


def cmd_verify(config: RunConfig, only: str | None = None) -> int:
    results = run_verify(lengths=config.lengths, epsilon=config.epsilon, seed=config.seeds[0], fault=config.fault, only=only)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_FAIL
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_bench_scaling(config: RunConfig) -> int:
    rows = studies.bench_scaling(
        config.lengths,
        dim=config.dim,
        S=config.quadrature_size,
        lam=config.lam,
        feature_map=config.feature_map,
        features=config.features,
        backend=_attention_backend(config.backend),
        epsilon=config.epsilon,
        repeats=config.repeats,
        seed=config.seeds[0],
        threads=config.threads,
        distribution=config.distribution,
        dense_cap_bytes=config.dense_cap_bytes,
    )
    for row in rows:
        row["threads"] = config.threads
    write_csv(config, "bench-scaling", rows)
    return EXIT_OK


def cmd_bench_fastmult(config: RunConfig) -> int:
    cloud = load_point_cloud(config.points, config.normalize) if config.points else None
    rows = studies.bench_fastmult(
        config.lengths,
        dim=cloud.dim if cloud else config.dim,
        S=config.quadrature_size,
        lam=config.lam,
        epsilon=config.epsilon,
        repeats=config.repeats,
        seed=config.seeds[0],
        distribution=config.distribution,
        dense_cap_bytes=config.dense_cap_bytes,
        cloud=cloud,
    )
    write_csv(config, "bench-fastmult", rows)
    return EXIT_OK


def cmd_error_vs_s(config: RunConfig) -> int:
    cloud = load_point_cloud(config.points, config.normalize) if config.points else None
    rows, summary = studies.error_vs_s(
        config.quadrature_sizes,
        config.seeds,
        dim=config.dim,
        lam=config.lam,
        L=config.lengths[0],
        backend=_fastmult_backend(config.backend),
        epsilon=config.epsilon,
        distribution=config.distribution,
        cloud=cloud,
    )
    for row in rows:
        row.update(slope="", slope_stderr="")
    rows.append({"S": "summary", "seed": "", "rel_error": "", **summary})
    write_csv(config, "error-vs-s", rows)
    return EXIT_OK


def cmd_kernel_shape(config: RunConfig) -> int:
    rows, summary = studies.kernel_shape(
        config.seeds,
        dim=config.dim,
        lam=config.lam,
        S=config.quadrature_size,
        pairs=config.pairs,
        sigma=config.sigma,
    )
    write_csv(config, "kernel-shape", rows, summary)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "rope-check": lambda config: cmd_verify(config, only="rope"),
    "bench-scaling": cmd_bench_scaling,
    "bench-fastmult": cmd_bench_fastmult,
    "error-vs-s": cmd_error_vs_s,
    "kernel-shape": cmd_kernel_shape,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        if config.threads > 1:
            log.warning("running with %d threads; timing rows record the thread count", config.threads)
        return COMMANDS[args.command](config)
    except (RelFlexError, OSError, json.JSONDecodeError) as exc:
        print(f"relflex {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
