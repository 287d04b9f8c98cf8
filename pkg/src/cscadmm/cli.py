"""Command-line front end: ``cscadmm --mode {csc,csc-constrained,cdl,bench} ...``.

Every run writes a ``manifest.json`` holding the full configuration; passing
it back with ``--from-manifest`` repeats the run.
"""

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy
import scipy.fft
from threadpoolctl import threadpool_limits

from . import __version__
from . import io as cio
from .bench import MIN_REPS, bench_z_update
from .cdl import CDLConfig, solve_cdl
from .constrained import ConstraintConfig, solve_constrained
from .csc import SolverConfig, solve_unconstrained
from .exceptions import CSCError
from .fourier import FilterBank, circular_convolve

logger = logging.getLogger("cscadmm")

MODES = ("csc", "csc-constrained", "cdl", "bench")
DEFAULT_ITERS = {"csc": 25, "csc-constrained": 25, "cdl": 50}
PIXEL_SCALING = "pixel / format_max -> [0, 1]"


@dataclass
class RunConfig:
    mode: str
    inputs: list = field(default_factory=list)
    filters: str | None = None
    K: int = 16
    m: tuple = (8, 8)
    seed: int = 0
    rho: float = 10.0
    lmbda: float = 0.05
    epsilon: float | None = None
    sigma: float | None = None
    iters: int | None = None
    out: str = "out"
    mean_subtract: bool = False
    threads: int = 1
    P: list = field(default_factory=lambda: [1, 10])
    size: int = 512
    reps: int = MIN_REPS
    timing: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        self.m = tuple(self.m)
        if self.iters is None and self.mode in DEFAULT_ITERS:
            self.iters = DEFAULT_ITERS[self.mode]
        if self.mode in ("csc", "csc-constrained", "cdl") and not self.inputs:
            raise ValueError(f"mode {self.mode} needs at least one --input")
        if self.mode == "csc-constrained":
            if self.epsilon is None:
                raise ValueError("mode csc-constrained needs --epsilon")
            if len(self.inputs) != 1:
                raise ValueError("mode csc-constrained codes exactly one --input")
        if self.threads < 1:
            raise ValueError("--threads must be >= 1")

    @classmethod
    def from_manifest(cls, path):
        data = json.loads(Path(path).read_text())
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data["config"].items() if k in names})


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(cfg, out):
    manifest = {
        "config": asdict(cfg),
        "inputs_sha256": {p: _sha256(p) for p in cfg.inputs},
        "filters_sha256": (
            _sha256(Path(cfg.filters) / cio.FILTER_DATA if Path(cfg.filters).is_dir()
                    else cfg.filters)
            if cfg.filters else None
        ),
        "pixel_scaling": PIXEL_SCALING,
        "convolution": "circular",
        "versions": {
            "cscadmm": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_batch(cfg):
    imgs = [cio.load_image(p) for p in cfg.inputs]
    shapes = {im.shape for im in imgs}
    if len(shapes) != 1:
        raise ValueError(f"inputs differ in shape: {sorted(shapes)}")
    batch = np.stack(imgs)
    means = batch.mean(axis=(1, 2), keepdims=True)
    if cfg.mean_subtract:
        batch = batch - means
    else:
        means = np.zeros_like(means)
    return batch, means


def _filters(cfg):
    if cfg.filters:
        return cio.import_filterbank(cfg.filters)
    return FilterBank.random(cfg.K, cfg.m, cfg.seed)


def _finish_trace(trace, cfg, out):
    if not cfg.timing:
        for r in trace:
            r.seconds = None
    cio.export_trace(trace, out / "trace.csv")


def _save_reconstructions(filters, codes, means, out):
    recon = circular_convolve(filters.padded(codes.shape[-2:]), codes) + means
    for i, img in enumerate(recon):
        cio.save_image(out / f"reconstruction_{i:03d}.pgm", img)


def _run_csc(cfg, out):
    batch, means = _load_batch(cfg)
    filters = _filters(cfg)
    solver_cfg = SolverConfig(rho=cfg.rho, lmbda=cfg.lmbda, max_iter=cfg.iters, seed=cfg.seed)
    if cfg.mode == "csc":
        state, trace = solve_unconstrained(batch, filters, solver_cfg)
        codes = state.x
    else:
        cc = ConstraintConfig(epsilon=cfg.epsilon)
        state, trace = solve_constrained(batch[0], filters, solver_cfg, cc)
        codes = state.x[None]
    _finish_trace(trace, cfg, out)
    np.save(out / "codes.npy", codes)
    cio.export_filterbank(filters, out / "filters")
    _save_reconstructions(filters, codes, means, out)


def _run_cdl(cfg, out):
    batch, means = _load_batch(cfg)
    init = cio.import_filterbank(cfg.filters) if cfg.filters else None
    cdl_cfg = CDLConfig(
        n_filters=init.n_filters if init else cfg.K,
        support=init.support if init else cfg.m,
        rho=cfg.rho, sigma=cfg.sigma, lmbda=cfg.lmbda,
        outer_iters=cfg.iters, seed=cfg.seed,
    )
    filters, codes, trace = solve_cdl(batch, cdl_cfg, init)
    _finish_trace(trace, cfg, out)
    np.save(out / "codes.npy", codes)
    cio.export_filterbank(filters, out / "filters")
    _save_reconstructions(filters, codes, means, out)


def _run_bench(cfg, out):
    results = []
    for P in cfg.P:
        results += bench_z_update(cfg.K, P, (cfg.size, cfg.size), cfg.reps, cfg.threads,
                                  rho=cfg.rho, seed=cfg.seed)
    cio.write_bench_csv(results, out / "bench.csv")
    for r in results:
        logger.info("%-16s K=%d P=%d median %.4fs", r.kernel, r.K, r.P, r.median_seconds)


def run(cfg):
    """Execute one configured run; returns a process exit status."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with scipy.fft.set_workers(cfg.threads), threadpool_limits(limits=cfg.threads):
            if cfg.mode == "bench":
                _run_bench(cfg, out)
            elif cfg.mode == "cdl":
                _run_cdl(cfg, out)
            else:
                _run_csc(cfg, out)
        write_manifest(cfg, out)
    except (CSCError, OSError, ValueError) as exc:
        print(f"cscadmm: error: {exc}", file=sys.stderr)
        return 1
    return 0


def _support(text):
    parts = text.lower().split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad filter size {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"bad filter size {text!r}")
    return vals


def build_parser():
    p = argparse.ArgumentParser(
        prog="cscadmm",
        description="Convolutional sparse coding and dictionary learning by ADMM.",
    )
    p.add_argument("--mode", choices=MODES, help="what to run")
    p.add_argument("--from-manifest", metavar="PATH",
                   help="repeat the run recorded in a manifest.json (other flags ignored "
                        "except --out)")
    p.add_argument("--input", action="append", default=[], dest="inputs", metavar="IMG",
                   help="greyscale PGM (P5) or PNG; repeat for a batch")
    p.add_argument("--filters", help="filter bank directory or header from a previous run")
    p.add_argument("--K", type=int, default=16, help="number of random filters")
    p.add_argument("--m", type=_support, default=(8, 8), help="filter size, e.g. 8 or 8x8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=10.0)
    p.add_argument("--lambda", type=float, default=0.05, dest="lmbda")
    p.add_argument("--epsilon", type=float, help="residual energy bound (csc-constrained)")
    p.add_argument("--sigma", type=float, help="dictionary penalty (cdl); defaults to rho")
    p.add_argument("--iters", type=int, help="iterations (default 25 for csc, 50 for cdl)")
    p.add_argument("--out", default=None, help="output directory (default ./out)")
    p.add_argument("--mean-subtract", action="store_true",
                   help="remove each image's mean before coding")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--P", type=int, action="append", help="bench: batch sizes (default 1 10)")
    p.add_argument("--size", type=int, default=512, help="bench: image side length")
    p.add_argument("--reps", type=int, default=MIN_REPS, help="bench: timed repetitions")
    p.add_argument("--no-timing", action="store_true",
                   help="leave the seconds column empty so traces are byte-reproducible")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        if args.from_manifest:
            cfg = RunConfig.from_manifest(args.from_manifest)
            if args.out is not None:
                cfg.out = args.out
        else:
            if args.mode is None:
                parser.error("--mode is required")
            cfg = RunConfig(
                mode=args.mode, inputs=args.inputs, filters=args.filters, K=args.K,
                m=args.m, seed=args.seed, rho=args.rho, lmbda=args.lmbda,
                epsilon=args.epsilon, sigma=args.sigma, iters=args.iters,
                out=args.out or "out", mean_subtract=args.mean_subtract,
                threads=args.threads, P=args.P or [1, 10], size=args.size,
                reps=args.reps, timing=not args.no_timing,
            )
    except (ValueError, OSError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"cscadmm: error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
