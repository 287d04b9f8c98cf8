"""Timing of z-step kernels on identical precomputed spectra.

Only the per-bin solve is timed: both fast kernels receive the same
filter, signal and ``w`` spectra plus their own cached filter
coefficients, so FFT cost is excluded. Kernels must agree before any
timing is taken.
"""

import logging
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from . import fourier
from ._validation import check_int
from .csc import (
    direct_coefficients,
    flop_model,
    sherman_morrison_coefficients,
    z_update_direct,
    z_update_sherman_morrison,
)
from .exceptions import AgreementFailure
from .fourier import FilterBank

logger = logging.getLogger(__name__)

AGREEMENT_TOL = 1e-10
MIN_REPS = 10
#: Largest ``bins * K * K`` for which the dense kernel is timed in full.
DENSE_LIMIT = 1 << 22
#: Bins spot-checked against the dense solve when it is too large to time.
DENSE_SAMPLE = 2048


@dataclass(frozen=True)
class BenchResult:
    kernel: str
    K: int
    P: int
    n: int
    repetitions: int
    median_seconds: float
    mean_seconds: float
    stddev_seconds: float
    model_flops: int | None

    def as_dict(self):
        return asdict(self)


def dense_kernel(w_hat, d_hat, s_hat, rho):
    """z-step by batched dense ``K x K`` solves over all bins."""
    K = d_hat.shape[-3]
    d = np.moveaxis(d_hat.reshape(K, -1), 0, -1)  # (bins, K)
    A = np.conj(d)[:, :, None] * d[:, None, :]
    A[:, np.arange(K), np.arange(K)] += rho
    P = w_hat.shape[0]
    w = np.moveaxis(w_hat.reshape(P, K, -1), -1, 0)  # (bins, P, K)
    s = s_hat.reshape(P, -1).T  # (bins, P)
    rhs = s[:, :, None] * np.conj(d)[:, None, :] + rho * w
    z = np.linalg.solve(A, np.swapaxes(rhs, 1, 2))  # (bins, K, P)
    return np.moveaxis(z, 0, -1).transpose(1, 0, 2).reshape(w_hat.shape)


def _rel_err(a, b):
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b) / scale)


def make_inputs(K, P, shape, seed=0, support=(8, 8)):
    """Random half spectra ``(w_hat, d_hat, s_hat)`` for ``P`` signals."""
    rng = np.random.default_rng(seed)
    support = tuple(min(m, n) for m, n in zip(support, shape))
    filters = FilterBank.random(K, support, rng)
    d_hat = np.array(filters.half_spectra(shape))
    s_hat = fourier.rfft2(rng.standard_normal((P,) + tuple(shape)))
    w_hat = fourier.rfft2(rng.standard_normal((P, K) + tuple(shape)))
    return w_hat, d_hat, s_hat


def check_agreement(w_hat, d_hat, s_hat, rho, outputs):
    """Raise :class:`AgreementFailure` unless all kernel outputs agree.

    ``outputs`` maps kernel name to result; if ``"dense"`` is absent a random
    sample of bins is solved densely instead.
    """
    ref = outputs["direct"]
    for name, z in outputs.items():
        err = _rel_err(z, ref)
        if not err <= AGREEMENT_TOL:
            raise AgreementFailure(f"{name} deviates from direct by {err:.3e}")
    if "dense" not in outputs:
        K = d_hat.shape[-3]
        flat = d_hat.reshape(K, -1)
        bins = flat.shape[1]
        rng = np.random.default_rng(0)
        idx = rng.choice(bins, size=min(DENSE_SAMPLE, bins), replace=False)
        P = w_hat.shape[0]
        sub_w = w_hat.reshape(P, K, -1)[:, :, idx][..., None]
        sub_d = flat[:, idx][..., None]
        sub_s = s_hat.reshape(P, -1)[:, idx][..., None]
        dense = dense_kernel(sub_w, sub_d, sub_s, rho)
        err = _rel_err(ref.reshape(P, K, -1)[:, :, idx][..., None], dense)
        if not err <= AGREEMENT_TOL:
            raise AgreementFailure(f"dense sample deviates from direct by {err:.3e}")


def _time(fn, reps):
    fn()  # warm-up, excluded
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return samples


def bench_z_update(K, P, shape, reps=MIN_REPS, threads=1, *, rho=10.0, seed=0,
                   kernels=("direct", "sherman_morrison", "dense")):
    """Time z-step kernels for ``K`` filters and ``P`` signals of ``shape``.

    Returns one :class:`BenchResult` per timed kernel. ``"dense"`` is skipped
    (with a log message) when too large; it is then only spot-checked.
    """
    K = check_int(K, "K")
    P = check_int(P, "P")
    reps = check_int(reps, "reps", minimum=MIN_REPS)
    shape = tuple(shape)
    n = shape[0] * shape[1]
    w_hat, d_hat, s_hat = make_inputs(K, P, shape, seed)
    c_direct = direct_coefficients(d_hat, rho)
    c_sm = sherman_morrison_coefficients(d_hat, rho)

    calls = {
        "direct": lambda: z_update_direct(w_hat, d_hat, s_hat, rho, c_direct),
        "sherman_morrison": lambda: z_update_sherman_morrison(w_hat, d_hat, s_hat, rho, c_sm),
        "dense": lambda: dense_kernel(w_hat, d_hat, s_hat, rho),
    }
    selected = [k for k in kernels if k in calls]
    if "dense" in selected and d_hat[0].size * K * K > DENSE_LIMIT:
        logger.info("dense kernel too large to time for K=%d, n=%d; spot-checking", K, n)
        selected.remove("dense")

    with threadpool_limits(limits=threads):
        outputs = {k: calls[k]() for k in selected}
        outputs.setdefault("direct", calls["direct"]())
        check_agreement(w_hat, d_hat, s_hat, rho, outputs)
        del outputs

        results = []
        for name in selected:
            samples = _time(calls[name], reps)
            results.append(
                BenchResult(
                    kernel=name,
                    K=K,
                    P=P,
                    n=n,
                    repetitions=reps,
                    median_seconds=statistics.median(samples),
                    mean_seconds=statistics.fmean(samples),
                    stddev_seconds=statistics.stdev(samples),
                    model_flops=None if name == "dense" else flop_model(K, P, n, name),
                )
            )
    return results


def flop_ratio(K, P):
    """Sherman-Morrison over direct flop count (independent of ``n``)."""
    return flop_model(K, P, 1, "sherman_morrison") / flop_model(K, P, 1, "direct")
