"""Convolutional dictionary learning by alternating single ADMM iterations.

Each outer iteration runs one unconstrained CSC iteration per training
signal with the current (projected) filters, then one consensus-ADMM
iteration for the filters::

    g^p <- argmin 1/2 ||sum_k g_k^p * x_k^p - s^p||^2
                  + sigma/2 sum_k ||g_k^p - d_k + v_k^p||^2
    d   <- project( mean_p (g^p + v^p) )
    v^p <- v^p + g^p - d

The g-step is the CSC z-step with the roles of filters and coefficient maps
exchanged, so it reuses :func:`~cscadmm.csc.z_update_direct`. The projection
zeros everything outside the ``m1 x m2`` support and rescales to unit norm.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import fourier
from ._validation import check_int, check_positive, check_signals
from .csc import (
    CoefficientState,
    IterationTrace,
    TraceRecord,
    _check_finite,
    direct_coefficients,
    shrinkage,
    z_update_direct,
)
from .exceptions import DegenerateFilter, ShapeError
from .fourier import FilterBank

logger = logging.getLogger(__name__)

__all__ = [
    "CDLConfig",
    "DictLearnState",
    "g_update",
    "d_update",
    "project_filters",
    "cdl_objective",
    "init_state",
    "cdl_iterate",
    "solve_cdl",
]

#: Norm below which a projected filter counts as collapsed.
DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class CDLConfig:
    """Hyperparameters of a dictionary-learning run.

    ``sigma`` defaults to ``rho``.
    """

    n_filters: int = 16
    support: tuple = (8, 8)
    rho: float = 10.0
    sigma: float | None = None
    lmbda: float = 0.05
    outer_iters: int = 50
    seed: int = 0
    mean_subtract: bool = False

    def __post_init__(self):
        check_int(self.n_filters, "n_filters")
        if len(self.support) != 2:
            raise ValueError("support must be a pair (m1, m2)")
        for m in self.support:
            check_int(m, "support")
        check_positive(self.rho, "rho")
        if self.sigma is not None:
            check_positive(self.sigma, "sigma")
        check_positive(self.lmbda, "lmbda", strict=False)
        check_int(self.outer_iters, "outer_iters", minimum=0)

    @property
    def sigma_(self):
        return self.rho if self.sigma is None else self.sigma


@dataclass
class DictLearnState:
    """Learning state carried between outer iterations.

    ``g_hat`` and ``v_hat`` hold the per-signal filter copies and scaled
    duals as ``rfft2`` half spectra of shape ``(P, K, n1, n2 // 2 + 1)``;
    :attr:`g` and :attr:`v` give the spatial maps.
    """

    filters: FilterBank
    codes: CoefficientState
    g_hat: np.ndarray
    v_hat: np.ndarray
    shape: tuple

    @property
    def g(self):
        return fourier.irfft2(self.g_hat, self.shape)

    @property
    def v(self):
        return fourier.irfft2(self.v_hat, self.shape)


def g_update(x_hat, s_hat, d_hat, v_hat, sigma):
    """Per-signal filter copies: the direct z-step with roles swapped.

    Parameters
    ----------
    x_hat : ndarray, shape (P, K, N1, N2)
        Spectra of the sparse codes; they act as the "filters".
    s_hat : ndarray, shape (P, N1, N2)
    d_hat : ndarray, shape (K, N1, N2)
        Spectra of the current padded consensus filters.
    v_hat : ndarray, shape (P, K, N1, N2)
    sigma : float
    """
    x_hat = np.asarray(x_hat)
    v_hat = np.asarray(v_hat)
    if x_hat.shape != v_hat.shape or x_hat.shape[-3:] != np.shape(d_hat):
        raise ShapeError(
            f"x_hat {x_hat.shape}, v_hat {v_hat.shape} and d_hat {np.shape(d_hat)} "
            "do not conform"
        )
    check_positive(sigma, "sigma")
    return z_update_direct(d_hat - v_hat, x_hat, s_hat, sigma)


def project_filters(avg, support, rng=None):
    """Crop padded filters to the top-left ``support`` and normalize.

    A filter whose cropped norm is below ``DEGENERATE_NORM`` raises
    :class:`DegenerateFilter`, unless ``rng`` is given, in which case it is
    replaced by a fresh random unit-norm filter.
    """
    m1, m2 = support
    d = np.array(avg[..., :m1, :m2], dtype=np.float64)
    norms = np.sqrt(np.sum(d ** 2, axis=(-2, -1)))
    for k in np.flatnonzero(norms < DEGENERATE_NORM):
        if rng is None:
            raise DegenerateFilter(f"filter {k} collapsed (norm {norms[k]:.3e})", int(k))
        logger.warning("filter %d collapsed (norm %.3e); re-randomizing", k, norms[k])
        d[k] = rng.standard_normal((m1, m2))
        norms[k] = np.sqrt(np.sum(d[k] ** 2))
    return FilterBank(d / norms[:, None, None])


def d_update(g, v, support, rng=None):
    """Consensus step: project ``mean_p(g^p + v^p)`` onto unit-norm filters.

    ``g`` and ``v`` are spatial maps of shape ``(P, K, n1, n2)``.
    """
    g = np.asarray(g, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if g.ndim != 4 or g.shape != v.shape:
        raise ShapeError(f"g and v must share shape (P, K, n1, n2); got {g.shape}, {v.shape}")
    return project_filters(np.mean(g + v, axis=0), support, rng)


def cdl_objective(filters, x, batch, lmbda):
    """``sum_p 1/2 ||sum_k d_k * x_k^p - s^p||^2 + lambda ||x^p||_1``.

    Returns ``(fidelity, l1, total)``.
    """
    shape = batch.shape[-2:]
    r_hat = fourier.freq_conv_sum(filters.half_spectra(shape), fourier.rfft2(x))
    r_hat -= fourier.rfft2(batch)
    fidelity = 0.5 * float(np.sum(fourier.half_spectrum_energy(r_hat, shape)))
    l1 = float(np.sum(np.abs(x)))
    return fidelity, l1, fidelity + lmbda * l1


def init_state(batch, filters):
    """Zero codes and duals; filter copies start at the consensus filters."""
    P, n1, n2 = batch.shape
    shape = (n1, n2)
    K = filters.n_filters
    if any(m > n for m, n in zip(filters.support, shape)):
        raise ShapeError(f"filter support {filters.support} exceeds signal shape {shape}")
    d_hat = filters.half_spectra(shape)
    g_hat = np.broadcast_to(d_hat, (P,) + d_hat.shape).copy()
    return DictLearnState(
        filters=filters,
        codes=CoefficientState.zeros((P, K, n1, n2)),
        g_hat=g_hat,
        v_hat=np.zeros_like(g_hat),
        shape=shape,
    )


def _prepare_batch(batch, mean_subtract=False):
    batch = check_signals(batch, "batch")
    if batch.ndim == 2:
        batch = batch[None]
    if mean_subtract:
        batch = batch - batch.mean(axis=(-2, -1), keepdims=True)
    return batch


def cdl_iterate(state, batch, cfg, rng=None):
    """One CSC iteration per signal followed by one dictionary iteration.

    The CSC phase uses the projected filters ``d``; the dictionary phase
    uses the sparse codes ``x``. Returns a new state.
    """
    batch = _prepare_batch(batch)
    shape = state.shape
    if batch.shape[-2:] != shape or batch.shape[0] != state.g_hat.shape[0]:
        raise ShapeError(f"batch of shape {batch.shape} does not match the state")
    rho, sigma = cfg.rho, cfg.sigma_

    d_hat = state.filters.half_spectra(shape)
    s_hat = fourier.rfft2(batch)
    x, u = state.codes.x, state.codes.u
    z_hat = z_update_direct(
        fourier.rfft2(x - u), d_hat, s_hat, rho, direct_coefficients(d_hat, rho)
    )
    z = fourier.irfft2(z_hat, shape)
    x = shrinkage(z + u, cfg.lmbda / rho)
    u = u + z - x
    _check_finite(x, u)

    x_hat = fourier.rfft2(x)
    g_hat = g_update(x_hat, s_hat, d_hat, state.v_hat, sigma)
    avg = fourier.irfft2(np.mean(g_hat + state.v_hat, axis=0), shape)
    filters = project_filters(avg, state.filters.support, rng)
    v_hat = state.v_hat + g_hat - filters.half_spectra(shape)
    _check_finite(v_hat)

    return DictLearnState(filters, CoefficientState(x, z, u), g_hat, v_hat, shape)


def solve_cdl(batch, cfg, init=None, *, callback=None):
    """Learn a filter bank from ``batch`` with ``cfg.outer_iters`` iterations.

    Parameters
    ----------
    batch : array_like, shape (P, n1, n2)
    cfg : CDLConfig
    init : FilterBank, optional
        Initial filters; seeded random unit-norm filters otherwise.
    callback : callable, optional
        ``callback(iteration, state)`` after every outer iteration.

    Returns
    -------
    filters : FilterBank
    codes : ndarray, shape (P, K, n1, n2)
    trace : IterationTrace
        Objective of the learning problem after each outer iteration.
    """
    batch = _prepare_batch(batch, cfg.mean_subtract)
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        init = FilterBank.random(cfg.n_filters, cfg.support, rng)
    state = init_state(batch, init)
    trace = IterationTrace()
    t0 = time.perf_counter()
    for it in range(1, cfg.outer_iters + 1):
        state = cdl_iterate(state, batch, cfg, rng)
        fidelity, l1, total = cdl_objective(state.filters, state.codes.x, batch, cfg.lmbda)
        trace.append(
            TraceRecord(
                iteration=it,
                fidelity=fidelity,
                l1=l1,
                objective=total,
                seconds=time.perf_counter() - t0,
                primal_residual=float(np.linalg.norm(state.codes.z - state.codes.x)),
            )
        )
        if callback is not None:
            callback(it, state)
    return state.filters, state.codes.x, trace
