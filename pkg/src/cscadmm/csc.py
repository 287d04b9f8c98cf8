"""Unconstrained convolutional sparse coding by scaled-form ADMM.

The problem is::

    minimize_x  1/2 || sum_k d_k * x_k - s ||_2^2 + lambda * sum_k ||x_k||_1

split as ``z_k = x_k``. Each iteration performs

    z <- argmin 1/2 ||sum d_k * z_k - s||^2 + rho/2 sum ||z_k - (x_k - u_k)||^2
    x <- S_{lambda/rho}(z + u)
    u <- u + z - x

The z-step decouples over DFT bins into ``K``-dimensional ridge problems with
a rank-one system matrix. :func:`z_update_direct` solves them in closed form
without forming any inverse; :func:`z_update_sherman_morrison` is the
classical rank-one inverse update, kept as a baseline for benchmarking.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import fourier
from ._validation import check_int, check_positive, check_signals, check_spectra_pair
from .exceptions import NonFinite, ShapeError
from .fourier import FilterBank

__all__ = [
    "SolverConfig",
    "CoefficientState",
    "TraceRecord",
    "IterationTrace",
    "shrinkage",
    "x_update",
    "direct_coefficients",
    "sherman_morrison_coefficients",
    "z_update_direct",
    "z_update_sherman_morrison",
    "objective_unconstrained",
    "solve_unconstrained",
    "flop_model",
    "KERNELS",
]


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of an unconstrained ADMM run."""

    rho: float = 10.0
    lmbda: float = 0.05
    max_iter: int = 25
    seed: int = 0

    def __post_init__(self):
        check_positive(self.rho, "rho")
        check_positive(self.lmbda, "lmbda", strict=False)
        check_int(self.max_iter, "max_iter", minimum=1)
        check_int(self.seed, "seed", minimum=-(2**63))


@dataclass
class CoefficientState:
    """ADMM variables: sparse maps ``x``, split copy ``z``, scaled dual ``u``.

    Each array has shape ``(K, n1, n2)``, or ``(P, K, n1, n2)`` for a batch.
    """

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        self.u = np.asarray(self.u, dtype=np.float64)
        if not (self.x.shape == self.z.shape == self.u.shape):
            raise ShapeError(
                f"x, z, u shapes differ: {self.x.shape}, {self.z.shape}, {self.u.shape}"
            )

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))

    def copy(self):
        return CoefficientState(self.x.copy(), self.z.copy(), self.u.copy())


@dataclass
class TraceRecord:
    """Per-iteration diagnostics.

    ``constraint_error``, ``nu`` and ``equality_branch`` are only set by the
    error-constrained solver.
    """

    iteration: int
    fidelity: float
    l1: float
    objective: float
    seconds: float
    primal_residual: float = float("nan")
    constraint_error: float | None = None
    nu: float | None = None
    equality_branch: bool | None = None


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        """Values of one record field as a float array (``None`` -> NaN)."""
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)


def shrinkage(a, kappa):
    """Soft thresholding ``sign(a) * max(0, |a| - kappa)``, element-wise."""
    if np.any(np.asarray(kappa) < 0):
        raise ValueError("shrinkage threshold must be non-negative")
    a = np.asarray(a, dtype=np.float64)
    return np.sign(a) * np.maximum(0.0, np.abs(a) - kappa)


def x_update(z, u, lmbda, rho):
    """Proximal step of the l1 term: ``S_{lambda/rho}(z + u)``."""
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if z.shape != u.shape:
        raise ShapeError(f"z has shape {z.shape} but u has shape {u.shape}")
    check_positive(rho, "rho")
    return shrinkage(z + u, lmbda / rho)


def direct_coefficients(d_hat, rho):
    """Per-bin weights ``conj(d_k) / (rho + sum_k |d_k|^2)``.

    Depends only on the filters and the penalty, so callers cache it across
    iterations.
    """
    d_hat = np.asarray(d_hat)
    denom = rho + np.sum(d_hat.real ** 2 + d_hat.imag ** 2, axis=-3, keepdims=True)
    return np.conj(d_hat) / denom


def sherman_morrison_coefficients(d_hat, rho):
    """Cached quantities of the rank-one inverse update.

    Returns ``(conj(d), d / (rho + |d|^2))``.
    """
    d_hat = np.asarray(d_hat)
    denom = rho + np.sum(d_hat.real ** 2 + d_hat.imag ** 2, axis=-3, keepdims=True)
    return np.conj(d_hat), d_hat / denom


def z_update_direct(w_hat, d_hat, s_hat, rho, c_hat=None):
    """Exact minimizer of the z-step in the frequency domain.

    Parameters
    ----------
    w_hat : ndarray, shape (..., K, N1, N2)
        Spectra of ``w_k = x_k - u_k``.
    d_hat : ndarray, shape (..., K, N1, N2)
        Spectra of the zero-padded filters (broadcast against ``w_hat``).
    s_hat : ndarray, shape (..., N1, N2)
        Spectrum of the signal.
    rho : float
        Penalty parameter.
    c_hat : ndarray, optional
        Precomputed :func:`direct_coefficients` for ``(d_hat, rho)``.

    Returns
    -------
    ndarray
        ``w_hat + c_hat * r_hat`` with ``r_hat = s_hat - sum_k d_hat * w_hat``.

    Any bin layout works (full or half spectra); the update is bin-local.
    """
    w_hat = np.asarray(w_hat)
    d_hat = np.asarray(d_hat)
    check_spectra_pair(d_hat, w_hat)
    if c_hat is None:
        c_hat = direct_coefficients(d_hat, rho)
    tmp = d_hat * w_hat
    r_hat = s_hat - np.sum(tmp, axis=-3)
    if tmp.shape == w_hat.shape:
        z_hat = np.multiply(c_hat, r_hat[..., None, :, :], out=tmp)
    else:
        z_hat = c_hat * r_hat[..., None, :, :]
    z_hat += w_hat
    return z_hat


def z_update_sherman_morrison(w_hat, d_hat, s_hat, rho, coeffs=None):
    """Baseline z-step via the Sherman-Morrison rank-one inverse.

    Solves ``(conj(d) d^T + rho I) z = s conj(d) + rho w`` per bin as
    ``z = (b - conj(d) (a^T b)) / rho`` with ``a = d / (rho + |d|^2)``.
    ``coeffs`` is the cached output of :func:`sherman_morrison_coefficients`.
    """
    w_hat = np.asarray(w_hat)
    d_hat = np.asarray(d_hat)
    check_spectra_pair(d_hat, w_hat)
    if coeffs is None:
        coeffs = sherman_morrison_coefficients(d_hat, rho)
    conj_d, a = coeffs
    b = conj_d * s_hat[..., None, :, :]
    tmp = np.multiply(w_hat, rho)
    b += tmp
    if tmp.shape != b.shape:
        tmp = np.empty_like(b)
    np.multiply(a, b, out=tmp)
    t = np.sum(tmp, axis=-3)
    np.multiply(conj_d, t[..., None, :, :], out=tmp)
    b -= tmp
    b /= rho
    return b


KERNELS = {
    "direct": z_update_direct,
    "sherman_morrison": z_update_sherman_morrison,
}

_KERNEL_COEFFS = {
    "direct": direct_coefficients,
    "sherman_morrison": sherman_morrison_coefficients,
}


def objective_unconstrained(x, filters, s, lmbda):
    """Return ``(fidelity, l1, total)`` for codes ``x`` of signal(s) ``s``.

    ``fidelity = 1/2 ||sum_k d_k * x_k - s||^2`` (summed over a batch) is
    evaluated through the DFT and Parseval's identity.
    """
    s = check_signals(s)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[:-3] + x.shape[-2:] != s.shape or x.shape[-3] != filters.n_filters:
        raise ShapeError(
            f"codes of shape {x.shape} do not match signal {s.shape} "
            f"and {filters.n_filters} filters"
        )
    shape = s.shape[-2:]
    r_hat = fourier.freq_conv_sum(filters.half_spectra(shape), fourier.rfft2(x))
    r_hat -= fourier.rfft2(s)
    fidelity = 0.5 * float(np.sum(fourier.half_spectrum_energy(r_hat, shape)))
    l1 = float(np.sum(np.abs(x)))
    return fidelity, l1, fidelity + lmbda * l1


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite("ADMM iterate became non-finite")


def solve_unconstrained(s, filters, cfg, init=None, *, kernel="direct", callback=None):
    """Run ``cfg.max_iter`` ADMM iterations for unconstrained CSC.

    Parameters
    ----------
    s : array_like, shape (n1, n2) or (P, n1, n2)
        Signal or batch of signals; a batch shares the filters and is
        coded jointly (objective terms are summed).
    filters : FilterBank
    cfg : SolverConfig
    init : CoefficientState, optional
        Warm start; zeros otherwise.
    kernel : {"direct", "sherman_morrison"}
        z-step implementation.
    callback : callable, optional
        Called as ``callback(iteration, state)`` after each iteration.

    Returns
    -------
    state : CoefficientState
    trace : IterationTrace
        One record per iteration; the fidelity and l1 terms are those of the
        sparse codes ``x``.
    """
    s = check_signals(s)
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}")
    shape = s.shape[-2:]
    K = filters.n_filters
    code_shape = s.shape[:-2] + (K,) + shape
    if init is None:
        state = CoefficientState.zeros(code_shape)
    else:
        if init.x.shape != code_shape:
            raise ShapeError(f"warm start has shape {init.x.shape}, expected {code_shape}")
        state = init.copy()

    d_hat = filters.half_spectra(shape)
    s_hat = fourier.rfft2(s)
    coeffs = _KERNEL_COEFFS[kernel](d_hat, cfg.rho)
    solve = KERNELS[kernel]
    kappa = cfg.lmbda / cfg.rho

    x, z, u = state.x, state.z, state.u
    x_hat = fourier.rfft2(x)
    u_hat = fourier.rfft2(u)
    trace = IterationTrace()
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iter + 1):
        z_hat = solve(x_hat - u_hat, d_hat, s_hat, cfg.rho, coeffs)
        z = fourier.irfft2(z_hat, shape)
        x = shrinkage(z + u, kappa)
        u = u + z - x
        x_hat = fourier.rfft2(x)
        u_hat = u_hat + z_hat - x_hat
        _check_finite(x, u)

        r_hat = fourier.freq_conv_sum(d_hat, x_hat) - s_hat
        fidelity = 0.5 * float(np.sum(fourier.half_spectrum_energy(r_hat, shape)))
        l1 = float(np.sum(np.abs(x)))
        trace.append(
            TraceRecord(
                iteration=it,
                fidelity=fidelity,
                l1=l1,
                objective=fidelity + cfg.lmbda * l1,
                seconds=time.perf_counter() - t0,
                primal_residual=float(np.linalg.norm(z - x)),
            )
        )
        state = CoefficientState(x, z, u)
        if callback is not None:
            callback(it, state)
    return state, trace


def flop_model(K, P, n, method="direct"):
    """Analytic flop count of one z-step over ``P`` signals of ``n`` bins.

    ``direct``: ``((4K + 1) P + 3K + 1) n``; ``sherman_morrison``:
    ``(7KP + 3K + 1) n``. The shared ``3K + 1`` term is the per-bin cost of
    the cached filter coefficients.
    """
    K = check_int(K, "K")
    P = check_int(P, "P")
    n = check_int(n, "n")
    if method == "direct":
        return ((4 * K + 1) * P + 3 * K + 1) * n
    if method == "sherman_morrison":
        return (7 * K * P + 3 * K + 1) * n
    raise ValueError(f"unknown method {method!r}")
