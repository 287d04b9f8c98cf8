"""Error-constrained convolutional sparse coding.

Solves ``minimize sum_k ||x_k||_1  s.t.  ||sum_k d_k * x_k - s||^2 <= epsilon``
by ADMM where the z-step is the projection onto the residual-energy ball::

    z <- w                                  if e(w) <= epsilon
    z <- argmin sum ||z_k - w_k||^2  s.t. e(z) = epsilon    otherwise

The equality case is a ridge problem with multiplier ``nu``; its residual
energy ``e(nu) = (nu^2/n) sum_i |r_i|^2 / (nu + D_i)^2`` is increasing in
``nu``, so ``nu*`` is found by a one-dimensional root search.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import fourier
from ._validation import check_int, check_map, check_positive
from .csc import (
    CoefficientState,
    IterationTrace,
    SolverConfig,
    TraceRecord,
    _check_finite,
    shrinkage,
    z_update_direct,
)
from .exceptions import DomainError, NoConvergence, NotBracketable, ShapeError

__all__ = [
    "ConstraintConfig",
    "NuSolveReport",
    "error_at_nu",
    "solve_nu_secant",
    "z_update_constrained",
    "solve_constrained",
]


@dataclass(frozen=True)
class ConstraintConfig:
    """Residual-energy bound and multiplier-search settings."""

    epsilon: float
    secant_tol: float = 1e-6
    secant_max_iter: int = 50
    nu_init: tuple = (1.0, 2.0)

    def __post_init__(self):
        check_positive(self.epsilon, "epsilon")
        check_positive(self.secant_tol, "secant_tol")
        check_int(self.secant_max_iter, "secant_max_iter", minimum=2)
        if len(self.nu_init) != 2:
            raise ValueError("nu_init must hold two starting points")
        a, b = (check_positive(v, "nu_init") for v in self.nu_init)
        if a == b:
            raise ValueError("nu_init points must be distinct")


@dataclass(frozen=True)
class NuSolveReport:
    nu_star: float
    iterations: int
    achieved_error: float


class _EnergyCurve:
    """``e(nu)`` for fixed residual spectrum and filter power.

    ``weights`` are bin multiplicities (all ones for a full spectrum) and
    ``n`` the number of spatial samples.
    """

    def __init__(self, r_hat, dsum, n, weights=1.0):
        self.r2 = np.abs(r_hat) ** 2 * weights
        self.dsum = np.asarray(dsum, dtype=np.float64)
        if np.any(self.dsum < 0):
            raise DomainError("filter power must be non-negative")
        self.n = n

    def __call__(self, nu):
        if not nu > 0:
            raise DomainError(f"nu must be > 0, got {nu!r}")
        q = nu / (nu + self.dsum)
        return float(np.sum(self.r2 * q * q) / self.n)

    @property
    def supremum(self):
        return float(np.sum(self.r2) / self.n)

    @property
    def infimum(self):
        return float(np.sum(np.where(self.dsum == 0, self.r2, 0.0)) / self.n)


def error_at_nu(nu, r_hat, dsum):
    """Residual energy of the multiplier-``nu`` ridge solution.

    Parameters
    ----------
    nu : float
        Multiplier, must be positive.
    r_hat : ndarray
        Full spectrum of ``s - sum_k d_k * w_k``.
    dsum : ndarray
        ``sum_k |d_hat_k|^2`` on the same bins.
    """
    r_hat = np.asarray(r_hat)
    n = r_hat.shape[-2] * r_hat.shape[-1] if r_hat.ndim >= 2 else r_hat.size
    return _EnergyCurve(r_hat, dsum, n)(nu)


def solve_nu_secant(r_hat, dsum, cc, nu_warm=None, *, _curve=None):
    """Find ``nu*`` with ``e(nu*) = epsilon`` to relative accuracy ``secant_tol``.

    Secant steps are taken on ``log e`` versus ``log nu``, where the curve
    is close to linear for small ``nu``. A bracket of the root is kept; steps
    leaving it fall back to bisection (or to geometric expansion while the
    bracket is still one-sided).

    ``nu_warm`` rescales both starting points, e.g. with the previous ADMM
    iteration's ``nu*``.

    Raises
    ------
    NotBracketable
        If ``epsilon`` is outside the range of ``e`` on ``(0, inf)``.
    NoConvergence
        After ``secant_max_iter`` energy evaluations; carries the last report.
    """
    if _curve is None:
        r_hat = np.asarray(r_hat)
        n = r_hat.shape[-2] * r_hat.shape[-1] if r_hat.ndim >= 2 else r_hat.size
        _curve = _EnergyCurve(r_hat, dsum, n)
    curve = _curve
    eps = cc.epsilon
    if curve.supremum <= eps:
        raise NotBracketable(
            f"sup e(nu) = {curve.supremum:.6g} <= epsilon = {eps:.6g}; "
            "the residual is already feasible"
        )
    if curve.infimum >= eps:
        raise NotBracketable(
            f"inf e(nu) = {curve.infimum:.6g} >= epsilon = {eps:.6g}; "
            "bins with zero filter power leave too much residual"
        )

    log_eps = math.log(eps)
    scale = 1.0 if nu_warm is None else float(nu_warm)
    evals = 0
    best = None  # (|f|, t, e)

    def f(t):
        nonlocal evals, best
        evals += 1
        e = curve(math.exp(t))
        val = math.log(e) - log_eps if e > 0 else -math.inf
        if best is None or abs(val) < best[0]:
            best = (abs(val), t, e)
        return val

    def converged():
        return abs(best[2] - eps) <= cc.secant_tol * eps

    lo, hi = -math.inf, math.inf
    t_prev = math.log(scale * cc.nu_init[0])
    t_cur = math.log(scale * cc.nu_init[1])
    f_prev = f(t_prev)
    f_cur = f(t_cur)
    for t, v in ((t_prev, f_prev), (t_cur, f_cur)):
        if v < 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
    step = 2.0

    while not converged() and evals < cc.secant_max_iter:
        t_new = math.nan
        if f_cur != f_prev and math.isfinite(f_prev) and math.isfinite(f_cur):
            t_new = t_cur - f_cur * (t_cur - t_prev) / (f_cur - f_prev)
        if not (math.isfinite(t_new) and lo < t_new < hi):
            if math.isfinite(lo) and math.isfinite(hi):
                t_new = 0.5 * (lo + hi)
            elif math.isfinite(lo):
                t_new = lo + step
                step *= 2.0
            else:
                t_new = hi - step
                step *= 2.0
        f_new = f(t_new)
        if f_new < 0:
            lo = max(lo, t_new)
        else:
            hi = min(hi, t_new)
        t_prev, f_prev, t_cur, f_cur = t_cur, f_cur, t_new, f_new

    report = NuSolveReport(math.exp(best[1]), evals, best[2])
    if not converged():
        raise NoConvergence(
            f"nu search did not reach |e - eps| <= {cc.secant_tol:g} eps "
            f"in {evals} evaluations (e = {best[2]:.12g}, eps = {eps:.12g})",
            report,
        )
    return report


def _z_update_constrained(w_hat, d_hat, s_hat, cc, n, weights, nu_warm=None):
    r_hat = s_hat - fourier.freq_conv_sum(d_hat, w_hat)
    dsum = np.sum(d_hat.real ** 2 + d_hat.imag ** 2, axis=-3)
    curve = _EnergyCurve(r_hat, dsum, n, weights)
    e_w = curve.supremum
    if e_w <= cc.epsilon:
        return w_hat, None, e_w
    report = solve_nu_secant(r_hat, dsum, cc, nu_warm, _curve=curve)
    z_hat = z_update_direct(w_hat, d_hat, s_hat, report.nu_star)
    return z_hat, report, report.achieved_error


def z_update_constrained(w_hat, d_hat, s_hat, cc, nu_warm=None):
    """Projection of ``w`` onto ``{z : e(z) <= epsilon}`` (full spectra).

    Returns
    -------
    z_hat : ndarray
        ``w_hat`` itself when feasible, otherwise ``w_hat + c^{nu*} * r_hat``.
    report : NuSolveReport or None
        ``None`` when the feasible branch was taken.
    """
    w_hat = np.asarray(w_hat)
    d_hat = np.asarray(d_hat)
    s_hat = np.asarray(s_hat)
    if w_hat.shape != d_hat.shape or s_hat.shape != w_hat.shape[1:]:
        raise ShapeError(
            f"expected w_hat, d_hat of shape (K, N1, N2) and s_hat of shape (N1, N2); "
            f"got {w_hat.shape}, {d_hat.shape}, {s_hat.shape}"
        )
    n = s_hat.shape[-2] * s_hat.shape[-1]
    z_hat, report, _ = _z_update_constrained(w_hat, d_hat, s_hat, cc, n, 1.0, nu_warm)
    return z_hat, report


def solve_constrained(s, filters, cfg, cc, init=None, *, warm_start_nu=True, callback=None):
    """Run ``cfg.max_iter`` ADMM iterations of error-constrained CSC.

    The l1 weight is fixed at one, so the x-step threshold is ``1/rho``;
    ``cfg.lmbda`` is ignored.

    Parameters
    ----------
    s : array_like, shape (n1, n2)
    filters : FilterBank
    cfg : SolverConfig
    cc : ConstraintConfig
    init : CoefficientState, optional
    warm_start_nu : bool
        Start each multiplier search from the previous iteration's ``nu*``.

    Returns
    -------
    state : CoefficientState
    trace : IterationTrace
        ``constraint_error`` is ``e(z)`` after the z-step, ``nu`` is ``nu*``
        (``None`` on the feasible branch) and ``objective`` equals ``l1``.
    """
    s = check_map(s, "s")
    shape = s.shape
    K = filters.n_filters
    code_shape = (K,) + shape
    if init is None:
        state = CoefficientState.zeros(code_shape)
    else:
        if init.x.shape != code_shape:
            raise ShapeError(f"warm start has shape {init.x.shape}, expected {code_shape}")
        state = init.copy()

    d_hat = filters.half_spectra(shape)
    s_hat = fourier.rfft2(s)
    n = shape[0] * shape[1]
    weights = fourier.half_spectrum_weights(shape[1])
    kappa = 1.0 / cfg.rho

    x, z, u = state.x, state.z, state.u
    x_hat = fourier.rfft2(x)
    u_hat = fourier.rfft2(u)
    nu_prev = None
    trace = IterationTrace()
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iter + 1):
        z_hat, report, e_z = _z_update_constrained(
            x_hat - u_hat, d_hat, s_hat, cc, n, weights,
            nu_prev if warm_start_nu else None,
        )
        if report is not None:
            nu_prev = report.nu_star
        z = fourier.irfft2(z_hat, shape)
        x = shrinkage(z + u, kappa)
        u = u + z - x
        x_hat = fourier.rfft2(x)
        u_hat = u_hat + z_hat - x_hat
        _check_finite(x, u)

        r_hat = fourier.freq_conv_sum(d_hat, x_hat) - s_hat
        fidelity = 0.5 * float(fourier.half_spectrum_energy(r_hat, shape))
        l1 = float(np.sum(np.abs(x)))
        trace.append(
            TraceRecord(
                iteration=it,
                fidelity=fidelity,
                l1=l1,
                objective=l1,
                seconds=time.perf_counter() - t0,
                primal_residual=float(np.linalg.norm(z - x)),
                constraint_error=float(e_z),
                nu=None if report is None else report.nu_star,
                equality_branch=report is not None,
            )
        )
        state = CoefficientState(x, z, u)
        if callback is not None:
            callback(it, state)
    return state, trace
