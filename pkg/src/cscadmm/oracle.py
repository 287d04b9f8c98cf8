"""Slow reference implementations used to check the fast paths.

Nothing here touches an FFT: convolutions are explicit sums and per-bin
linear systems are solved with dense factorizations. Problem sizes are
capped so the test-suite stays fast.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError

MAX_N = 64 * 64
MAX_K = 8
MAX_P = 4


def _check_size(n=1, K=1, P=1):
    if n > MAX_N or K > MAX_K or P > MAX_P:
        raise ValueError(
            f"oracle limited to n <= {MAX_N}, K <= {MAX_K}, P <= {MAX_P}; "
            f"got n={n}, K={K}, P={P}"
        )


def spatial_circular_conv(d, z):
    """Direct circular convolution ``(d * z)[i] = sum_j d[j] z[i - j mod n]``."""
    d = np.asarray(d, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if d.shape != z.shape or d.ndim != 2:
        raise ShapeError(f"expected equal 2-D shapes, got {d.shape} and {z.shape}")
    n1, n2 = z.shape
    _check_size(n=n1 * n2)
    out = np.zeros_like(z)
    for j1, j2 in zip(*np.nonzero(d)):
        out += d[j1, j2] * np.roll(z, shift=(j1, j2), axis=(0, 1))
    return out


def synthesize(d_padded, x):
    """``sum_k d_k * x_k`` by explicit circular convolution."""
    return sum(spatial_circular_conv(d_padded[k], x[k]) for k in range(len(x)))


def objective(d_padded, x, s, lmbda):
    """Spatial-domain ``(fidelity, l1, total)`` of the unconstrained problem."""
    _check_size(n=s.size, K=len(x))
    r = synthesize(d_padded, x) - s
    fidelity = 0.5 * float(np.sum(r * r))
    l1 = float(np.sum(np.abs(x)))
    return fidelity, l1, fidelity + lmbda * l1


@dataclass(frozen=True)
class DenseBinSystem:
    """One frequency bin of the z-step: filter values, target, penalty."""

    delta: np.ndarray
    omega: np.ndarray
    s_hat_i: complex
    penalty: float

    def __post_init__(self):
        if np.ndim(self.delta) != 1 or np.shape(self.delta) != np.shape(self.omega):
            raise ShapeError("delta and omega must be 1-D of equal length")
        if len(self.delta) < 1:
            raise ValueError("need at least one filter")
        if not self.penalty > 0:
            raise ValueError("penalty must be > 0")

    def matrix(self):
        delta = np.asarray(self.delta, dtype=complex)
        return np.outer(delta.conj(), delta) + self.penalty * np.eye(len(delta))

    def rhs(self):
        delta = np.asarray(self.delta, dtype=complex)
        return self.s_hat_i * delta.conj() + self.penalty * np.asarray(self.omega, complex)


def dense_bin_solve(sys):
    """Solve ``(conj(delta) delta^T + rho I) zeta = s conj(delta) + rho omega``."""
    _check_size(K=len(sys.delta))
    return np.linalg.solve(sys.matrix(), sys.rhs())


def dense_z_update(w_hat, d_hat, s_hat, rho):
    """z-step by a dense solve in every bin; same conventions as the fast kernels.

    ``w_hat`` is ``(K, N1, N2)`` or ``(P, K, N1, N2)``, ``d_hat`` is
    ``(K, N1, N2)``.
    """
    w_hat = np.asarray(w_hat, dtype=complex)
    d_hat = np.asarray(d_hat, dtype=complex)
    batch = w_hat.ndim == 4
    if not batch:
        w_hat = w_hat[None]
        s_hat = np.asarray(s_hat)[None]
    P, K = w_hat.shape[:2]
    bins = w_hat.shape[2:]
    _check_size(n=int(np.prod(bins)), K=K, P=P)
    out = np.empty_like(w_hat)
    for p in range(P):
        for idx in np.ndindex(*bins):
            sl = (slice(None),) + idx
            out[(p,) + sl] = dense_bin_solve(
                DenseBinSystem(d_hat[sl], w_hat[(p,) + sl], s_hat[(p,) + idx], rho)
            )
    return out if batch else out[0]


def bin_gradient(z_hat, w_hat, d_hat, s_hat, rho):
    """Per-bin gradient ``conj(d)(d^T z - s) + rho (z - w)`` of the z-step objective."""
    resid = np.sum(d_hat * z_hat, axis=-3) - s_hat
    return np.conj(d_hat) * resid[..., None, :, :] + rho * (z_hat - w_hat)


def prox_l1_grid(v, kappa, grid_step=1e-4):
    """Grid minimizer of ``kappa |x| + (v - x)^2 / 2``.

    The grid contains 0 and spans ``[-|v| - 1, |v| + 1]``.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    half = abs(v) + 1.0
    k = int(np.ceil(half / grid_step))
    grid = np.arange(-k, k + 1) * grid_step
    cost = kappa * np.abs(grid) + 0.5 * (v - grid) ** 2
    return float(grid[np.argmin(cost)])
