"""2-D transforms, filter padding and frequency-domain sums.

All convolutions in this package are circular: multiplying DFTs bin by bin
is exactly periodic convolution, and every solver relies on that. The
forward transform is unnormalized and the inverse carries the ``1/n``
factor, so ``(1/n) * sum(|X|**2) == sum(|x|**2)``.

The public functions work on full spectra. Solvers use the half spectra of
``rfft2`` internally; :func:`half_spectrum_weights` gives the multiplicities
needed for energies computed on that layout.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ._validation import check_map
from .exceptions import ShapeError, SymmetryViolation

#: Relative size of the imaginary residue tolerated by :func:`ifft2`.
SYMMETRY_TOL = 1e-8

#: Tolerance on filter norms for membership of the unit sphere.
UNIT_NORM_TOL = 1e-12


def fft2(m):
    """Unnormalized 2-D DFT over the last two axes."""
    return scipy.fft.fft2(np.asarray(m, dtype=np.float64), axes=(-2, -1))


def ifft2(m):
    """Inverse 2-D DFT of the spectrum of a real signal.

    Raises
    ------
    SymmetryViolation
        If the imaginary part of the result exceeds ``SYMMETRY_TOL`` times
        the norm of the real part, i.e. ``m`` was not conjugate-symmetric.
    """
    out = scipy.fft.ifft2(np.asarray(m, dtype=np.complex128), axes=(-2, -1))
    re_norm = np.linalg.norm(out.real)
    im_norm = np.linalg.norm(out.imag)
    if im_norm > SYMMETRY_TOL * max(re_norm, np.finfo(float).tiny):
        raise SymmetryViolation(
            f"imaginary residue {im_norm:.3e} exceeds {SYMMETRY_TOL:g} x "
            f"real norm {re_norm:.3e}; input is not the spectrum of a real map"
        )
    return np.ascontiguousarray(out.real)


def rfft2(m):
    return scipy.fft.rfft2(m, axes=(-2, -1))


def irfft2(m, shape):
    return scipy.fft.irfft2(m, s=shape, axes=(-2, -1))


def half_spectrum_weights(n2):
    """Multiplicity of each ``rfft`` column in the full spectrum.

    Columns 0 and (for even ``n2``) ``n2 // 2`` appear once, the rest twice.
    """
    w = np.full(n2 // 2 + 1, 2.0)
    w[0] = 1.0
    if n2 % 2 == 0:
        w[-1] = 1.0
    return w


def half_spectrum_energy(r_hat, shape):
    """Spatial squared norm per leading index, from half spectra of ``shape``.

    Returns an array over the leading axes of ``r_hat`` (a scalar for 2-D input).
    """
    n = shape[0] * shape[1]
    w = half_spectrum_weights(shape[1])
    a = np.abs(r_hat) ** 2
    return np.sum(a * w, axis=(-2, -1)) / n


def pad_filter(d, target):
    """Zero-pad filter(s) to ``target`` with the filter in the top-left corner.

    ``d`` may be one filter ``(m1, m2)`` or a stack ``(K, m1, m2)``.
    """
    d = np.asarray(d, dtype=np.float64)
    n1, n2 = target
    m1, m2 = d.shape[-2:]
    if m1 > n1 or m2 > n2:
        raise ShapeError(f"filter support {(m1, m2)} exceeds target {tuple(target)}")
    out = np.zeros(d.shape[:-2] + (n1, n2))
    out[..., :m1, :m2] = d
    return out


def support_mask(support, target):
    """Boolean mask of the top-left ``support`` block inside ``target``."""
    m1, m2 = support
    n1, n2 = target
    if m1 > n1 or m2 > n2:
        raise ShapeError(f"support {tuple(support)} exceeds target {tuple(target)}")
    mask = np.zeros((n1, n2), dtype=bool)
    mask[:m1, :m2] = True
    return mask


def freq_conv_sum(d_hat, z_hat):
    """Return ``sum_k d_hat[k] * z_hat[k]`` over the filter axis (-3)."""
    d_hat = np.asarray(d_hat)
    z_hat = np.asarray(z_hat)
    if d_hat.ndim < 3 or z_hat.ndim < 3:
        raise ShapeError("expected stacks of spectra with shape (..., K, N1, N2)")
    try:
        np.broadcast_shapes(d_hat.shape, z_hat.shape)
    except ValueError as exc:
        raise ShapeError(f"cannot pair {d_hat.shape} with {z_hat.shape}") from exc
    return np.sum(d_hat * z_hat, axis=-3)


def residual_energy_freq(r_hat):
    """Spatial squared l2 norm of a residual given its full spectrum."""
    r_hat = np.asarray(r_hat)
    n = r_hat.shape[-2] * r_hat.shape[-1]
    return float(np.sum(np.abs(r_hat) ** 2) / n)


def circular_convolve(d, x):
    """Circular convolution of padded filters with coefficient maps, summed over K.

    ``d`` is ``(K, n1, n2)``; ``x`` is ``(..., K, n1, n2)``.
    """
    shape = x.shape[-2:]
    return irfft2(np.sum(rfft2(d) * rfft2(x), axis=-3), shape)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """A bank of ``K`` unit-norm filters with common support ``(m1, m2)``.

    Padded spectra are computed lazily per target shape and cached; the bank
    is immutable, so cached spectra never go stale.

    Parameters
    ----------
    filters : array_like, shape (K, m1, m2)
        Filters, each with unit l2 norm.
    """

    filters: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        f = check_map(self.filters, "filters", ndim=(3,)).copy()
        norms = np.sqrt(np.sum(f ** 2, axis=(1, 2)))
        bad = np.abs(norms - 1.0) > UNIT_NORM_TOL
        if np.any(bad):
            raise ValueError(
                f"filters {np.flatnonzero(bad).tolist()} are not unit-norm "
                f"(norms {norms[bad].tolist()}); use FilterBank.normalized"
            )
        f.setflags(write=False)
        object.__setattr__(self, "filters", f)

    @classmethod
    def normalized(cls, filters):
        """Build a bank after scaling every filter to unit norm."""
        f = np.array(filters, dtype=np.float64)
        if f.ndim == 2:
            f = f[None]
        norms = np.sqrt(np.sum(f ** 2, axis=(-2, -1), keepdims=True))
        if np.any(norms == 0):
            raise ValueError("cannot normalize an all-zero filter")
        return cls(f / norms)

    @classmethod
    def random(cls, n_filters, support, seed=None):
        """Standard-normal filters projected onto the unit sphere."""
        rng = np.random.default_rng(seed)
        return cls.normalized(rng.standard_normal((n_filters,) + tuple(support)))

    @property
    def n_filters(self):
        return self.filters.shape[0]

    @property
    def support(self):
        return self.filters.shape[1:]

    def padded(self, target):
        return pad_filter(self.filters, target)

    def spectra(self, target):
        """Full spectra of the filters zero-padded to ``target``."""
        return self._cached(("full", tuple(target)), lambda: fft2(self.padded(target)))

    def half_spectra(self, target):
        """``rfft2`` spectra of the padded filters (solver-internal layout)."""
        return self._cached(("half", tuple(target)), lambda: rfft2(self.padded(target)))

    def _cached(self, key, compute):
        if key not in self._cache:
            arr = compute()
            arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    def __len__(self):
        return self.n_filters

    def __eq__(self, other):
        if not isinstance(other, FilterBank):
            return NotImplemented
        return np.array_equal(self.filters, other.filters)

    __hash__ = None
