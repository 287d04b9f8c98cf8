"""scikit-learn compatible wrappers around the solvers.

``X`` is always one image ``(n1, n2)`` or a stack ``(P, n1, n2)``; codes have
shape ``(K, n1, n2)`` or ``(P, K, n1, n2)`` accordingly.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cdl import CDLConfig, solve_cdl
from .constrained import ConstraintConfig, solve_constrained
from .csc import KERNELS, SolverConfig, solve_unconstrained
from .exceptions import ShapeError
from .fourier import FilterBank, circular_convolve


def _check_images(X):
    X = check_array(X, ensure_2d=False, allow_nd=True, dtype=np.float64)
    if X.ndim not in (2, 3):
        raise ShapeError(f"expected an image (n1, n2) or a stack (P, n1, n2), got {X.shape}")
    return X


def _as_filterbank(filters):
    if filters is None:
        raise ValueError("filters must be provided")
    if isinstance(filters, FilterBank):
        return filters
    return FilterBank.normalized(filters)


def _reconstruct(filters, codes):
    codes = np.asarray(codes, dtype=np.float64)
    if codes.ndim not in (3, 4) or codes.shape[-3] != filters.n_filters:
        raise ShapeError(
            f"codes must be (K, n1, n2) or (P, K, n1, n2) with K={filters.n_filters}, "
            f"got {codes.shape}"
        )
    return circular_convolve(filters.padded(codes.shape[-2:]), codes)


class ConvSparseCoder(TransformerMixin, BaseEstimator):
    """Sparse coding against a fixed filter bank (l1-penalized).

    Parameters
    ----------
    filters : FilterBank or array of shape (K, m1, m2)
        Arrays are rescaled to unit-norm filters.
    lmbda : float, default=0.05
        l1 weight.
    rho : float, default=10.0
        ADMM penalty.
    max_iter : int, default=25
    kernel : {"direct", "sherman_morrison"}, default="direct"
    """

    def __init__(self, filters=None, lmbda=0.05, rho=10.0, max_iter=25, kernel="direct"):
        self.filters = filters
        self.lmbda = lmbda
        self.rho = rho
        self.max_iter = max_iter
        self.kernel = kernel

    def fit(self, X=None, y=None):
        """Validate the filters (and ``X``, if given); nothing is learned."""
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {sorted(KERNELS)}")
        self.filters_ = _as_filterbank(self.filters)
        self._config()
        if X is not None:
            X = _check_images(X)
            if any(m > n for m, n in zip(self.filters_.support, X.shape[-2:])):
                raise ShapeError("filters are larger than the images")
        self.n_filters_ = self.filters_.n_filters
        return self

    def _config(self):
        return SolverConfig(rho=self.rho, lmbda=self.lmbda, max_iter=self.max_iter)

    def solve(self, X):
        """Return ``(CoefficientState, IterationTrace)`` for ``X``."""
        check_is_fitted(self, "filters_")
        return solve_unconstrained(_check_images(X), self.filters_, self._config(),
                                   kernel=self.kernel)

    def transform(self, X):
        """Sparse codes ``x`` of ``X``."""
        return self.solve(X)[0].x

    def inverse_transform(self, codes):
        """Synthesize images from codes (circular convolution with the filters)."""
        check_is_fitted(self, "filters_")
        return _reconstruct(self.filters_, codes)


class ConstrainedConvSparseCoder(TransformerMixin, BaseEstimator):
    """Sparsest codes whose squared residual stays below ``epsilon``.

    Parameters
    ----------
    filters : FilterBank or array of shape (K, m1, m2)
    epsilon : float
        Bound on ``||sum_k d_k * x_k - s||^2`` (per image).
    rho : float, default=10.0
    max_iter : int, default=25
    secant_tol : float, default=1e-6
    """

    def __init__(self, filters=None, epsilon=1.0, rho=10.0, max_iter=25, secant_tol=1e-6):
        self.filters = filters
        self.epsilon = epsilon
        self.rho = rho
        self.max_iter = max_iter
        self.secant_tol = secant_tol

    def fit(self, X=None, y=None):
        self.filters_ = _as_filterbank(self.filters)
        ConstraintConfig(epsilon=self.epsilon, secant_tol=self.secant_tol)
        SolverConfig(rho=self.rho, max_iter=self.max_iter)
        if X is not None:
            _check_images(X)
        self.n_filters_ = self.filters_.n_filters
        return self

    def solve(self, X):
        """``(CoefficientState, IterationTrace)`` for a single image ``X``."""
        check_is_fitted(self, "filters_")
        X = _check_images(X)
        if X.ndim != 2:
            raise ShapeError("solve() takes a single image; use transform() for stacks")
        return solve_constrained(
            X, self.filters_, SolverConfig(rho=self.rho, max_iter=self.max_iter),
            ConstraintConfig(epsilon=self.epsilon, secant_tol=self.secant_tol),
        )

    def transform(self, X):
        X = _check_images(X)
        if X.ndim == 2:
            return self.solve(X)[0].x
        return np.stack([self.solve(img)[0].x for img in X])

    def inverse_transform(self, codes):
        check_is_fitted(self, "filters_")
        return _reconstruct(self.filters_, codes)


class ConvDictionaryLearning(TransformerMixin, BaseEstimator):
    """Learn convolutional filters from a stack of images.

    Parameters
    ----------
    n_filters : int, default=16
    filter_shape : tuple of int, default=(8, 8)
    lmbda : float, default=0.05
    rho : float, default=10.0
        Coding penalty.
    sigma : float or None, default=None
        Dictionary penalty; ``None`` uses ``rho``.
    max_iter : int, default=50
        Outer (alternating) iterations.
    transform_max_iter : int, default=25
        ADMM iterations used by :meth:`transform`.
    mean_subtract : bool, default=False
        Remove each image's mean before learning and coding.
    random_state : int or None, default=None

    Attributes
    ----------
    filters_ : FilterBank
    components_ : ndarray of shape (K, m1, m2)
    codes_ : ndarray of shape (P, K, n1, n2)
        Sparse codes of the training images at the last iteration.
    trace_ : IterationTrace
    """

    def __init__(self, n_filters=16, filter_shape=(8, 8), lmbda=0.05, rho=10.0, sigma=None,
                 max_iter=50, transform_max_iter=25, mean_subtract=False, random_state=None):
        self.n_filters = n_filters
        self.filter_shape = filter_shape
        self.lmbda = lmbda
        self.rho = rho
        self.sigma = sigma
        self.max_iter = max_iter
        self.transform_max_iter = transform_max_iter
        self.mean_subtract = mean_subtract
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_images(X)
        if X.ndim == 2:
            X = X[None]
        seed = self.random_state
        if seed is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        cfg = CDLConfig(
            n_filters=self.n_filters, support=tuple(self.filter_shape), rho=self.rho,
            sigma=self.sigma, lmbda=self.lmbda, outer_iters=self.max_iter, seed=seed,
            mean_subtract=self.mean_subtract,
        )
        self.filters_, self.codes_, self.trace_ = solve_cdl(X, cfg)
        self.components_ = np.array(self.filters_.filters)
        return self

    def _preprocess(self, X):
        X = _check_images(X)
        if self.mean_subtract:
            X = X - X.mean(axis=(-2, -1), keepdims=True)
        return X

    def transform(self, X):
        """Code ``X`` against the learned filters."""
        check_is_fitted(self, "filters_")
        cfg = SolverConfig(rho=self.rho, lmbda=self.lmbda, max_iter=self.transform_max_iter)
        return solve_unconstrained(self._preprocess(X), self.filters_, cfg)[0].x

    def inverse_transform(self, codes):
        """Synthesize (mean-free, if ``mean_subtract``) images from codes."""
        check_is_fitted(self, "filters_")
        return _reconstruct(self.filters_, codes)
