import numpy as np
import pytest

from cscadmm.fourier import fft2, ifft2
from cscadmm.oracle import (
    DenseBinSystem,
    dense_bin_solve,
    prox_l1_grid,
    spatial_circular_conv,
)


def test_impulse_is_identity(rng):
    z = rng.standard_normal((5, 4))
    d = np.zeros((5, 4))
    d[0, 0] = 1
    assert np.array_equal(spatial_circular_conv(d, z), z)


def test_shifted_impulse_shifts(rng):
    z = rng.standard_normal((5, 4))
    d = np.zeros((5, 4))
    d[1, 0] = 1
    assert np.array_equal(spatial_circular_conv(d, z), np.roll(z, 1, axis=0))


def test_conv_matches_fft(rng):
    d, z = rng.standard_normal((2, 6, 6))
    assert np.max(np.abs(spatial_circular_conv(d, z) - ifft2(fft2(d) * fft2(z)))) < 1e-10


def test_oracle_size_cap():
    with pytest.raises(ValueError):
        spatial_circular_conv(np.zeros((65, 65)), np.zeros((65, 65)))


def test_dense_scalar_example():
    z = dense_bin_solve(DenseBinSystem(np.array([2.0]), np.array([1.0]), 10.0, 2.0))
    assert z[0] == pytest.approx(11 / 3, abs=1e-14)


def test_dense_zero_filter_returns_omega(rng):
    omega = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    z = dense_bin_solve(DenseBinSystem(np.zeros(4), omega, 3.0 + 1j, 0.7))
    assert np.allclose(z, omega, atol=1e-15)


def test_dense_normal_equations(rng):
    delta = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    omega = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    sys = DenseBinSystem(delta, omega, 0.3 - 2j, 1.5)
    z = dense_bin_solve(sys)
    assert np.max(np.abs(sys.matrix() @ z - sys.rhs())) <= 1e-12


@pytest.mark.parametrize(
    "v, kappa, expect, tol",
    [(1.2, 0.5, 0.7, 1e-4), (0.2, 0.5, 0.0, 0.0), (-0.73, 0.0, -0.73, 1e-4)],
)
def test_prox_grid(v, kappa, expect, tol):
    assert abs(prox_l1_grid(v, kappa, 1e-4) - expect) <= tol + 1e-12
