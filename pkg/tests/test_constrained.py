import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cscadmm import FilterBank, SolverConfig
from cscadmm.constrained import (
    ConstraintConfig,
    error_at_nu,
    solve_constrained,
    solve_nu_secant,
    z_update_constrained,
)
from cscadmm.csc import solve_unconstrained, z_update_direct
from cscadmm.datasets import desk_image
from cscadmm.exceptions import DomainError, NoConvergence, NotBracketable
from cscadmm.fourier import fft2, ifft2, residual_energy_freq

from .conftest import random_spectra, rel_err


def random_instance(rng, K=3, shape=(6, 6), scale=1.0):
    fb = FilterBank.random(K, (3, 3), rng)
    d = fb.spectra(shape)
    s = fft2(scale * rng.standard_normal(shape))
    w = fft2(0.1 * rng.standard_normal((K,) + shape))
    return w, d, s


def residual(w, d, s):
    return s - np.sum(d * w, axis=0)


class TestErrorAtNu:
    def test_scalar_examples(self):
        r, dsum = np.array([[3.0 + 0j]]), np.array([[1.0]])
        assert error_at_nu(1.0, r, dsum) == pytest.approx(2.25)
        assert error_at_nu(2.0, r, dsum) == pytest.approx(4.0)

    def test_zero_residual(self):
        assert error_at_nu(3.0, np.zeros((4, 4)), np.ones((4, 4))) == 0

    def test_domain(self):
        with pytest.raises(DomainError):
            error_at_nu(0.0, np.ones((2, 2)), np.ones((2, 2)))

    def test_matches_spatial_residual(self, rng):
        w, d, s = random_instance(rng)
        z = z_update_direct(w, d, s, 0.8)
        spatial = np.sum(ifft2(residual(z, d, s)) ** 2)
        r = residual(w, d, s)
        dsum = np.sum(np.abs(d) ** 2, axis=0)
        assert error_at_nu(0.8, r, dsum) == pytest.approx(spatial, rel=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_strictly_increasing(self, seed):
        rng = np.random.default_rng(seed)
        r = random_spectra(rng, 5, 5)
        dsum = rng.uniform(0.01, 5.0, (5, 5))
        nus = np.logspace(-6, 6, 121)
        e = np.array([error_at_nu(nu, r, dsum) for nu in nus])
        assert np.all(np.diff(e) > 0)

    def test_limits(self, rng):
        r = random_spectra(rng, 4, 4)
        dsum = rng.uniform(0.5, 2.0, (4, 4))
        sup = np.sum(np.abs(r) ** 2) / 16
        assert error_at_nu(1e-8, r, dsum) < 1e-12 * sup
        assert error_at_nu(1e8, r, dsum) == pytest.approx(sup, rel=1e-6)


class TestSecant:
    def test_inverts_scalar_example(self):
        rep = solve_nu_secant(np.array([[3.0 + 0j]]), np.array([[1.0]]), ConstraintConfig(2.25))
        assert rep.nu_star == pytest.approx(1.0, rel=1e-5)
        assert abs(rep.achieved_error - 2.25) <= 1e-6 * 2.25

    def test_round_trip(self, rng):
        r = random_spectra(rng, 8, 8)
        dsum = rng.uniform(0.2, 3.0, (8, 8))
        eps = error_at_nu(5.0, r, dsum)
        rep = solve_nu_secant(r, dsum, ConstraintConfig(eps))
        assert rep.nu_star == pytest.approx(5.0, rel=1e-4)

    def test_not_bracketable_above_sup(self):
        r = np.zeros((2, 2), complex)
        r[0, 0] = 2.0  # ||r||^2 / n = 1
        with pytest.raises(NotBracketable):
            solve_nu_secant(r, np.ones((2, 2)), ConstraintConfig(2.0))

    def test_not_bracketable_below_inf(self):
        r = np.ones((2, 2), complex)
        dsum = np.array([[0.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NotBracketable):
            solve_nu_secant(r, dsum, ConstraintConfig(0.1))

    def test_no_convergence_reports_last_iterate(self, rng):
        r = random_spectra(rng, 6, 6)
        dsum = rng.uniform(0.2, 3.0, (6, 6))
        eps = error_at_nu(1e4, r, dsum)
        with pytest.raises(NoConvergence) as info:
            solve_nu_secant(r, dsum, ConstraintConfig(eps, secant_tol=1e-14, secant_max_iter=3))
        assert info.value.report.iterations == 3

    @pytest.mark.parametrize("target_nu", [1e-5, 1e-2, 1.0, 1e3, 1e6])
    def test_wide_range_of_roots(self, rng, target_nu):
        r = random_spectra(rng, 8, 8)
        dsum = rng.uniform(0.2, 3.0, (8, 8))
        eps = error_at_nu(target_nu, r, dsum)
        rep = solve_nu_secant(r, dsum, ConstraintConfig(eps))
        assert abs(rep.achieved_error - eps) <= 1e-6 * eps
        assert rep.iterations <= 30

    def test_warm_start_cuts_iterations(self, rng):
        r = random_spectra(rng, 8, 8)
        dsum = rng.uniform(0.2, 3.0, (8, 8))
        eps = error_at_nu(300.0, r, dsum)
        cold = solve_nu_secant(r, dsum, ConstraintConfig(eps))
        warm = solve_nu_secant(r, dsum, ConstraintConfig(eps), nu_warm=290.0)
        assert warm.iterations < cold.iterations

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ConstraintConfig(0.0)
        with pytest.raises(ValueError):
            ConstraintConfig(1.0, nu_init=(1.0, 1.0))


class TestZUpdateConstrained:
    def test_feasible_branch_returns_w(self, rng):
        w, d, s = random_instance(rng)
        e_w = residual_energy_freq(residual(w, d, s))
        z, rep = z_update_constrained(w, d, s, ConstraintConfig(2 * e_w))
        assert rep is None
        assert np.array_equal(z, w)

    def test_constraint_active(self, rng):
        w, d, s = random_instance(rng)
        e_w = residual_energy_freq(residual(w, d, s))
        eps = 0.3 * e_w
        z, rep = z_update_constrained(w, d, s, ConstraintConfig(eps))
        spatial = np.sum(ifft2(residual(z, d, s)) ** 2)
        assert abs(spatial - eps) <= 1e-6 * eps

    def test_equality_branch_equals_direct_kernel(self, rng):
        w, d, s = random_instance(rng)
        eps = 0.5 * residual_energy_freq(residual(w, d, s))
        z, rep = z_update_constrained(w, d, s, ConstraintConfig(eps))
        assert rel_err(z, z_update_direct(w, d, s, rep.nu_star)) <= 1e-12

    def test_tiny_epsilon_interpolates(self, rng):
        w, d, s = random_instance(rng, K=3, shape=(4, 4))
        z, rep = z_update_constrained(w, d, s, ConstraintConfig(1e-10))
        assert residual_energy_freq(residual(z, d, s)) <= 1e-10 * (1 + 1e-6)
        # limit: minimum-norm correction that interpolates exactly
        r = residual(w, d, s)
        exact = w + np.conj(d) / np.sum(np.abs(d) ** 2, axis=0) * r
        assert rel_err(z, exact) < 1e-4

    def test_tighter_bound_moves_further(self, rng):
        w, d, s = random_instance(rng)
        eps = 0.5 * residual_energy_freq(residual(w, d, s))
        z, _ = z_update_constrained(w, d, s, ConstraintConfig(eps))
        tight, _ = z_update_constrained(w, d, s, ConstraintConfig(0.9 * eps))
        assert np.sum(np.abs(tight - w) ** 2) > np.sum(np.abs(z - w) ** 2)


class TestSolver:
    def test_zero_signal(self):
        fb = FilterBank.random(3, (3, 3), seed=0)
        state, trace = solve_constrained(np.zeros((8, 8)), fb, SolverConfig(max_iter=5),
                                         ConstraintConfig(1e-3))
        assert np.all(state.x == 0)
        assert not any(r.equality_branch for r in trace)

    def test_zero_feasible_takes_trivial_branch(self):
        s = desk_image((16, 16), seed=1)
        fb = FilterBank.random(3, (3, 3), seed=0)
        state, trace = solve_constrained(s, fb, SolverConfig(max_iter=5),
                                         ConstraintConfig(1.01 * np.sum(s ** 2)))
        assert not any(r.equality_branch for r in trace)
        assert np.all(state.x == 0)

    def test_loose_bound_stabilizes_and_stays_active(self):
        s = desk_image((32, 32), seed=4)
        s = s - s.mean()
        fb = FilterBank.random(6, (4, 4), seed=1)
        _, unc = solve_unconstrained(s, fb, SolverConfig(rho=10, lmbda=0.05, max_iter=300))
        eps = 2 * (2 * unc[-1].fidelity)
        _, trace = solve_constrained(s, fb, SolverConfig(rho=10, max_iter=300),
                                     ConstraintConfig(eps))
        l1 = trace.column("l1")
        assert abs(l1[-1] - l1[-20]) <= 1e-3 * l1[-1]
        assert l1[-1] < unc[-1].l1
        assert trace[-1].equality_branch
        assert trace[-1].constraint_error == pytest.approx(eps, rel=1e-6)

    def test_trace_fields(self):
        s = desk_image((16, 16), seed=2)
        fb = FilterBank.random(3, (3, 3), seed=0)
        eps = 0.01 * np.sum(s ** 2)
        _, trace = solve_constrained(s, fb, SolverConfig(max_iter=4), ConstraintConfig(eps))
        first = trace[0]
        assert first.equality_branch and first.nu > 0
        assert first.constraint_error == pytest.approx(eps, rel=1e-6)
        assert first.objective == first.l1

    def test_deterministic(self):
        s = desk_image((16, 16), seed=2)
        fb = FilterBank.random(3, (3, 3), seed=0)
        args = (s, fb, SolverConfig(max_iter=6), ConstraintConfig(0.05 * np.sum(s ** 2)))
        a = solve_constrained(*args)[1]
        b = solve_constrained(*args)[1]
        for col in ("fidelity", "l1", "nu", "constraint_error"):
            assert np.array_equal(a.column(col), b.column(col))
