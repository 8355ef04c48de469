"""Tests for the binned kernel density estimator."""

import numpy as np
import pytest
from scipy.integrate import quad

from loggrowth.densities import make_builtin, sample
from loggrowth.errors import ConfigurationError, DomainError
from loggrowth.kde import (
    _KERNELS,
    build_kde,
    kde_dpdf,
    kde_pdf,
    kde_pv_gradient,
    kde_pv_hessian,
    kde_sup_error,
    kernel_moments,
)

D1 = make_builtin("D1")
D2 = make_builtin("D2")


class TestKernels:
    @pytest.mark.parametrize("order", [2, 4])
    def test_moment_conditions(self, order):
        moments = kernel_moments(order, up_to=order)
        assert abs(moments[0] - 1.0) <= 1e-12
        for j in range(1, order):
            assert abs(moments[j]) <= 1e-12

    @pytest.mark.parametrize("order", [2, 4])
    def test_c1_at_support_edge(self, order):
        kern, kern_d = _KERNELS[order]
        # value and derivative vanish at |t| = 1, so the kernel is C^1 on R
        assert kern(1.0) == 0.0 and kern(-1.0) == 0.0
        assert kern_d(1.0) == 0.0 and kern_d(-1.0) == 0.0

    def test_derivative_is_consistent(self):
        for order in (2, 4):
            kern, kern_d = _KERNELS[order]
            t = np.linspace(-0.99, 0.99, 101)
            fd = (kern(t + 1e-7) - kern(t - 1e-7)) / 2e-7
            np.testing.assert_allclose(kern_d(t), fd, atol=1e-6)


class TestBuild:
    def test_rejects_bad_order(self):
        with pytest.raises(ConfigurationError):
            build_kde(np.ones(10), order_s=3)

    def test_bandwidth_rule(self):
        draws = sample(D2, 10**4, seed=0)
        m = build_kde(draws, order_s=2, c_h=1.3)
        n = draws.size
        expect = 1.3 * np.std(draws, ddof=1) * (np.log(n) / n) ** 0.2
        assert m.bandwidth == pytest.approx(expect, rel=1e-12)
        assert m.c_h == 1.3 and m.n_samples == n

    def test_uniform_sup_error(self):
        m = build_kde(sample(D1, 10**5, seed=3), order_s=2, c_h=1.0)
        bs = np.linspace(0.55, 1.45, 901)
        assert np.max(np.abs(kde_pdf(m, bs) - 1.0)) <= 0.05

    def test_nonnegative_for_order_two(self):
        m = build_kde(sample(D2, 10**4, seed=5), order_s=2)
        bs = np.linspace(m.grid_lo, m.grid_hi, 2001)
        assert np.all(kde_pdf(m, bs) >= 0.0)

    def test_determinism(self):
        draws = sample(D2, 10**4, seed=7)
        a = build_kde(draws, 2, 1.0)
        b = build_kde(draws, 2, 1.0)
        np.testing.assert_array_equal(a.pdf_values, b.pdf_values)
        np.testing.assert_array_equal(a.dpdf_values, b.dpdf_values)

    def test_node_query_matches_direct_sum(self):
        draws = sample(D2, 2000, seed=9)
        m = build_kde(draws, order_s=2)
        kern, _ = _KERNELS[2]
        for j in (100, 2048, 4000):
            x = m.grid[j]
            direct = np.sum(kern((x - draws) / m.bandwidth)) / (draws.size * m.bandwidth)
            assert kde_pdf(m, float(x)) == pytest.approx(direct, abs=1e-12)

    def test_domain_errors(self):
        m = build_kde(sample(D2, 1000, seed=1), order_s=2)
        with pytest.raises(DomainError):
            kde_pdf(m, m.grid_hi + 0.1)
        with pytest.raises(DomainError):
            kde_dpdf(m, m.grid_lo - 0.1)


class TestDerivativeSurface:
    def test_flat_density_derivative_bound(self):
        m = build_kde(sample(D1, 10**5, seed=11), order_s=2, c_h=2.0)
        bs = np.linspace(0.6, 1.4, 801)
        assert np.max(np.abs(kde_dpdf(m, bs))) <= 0.5

    def test_matches_finite_difference_of_pdf(self):
        m = build_kde(sample(D2, 10**4, seed=13), order_s=2, c_h=1.5)
        nodes = m.grid[1000:3000:100]
        fd = (kde_pdf(m, nodes + 1e-4) - kde_pdf(m, nodes - 1e-4)) / 2e-4
        np.testing.assert_allclose(kde_dpdf(m, nodes), fd, atol=1e-3)


class TestSupError:
    def test_error_decreases_with_sample_size(self):
        errs = [kde_sup_error(build_kde(sample(D2, n, seed=17), 2, 1.0),
                              D2, (0.711, 1.289))
                for n in (10**3, 10**4, 10**5)]
        nus = [e["nu"] for e in errs]
        assert nus[0] > nus[1] > nus[2]

    def test_pdf_and_derivative_scale_separation(self):
        # nu/nu' shrinks as n grows: the derivative is the harder target
        rats = []
        for n in (10**3, 10**5):
            e = kde_sup_error(build_kde(sample(D2, n, seed=19), 2, 1.0),
                              D2, (0.711, 1.289))
            rats.append(e["nu"] / e["nu_prime"])
        assert rats[1] < rats[0]

    def test_interval_validation(self):
        m = build_kde(sample(D2, 1000, seed=1), order_s=2)
        with pytest.raises(ConfigurationError):
            kde_sup_error(m, D2, (0.4, 1.2))


class TestTabulatedPrincipalValues:
    def test_pv_gradient_matches_quadrature_of_surface(self):
        # oracle: adaptive quadrature of the interpolated surface with the
        # symmetric-cutoff limit at the pole
        m = build_kde(sample(D2, 10**4, seed=23), order_s=2, scale_by_sd=False)
        K = -0.93
        pole = -1.0 / K

        def f(b):
            return float(kde_pdf(m, b)) * b / (1.0 + b * K)

        h = 1e-5
        parts = []
        for lo, hi in ((m.grid_lo, pole - h), (pole + h, m.grid_hi)):
            parts.append(quad(f, lo, hi, limit=400, epsabs=1e-10)[0])
        cutoff = sum(parts)
        # first-order cutoff correction: 2 h (b rho)'(pole) / K
        d_h = float(kde_dpdf(m, pole))
        p_h = float(kde_pdf(m, pole))
        corr = 2 * h * (p_h + pole * d_h) / K
        assert kde_pv_gradient(m, K) == pytest.approx(cutoff + corr, abs=5e-7)

    def test_pv_hessian_tracks_true_curvature(self):
        from loggrowth.pvcore import find_Kstar, hessian_decomposition

        Ks = find_Kstar(D2)
        true_h = hessian_decomposition(D2, Ks, 0.0).total
        m = build_kde(sample(D2, 10**5, seed=29), order_s=2, scale_by_sd=False)
        assert kde_pv_hessian(m, Ks) == pytest.approx(true_h, rel=0.35)
