import math

import numpy as np
import pytest

from adaptmh.errors import DimensionMismatch, DomainError, Unavailable
from adaptmh.targets import (
    Banana,
    Gaussian,
    GaussianMixture,
    TargetDensity,
    make_target,
)


class TestGaussian:
    def test_log_density_frozen(self, gauss2):
        # scipy.stats.multivariate_normal oracle
        assert gauss2.log_density(np.array([0.3, -0.2])) == pytest.approx(
            -2.6833992460913425, rel=1e-13
        )

    def test_log_density_frozen_1d(self):
        g = Gaussian([0.5], [[2.0]])
        assert g.log_density(np.array([1.3])) == pytest.approx(
            -1.4255121234846453, rel=1e-13
        )

    def test_mode_is_maximum(self, gauss2):
        lp_mode = gauss2.log_density(np.array([0.0, 1.0]))
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.standard_normal(2) * 3
            assert gauss2.log_density(x) <= lp_mode

    def test_analytic_moments(self, gauss2):
        mean, cov = gauss2.analytic_moments()
        assert np.array_equal(mean, [0.0, 1.0])
        assert np.array_equal(cov, [[1.0, 0.5], [0.5, 2.0]])

    def test_marginal_bin_masses_frozen(self, gauss2):
        masses, lo, hi = gauss2.marginal_bin_masses(1, np.array([0.0, 1.0]))
        assert masses[0] == pytest.approx(0.26024993890652326, rel=1e-12)
        assert lo == pytest.approx(0.23975006109347674, rel=1e-12)
        assert hi == pytest.approx(0.5, rel=1e-12)
        assert masses[0] + lo + hi == pytest.approx(1.0, rel=1e-12)

    def test_shape_checks(self, gauss2):
        with pytest.raises(DimensionMismatch):
            gauss2.log_density(np.zeros(3))
        with pytest.raises(DomainError):
            gauss2.marginal_bin_masses(5, np.array([0.0, 1.0]))


class TestBanana:
    def setup_method(self):
        self.banana = Banana(0.1, np.diag([100.0, 1.0]))

    def test_equals_twisted_base_frozen(self):
        # base logpdf evaluated at the twisted point (scipy oracle)
        assert self.banana.log_density(np.array([1.5, 2.0])) == pytest.approx(
            -34.37702465940339, rel=1e-13
        )

    def test_b_zero_is_base_gaussian(self):
        flat = Banana(0.0, np.diag([100.0, 1.0]))
        base = Gaussian([0.0, 0.0], np.diag([100.0, 1.0]))
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.standard_normal(2) * np.array([10.0, 1.0])
            assert flat.log_density(x) == base.log_density(x)

    def test_no_analytic_moments(self):
        assert self.banana.analytic_moments() is None

    def test_straight_axis_marginal_is_base(self):
        # the twist only bends the second coordinate
        edges = np.array([-5.0, 0.0, 5.0])
        got, lo, hi = self.banana.marginal_bin_masses(0, edges)
        base = Gaussian([0.0, 0.0], np.diag([100.0, 1.0]))
        want, wlo, whi = base.marginal_bin_masses(0, edges)
        assert np.allclose(got, want, rtol=1e-12)
        assert lo == pytest.approx(wlo, rel=1e-12)
        assert hi == pytest.approx(whi, rel=1e-12)

    def test_bent_axis_marginal_frozen(self):
        # 2-D brute-force integration oracle (scipy dblquad)
        edges = np.array([-2.0, -1.0, 0.0, 1.0])
        masses, lo, hi = self.banana.marginal_bin_masses(1, edges)
        assert masses[0] == pytest.approx(0.021077778053935663, abs=1e-9)
        assert masses[1] == pytest.approx(0.023209848005593735, abs=1e-9)
        assert masses[2] == pytest.approx(0.025681237536696405, abs=1e-9)
        assert lo == pytest.approx(0.2742435947292118, abs=1e-9)
        assert hi == pytest.approx(0.6557875416745613, abs=1e-9)
        assert sum(masses) + lo + hi == pytest.approx(1.0, abs=1e-9)

    def test_bent_axis_marginal_correlated_frozen(self):
        # correlated base plus nonzero mean exercises the conditional law
        banana = Banana(
            0.3,
            np.array([[4.0, 0.6], [0.6, 1.0]]),
            base_mean=np.array([0.2, -0.1]),
        )
        masses, lo, hi = banana.marginal_bin_masses(
            1, np.array([-1.0, 0.5])
        )
        assert masses[0] == pytest.approx(0.34299163948239086, abs=1e-9)
        assert lo == pytest.approx(0.2284963614419538, abs=1e-9)
        assert hi == pytest.approx(0.4285119990745986, abs=1e-9)
        got, _, _ = banana.marginal_bin_masses(0, np.array([0.0, 1.0]))
        assert got[0] == pytest.approx(0.19524957888735317, rel=1e-12)

    def test_needs_dim_two(self):
        with pytest.raises(DimensionMismatch):
            Banana(0.1, np.array([[1.0]]))


class TestGaussianMixture:
    def setup_method(self):
        self.mix = GaussianMixture(
            [0.3, 0.7], [[-1.0], [2.0]], [[[1.0]], [[4.0]]]
        )

    def test_log_density_frozen(self):
        assert self.mix.log_density(np.array([0.5])) == pytest.approx(
            -1.936183942645218, rel=1e-13
        )

    def test_moments_law_of_total_variance(self):
        mean, cov = self.mix.analytic_moments()
        assert mean[0] == pytest.approx(1.1, rel=1e-14)
        assert cov[0, 0] == pytest.approx(4.99, rel=1e-14)

    def test_moments_2d_frozen(self):
        mix = GaussianMixture(
            [0.4, 0.6],
            [[0.0, 0.0], [3.0, 1.0]],
            [np.eye(2), [[2.0, 0.5], [0.5, 1.0]]],
        )
        mean, cov = mix.analytic_moments()
        assert np.allclose(mean, [1.8, 0.6], rtol=1e-14)
        assert np.allclose(
            cov, [[3.76, 1.02], [1.02, 1.24]], rtol=1e-13
        )

    def test_marginal_bin_masses_frozen(self):
        masses, _, _ = self.mix.marginal_bin_masses(
            0, np.array([0.0, 1.0])
        )
        assert masses[0] == pytest.approx(0.1456891359511542, rel=1e-12)

    def test_single_component_equals_gaussian(self):
        mix = GaussianMixture(
            [1.0], [[0.0, 1.0]], [[[1.0, 0.5], [0.5, 2.0]]]
        )
        g = Gaussian([0.0, 1.0], [[1.0, 0.5], [0.5, 2.0]])
        rng = np.random.default_rng(7)
        for _ in range(10):
            x = rng.standard_normal(2)
            assert mix.log_density(x) == pytest.approx(
                g.log_density(x), rel=1e-15
            )

    def test_weight_validation(self):
        with pytest.raises(DomainError):
            GaussianMixture([0.5, 0.6], [[0.0], [1.0]], [[[1.0]], [[1.0]]])
        with pytest.raises(DomainError):
            GaussianMixture([1.0, -0.0], [[0.0], [1.0]], [[[1.0]], [[1.0]]])

    def test_component_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            GaussianMixture([0.5, 0.5], [[0.0], [1.0, 2.0]], [[[1.0]], np.eye(2)])


class TestMakeTarget:
    def test_kinds(self):
        g = make_target("gaussian", mean=[0.0], cov=[[1.0]])
        assert isinstance(g, Gaussian)
        b = make_target("banana", b=0.1, base_cov=np.diag([100.0, 1.0]))
        assert isinstance(b, Banana)
        m = make_target(
            "mixture", weights=[1.0], means=[[0.0]], covs=[[[1.0]]]
        )
        assert isinstance(m, GaussianMixture)
        m2 = make_target(
            "gaussian_mixture", weights=[1.0], means=[[0.0]], covs=[[[1.0]]]
        )
        assert isinstance(m2, GaussianMixture)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            make_target("cauchy")

    def test_all_are_target_densities(self):
        assert issubclass(Gaussian, TargetDensity)
        assert issubclass(Banana, TargetDensity)
        assert issubclass(GaussianMixture, TargetDensity)


def test_unavailable_moments_raise_in_checks():
    from adaptmh.diagnostics import ChainTrace, moment_check

    banana = Banana(0.1, np.diag([100.0, 1.0]))
    n = 5
    trace = ChainTrace(
        seed=0, config_hash="", adapter="fixed",
        t=np.arange(1, n + 1), x=np.zeros((n, 2)),
        alpha=np.ones(n), accepted=np.ones(n, dtype=bool),
        sigma=np.ones(n), log_det_c=np.zeros(n),
        adaptation_gap=np.zeros(n), tau=np.zeros(n, dtype=np.int64),
    )
    with pytest.raises(Unavailable):
        moment_check(trace, banana, 0)
