import math

import numpy as np
import pytest

from adaptmh.errors import DimensionMismatch, DomainError
from adaptmh.mh import StepOutcome
from adaptmh.mhcma import (
    DEFAULT_BETA0,
    DEFAULT_GAMMA,
    DEFAULT_P_TARGET,
    MhCmaConfig,
    MhCmaState,
    cov_update,
    default_c1_0,
    default_c_c,
    mhcma_adapt,
    mhcma_init,
    path_update,
    sigma_log_step,
    sigma_update,
)
from adaptmh.spd import factorize


def accepted_move(x_from, next_x, alpha=1.0):
    x_from = np.asarray(x_from, dtype=float)
    next_x = np.asarray(next_x, dtype=float)
    return StepOutcome(next_x, alpha, True, next_x, x_from, 0.0)


def rejected_move(x, alpha=0.1):
    x = np.asarray(x, dtype=float)
    return StepOutcome(x + 1.0, alpha, False, x, x, 0.0)


class TestConfig:
    def test_defaults(self):
        cfg = MhCmaConfig.with_defaults(2)
        assert cfg.p_target == DEFAULT_P_TARGET == 0.234
        assert cfg.c_c == math.sqrt(4.5 / 7.0)
        assert cfg.c1_0 == (5.0 / 3.0) / (3.3 ** 2 + 1.0)
        assert cfg.beta0 == DEFAULT_BETA0 == 1.0
        assert cfg.gamma == DEFAULT_GAMMA == 1.01
        assert cfg.sigma0 == 1.0
        assert cfg.det_c0 == 1.0

    def test_default_helpers(self):
        assert default_c_c(1) == math.sqrt(5.0 / 7.0)
        assert default_c1_0(1) == (5.0 / 3.0) / (2.3 ** 2 + 1.0)

    @pytest.mark.parametrize(
        "field,value",
        [
            ("p_target", 0.0),
            ("p_target", 1.0),
            ("c_c", 0.0),
            ("c_c", 1.5),
            ("c1_0", 0.0),
            ("c1_0", 1.0),
            ("beta0", 0.0),
            ("gamma", 1.0),
            ("gamma", 0.99),
            ("sigma0", 0.0),
        ],
    )
    def test_validation(self, field, value):
        kwargs = dict(
            p_target=0.234, c_c=0.5, c1_0=0.1, beta0=1.0, gamma=1.01,
            sigma0=1.0, C0=factorize(np.eye(2)),
        )
        kwargs[field] = value
        with pytest.raises(DomainError):
            MhCmaConfig(**kwargs)

    def test_c_c_of_one_allowed(self):
        cfg = MhCmaConfig.with_defaults(2, c_c=1.0)
        assert cfg.c_c == 1.0


class TestSigmaUpdate:
    def test_full_acceptance_is_one_e_fold(self):
        # (alpha - p) / (1 - p) = 1 at alpha = 1, so the log step equals beta
        assert sigma_log_step(1.0, 1.0, 0.234) == 1.0
        assert sigma_update(1.0, 1.0, 1.0, 0.234) == math.e

    def test_frozen_rejection_shrink(self):
        got = sigma_update(2.0, 1.0, 0.0, 0.234)
        assert got == pytest.approx(1.4735348172178415, rel=1e-15)

    def test_on_target_alpha_is_exact_fixed_point(self):
        assert sigma_update(3.0, 1.0, 0.234, 0.234) == 3.0


class TestPathUpdate:
    def test_rejection_returns_same_object(self):
        p = np.zeros(2)
        out = path_update(p, 0.5, np.ones(2), np.zeros(2), 1.0, False)
        assert out is p

    def test_frozen_first_move(self):
        # from a zero path: p = sqrt(c_c (2 - c_c)) * (y - x) / sigma
        out = path_update(np.zeros(1), 0.5, [0.5], [0.0], 1.0, True)
        assert out[0] == 0.4330127018922193

    def test_discount_and_normalization(self):
        p = np.array([2.0, -4.0])
        out = path_update(p, 0.5, [1.0, 1.0], [0.0, 1.0], 2.0, True)
        coef = math.sqrt(0.75)
        assert out[0] == 0.5 * 2.0 + coef * 0.5
        assert out[1] == 0.5 * -4.0
        assert not out.flags.writeable

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            path_update(np.zeros(2), 0.5, [1.0], [0.0], 1.0, True)


class TestCovUpdate:
    def setup_method(self):
        self.C = factorize(np.eye(2))

    def test_rejection_returns_same_object(self):
        out = cov_update(self.C, 0.5, np.ones(2), False, 1.0)
        assert out is self.C

    def test_dim_one_returns_same_object(self):
        c = factorize([[4.0]])
        assert cov_update(c, 0.5, np.ones(1), True, 4.0) is c

    def test_zero_path_returns_same_object(self):
        assert cov_update(self.C, 0.5, np.zeros(2), True, 1.0) is self.C

    def test_zero_rate_returns_same_object(self):
        assert cov_update(self.C, 0.0, np.ones(2), True, 1.0) is self.C

    def test_frozen_axis_aligned(self):
        # c1 = 1/2, p = e_0: shape stretches along e_0, shrinks along e_1,
        # rescaled so the determinant stays 1
        got = cov_update(self.C, 0.5, np.array([1.0, 0.0]), True, 1.0)
        assert got.mat[0, 0] == math.sqrt(2.0)
        assert got.mat[1, 1] == math.sqrt(2.0) * 0.5
        assert got.mat[0, 1] == 0.0

    def test_frozen_scaled_path(self):
        p = math.sqrt(0.75) * np.array([1.0, 0.0])
        got = cov_update(self.C, 0.5, p, True, 1.0)
        expected = np.array(
            [[1.3228756555322951, 0.0], [0.0, 0.7559289460184544]]
        )
        assert np.allclose(got.mat, expected, rtol=1e-13, atol=0.0)

    def test_determinant_pinned_over_many_updates(self, rng):
        d = 4
        c0 = factorize(np.diag([1.0, 2.0, 0.5, 4.0]))
        det0 = c0.det
        c = c0
        for _ in range(200):
            c = cov_update(c, 0.1, rng.standard_normal(d), True, det0)
        assert abs(np.linalg.det(c.mat) / det0 - 1.0) <= 1e-12

    def test_rate_domain(self):
        with pytest.raises(DomainError):
            cov_update(self.C, 1.0, np.ones(2), True, 1.0)
        with pytest.raises(DomainError):
            cov_update(self.C, -0.1, np.ones(2), True, 1.0)

    def test_path_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cov_update(self.C, 0.5, np.ones(3), True, 1.0)


class TestAdapt:
    def make_cfg(self):
        return MhCmaConfig(
            p_target=0.234, c_c=0.5, c1_0=0.5, beta0=1.0, gamma=2.0,
            sigma0=1.0, C0=factorize(np.eye(2)),
        )

    def test_init(self):
        cfg = self.make_cfg()
        state = mhcma_init(cfg)
        assert state.sigma == 1.0
        assert state.C is cfg.C0
        assert np.array_equal(state.p_c, np.zeros(2))
        assert state.tau == 0
        assert state.beta == 1.0
        assert state.c1 == 0.5

    def test_accepted_transition_frozen(self):
        cfg = self.make_cfg()
        state = mhcma_adapt(
            mhcma_init(cfg), accepted_move([0.0, 0.0], [1.0, 0.0]), cfg
        )
        assert state.sigma == math.e
        assert state.p_c[0] == math.sqrt(0.75)
        assert state.p_c[1] == 0.0
        expected_c = np.array(
            [[1.3228756555322951, 0.0], [0.0, 0.7559289460184544]]
        )
        assert np.allclose(state.C.mat, expected_c, rtol=1e-13, atol=0.0)
        assert state.tau == 1
        assert state.beta == 0.5
        assert state.c1 == 0.25

    def test_rejected_transition_shares_objects(self):
        cfg = self.make_cfg()
        s0 = mhcma_init(cfg)
        s1 = mhcma_adapt(s0, rejected_move([0.0, 0.0], alpha=0.1), cfg)
        assert s1.C is s0.C
        assert s1.p_c is s0.p_c
        assert s1.tau == 0
        assert s1.beta == s0.beta
        assert s1.c1 == s0.c1
        assert s1.sigma == sigma_update(1.0, 1.0, 0.1, 0.234)

    def test_decay_schedule_is_exact_power(self):
        cfg = MhCmaConfig.with_defaults(2, gamma=1.01)
        state = mhcma_init(cfg)
        rng = np.random.default_rng(7)
        x = np.zeros(2)
        for k in range(1, 25):
            y = x + rng.standard_normal(2)
            state = mhcma_adapt(state, accepted_move(x, y), cfg)
            x = y
            assert state.tau == k
            assert state.beta == cfg.beta0 / math.pow(cfg.gamma, float(k))
            assert state.c1 == cfg.c1_0 / math.pow(cfg.gamma, float(k))

    def test_path_normalizes_by_pre_update_sigma(self):
        # sigma is updated before the path, but the path must divide the
        # move by the old sigma
        cfg = self.make_cfg()
        s0 = MhCmaState(
            sigma=4.0, C=cfg.C0, p_c=np.zeros(2), tau=0, beta=1.0, c1=0.5
        )
        s1 = mhcma_adapt(s0, accepted_move([0.0, 0.0], [2.0, 0.0]), cfg)
        assert s1.p_c[0] == math.sqrt(0.75) * (2.0 / 4.0)

    def test_shape_update_uses_pre_decay_rate(self):
        # an accepted step decays c1 for later steps, not for its own update
        cfg = self.make_cfg()
        s1 = mhcma_adapt(
            mhcma_init(cfg), accepted_move([0.0, 0.0], [1.0, 0.0]), cfg
        )
        manual = cov_update(
            cfg.C0,
            cfg.c1_0,
            path_update(np.zeros(2), cfg.c_c, [1.0, 0.0], [0.0, 0.0], 1.0, True),
            True,
            cfg.det_c0,
        )
        assert np.array_equal(s1.C.mat, manual.mat)
