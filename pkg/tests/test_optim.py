import math

import numpy as np
import pytest

from imba_ids.linalg import make_rng
from imba_ids.optim import SGD, Adam


def scalar_adam_trace(theta, grads, zeta=0.1, rho1=0.9, rho2=0.999, delta=1e-8):
    """Hand-executed update sequence on one scalar, used as the oracle."""
    s = r = 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        s = rho1 * s + (1 - rho1) * g
        r = rho2 * r + (1 - rho2) * g * g
        s_hat = s / (1 - rho1**t)
        r_hat = r / (1 - rho2**t)
        theta = theta - zeta * s_hat / (math.sqrt(r_hat) + delta)
        out.append(theta)
    return out


class TestAdamTrace:
    def test_two_step_scalar_trace(self):
        theta = np.array([0.5])
        opt = Adam([theta], zeta=0.1, rho1=0.9, rho2=0.999, delta=1e-8)
        opt.step([theta], [np.array([1.0])])
        after_one = float(theta[0])
        opt.step([theta], [np.array([-1.0])])
        after_two = float(theta[0])

        oracle = scalar_adam_trace(0.5, [1.0, -1.0])
        assert after_one == pytest.approx(oracle[0], abs=1e-12)
        assert after_two == pytest.approx(oracle[1], abs=1e-12)
        # frozen values of that trace: first step is the full corrected step
        # 0.1/(1 + 1e-8); the second reverses after the sign flip
        assert after_one == pytest.approx(0.400000001, abs=1e-9)
        assert after_two == pytest.approx(0.40526315884210523, abs=1e-12)

    def test_bias_corrected_moments_match_constant_gradient(self):
        # with a constant gradient, the corrected moments equal g and g**2
        g = np.array([3.0, -0.25])
        theta = np.zeros(2)
        opt = Adam([theta])
        for t in (1, 2, 5):
            while opt.t < t:
                opt.step([theta], [g])
            s_hat = opt.s[0] / (1 - opt.rho1**opt.t)
            r_hat = opt.r[0] / (1 - opt.rho2**opt.t)
            assert s_hat == pytest.approx(g, abs=1e-12)
            assert r_hat == pytest.approx(g**2, abs=1e-12)

    def test_moments_persist_across_steps(self):
        theta = np.array([0.0])
        opt = Adam([theta], zeta=0.1)
        opt.step([theta], [np.array([1.0])])
        assert opt.t == 1 and opt.s[0][0] != 0.0
        opt.step([theta], [np.array([0.0])])
        # zero gradient decays but does not reset the first moment
        assert opt.t == 2 and opt.s[0][0] == pytest.approx(0.9 * 0.1, abs=1e-15)


class TestAdamProperties:
    def test_zero_gradient_keeps_everything_zero(self):
        theta = np.array([1.5, -2.0])
        before = theta.copy()
        opt = Adam([theta])
        for _ in range(3):
            opt.step([theta], [np.zeros(2)])
        assert np.array_equal(theta, before)
        assert np.all(opt.s[0] == 0.0) and np.all(opt.r[0] == 0.0)

    @pytest.mark.parametrize("g", [1.0, -1.0, 2.5, 100.0, -1e6])
    def test_first_step_is_signed_step_size(self, g):
        theta = np.array([0.0])
        opt = Adam([theta], zeta=0.05)
        opt.step([theta], [np.array([g])])
        delta_theta = float(theta[0])
        assert abs(delta_theta + 0.05 * math.copysign(1.0, g)) < 0.05 * 1e-6

    def test_single_step_never_exceeds_step_size(self):
        # first corrected step is g/(|g| + delta), strictly inside (-1, 1)
        rng = make_rng(20)
        for _ in range(50):
            theta = rng.standard_normal(4)
            before = theta.copy()
            opt = Adam([theta], zeta=0.03)
            opt.step([theta], [rng.standard_normal(4) * 10.0 ** rng.integers(-3, 4)])
            assert np.all(np.abs(theta - before) < 0.03)

    def test_minimizes_quadratic_with_defaults(self):
        theta = np.array([1.0])
        opt = Adam([theta])
        for _ in range(500):
            opt.step([theta], [2.0 * theta])
            if abs(theta[0]) < 0.1:
                break
        assert abs(theta[0]) < 0.1

    def test_updates_multiple_arrays_in_place(self):
        w = np.ones((2, 3))
        b = np.zeros(2)
        opt = Adam([w, b], zeta=0.1)
        opt.step([w, b], [np.ones((2, 3)), np.full(2, -1.0)])
        assert np.all(w < 1.0) and np.all(b > 0.0)

    def test_rejects_shape_mismatch(self):
        theta = np.zeros(3)
        opt = Adam([theta])
        with pytest.raises(ValueError, match="shape"):
            opt.step([theta], [np.zeros(4)])
        with pytest.raises(ValueError, match="arrays"):
            opt.step([theta, theta], [np.zeros(3), np.zeros(3)])

    def test_rejects_bad_hyperparameters(self):
        theta = [np.zeros(1)]
        with pytest.raises(ValueError, match="rho"):
            Adam(theta, rho1=1.0)
        with pytest.raises(ValueError, match="rho"):
            Adam(theta, rho2=0.0)
        with pytest.raises(ValueError, match="zeta"):
            Adam(theta, zeta=0.0)
        with pytest.raises(ValueError, match="delta"):
            Adam(theta, delta=-1e-8)


class TestSgd:
    def test_hand_arithmetic(self):
        theta = np.array([2.0])
        SGD(1.0).step([theta], [np.array([0.5])])
        assert theta[0] == 1.5

    def test_scales_linearly_with_rate(self):
        a, b = np.zeros(3), np.zeros(3)
        g = np.array([1.0, -2.0, 0.25])
        SGD(0.1).step([a], [g])
        SGD(0.2).step([b], [g])
        assert np.allclose(b, 2 * a, atol=1e-15)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            SGD(0.1).step([np.zeros(2)], [np.zeros(3)])
        with pytest.raises(ValueError, match="params"):
            SGD(0.1).step([np.zeros(2)], [])

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError, match="learning_rate"):
            SGD(0.0)
