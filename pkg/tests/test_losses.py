import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from quatrnn.errors import ConfigError, EmptySequence, LengthMismatch
from quatrnn.losses import (KernelConfig, empirical_correntropy, mcc_error_weight, mcc_loss, mse_loss,
                            quat_gauss_kernel, real_gauss_kernel, real_mcc_loss)

PEAK = float(4 / mpmath.sqrt(2 * mpmath.pi))
AT_TWO = float(4 / mpmath.sqrt(2 * mpmath.pi) * mpmath.exp(-2))


class TestMse:
    def test_examples(self):
        assert mse_loss(np.zeros((1, 4))) == 0.0
        assert mse_loss([[1, 1, 1, 1]]) == 4.0
        assert mse_loss([[1, 1, 0, 0], [0, 0, 2, 0]]) == 6.0

    @given(arrays(np.float64, (3, 4), elements=st.floats(-100, 100)))
    def test_equals_real_sum_of_squares(self, e):
        assert math.isclose(mse_loss(e), float(np.sum(e.ravel() ** 2)), rel_tol=1e-12, abs_tol=1e-300)


class TestKernels:
    def test_quat_peak(self):
        assert abs(quat_gauss_kernel(np.zeros(4), np.zeros(4), 1.0) - PEAK) < 1e-12
        assert abs(PEAK - 1.5957691) < 1e-7

    def test_quat_at_real_two(self):
        assert abs(quat_gauss_kernel([2, 0, 0, 0], np.zeros(4), KernelConfig(1.0)) - AT_TWO) < 1e-12
        assert abs(AT_TWO - 0.2159639) < 1e-7

    def test_quat_symmetric(self):
        x, y = [1, 1, 0, 0], [0, 0, 1, -1]
        assert quat_gauss_kernel(x, y, 0.5) == quat_gauss_kernel(y, x, 0.5)

    def test_real_peak_and_unit_offset(self):
        assert abs(real_gauss_kernel(0.0, 0.0, 1.0) - float(1 / mpmath.sqrt(2 * mpmath.pi))) < 1e-12
        want = float(mpmath.exp(-0.5) / mpmath.sqrt(2 * mpmath.pi))
        assert abs(real_gauss_kernel(1.0, 0.0, 1.0) - want) < 1e-12
        assert abs(want - 0.2419707) < 1e-7

    def test_real_translation_invariant(self):
        assert math.isclose(real_gauss_kernel(1.0, 0.5, 0.7), real_gauss_kernel(4.7, 4.2, 0.7), rel_tol=1e-12)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan"), float("inf")])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ConfigError):
            KernelConfig(sigma)

    @given(arrays(np.float64, 4, elements=st.floats(-10, 10)), arrays(np.float64, 4, elements=st.floats(-10, 10)))
    def test_kernel_maximal_on_diagonal(self, x, y):
        k = quat_gauss_kernel(x, y, 1.0)
        peak = quat_gauss_kernel(x, x, 1.0)
        assert k <= peak
        if np.any(x != y) and np.sum((x - y) ** 2) > 1e-12:
            assert k < peak


class TestCorrentropy:
    def test_identical_sequences(self, rng):
        d = rng.normal(size=(5, 4))
        assert abs(empirical_correntropy(d, d, 1.0) - PEAK) < 1e-12

    def test_two_scalar_errors(self):
        d = np.zeros((2, 4))
        h = np.array([[0, 0, 0, 0], [-2, 0, 0, 0]], dtype=float)
        want = (PEAK + AT_TWO) / 2
        assert abs(empirical_correntropy(d, h, 1.0) - want) < 1e-12
        assert abs(want - 0.9058665) < 1e-7
        assert abs(mcc_loss(d - h, 1.0) + want) < 1e-12

    def test_decreases_with_error(self):
        e = np.array([[0.1, 0, 0, 0], [0.5, 0.2, 0, 0]])
        bigger = e.copy()
        bigger[1, 2] += 0.3
        assert empirical_correntropy(np.zeros_like(e), bigger, 1.0) < empirical_correntropy(np.zeros_like(e), e, 1.0)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            empirical_correntropy(np.zeros((2, 4)), np.zeros((3, 4)), 1.0)
        with pytest.raises(EmptySequence):
            empirical_correntropy(np.zeros((0, 4)), np.zeros((0, 4)), 1.0)
        with pytest.raises(EmptySequence):
            mcc_loss(np.zeros((0, 4)), 1.0)


class TestMccLoss:
    def test_zero_errors(self):
        assert abs(mcc_loss(np.zeros((3, 2, 4)), 1.0) + PEAK) < 1e-12

    def test_vanishes_at_infinity(self):
        v = mcc_loss(np.full((2, 4), 1e3), 1.0)
        assert v <= 0 and v > -1e-300

    def test_vector_error_uses_total_norm(self):
        e = np.array([[[1, 0, 0, 0], [0, 1, 0, 0]]], dtype=float)
        assert abs(mcc_loss(e, 1.0) + PEAK * math.exp(-1.0)) < 1e-12

    def test_permutation_invariant(self, rng):
        e = rng.normal(size=(6, 2, 4))
        assert math.isclose(mcc_loss(e, 0.8), mcc_loss(e[::-1], 0.8), rel_tol=1e-12)

    @settings(max_examples=100)
    @given(st.integers(0, 2**31 - 1))
    def test_ordering_converges_to_mse(self, seed):
        r = np.random.default_rng(seed)
        a, b = r.normal(size=(2, 4, 2, 4))
        ma, mb = mse_loss(a), mse_loss(b)
        if abs(ma - mb) <= 1e-6 * max(ma, mb):
            return
        sigma = 1e3
        # mean-per-step ordering: the MCC window loss averages over steps
        assert (mcc_loss(a, sigma) < mcc_loss(b, sigma)) == (ma < mb)


class TestErrorWeight:
    def test_examples(self):
        assert mcc_error_weight(np.zeros(4), 1.0) == 1.0
        sigma = 0.7
        e = np.array([sigma, sigma, 0, 0])  # |e|^2 = 2 sigma^2
        assert abs(mcc_error_weight(e, sigma) - math.exp(-1)) < 1e-15
        assert abs(mcc_error_weight(np.ones(4), 1e6) - 1.0) < 1e-9

    def test_real_mcc_loss_per_channel(self):
        e = np.array([[0.0, 1.0]])
        want = -(real_gauss_kernel(0, 0, 1.0) + real_gauss_kernel(1, 0, 1.0))
        assert abs(real_mcc_loss(e, 1.0) - want) < 1e-15
