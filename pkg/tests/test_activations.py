import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from quatrnn.activations import SplitActivation, apply, compact_ghr_derivative, pseudo_derivative

small = st.floats(min_value=-5, max_value=5, allow_nan=False)
qvecs = arrays(np.float64, (3, 4), elements=small)


def test_tanh_of_zero():
    assert np.array_equal(apply("tanh", np.zeros(4)), np.zeros(4))


def test_identity_is_exact(rng):
    q = rng.normal(size=(5, 4))
    out = apply(SplitActivation.IDENTITY, q)
    assert np.array_equal(out, q)
    assert out is not q


def test_tanh_split_against_high_precision():
    out = apply("tanh", [1.0, 1.0, 0.0, 0.0])
    t1 = float(mpmath.tanh(1))
    assert np.allclose(out, [t1, t1, 0, 0], rtol=1e-15, atol=0)


def test_pseudo_derivative_examples():
    assert np.array_equal(pseudo_derivative("tanh", np.zeros(4)), np.ones(4))
    assert np.array_equal(pseudo_derivative("identity", [3.0, -1.0, 2.0, 7.0]), np.ones(4))
    d = pseudo_derivative("tanh", [2.0, 0, 0, 0])
    h = 1e-6
    fd = (np.tanh(2 + h) - np.tanh(2 - h)) / (2 * h)
    assert abs(d[0] - fd) < 1e-8
    assert abs(d[0] - float(mpmath.sech(2) ** 2)) < 1e-15
    assert np.array_equal(d[1:], np.ones(3))


def test_compact_ghr_examples():
    assert np.array_equal(compact_ghr_derivative("tanh", np.zeros(4)), [1, 0, 0, 0])
    assert np.array_equal(compact_ghr_derivative("identity", [5.0, 1, 2, 3]), [1, 0, 0, 0])
    out = compact_ghr_derivative("tanh", np.ones(4))
    assert abs(out[0] - float(mpmath.sech(1) ** 2)) < 1e-15
    assert np.array_equal(out[1:], np.zeros(3))


@given(qvecs, st.sampled_from(list(SplitActivation)))
def test_pseudo_derivative_matches_finite_differences(x, act):
    h = 1e-6
    fd = (apply(act, x + h) - apply(act, x - h)) / (2 * h)
    d = pseudo_derivative(act, x)
    assert np.all(np.abs(d - fd) <= 1e-6 * np.maximum(np.abs(d), 1e-3))


@given(qvecs)
def test_compact_form_has_zero_imaginary_parts(x):
    assert not np.any(compact_ghr_derivative("tanh", x)[..., 1:])


@given(qvecs, qvecs)
def test_tanh_is_monotone_per_component(x, y):
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    assert np.all(apply("tanh", lo) <= apply("tanh", hi))


def test_real_input_keeps_imaginary_zero():
    out = apply("tanh", [0.7, 0, 0, 0])
    assert np.array_equal(out[1:], np.tanh(np.zeros(3)))


def test_unknown_activation():
    with pytest.raises(ValueError):
        SplitActivation.parse("relu")
