import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pasmamba.numerics import (
    ConvSpec,
    ShapeError,
    as_tensor,
    channel_layer_norm,
    conv2d,
    conv_transpose2d,
    instance_norm,
)
from pasmamba.oracles import conv2d_loops


@given(
    c_in=st.integers(1, 3),
    c_out=st.integers(1, 3),
    k=st.sampled_from([1, 3, 5]),
    stride=st.integers(1, 2),
    size=st.integers(5, 9),
    seed=st.integers(0, 2**16),
)
def test_conv2d_matches_loop_oracle(c_in, c_out, k, stride, size, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, c_in, size, size))
    spec = ConvSpec(rng.standard_normal((c_out, c_in, k, k)), rng.standard_normal(c_out), stride, k // 2)
    ref = conv2d_loops(x, spec.weights, spec.bias, stride, k // 2)
    np.testing.assert_allclose(conv2d(x, spec), ref, atol=1e-12)


def test_identity_kernel(rng):
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    x = rng.standard_normal((1, 1, 6, 6))
    assert np.array_equal(conv2d(x, ConvSpec(w, np.zeros(1), padding=1)), x)


def test_transpose_is_adjoint(rng):
    w = rng.standard_normal((3, 2, 3, 3))
    spec = ConvSpec(w, np.zeros(3), stride=1, padding=1)
    x = rng.standard_normal((1, 2, 7, 7))
    y = rng.standard_normal((1, 3, 7, 7))
    lhs = np.sum(conv2d(x, spec) * y)
    rhs = np.sum(x * conv_transpose2d(y, spec))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_transposed_spec_shape(rng):
    spec = ConvSpec(rng.standard_normal((4, 1, 3, 3)), np.zeros(1), padding=1, transposed=True)
    assert spec.in_channels == 4 and spec.out_channels == 1
    assert conv_transpose2d(rng.standard_normal((2, 4, 8, 8)), spec).shape == (2, 1, 8, 8)


def test_channel_mismatch_names_axis(rng):
    spec = ConvSpec(rng.standard_normal((2, 3, 3, 3)), np.zeros(2), padding=1)
    with pytest.raises(ShapeError, match="channel"):
        conv2d(rng.standard_normal((1, 4, 5, 5)), spec)


def test_as_tensor_rank():
    with pytest.raises(ShapeError):
        as_tensor(np.zeros((2, 2)), ndim=4)


def test_instance_norm_statistics(rng):
    x = 3.0 + 2.0 * rng.standard_normal((2, 3, 8, 8))
    y = instance_norm(x, np.ones(3), np.zeros(3))
    np.testing.assert_allclose(y.mean(axis=(2, 3)), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=(2, 3)), 1.0, rtol=1e-4)


def test_instance_norm_affine(rng):
    x = rng.standard_normal((1, 2, 4, 4))
    y = instance_norm(x, np.array([2.0, 0.5]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(y.mean(axis=(2, 3))[0], [1.0, -1.0], atol=1e-12)


def test_channel_layer_norm_per_pixel(rng):
    x = rng.standard_normal((1, 5, 3, 3)) * 10
    y = channel_layer_norm(x, np.ones(5), np.zeros(5))
    np.testing.assert_allclose(y.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=1), 1.0, rtol=1e-5)
