import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from pasmamba import _backend
from pasmamba.oracles import ssm_interpreter
from pasmamba.ssm import (
    SsmParams,
    discretize,
    init_ssm_params,
    inverse_softplus,
    scan_parallel,
    scan_sequential,
    selective_inputs,
    selective_ssm,
    softplus,
)


def test_discretize_closed_forms():
    a_bar, b_bar = discretize(-1.0, 1.0, math.log(2.0))
    assert abs(a_bar - 0.5) <= 1e-15 and abs(b_bar - 0.5) <= 1e-15
    a_bar, b_bar = discretize(-2.0, 3.0, 1.0)
    assert a_bar == pytest.approx(math.exp(-2), rel=1e-15)
    assert b_bar == pytest.approx(3 * (1 - math.exp(-2)) / 2, rel=1e-15)


def test_discretize_small_delta_limit():
    a_bar, b_bar = discretize(-1.0, 1.0, 1e-8)
    assert abs(a_bar - 1) < 1e-7 and abs(b_bar) < 1e-7


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_discretize_matches_dense_zoh(rng, n):
    a = -rng.uniform(0.1, 3.0, n)
    b = rng.standard_normal(n)
    delta = rng.uniform(0.01, 2.0)
    A = np.diag(a)
    a_dense = expm(delta * A)
    b_dense = np.linalg.solve(delta * A, (a_dense - np.eye(n)) @ (delta * b))
    a_bar, b_bar = discretize(a, b, delta)
    np.testing.assert_allclose(np.diag(a_dense), a_bar, rtol=1e-12)
    np.testing.assert_allclose(b_dense, b_bar, rtol=1e-10, atol=1e-14)


def test_discretize_errors():
    with pytest.raises(ValueError):
        discretize(-1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        discretize(0.0, 1.0, 1.0)


def test_hand_unrolled_recurrence():
    y = scan_sequential(np.array([1.0, 0.0, 0.0]), 0.5, 0.5, 1.0)
    np.testing.assert_array_equal(y, [0.5, 0.25, 0.125])
    assert np.array_equal(scan_sequential(np.zeros(5), 0.3, 0.2, 1.0), np.zeros(5))


def test_convolution_closed_form(rng):
    L, a, b, c = 32, 0.7, 0.4, 1.3
    x = rng.standard_normal(L)
    ref = [c * sum(a ** (t - k) * b * x[k] for k in range(t + 1)) for t in range(L)]
    np.testing.assert_allclose(scan_sequential(x, a, b, c), ref, atol=1e-12)


def test_memoryless_when_a_bar_zero(rng):
    x = rng.standard_normal((2, 9))
    b, c = rng.standard_normal((9, 3)), rng.standard_normal((9, 3))
    y = scan_parallel(x, 0.0, b, c)
    np.testing.assert_allclose(y, x * np.sum(b * c, axis=-1), atol=1e-14)


@given(L=st.sampled_from([1, 2, 3, 7, 64, 100]), n=st.integers(1, 4), seed=st.integers(0, 10_000))
def test_parallel_equals_sequential(L, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, L))
    a = rng.uniform(0, 1, (3, L, n))
    b, c = rng.standard_normal((2, 3, L, n))
    np.testing.assert_allclose(scan_parallel(x, a, b, c), scan_sequential(x, a, b, c), atol=1e-10)


def test_single_step_bit_identical(rng):
    x = rng.standard_normal((4, 1))
    a, b, c = rng.uniform(0, 1, 3), rng.standard_normal(3), rng.standard_normal(3)
    assert np.array_equal(scan_parallel(x, a, b, c), scan_sequential(x, a, b, c))


def test_causality(rng):
    x = rng.standard_normal(50)
    a, b, c = rng.uniform(0, 1, (50, 2)), rng.standard_normal((50, 2)), rng.standard_normal((50, 2))
    x2 = x.copy()
    x2[30:] = rng.standard_normal(20)
    for scan in (scan_sequential, scan_parallel):
        assert np.array_equal(scan(x, a, b, c)[:30], scan(x2, a, b, c)[:30])


def test_broadcast_error():
    with pytest.raises(ValueError):
        scan_sequential(np.zeros((2, 5)), np.zeros((3, 5, 2)), 0.0, 1.0)


def test_softplus_inverse():
    assert softplus(inverse_softplus(0.1)) == pytest.approx(0.1, rel=1e-14)
    assert softplus(-800.0) == 0.0  # underflow is floored inside selective_inputs


def test_init_params(rng):
    p = init_ssm_params(6, 4, rng)
    np.testing.assert_array_equal(p.a, [-1, -2, -3, -4])
    assert np.all(np.abs(p.b_proj) <= 1 / math.sqrt(6))
    assert softplus(p.delta_bias) == pytest.approx(0.1)
    assert p.n_params == 4 + 2 * 4 * 6 + 6 + 2


def test_delta_stays_positive(rng):
    p = init_ssm_params(2, 2, rng)
    p.delta_proj = np.array([1e4, 1e4])
    delta, *_ = selective_inputs(-np.ones((1, 2, 3)), p)
    assert np.all(delta > 0)


def test_zero_input_zero_output(rng):
    p = init_ssm_params(3, 4, rng)
    assert np.array_equal(selective_ssm(np.zeros((2, 3, 10)), p), np.zeros((2, 3, 10)))


def test_skip_only_identity(rng):
    p = init_ssm_params(3, 4, rng)
    p.b_proj[:] = 0
    p.c_proj[:] = 0
    x = rng.standard_normal((1, 3, 12))
    assert np.array_equal(selective_ssm(x, p), x)


@given(d=st.integers(1, 4), n=st.integers(1, 4), L=st.integers(1, 20), seed=st.integers(0, 10_000))
def test_selective_matches_interpreter(d, n, L, seed):
    rng = np.random.default_rng(seed)
    p = init_ssm_params(d, n, rng)
    p.skip = float(rng.standard_normal())
    x = rng.standard_normal((2, d, L))
    ref = ssm_interpreter(x, p)
    np.testing.assert_allclose(selective_ssm(x, p), ref, atol=1e-10)
    np.testing.assert_allclose(selective_ssm(x, p, "parallel"), ref, atol=1e-10)


def test_selective_rejects_bad_shape(rng):
    p = init_ssm_params(3, 2, rng)
    with pytest.raises(ValueError):
        selective_ssm(np.zeros((1, 4, 5)), p)
    with pytest.raises(ValueError):
        selective_ssm(np.zeros((1, 3, 5)), p, method="fft")


def test_params_named_round_trip(rng):
    p = init_ssm_params(3, 2, rng)
    named = p.named("x.")
    assert set(named) == {"x.a", "x.b_proj", "x.c_proj", "x.delta_proj", "x.delta_bias", "x.skip"}
    assert isinstance(p, SsmParams)


@pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled kernels not built")
def test_backends_bit_identical(rng):
    py_lanes, py_sel = _backend.kernels("python")
    cy_lanes, cy_sel = _backend.kernels("cython")
    A = rng.uniform(0, 1, (5, 300, 4))
    BX, C = rng.standard_normal((2, 5, 300, 4))
    np.testing.assert_array_equal(cy_lanes(A, BX, C), py_lanes(A, BX, C))
    p = init_ssm_params(3, 4, rng)
    x = rng.standard_normal((2, 3, 200))
    _, a_bar, b_bar, ct = selective_inputs(x, p)
    np.testing.assert_array_equal(cy_sel(x, a_bar, b_bar, ct), py_sel(x, a_bar, b_bar, ct))


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.kernels("fortran")
