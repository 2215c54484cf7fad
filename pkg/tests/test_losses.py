import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pasmamba.acceptance import random_gradient_pair, toy_problem
from pasmamba.fourier import decompose, dft2_centered
from pasmamba.losses import (
    ALPHA,
    BETA,
    gaussian_window,
    hybrid_loss,
    hybrid_loss_grad,
    phase_l1,
    psnr,
    ssim,
    ssim_map,
    toy_optimize,
)
from pasmamba.oracles import central_difference, ssim_direct


def test_weights_are_five_hundredths():
    assert ALPHA == 0.05 and BETA == 0.05


def test_identical_images_zero_loss(rng):
    x = rng.uniform(size=(8, 8))
    br = hybrid_loss(x, x)
    assert br.image_l1 == br.phase_l1 == br.amp_l1 == br.total == 0.0


def test_constant_shift():
    gt = np.full((8, 8), 0.3)
    br = hybrid_loss(gt + 0.2, gt)
    assert br.image_l1 == pytest.approx(0.2)
    assert br.phase_l1 == 0.0
    assert br.amp_l1 == pytest.approx(0.2)  # DC moves by 0.2 * 64, averaged over 64 bins


def test_composition_identity(rng):
    x, y = rng.uniform(size=(2, 8, 8))
    br = hybrid_loss(x, y, alpha=0.3, beta=0.7)
    assert br.total == br.image_l1 + 0.3 * br.phase_l1 + 0.7 * br.amp_l1
    assert hybrid_loss(x, y, 0.0, 0.0).total == br.image_l1
    assert br.as_dict()["total"] == br.total


def test_phase_wrap_invariance(rng):
    x, y = rng.uniform(size=(2, 8, 8))
    po, pg = decompose(dft2_centered(x)), decompose(dft2_centered(y))
    shift = 2 * np.pi * rng.integers(-2, 3, po.phase.shape)
    assert abs(phase_l1(po.phase + shift, pg.phase) - phase_l1(po.phase, pg.phase)) < 1e-12


def test_shape_checks():
    with pytest.raises(ValueError):
        hybrid_loss(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        psnr(np.zeros(4), np.zeros(4))


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    out, gt = random_gradient_pair(np.random.default_rng(seed))
    g = hybrid_loss_grad(out, gt)
    fd = central_difference(lambda v: hybrid_loss(v, gt).total, out, 1e-6)
    assert np.max(np.abs(g - fd) / np.abs(fd)) < 1e-4


def test_gradient_at_minimum_is_zero(rng):
    x = rng.uniform(size=(8, 8))
    assert np.array_equal(hybrid_loss_grad(x, x), np.zeros((8, 8)))


def test_gradient_pure_l1(rng):
    x, y = rng.uniform(size=(2, 6, 6))
    np.testing.assert_array_equal(hybrid_loss_grad(x, y, 0.0, 0.0), np.sign(x - y) / 36)


def test_psnr_examples():
    x = np.zeros((4, 4))
    assert psnr(x, x) == math.inf
    assert psnr(x, np.ones((4, 4))) == 0.0
    assert psnr(np.full((4, 4), 0.01), x) == pytest.approx(40.0)
    with pytest.raises(ValueError):
        psnr(x, x, data_range=0.0)


def test_psnr_decreases_with_noise(rng):
    gt = rng.uniform(size=(32, 32))
    noise = rng.standard_normal((32, 32))
    vals = [psnr(gt + s * noise, gt) for s in (0.01, 0.02, 0.05, 0.1, 0.2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_gaussian_window():
    g = gaussian_window()
    assert g.size == 11 and g.sum() == pytest.approx(1.0)
    assert np.argmax(g) == 5


def test_ssim_identity_and_constant(rng):
    x = rng.uniform(size=(16, 16))
    assert ssim(x, x) == 1.0
    c = np.full((16, 16), 0.4)
    assert ssim(c, c) == 1.0


def test_ssim_matches_direct_oracle(rng):
    x, y = rng.uniform(size=(2, 16, 16))
    assert abs(ssim(x, y) - ssim_direct(x, y)) < 1e-10


@given(seed=st.integers(0, 10_000))
def test_ssim_symmetric(seed):
    x, y = np.random.default_rng(seed).uniform(size=(2, 12, 14))
    assert abs(ssim(x, y) - ssim(y, x)) < 1e-12


def test_ssim_too_small():
    with pytest.raises(ValueError):
        ssim_map(np.zeros((10, 20)), np.zeros((10, 20)))


def test_toy_optimize_reference():
    measured, gt = toy_problem()
    est, trace = toy_optimize(measured, gt, steps=200, lr=0.5)
    assert len(trace) == 201
    assert trace[-1].total < 0.5 * trace[0].total
    assert psnr(est, gt) > psnr(measured, gt)


def test_toy_optimize_from_ground_truth():
    _, gt = toy_problem()
    _, trace = toy_optimize(gt, gt, steps=5)
    totals = [b.total for b in trace]
    assert all(b <= a for a, b in zip(totals, totals[1:]))
    assert totals[-1] < 1e-12


def test_toy_optimize_zero_lr(rng):
    m, gt = rng.uniform(size=(2, 8, 8))
    est, trace = toy_optimize(m, gt, steps=3, lr=0.0)
    assert np.array_equal(est, m)
    assert len({b.total for b in trace}) == 1
    with pytest.raises(ValueError):
        toy_optimize(m, gt, steps=0)
