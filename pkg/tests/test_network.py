import dataclasses

import numpy as np
import pytest

from pasmamba import fileio
from pasmamba.acceptance import random_config
from pasmamba.ddcfm import GateConfig, identity_ddcfm
from pasmamba.kspace import make_phantom
from pasmamba.network import (
    ConfigError,
    NetConfig,
    forward,
    frequency_branch,
    init_network,
    linear,
    mamba_block_forward,
    residual_skeleton,
    scan_paths,
    state_from_parameters,
    with_overrides,
)
from pasmamba.numerics import ShapeError, channel_layer_norm
from pasmamba.scan_orders import deserialize, local_order, serialize
from pasmamba.ssm import init_ssm_params, selective_ssm

TINY = NetConfig(channels=8, rmg_count=1, blocks_per_rmg=1, ssm_state=4, height=16, width=16)

# reference run: init_network(TINY, seed=0) on the 16x16 Shepp-Logan phantom
TINY_OUT_SUM = -7.617924906358476
TINY_OUT_5_7 = 0.15921575642984365
TINY_OUT_MAXABS = 1.0544359707895905


def tiny_input():
    return make_phantom(16, 16, "shepp_logan", 0)[None, None]


def test_param_count_audit():
    C, n = 8, 4
    shallow = C * 9 + C
    block = 2 * C + (C * C + C) + (n + 2 * n * C + C + 2) + (C * C + C)
    rmg = block + (C * C * 9 + C) + 1
    ddcfm = 4 * C + (C * 2 * C + C)
    head = 2 * C * 9 + 1
    expected = shallow + 3 * rmg + 3 * ddcfm + head
    assert expected == 3198
    assert init_network(TINY, 0).n_params == expected


def test_init_deterministic():
    a = init_network(TINY, 3).named_parameters()
    b = init_network(TINY, 3).named_parameters()
    assert a.keys() == b.keys()
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_minimal_config():
    cfg = NetConfig(channels=1, height=8, width=8, ssm_state=1, local_window=2)
    out = forward(np.zeros((1, 1, 8, 8)), init_network(cfg))
    assert out.shape == (1, 1, 8, 8)


@pytest.mark.parametrize("seed", range(5))
def test_random_configs_preserve_shape(seed):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    x = rng.uniform(0, 1, (2, 1, cfg.height, cfg.width))
    y = forward(x, init_network(cfg, seed))
    assert y.shape == x.shape and np.all(np.isfinite(y))


def test_forward_pinned():
    y = forward(tiny_input(), init_network(TINY, 0))
    assert abs(float(y.sum()) - TINY_OUT_SUM) < 1e-9
    assert abs(float(y[0, 0, 5, 7]) - TINY_OUT_5_7) < 1e-9
    assert abs(float(np.abs(y).max()) - TINY_OUT_MAXABS) < 1e-9


def test_residual_skeleton_identity(rng):
    x = rng.uniform(0, 1, (2, 1, 16, 16))
    assert np.array_equal(forward(x, residual_skeleton(init_network(TINY, 1))), x)


def test_threads_do_not_change_output(monkeypatch):
    state = init_network(NetConfig(height=16, width=16, cfds_paths=8), 0)
    x = tiny_input()
    outs = []
    for threads in ("1", "4", "0"):
        monkeypatch.setenv("PASM_THREADS", threads)
        outs.append(forward(x, state))
    assert all(np.array_equal(outs[0], o) for o in outs[1:])


def test_bad_thread_setting(monkeypatch):
    monkeypatch.setenv("PASM_THREADS", "many")
    with pytest.raises(ValueError):
        forward(tiny_input(), init_network(TINY, 0))


def test_block_composition_oracle(rng):
    params = init_ssm_params(2, 3, rng)
    order = local_order(4, 4, 2)
    u = rng.standard_normal((1, 2, 4, 4))
    by_hand = deserialize(selective_ssm(serialize(u, order), params), order)
    np.testing.assert_allclose(scan_paths(u, params, (order,)), by_hand, atol=1e-12)


def test_mamba_block_composition(rng):
    blk = init_network(TINY, 2).ife[0].blocks[0]
    z = rng.standard_normal((1, 8, 16, 16))
    order = local_order(16, 16, 4)
    u = linear(channel_layer_norm(z, blk.norm_weight, blk.norm_bias), blk.in_weight, blk.in_bias)
    ref = z + linear(deserialize(selective_ssm(serialize(u, order), blk.ssm), order), blk.out_weight, blk.out_bias)
    np.testing.assert_allclose(mamba_block_forward(z, blk, (order,)), ref, atol=1e-12)


def test_frequency_branch_identity(rng):
    cfg = NetConfig(channels=4, rmg_count=0, height=8, width=8, local_window=2, gate=GateConfig(fraction=0.0, min_gated=0))
    state = dataclasses.replace(init_network(cfg, 0), ddcfm_amp=identity_ddcfm(4), ddcfm_pha=identity_ddcfm(4))
    f_s = rng.standard_normal((2, 4, 8, 8))
    np.testing.assert_allclose(frequency_branch(f_s, state), f_s, atol=1e-8)


def test_frequency_branch_identity_with_residual_groups(rng):
    cfg = dataclasses.replace(TINY, gate=GateConfig(fraction=0.0, min_gated=0))
    skel = residual_skeleton(init_network(cfg, 0))
    state = dataclasses.replace(skel, ddcfm_amp=identity_ddcfm(8), ddcfm_pha=identity_ddcfm(8))
    f_s = rng.standard_normal((1, 8, 16, 16))
    np.testing.assert_allclose(frequency_branch(f_s, state), f_s, atol=1e-8)


def test_frequency_branch_zero_and_residue(rng):
    state = init_network(TINY, 0)
    zero = np.zeros((1, 8, 16, 16))
    out = frequency_branch(zero, residual_skeleton(state))
    assert np.array_equal(out, zero)
    _, residue = frequency_branch(rng.standard_normal((1, 8, 16, 16)), state, return_residue=True)
    assert residue < 1e-6


def test_frequency_branch_needs_even_grid():
    with pytest.raises(ShapeError):
        frequency_branch(np.zeros((1, 8, 15, 16)), init_network(TINY, 0))


def test_forward_shape_check():
    with pytest.raises(ShapeError):
        forward(np.zeros((1, 2, 16, 16)), init_network(TINY, 0))
    with pytest.raises(ShapeError):
        forward(np.zeros((1, 1, 8, 8)), init_network(TINY, 0))


def test_features_returned():
    out, feats = forward(tiny_input(), init_network(TINY, 0), return_features=True)
    assert set(feats) == {"shallow", "image", "frequency", "fused"}
    assert all(f.shape == (1, 8, 16, 16) for f in feats.values())


def test_parameters_round_trip(tmp_path):
    state = init_network(TINY, 4)
    path = tmp_path / "w.pasm"
    fileio.write_weights(path, state.named_parameters(), dataclasses.asdict(TINY))
    named, config = fileio.read_weights(path)
    assert config["channels"] == 8
    rebuilt = state_from_parameters(TINY, named)
    assert np.array_equal(forward(tiny_input(), rebuilt), forward(tiny_input(), state))


def test_state_from_parameters_errors():
    named = init_network(TINY, 0).named_parameters()
    del named["head.bias"]
    with pytest.raises(ConfigError, match="head.bias"):
        state_from_parameters(TINY, named)
    named = init_network(TINY, 0).named_parameters()
    named["shallow.bias"] = np.zeros(3)
    with pytest.raises(ShapeError, match="shallow.bias"):
        state_from_parameters(TINY, named)


@pytest.mark.parametrize(
    "override, field",
    [
        ({"channels": 0}, "channels"),
        ({"height": 7}, "height/width"),
        ({"cfds_paths": 3}, "cfds_paths"),
        ({"image_scan": "zigzag"}, "image_scan"),
        ({"head_kernel": 2}, "head_kernel"),
        ({"amp_activation": "tanh"}, "amp_activation"),
        ({"local_window": 0}, "local_window"),
    ],
)
def test_config_errors_name_field(override, field):
    with pytest.raises(ConfigError, match=field):
        with_overrides(NetConfig(), **override)
