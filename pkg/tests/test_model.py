import re

import numpy as np
import pytest

from fractalflow.engine import Tensor
from fractalflow.model import FdnConfig, crop_to, fdn_forward, init_model, pad_to_grid, predict_flow

from _gradcheck import numeric_grad, rel_error

TINY = FdnConfig.scaled(depth=2, width=2)


def conv_params(cin, cout, k):
    return cout * cin * k * k + cout


def count_by_hand(enc, dec, proj, head):
    total = 0
    for cin, cout in zip(enc[:-1], enc[1:]):
        total += conv_params(cin, cout, 3) + conv_params(cout, cout, 3) + 4 * cout
    for cin, cout in zip(dec[:-1], dec[1:]):
        total += 4 * cin * cout + cout
        total += 2 * conv_params(cout, cout, 3) + 4 * cout
    total += conv_params(dec[-1], proj, 1)
    for cin, cout in zip(head[:-1], head[1:]):
        total += conv_params(cin, cout, 3)
    return total


def test_default_parameter_count():
    expected = count_by_hand((2, 32, 64, 128, 256), (256, 128, 64, 32, 32), 64, (64, 128, 256, 128, 64, 2))
    assert expected == 2_498_434
    assert init_model().count() == expected


def test_scaled_default_is_default():
    assert FdnConfig.scaled(4, 32) == FdnConfig()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"depth": 0},
        {"encoder_channels": (2, 32, 64, 128)},
        {"decoder_channels": (256, 128, 64, 16, 32)},
        {"projection_out": 48},
        {"flow_head_channels": (64, 0, 2)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        FdnConfig(**kwargs)


def test_init_deterministic_and_seed_sensitive():
    a, b, c = init_model(TINY, 3), init_model(TINY, 3), init_model(TINY, 4)
    for name, p in a.named_parameters():
        np.testing.assert_array_equal(p.data, b[name].data)
    assert any(not np.array_equal(p.data, c[n].data) for n, p in a.named_parameters() if n.endswith("weight"))


def test_init_ranges():
    m = init_model(TINY, 0)
    w = m["enc1.conv1.weight"].data
    assert np.abs(w).max() <= np.sqrt(6.0 / (2 * 9))
    assert not m["enc1.conv1.bias"].data.any()
    assert np.all(m["enc1.bn1.gamma"].data == 1.0)


@pytest.mark.parametrize("h,w,expected", [(100, 100, (112, 112)), (256, 256, (256, 256)), (1, 17, (16, 32))])
def test_pad_to_grid(h, w, expected):
    x = np.random.default_rng(0).random((1, 2, h, w))
    padded, info = pad_to_grid(x, 4)
    assert padded.shape[-2:] == expected
    np.testing.assert_array_equal(padded.data[..., :h, :w], x)
    assert not padded.data[..., h:, :].any() and not padded.data[..., :, w:].any()
    np.testing.assert_array_equal(crop_to(padded, info).data, x)


@pytest.mark.parametrize("size", [(16, 16), (13, 10)])
def test_shapes(size):
    pair = Tensor(np.random.default_rng(1).random((1, 2) + size))
    model = init_model(TINY, 0)
    assert fdn_forward(pair, model, TINY).shape == (1, 2) + size
    flow = predict_flow(pair, model, TINY)
    assert flow.shape == (1, 2) + size


def test_default_model_shapes():
    pair = Tensor(np.random.default_rng(2).random((1, 2, 20, 20)))
    model = init_model()
    assert fdn_forward(pair, model).shape == (1, 32, 20, 20)
    flow = predict_flow(pair, model)
    assert flow.shape == (1, 2, 20, 20)
    assert flow.data.min() < 0 < flow.data.max()


def test_forward_deterministic():
    pair = np.random.default_rng(3).random((1, 2, 16, 16))
    a = predict_flow(Tensor(pair), init_model(TINY, 5), TINY).data
    b = predict_flow(Tensor(pair), init_model(TINY, 5), TINY).data
    np.testing.assert_array_equal(a, b)


def test_bad_input_channels():
    with pytest.raises(ValueError):
        predict_flow(Tensor(np.zeros((1, 3, 8, 8))), init_model(TINY), TINY)


def test_batchnorm_running_stats_update_in_training_only():
    model = init_model(TINY, 0)
    pair = Tensor(np.random.default_rng(4).random((1, 2, 8, 8)))
    before = model.norms["enc1.bn1"].running_mean.copy()
    predict_flow(pair, model, TINY, training=False)
    np.testing.assert_array_equal(model.norms["enc1.bn1"].running_mean, before)
    predict_flow(pair, model, TINY, training=True)
    assert not np.array_equal(model.norms["enc1.bn1"].running_mean, before)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    pair = rng.random((1, 2, 8, 8))
    model = init_model(TINY, 1)
    probe = rng.normal(size=(1, 2, 8, 8))

    def loss():
        return float((predict_flow(Tensor(pair), model, TINY).data * probe).sum())

    out = predict_flow(Tensor(pair), model, TINY)
    (out * Tensor(probe)).sum().backward()
    for name in ("enc1.conv1.weight", "dec1.up.weight", "dec2.bn2.gamma", "head5.bias"):
        p = model[name]
        coords = rng.choice(p.data.size, size=min(4, p.data.size), replace=False).tolist()
        numeric = numeric_grad(lambda _: loss(), [p.data], 0, coords=coords)
        assert rel_error(p.grad.reshape(-1)[coords], numeric) < 1e-4, name


def test_all_gradients_finite_and_reach_every_parameter():
    model = init_model(TINY, 2)
    pair = Tensor(np.random.default_rng(7).random((1, 2, 16, 16)))
    predict_flow(pair, model, TINY).square().mean().backward()
    for name, p in model.named_parameters():
        assert np.all(np.isfinite(p.grad)), name
        if re.fullmatch(r"(enc|dec)\d\.conv\d\.bias", name):
            # batch norm removes any per-channel offset added before it
            assert np.abs(p.grad).max() < 1e-10, name
        else:
            assert np.abs(p.grad).max() > 1e-8, name
