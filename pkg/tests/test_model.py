"""Two-stage model: shapes, band assembly, causality, streaming parity."""
import numpy as np
import pytest

import winnow
from winnow.autograd.tensor import Tensor, no_grad
from winnow.config import ModelConfig, reference_config, tiny_config
from winnow.errors import ConfigError
from winnow.model import TwoStageEnhancer, build_model


@pytest.fixture(scope="module")
def tiny_model():
    return TwoStageEnhancer(tiny_config(), seed=0)


def _spec(rng, t):
    return rng.standard_normal((2, 256, t)).astype(np.float32) * 0.1


@pytest.mark.parametrize("t", [1, 7, 250])
def test_forward_shapes(tiny_model, t):
    x = Tensor(_spec(np.random.default_rng(t), t))
    with no_grad():
        s_fine, s_coarse = tiny_model.forward(x)
    assert s_fine.data.shape == (2, 256, t)
    assert s_coarse.data.shape == (2, 256, t)


def test_high_band_passes_through_unrefined(tiny_model):
    # the fine stage only touches the low bins; above them the output
    # must be bit-identical to the coarse estimate
    q = tiny_model.fine.cfg.low_bins
    x = Tensor(_spec(np.random.default_rng(0), 5))
    with no_grad():
        s_fine, s_coarse = tiny_model.forward(x)
    assert np.array_equal(s_fine.data[:, q:, :], s_coarse.data[:, q:, :])
    assert not np.array_equal(s_fine.data[:, :q, :], s_coarse.data[:, :q, :])


def test_causality_future_frames_cannot_reach_past(tiny_model):
    rng = np.random.default_rng(1)
    x = _spec(rng, 24)
    x2 = x.copy()
    x2[:, :, 17:] += rng.standard_normal((2, 256, 7)).astype(np.float32)
    with no_grad():
        a, _ = tiny_model.forward(Tensor(x))
        b, _ = tiny_model.forward(Tensor(x2))
    assert np.array_equal(a.data[:, :, :17], b.data[:, :, :17])
    assert not np.array_equal(a.data[:, :, 17:], b.data[:, :, 17:])


def test_step_frame_matches_forward(tiny_model):
    rng = np.random.default_rng(2)
    x = _spec(rng, 12)
    with no_grad():
        batch, _ = tiny_model.forward(Tensor(x))
    state = tiny_model.make_stream_state()
    for t in range(12):
        frame = tiny_model.step_frame(x[:, :, t], state)
        np.testing.assert_allclose(frame, batch.data[:, :, t], atol=1e-5)


def test_coarse_only_model():
    cfg = ModelConfig(coarse=tiny_config().coarse, fine=None)
    model = TwoStageEnhancer(cfg.validate(), seed=0)
    x = Tensor(_spec(np.random.default_rng(3), 4))
    with no_grad():
        s_fine, s_coarse = model.forward(x)
    assert np.array_equal(s_fine.data, s_coarse.data)


def test_fine_requires_coarse():
    cfg = ModelConfig(coarse=None, fine=tiny_config().fine).validate()
    with pytest.raises(ConfigError):
        TwoStageEnhancer(cfg, seed=0)


def test_seed_determinism():
    a = TwoStageEnhancer(tiny_config(), seed=42).parameters()
    b = TwoStageEnhancer(tiny_config(), seed=42).parameters()
    c = TwoStageEnhancer(tiny_config(), seed=43).parameters()
    assert a.keys() == b.keys() == c.keys()
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    assert any(not np.array_equal(a[k].data, c[k].data) for k in a)


def test_build_model_helper():
    model = build_model(tiny_config(), seed=7)
    assert isinstance(model, TwoStageEnhancer)


def test_parameter_names_are_prefixed(tiny_model):
    names = list(tiny_model.parameters().keys())
    assert any(n.startswith("lcrb.") for n in names)
    assert any(n.startswith("coarse.") for n in names)
    assert any(n.startswith("fine.") for n in names)
    assert len(names) == len(set(names))


def test_zeroed_coarse_output_conv_gives_zero_mask():
    model = TwoStageEnhancer(tiny_config(), seed=5)
    conv = model.coarse.out_conv
    conv.weight.data[...] = 0.0
    conv.bias.data[...] = 0.0
    x = Tensor(_spec(np.random.default_rng(5), 4))
    with no_grad():
        mask = model.coarse.forward(model.lcrb.band_merge(x))
    assert np.array_equal(mask.data, np.zeros_like(mask.data))


def test_identity_mask_configuration_passes_input_through():
    # freshly initialized filter bank averages/replicates; forcing the
    # coarse mask to 1+0i makes stage 1 the identity: split(1+0i) = 1+0i
    # per bin and (1+0i) * x = x exactly
    model = TwoStageEnhancer(tiny_config(), seed=6)
    conv = model.coarse.out_conv
    conv.weight.data[...] = 0.0
    conv.bias.data[...] = 0.0
    conv.bias.data[0] = 1.0  # real channel 1, imaginary channel 0
    x = _spec(np.random.default_rng(6), 4)
    with no_grad():
        s_coarse, _ = model.coarse_enhance(Tensor(x))
    np.testing.assert_array_equal(s_coarse.data, x)


def test_zeroed_fine_output_conv_leaves_coarse_untouched():
    model = TwoStageEnhancer(tiny_config(), seed=7)
    model.fine.out_conv.weight.data[...] = 0.0
    model.fine.out_conv.bias.data[...] = 0.0
    x = Tensor(_spec(np.random.default_rng(7), 4))
    with no_grad():
        s_fine, s_coarse = model.forward(x)
    np.testing.assert_array_equal(s_fine.data, s_coarse.data)


def test_fine_stage_is_single_scale(tiny_model):
    # walk the fine chain block by block: the frequency axis never
    # shrinks or grows (no downsampling anywhere in stage 2)
    q = tiny_model.fine.cfg.low_bins
    rng = np.random.default_rng(8)
    x_low = Tensor(rng.standard_normal((2, q, 5)).astype(np.float32))
    s_low = Tensor(rng.standard_normal((2, q, 5)).astype(np.float32))
    from winnow.autograd import functional as F

    fine = tiny_model.fine
    with no_grad():
        h = fine.in_act(fine.in_norm(fine.in_conv(F.concat([x_low, s_low], axis=0))))
        assert h.data.shape[1] == q
        for block in list(fine.enc_blocks) + list(fine.dp) + list(fine.dec_blocks):
            h = block.forward(h)
            assert h.data.shape[1] == q
        mask = fine.out_conv(h)
    assert mask.data.shape == (2, q, 5)


def test_reference_model_builds_and_runs():
    model = TwoStageEnhancer(reference_config(), seed=0)
    x = Tensor(_spec(np.random.default_rng(4), 3))
    with no_grad():
        s_fine, _ = model.forward(x)
    assert s_fine.data.shape == (2, 256, 3)
    assert np.all(np.isfinite(s_fine.data))
