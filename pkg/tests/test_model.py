"""Acoustic model tests: shapes, masking invariances, attention behavior,
initialization contracts, and seeded inference."""

import dataclasses
import math

import numpy as np
import pytest
import torch

from templatesinger.data import MEL_PAD_VALUE, Example, make_batch
from templatesinger.model import (
    AcousticModel,
    MaskedBatchNorm1d,
    MaskedConv1d,
    ModelConfig,
    MoLAttention,
    condition_text,
    logistic_mixture_weights,
    nearest_indices,
    sequence_mask,
    sinusoidal_embedding,
)

VOCAB = 40
N_SPEAKERS = 4


def desk_model(seed=0, **overrides):
    torch.manual_seed(seed)
    return AcousticModel(ModelConfig.desk(VOCAB, N_SPEAKERS, **overrides))


def toy_examples(t_lens, n_tokens, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i, (t, n) in enumerate(zip(t_lens, n_tokens)):
        out.append(Example(
            utterance_id="utt%d" % i,
            speaker_index=i % N_SPEAKERS,
            token_ids=rng.integers(2, VOCAB, size=n).astype(np.int64),
            mel=rng.normal(-5.0, 1.0, size=(80, t)),
            features=rng.uniform(0.0, 1.0, size=(9, t)),
            feature_mask=np.ones((9, t), dtype=bool),
        ))
    return out


def toy_batch(t_lens=(20, 15), n_tokens=(7, 5), seed=0):
    return make_batch(toy_examples(t_lens, n_tokens, seed=seed), r=5)


def extend_padding(batch, extra_frames, extra_tokens):
    """Append pad frames and pad tokens without touching valid content."""
    b = batch.size

    def pad_time(x, value=0.0):
        shape = list(x.shape)
        shape[-1] = extra_frames
        fill = torch.full(shape, value, dtype=x.dtype)
        return torch.cat([x, fill], dim=-1)

    return dataclasses.replace(
        batch,
        tokens=torch.cat(
            [batch.tokens, torch.zeros(b, extra_tokens, dtype=torch.int64)],
            dim=1),
        text_mask=torch.cat(
            [batch.text_mask,
             torch.zeros(b, extra_tokens, dtype=torch.bool)], dim=1),
        mels=pad_time(batch.mels, MEL_PAD_VALUE),
        frame_mask=pad_time(batch.frame_mask, False),
        features=pad_time(batch.features),
        feature_mask=pad_time(batch.feature_mask, False),
        gate_targets=pad_time(batch.gate_targets, 1.0),
    )


# ---------------------------------------------------------------- config

def test_config_derived_dims():
    cfg = ModelConfig.desk(VOCAB, N_SPEAKERS)
    assert cfg.text_encoder_out_dim == 32
    assert cfg.memory_dim == 32 + 9 + 64


def test_config_roundtrip():
    cfg = ModelConfig.desk(VOCAB, N_SPEAKERS)
    again = ModelConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert isinstance(again.prenet_dims, tuple)


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=VOCAB, n_speakers=0)
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=VOCAB, n_speakers=2, postnet_kernel=4)
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=VOCAB, n_speakers=2, prenet_dims=(64, 0))


def test_desk_parameter_count():
    # frozen for the desk preset with vocab 40 and 4 speakers
    counts = desk_model().parameter_counts()
    assert counts["total"] == 550497
    parts = sum(v for k, v in counts.items() if k != "total")
    assert parts == counts["total"]


def test_feature_encoder_parameter_arithmetic():
    # per block: 1x1 convs 9->9, 9->64, 64->9 plus affine batch norms
    per_block = (9 * 9 + 9 + 2 * 9) + (9 * 64 + 64 + 2 * 64) \
        + (64 * 9 + 9 + 2 * 9)
    counts = desk_model().parameter_counts()
    assert counts["feature_encoder"] == 8 * per_block


# -------------------------------------------------------- masked modules

def test_sequence_mask():
    mask = sequence_mask(torch.tensor([3, 1]), max_len=4)
    expected = torch.tensor([[True, True, True, False],
                             [True, False, False, False]])
    assert torch.equal(mask, expected)


def test_masked_batchnorm_matches_plain_when_all_valid():
    torch.manual_seed(0)
    x = torch.randn(3, 6, 11)
    mask = torch.ones(3, 11, dtype=torch.bool)
    masked = MaskedBatchNorm1d(6).train()
    plain = torch.nn.BatchNorm1d(6).train()
    torch.testing.assert_close(masked(x, mask), plain(x), atol=1e-6,
                               rtol=1e-5)


def test_masked_batchnorm_ignores_padding_bitwise():
    torch.manual_seed(1)
    x = torch.randn(2, 4, 10)
    mask = sequence_mask(torch.tensor([10, 6]), max_len=10)
    bn = MaskedBatchNorm1d(4).train()
    out = bn(x, mask)
    x_pad = torch.cat([x, torch.randn(2, 4, 7)], dim=2)
    mask_pad = torch.cat([mask, torch.zeros(2, 7, dtype=torch.bool)], dim=1)
    out_pad = MaskedBatchNorm1d(4).train()(x_pad, mask_pad)
    assert torch.equal(out_pad[:, :, :10], out)


def test_masked_batchnorm_requires_valid_positions():
    bn = MaskedBatchNorm1d(4).train()
    with pytest.raises(ValueError):
        bn(torch.randn(1, 4, 3), torch.zeros(1, 3, dtype=torch.bool))


def test_masked_conv_ignores_padding():
    torch.manual_seed(2)
    conv = MaskedConv1d(3, 5, 3)
    x = torch.randn(1, 3, 8)
    mask = sequence_mask(torch.tensor([5]), max_len=8)
    out = conv(x, mask)
    x2 = x.clone()
    x2[:, :, 5:] = 99.0
    assert torch.equal(conv(x2, mask)[:, :, :5], out[:, :, :5])


def test_masked_conv_rejects_even_kernel():
    with pytest.raises(ValueError):
        MaskedConv1d(3, 5, 4)


# ------------------------------------------------- positional embeddings

def test_sinusoidal_embedding_shape_and_origin():
    emb = sinusoidal_embedding(6, 8)
    assert emb.shape == (6, 8)
    # position 0: sin parts are 0, cos parts are 1
    torch.testing.assert_close(emb[0], torch.tensor([0.0] * 4 + [1.0] * 4))


def test_sinusoidal_embedding_odd_dim_and_tensor_positions():
    emb = sinusoidal_embedding(torch.tensor([0.0, 2.0]), 7)
    assert emb.shape == (2, 7)
    assert torch.isfinite(emb).all()
    torch.testing.assert_close(emb[0, 0], torch.tensor(0.0))


# ------------------------------------------------------------- encoders

def test_nearest_indices_rule():
    assert nearest_indices(10, 4).tolist() == [0, 2, 5, 7]
    assert nearest_indices(2, 4).tolist() == [0, 0, 1, 1]
    assert nearest_indices(6, 6).tolist() == list(range(6))


def test_condition_text_appends_resampled_channels():
    text_enc = torch.zeros(1, 4, 3)
    cond = torch.arange(10, dtype=torch.float32)[None, None, :]
    out = condition_text(text_enc, cond,
                         torch.ones(1, 4, dtype=torch.bool),
                         torch.ones(1, 10, dtype=torch.bool))
    assert out.shape == (1, 4, 4)
    assert out[0, :, 3].tolist() == [0.0, 2.0, 5.0, 7.0]


def test_condition_text_grid_uses_valid_lengths():
    # trailing padding must not shift which frames land on which tokens
    text_enc = torch.zeros(1, 6, 2)
    cond = torch.arange(16, dtype=torch.float32)[None, None, :]
    text_mask = sequence_mask(torch.tensor([4]), max_len=6)
    frame_mask = sequence_mask(torch.tensor([10]), max_len=16)
    out = condition_text(text_enc, cond, text_mask, frame_mask)
    assert out[0, :4, 2].tolist() == [0.0, 2.0, 5.0, 7.0]
    assert torch.equal(out[0, 4:], torch.zeros(2, 3))


def test_text_encoder_masks_output():
    model = desk_model()
    tokens = torch.randint(2, VOCAB, (2, 6))
    mask = sequence_mask(torch.tensor([6, 4]), max_len=6)
    out = model.text_encoder(tokens, mask)
    assert out.shape == (2, 6, 32)
    assert torch.equal(out[1, 4:], torch.zeros(2, 32))


def test_feature_encoder_channel_check_and_masking():
    model = desk_model()
    with pytest.raises(ValueError):
        model.feature_encoder(torch.randn(1, 5, 10),
                              torch.ones(1, 10, dtype=torch.bool))
    mask = sequence_mask(torch.tensor([7]), max_len=10)
    out = model.feature_encoder(torch.rand(1, 9, 10), mask)
    assert out.shape == (1, 9, 10)
    assert torch.equal(out[0, :, 7:], torch.zeros(9, 3))


# ------------------------------------------------------------ attention

def test_logistic_mixture_weights_peaked():
    mu = torch.tensor([[5.0]])
    scale = torch.tensor([[1e-3]])
    mix = torch.tensor([[0.0]])
    w = logistic_mixture_weights(mu, scale, mix, 12)
    assert w.argmax().item() == 5
    assert w[0, 5].item() > 0.999


def test_logistic_mixture_weights_masked_renormalized():
    mu = torch.tensor([[3.0, 8.0]])
    scale = torch.tensor([[2.0, 2.0]])
    mix = torch.tensor([[0.3, -0.2]])
    mask = sequence_mask(torch.tensor([6]), max_len=10)
    w = logistic_mixture_weights(mu, scale, mix, 10, mask)
    assert torch.equal(w[0, 6:], torch.zeros(4))
    assert abs(w.sum().item() - 1.0) < 1e-5
    assert (w >= 0).all()


def test_attention_locations_only_advance():
    torch.manual_seed(3)
    attn = MoLAttention(16, 8, 3)
    memory = torch.randn(2, 9, 5)
    mask = torch.ones(2, 9, dtype=torch.bool)
    mu = attn.initial_state(2)
    q = torch.randn(2, 16)
    pos = torch.zeros(2, 8)
    _, _, mu1 = attn(q, pos, memory, mask, mu)
    _, _, mu2 = attn(q, pos, memory, mask, mu1)
    assert (mu1 > mu).all()
    assert (mu2 > mu1).all()


# -------------------------------------------------------- teacher forced

def test_teacher_forced_shapes():
    model = desk_model()
    batch = toy_batch()
    out = model.forward_teacher_forced(batch)
    t, n = batch.mels.shape[2], batch.tokens.shape[1]
    assert out.mel_dec.shape == (2, 80, t)
    assert out.mel_post.shape == (2, 80, t)
    assert out.gate.shape == (2, t // 5)
    assert out.alignment.shape == (2, t // 5, n)
    assert not out.truncated


def test_teacher_forced_rejects_unrounded_length():
    model = desk_model()
    batch = toy_batch()
    bad = dataclasses.replace(batch, mels=batch.mels[:, :, :18])
    with pytest.raises(ValueError):
        model.forward_teacher_forced(bad)


def test_alignment_rows_are_distributions():
    model = desk_model()
    batch = toy_batch()
    out = model.forward_teacher_forced(batch)
    sums = out.alignment.sum(dim=2)
    torch.testing.assert_close(sums, torch.ones_like(sums), atol=1e-5,
                               rtol=0)
    assert (out.alignment >= 0).all()
    # item 1 has 5 of 7 token positions valid: padded ones get zero weight
    assert torch.equal(out.alignment[1, :, 5:],
                       torch.zeros_like(out.alignment[1, :, 5:]))


def test_postnet_is_identity_at_init():
    model = desk_model()
    out = model.forward_teacher_forced(toy_batch())
    assert torch.equal(out.mel_post, out.mel_dec)


def test_outputs_independent_of_padding_amount():
    # 30 extra pad frames and 3 pad tokens must not change valid outputs
    model = desk_model()
    model.train()
    batch = toy_batch()
    padded = extend_padding(batch, extra_frames=30, extra_tokens=3)
    t, s, n = (batch.mels.shape[2], batch.mels.shape[2] // 5,
               batch.tokens.shape[1])
    with torch.no_grad():
        a = model.forward_teacher_forced(
            batch, generator=torch.Generator().manual_seed(7))
        b = model.forward_teacher_forced(
            padded, generator=torch.Generator().manual_seed(7))
    assert (b.mel_dec[:, :, :t] - a.mel_dec).abs().max() < 1e-6
    assert (b.mel_post[:, :, :t] - a.mel_post).abs().max() < 1e-6
    assert (b.gate[:, :s] - a.gate).abs().max() < 1e-6
    assert (b.alignment[:, :s, :n] - a.alignment).abs().max() < 1e-6


def test_outputs_independent_of_batch_composition():
    # duplicating the batch must leave per item outputs unchanged
    model = desk_model()
    model.train()
    batch = toy_batch()
    doubled = dataclasses.replace(
        batch,
        **{f.name: torch.cat([getattr(batch, f.name)] * 2, dim=0)
           for f in dataclasses.fields(batch)})
    with torch.no_grad():
        a = model.forward_teacher_forced(
            batch, generator=torch.Generator().manual_seed(11))
        b = model.forward_teacher_forced(
            doubled, generator=torch.Generator().manual_seed(11))
    assert (b.mel_post[:2] - a.mel_post).abs().max() < 1e-6
    assert (b.gate[:2] - a.gate).abs().max() < 1e-6
    assert (b.alignment[:2] - a.alignment).abs().max() < 1e-6


def test_prenet_dropout_always_on_and_seedable():
    model = desk_model()
    model.eval()
    batch = toy_batch()
    with torch.no_grad():
        a = model.forward_teacher_forced(
            batch, generator=torch.Generator().manual_seed(5))
        b = model.forward_teacher_forced(
            batch, generator=torch.Generator().manual_seed(5))
        c = model.forward_teacher_forced(
            batch, generator=torch.Generator().manual_seed(6))
    assert torch.equal(a.mel_dec, b.mel_dec)
    assert not torch.equal(a.mel_dec, c.mel_dec)


def test_gradients_reach_every_submodule():
    model = desk_model()
    batch = toy_batch()
    out = model.forward_teacher_forced(batch)
    loss = out.mel_post.abs().mean() + out.gate.mean() \
        + out.alignment.abs().mean()
    loss.backward()
    for name in ("text_encoder", "feature_encoder", "speaker_embedding",
                 "decoder"):
        grads = [p.grad for p in getattr(model, name).parameters()]
        assert any(g is not None and g.abs().sum() > 0 for g in grads), name


# ------------------------------------------------------------- inference

def test_default_max_steps():
    model = desk_model()
    assert model.default_max_steps(100) == math.ceil(1.25 * 100 / 5)
    assert model.default_max_steps(20) == 5


def test_untrained_infer_runs_to_max_steps():
    # gate bias starts at -4, so an untrained gate never fires
    model = desk_model()
    model.eval()
    features = torch.rand(9, 20)
    out = model.infer(torch.randint(2, VOCAB, (6,)), features, speaker_id=1,
                      seed=0)
    assert out.truncated
    assert out.mel_dec.shape == (1, 80, 5 * model.default_max_steps(20))
    assert (torch.sigmoid(out.gate) < 0.5).all()


def test_infer_stops_when_gate_fires():
    model = desk_model()
    model.eval()
    with torch.no_grad():
        model.decoder.gate_proj.bias.fill_(10.0)
    out = model.infer(torch.randint(2, VOCAB, (6,)), torch.rand(9, 20),
                      speaker_id=0, seed=0)
    assert not out.truncated
    assert out.mel_dec.shape[2] == 5


def test_infer_deterministic_with_seed():
    model = desk_model()
    model.eval()
    tokens = torch.randint(2, VOCAB, (6,))
    features = torch.rand(9, 20)
    a = model.infer(tokens, features, speaker_id=0, seed=3)
    b = model.infer(tokens, features, speaker_id=0, seed=3)
    c = model.infer(tokens, features, speaker_id=0, seed=4)
    assert torch.equal(a.mel_post, b.mel_post)
    assert not torch.equal(a.mel_post, c.mel_post)


def test_infer_textless_uses_single_memory_slot():
    model = desk_model()
    model.eval()
    out = model.infer(None, torch.rand(9, 20), speaker_id=2, textless=True,
                      seed=0)
    assert out.alignment.shape[2] == 1
    torch.testing.assert_close(out.alignment.sum(dim=2),
                               torch.ones_like(out.alignment[:, :, 0]))


def test_infer_respects_max_steps_override():
    model = desk_model()
    model.eval()
    out = model.infer(torch.randint(2, VOCAB, (4,)), torch.rand(9, 40),
                      speaker_id=0, max_steps=3, seed=0)
    assert out.mel_dec.shape[2] == 15
    assert out.truncated
