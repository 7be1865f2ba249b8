"""Critic, window sampler, and auxiliary head tests."""

import math

import numpy as np
import pytest
import torch

from templatesinger.adversarial import (
    Critic,
    CriticConfig,
    FeatureDecoder,
    MelClassifier,
    SpeakerHead,
    TrainingHeads,
    WindowSample,
    critic_loss,
    gradient_penalty,
    sample_window_pairs,
    sample_windows,
    score_windows,
)


def mel_batch(lengths, t_max=None, seed=0):
    rng = np.random.default_rng(seed)
    t_max = t_max or max(lengths)
    mels = torch.from_numpy(
        rng.normal(-5.0, 1.0, size=(len(lengths), 80, t_max))).float()
    masks = torch.zeros(len(lengths), t_max, dtype=torch.bool)
    for i, t in enumerate(lengths):
        masks[i, :t] = True
    return mels, masks


# -------------------------------------------------------- window sampler

def test_sample_windows_deterministic():
    mels, masks = mel_batch([40, 60])
    draws_a = sample_windows(mels, masks, np.random.default_rng(5), 20,
                             (8, 16))
    draws_b = sample_windows(mels, masks, np.random.default_rng(5), 20,
                             (8, 16))
    assert [(d.origin, d.width) for d in draws_a] \
        == [(d.origin, d.width) for d in draws_b]


def test_sample_windows_bounds():
    mels, masks = mel_batch([100])
    draws = sample_windows(mels, masks, np.random.default_rng(0), 1000,
                           (20, 20))
    starts = [d.origin[1] for d in draws]
    assert min(starts) >= 0 and max(starts) <= 80
    assert {d.width for d in draws} == {20}
    assert all(d.window.shape == (80, 20) for d in draws)


def test_sample_windows_forced_placement():
    mels, masks = mel_batch([12])
    draws = sample_windows(mels, masks, np.random.default_rng(1), 50,
                           (12, 12))
    assert all(d.origin == (0, 0) for d in draws)


def test_sample_windows_skips_short_utterances():
    mels, masks = mel_batch([5, 30])
    draws = sample_windows(mels, masks, np.random.default_rng(2), 100,
                           (8, 16))
    assert all(d.origin[0] == 1 for d in draws)
    with pytest.raises(ValueError):
        sample_windows(mels, masks[:, :5], np.random.default_rng(2), 10,
                       (8, 16))


def test_sample_windows_never_reads_padding():
    mels, masks = mel_batch([20, 35], t_max=40)
    poisoned = mels.clone()
    poisoned[~masks[:, None, :].expand_as(mels)] = float("nan")
    draws = sample_windows(poisoned, masks, np.random.default_rng(3), 200,
                           (8, 20))
    assert all(torch.isfinite(d.window).all() for d in draws)


def test_sample_window_pairs_matched():
    real, masks = mel_batch([40, 60], seed=1)
    fake, _ = mel_batch([40, 60], seed=2)
    reals, fakes = sample_window_pairs(real, fake, masks,
                                       np.random.default_rng(4), 30,
                                       (8, 16))
    for r, f in zip(reals, fakes):
        assert r.width == f.width
        assert r.origin[0] == f.origin[0]
        assert r.source == "real" and f.source == "generated"


def test_window_sample_validates_source():
    with pytest.raises(ValueError):
        WindowSample(torch.zeros(80, 8), "other", (0, 0), 8)


# ---------------------------------------------------------------- critic

def test_critic_score_finite_and_batch_consistent():
    torch.manual_seed(0)
    critic = Critic()
    w = torch.randn(3, 80, 16)
    scores = critic(w)
    assert scores.shape == (3,)
    assert torch.isfinite(scores).all()
    doubled = critic(torch.cat([w, w], dim=0))
    torch.testing.assert_close(doubled[:3], doubled[3:])


def test_critic_not_constant_and_scale_sensitive():
    torch.manual_seed(1)
    critic = Critic()
    w = torch.randn(1, 80, 16)
    base = critic(w)
    assert not torch.isclose(critic(w + 0.1), base)
    assert not torch.isclose(critic(2.0 * w), base)


def test_critic_handles_variable_widths():
    torch.manual_seed(2)
    critic = Critic()
    samples = [WindowSample(torch.randn(80, w), "real", (0, 0), w)
               for w in (8, 13, 32)]
    scores = score_windows(critic, samples)
    assert scores.shape == (3,)
    assert torch.isfinite(scores).all()


def test_critic_config_validation():
    with pytest.raises(ValueError):
        CriticConfig(channels=(0, 4))
    with pytest.raises(ValueError):
        CriticConfig(gp_weight=-1.0)
    with pytest.raises(ValueError):
        CriticConfig(w_min=10, w_max=5)


def test_critic_loss_arithmetic():
    equal = torch.tensor([1.0, 2.0, 3.0])
    assert critic_loss(equal, equal).item() == 0.0
    real = torch.tensor([3.0, 3.0])
    fake = torch.tensor([1.0, 1.0])
    assert critic_loss(real, fake).item() == -2.0
    assert critic_loss(real, fake, gp_term=torch.tensor(0.5),
                       gp_weight=10.0).item() == 3.0


# ------------------------------------------------------ gradient penalty

def linear_unit_grad_score(x):
    # gradient is 1/sqrt(numel) per element, so its norm is exactly 1
    n = x[0].numel()
    return x.sum(dim=tuple(range(1, x.dim()))) / math.sqrt(n)


def test_gradient_penalty_zero_for_unit_gradient():
    torch.manual_seed(3)
    reals = [torch.randn(80, 12) for _ in range(5)]
    fakes = [torch.randn(80, 12) for _ in range(5)]
    gp = gradient_penalty(linear_unit_grad_score, reals, fakes)
    assert abs(gp.item()) < 1e-6


def test_gradient_penalty_positive_otherwise():
    torch.manual_seed(4)
    critic = Critic()
    reals = [torch.randn(80, 12) for _ in range(3)]
    fakes = [torch.randn(80, 12) for _ in range(3)]
    gp = gradient_penalty(critic, reals, fakes)
    assert gp.item() > 0
    grads = torch.autograd.grad(gp, list(critic.parameters()),
                                allow_unused=True)
    assert any(g is not None and g.abs().sum() > 0 for g in grads)


def test_gradient_penalty_interpolates_on_segment():
    seen = []

    def recording_score(x):
        seen.append(x[0].detach().clone())
        return linear_unit_grad_score(x)

    r = torch.full((80, 10), 2.0)
    f = torch.full((80, 10), -1.0)
    gradient_penalty(recording_score, [r], [f],
                     generator=torch.Generator().manual_seed(0))
    interp = seen[0]
    eps = (interp - f) / (r - f)
    assert float(eps.min()) >= 0.0 and float(eps.max()) <= 1.0
    assert float(eps.max() - eps.min()) < 1e-6


def test_gradient_penalty_rejects_mismatched_windows():
    with pytest.raises(ValueError):
        gradient_penalty(linear_unit_grad_score,
                         [torch.zeros(80, 8)], [torch.zeros(80, 9)])
    with pytest.raises(ValueError):
        gradient_penalty(linear_unit_grad_score, [torch.zeros(80, 8)], [])


# ----------------------------------------------------------- other heads

def test_mel_classifier_probability_range():
    torch.manual_seed(5)
    clf = MelClassifier()
    p = clf(torch.randn(4, 80, 17))
    assert p.shape == (4,)
    assert ((p > 0) & (p < 1)).all()
    p_const = clf(torch.zeros(1, 80, 9))
    assert torch.isfinite(p_const).all()


def test_feature_decoder_shape_and_gradient():
    torch.manual_seed(6)
    dec = FeatureDecoder()
    x = torch.randn(2, 80, 23, requires_grad=True)
    track = dec(x)
    assert track.shape == (2, 23)
    track.sum().backward()
    assert x.grad is not None and x.grad.abs().sum() > 0


def test_feature_decoders_are_independent():
    heads = TrainingHeads()
    param_ids = [set(id(p) for p in dec.parameters())
                 for dec in heads.feature_decoders.values()]
    assert len(param_ids) == 3
    assert not (param_ids[0] & param_ids[1])
    assert not (param_ids[1] & param_ids[2])
    tracks = heads.decode_tracks(torch.randn(1, 80, 15))
    assert set(tracks) == {"f0", "hnr", "rms"}
    assert all(t.shape == (1, 15) for t in tracks.values())


def test_speaker_head_embedding():
    torch.manual_seed(7)
    head = SpeakerHead()
    for t in (9, 10, 25):
        emb = head(torch.randn(2, 80, t))
        assert emb.shape == (2, 64)
    x = torch.randn(1, 80, 12)
    assert torch.equal(head(x), head(x))
    with pytest.raises(ValueError, match="utterance too short"):
        head(torch.randn(1, 80, 8))


def test_heads_do_not_touch_the_acoustic_model():
    from templatesinger.model import AcousticModel, ModelConfig

    torch.manual_seed(8)
    model = AcousticModel(ModelConfig.desk(30, 2))
    model.eval()
    feats = torch.rand(9, 20)
    tokens = torch.randint(2, 30, (5,))
    before = model.infer(tokens, feats, speaker_id=0, seed=0)
    TrainingHeads()
    after = model.infer(tokens, feats, speaker_id=0, seed=0)
    assert torch.equal(before.mel_post, after.mel_post)
    names = {n.split(".")[0] for n, _ in model.named_parameters()}
    assert "critic" not in names and "speaker_head" not in names
