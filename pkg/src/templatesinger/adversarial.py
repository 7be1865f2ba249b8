"""Train-time critic and auxiliary heads.

A Wasserstein critic scores randomly placed, randomly sized windows cut
from real and generated mel spectrograms. Three small convolutional heads
add multi-task supervision: per-frame reconstruction of pitch,
harmonicity, and loudness tracks from the decoder output, a real-versus-
generated window classifier, and a speaker embedding of the generated
mel. Everything here is train-time only: the acoustic model never
references these modules, so they can be dropped for inference.
"""

import dataclasses

import torch
from torch import nn
from torch.nn.utils.parametrizations import weight_norm

RECONSTRUCTED_FEATURES = ("f0", "hnr", "rms")


@dataclasses.dataclass
class WindowSample:
    window: torch.Tensor       # (80, w)
    source: str                # "real" or "generated"
    origin: tuple              # (batch index, start frame)
    width: int

    def __post_init__(self):
        if self.source not in ("real", "generated"):
            raise ValueError("source must be 'real' or 'generated'")


@dataclasses.dataclass(frozen=True)
class CriticConfig:
    channels: tuple = (32, 32, 64, 64)
    kernel_size: int = 3
    gp_weight: float = 10.0
    w_min: int = 8
    w_max: int = 32

    def __post_init__(self):
        if any(c < 1 for c in self.channels):
            raise ValueError("critic channel widths must be positive")
        if self.gp_weight < 0:
            raise ValueError("gradient penalty weight must be >= 0")
        if self.w_min < 1 or self.w_max < self.w_min:
            raise ValueError("need 1 <= w_min <= w_max")


def _valid_lengths(masks):
    # masks are prefix-contiguous: the count is the valid length
    return masks.sum(dim=1).tolist()


def sample_windows(mels, masks, rng, count, w_range, source="real"):
    """Cut `count` windows from valid frames, uniformly random in item,
    width, and start. Items shorter than the minimum width are skipped.

    mels: (B, 80, T); masks: (B, T) bool; rng: numpy Generator.
    """
    w_min, w_max = w_range
    if w_min < 1 or w_max < w_min:
        raise ValueError("need 1 <= w_min <= w_max")
    lengths = _valid_lengths(masks)
    eligible = [i for i, t in enumerate(lengths) if t >= w_min]
    if not eligible:
        raise ValueError("no utterance has %d valid frames" % w_min)
    out = []
    for _ in range(count):
        i = eligible[int(rng.integers(len(eligible)))]
        t = int(lengths[i])
        w = int(rng.integers(w_min, min(w_max, t) + 1))
        start = int(rng.integers(0, t - w + 1))
        out.append(WindowSample(window=mels[i, :, start:start + w],
                                source=source, origin=(i, start), width=w))
    return out


def sample_window_pairs(real_mels, fake_mels, masks, rng, count, w_range):
    """Paired draws with matched item and width (starts independent), as
    needed for gradient-penalty interpolation."""
    w_min, w_max = w_range
    if w_min < 1 or w_max < w_min:
        raise ValueError("need 1 <= w_min <= w_max")
    lengths = _valid_lengths(masks)
    eligible = [i for i, t in enumerate(lengths) if t >= w_min]
    if not eligible:
        raise ValueError("no utterance has %d valid frames" % w_min)
    reals, fakes = [], []
    for _ in range(count):
        i = eligible[int(rng.integers(len(eligible)))]
        t = int(lengths[i])
        w = int(rng.integers(w_min, min(w_max, t) + 1))
        s_r = int(rng.integers(0, t - w + 1))
        s_f = int(rng.integers(0, t - w + 1))
        reals.append(WindowSample(window=real_mels[i, :, s_r:s_r + w],
                                  source="real", origin=(i, s_r), width=w))
        fakes.append(WindowSample(window=fake_mels[i, :, s_f:s_f + w],
                                  source="generated", origin=(i, s_f),
                                  width=w))
    return reals, fakes


class Critic(nn.Module):
    """Stack of weight-normalized 2-D convolutions (stride 2 on time)
    over a 1-channel mel window, mean-pooled into an unbounded score."""

    def __init__(self, cfg=None):
        super().__init__()
        cfg = cfg or CriticConfig()
        self.cfg = cfg
        convs = []
        ch = 1
        for out_ch in cfg.channels:
            convs.append(weight_norm(nn.Conv2d(
                ch, out_ch, cfg.kernel_size, stride=(1, 2),
                padding=cfg.kernel_size // 2)))
            ch = out_ch
        self.convs = nn.ModuleList(convs)
        self.out = nn.Linear(ch, 1)

    def forward(self, windows):
        # (B, 80, w) or (B, 1, 80, w) -> (B,) scores
        x = windows if windows.dim() == 4 else windows[:, None]
        for conv in self.convs:
            x = torch.nn.functional.leaky_relu(conv(x), 0.2)
        return self.out(x.mean(dim=(2, 3))).squeeze(1)


def score_windows(score_fn, samples):
    """Score variable-width windows one at a time (no cross-width
    padding); returns a (len(samples),) tensor."""
    return torch.stack([score_fn(_window_tensor(s)[None])[0]
                        for s in samples])


def _window_tensor(x):
    return x.window if isinstance(x, WindowSample) else x


def gradient_penalty(score_fn, real_windows, fake_windows, generator=None):
    """Mean (grad norm - 1)^2 of the score at random interpolates
    eps*real + (1-eps)*fake, eps uniform per pair."""
    if len(real_windows) != len(fake_windows):
        raise ValueError("need equally many real and fake windows")
    if not real_windows:
        raise ValueError("need at least one window pair")
    terms = []
    for r, f in zip(real_windows, fake_windows):
        r, f = _window_tensor(r), _window_tensor(f)
        if r.shape != f.shape:
            raise ValueError("window shapes must match for interpolation")
        eps = torch.rand((), generator=generator, dtype=r.dtype)
        interp = (eps * r + (1.0 - eps) * f).detach().requires_grad_(True)
        score = score_fn(interp[None]).sum()
        grad, = torch.autograd.grad(score, interp, create_graph=True)
        terms.append((grad.norm() - 1.0) ** 2)
    return torch.stack(terms).mean()


def critic_loss(real_scores, fake_scores, gp_term=None, gp_weight=10.0):
    """mean(fake) - mean(real) + gp_weight * gp_term."""
    loss = fake_scores.mean() - real_scores.mean()
    if gp_term is not None:
        loss = loss + gp_weight * gp_term
    return loss


class MelClassifier(nn.Module):
    """Real-versus-generated window probability: two 1x1 convs and a
    temporal mean of per-frame sigmoids."""

    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(80, 80, 1), nn.ELU(),
            nn.Conv1d(80, 1, 1),
        )

    def forward(self, x):
        # (B, 80, T) -> (B,) probabilities in (0, 1)
        return torch.sigmoid(self.net(x)).mean(dim=(1, 2))


class FeatureDecoder(nn.Module):
    """Per-frame scalar track from the decoder mel output: three 1x1
    convs with ELU activations."""

    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(80, 80, 1), nn.ELU(),
            nn.Conv1d(80, 32, 1), nn.ELU(),
            nn.Conv1d(32, 1, 1), nn.ELU(),
        )

    def forward(self, x):
        # (B, 80, T) -> (B, T)
        return self.net(x).squeeze(1)


class SpeakerHead(nn.Module):
    """Speaker embedding of a generated mel: four 1x1 convs with ELU,
    max-pooled (size 3) after the first two, then a temporal mean."""

    MIN_FRAMES = 9

    def __init__(self, out_dim=64):
        super().__init__()
        self.conv1 = nn.Conv1d(80, 80, 1)
        self.conv2 = nn.Conv1d(80, 64, 1)
        self.conv3 = nn.Conv1d(64, 32, 1)
        self.conv4 = nn.Conv1d(32, out_dim, 1)
        self.pool = nn.MaxPool1d(3)

    def forward(self, x):
        # (B, 80, T) -> (B, out_dim); needs T >= 9 for the two pools
        if x.shape[2] < self.MIN_FRAMES:
            raise ValueError("utterance too short for speaker head")
        x = self.pool(torch.nn.functional.elu(self.conv1(x)))
        x = self.pool(torch.nn.functional.elu(self.conv2(x)))
        x = torch.nn.functional.elu(self.conv3(x))
        x = torch.nn.functional.elu(self.conv4(x))
        return x.mean(dim=2)


class TrainingHeads(nn.Module):
    """Container for every train-time module so their parameters live in
    one checkpoint group that inference loads can skip."""

    def __init__(self, critic_cfg=None, speaker_dim=64):
        super().__init__()
        self.critic = Critic(critic_cfg)
        self.mel_classifier = MelClassifier()
        self.feature_decoders = nn.ModuleDict(
            {name: FeatureDecoder() for name in RECONSTRUCTED_FEATURES})
        self.speaker_head = SpeakerHead(speaker_dim)

    def decode_tracks(self, mel_dec):
        # (B, 80, T) -> dict name -> (B, T)
        return {name: dec(mel_dec)
                for name, dec in self.feature_decoders.items()}
