"""Template-based synthesis: map a source template onto a target speaker,
apply relative deviations, decode with a trained checkpoint, and render
audio.

The template is a raw (pre-normalization) feature set extracted from any
singing recording. Its contours are remapped so the template's own robust
range lands on the target speaker's training range, normalized the same way
training data was, optionally nudged per feature by a relative percentage,
and fed to the acoustic model. Griffin-Lim gives an audible fallback
rendering; the mel remains the primary artifact.
"""

import dataclasses
import logging
import warnings

import numpy as np
import torch
from scipy.signal import medfilt

from .data import SpeakerTable, Tokenizer
from .features import (
    FEATURE_NAMES,
    FeatureExtractor,
    FeatureSet,
    FrameTrack,
    MelConfig,
    MelSpectrogram,
    SpeakerStats,
    Waveform,
    compute_octave,
    normalize_contours,
)
from .features.audio import istft, mel_filterbank, stft
from .features.tracks import NORM_CLAMP
from .model import AcousticModel, ModelConfig
from .training import load_checkpoint

log = logging.getLogger(__name__)

# tracks smoothed before mapping; noisy source audio throws spikes into
# exactly these estimates
SMOOTHED_TRACKS = ("f0", "f1", "f2", "f3", "f4")

DEVIATION_BOUNDS = (-50.0, 50.0)

# acceptable generated/template length ratio before a warning is raised
LENGTH_RATIO_BOUNDS = (0.8, 1.3)


@dataclasses.dataclass
class TemplateSpec:
    """What to synthesize: a raw template, a target voice, optional nudges."""

    source: FeatureSet
    speaker: str
    deviations: dict = dataclasses.field(default_factory=dict)
    textless: bool = False
    text: str = ""

    def __post_init__(self):
        lo, hi = DEVIATION_BOUNDS
        for name, dev in self.deviations.items():
            if name not in FEATURE_NAMES:
                raise ValueError("unknown feature %r in deviations (choices: %s)"
                                 % (name, ", ".join(FEATURE_NAMES)))
            if not lo <= float(dev) <= hi:
                raise ValueError("deviation for %s is %.1f%%; allowed range "
                                 "is [%.0f%%, %.0f%%]" % (name, dev, lo, hi))


def smooth_template(fs, window=5):
    """Median-filter the pitch and formant contours of a raw template.

    Only voiced frames are filtered, as one contiguous sequence, so gaps do
    not drag values toward zero. The octave contour is recomputed from the
    smoothed f0 to keep the two pitch representations consistent.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("median filter window must be odd and positive")
    tracks = {}
    for name in FEATURE_NAMES:
        t = fs[name]
        values = t.values.copy()
        voiced = t.voiced_mask
        if name in SMOOTHED_TRACKS and voiced.sum() >= window:
            values[voiced] = medfilt(values[voiced], window)
        tracks[name] = FrameTrack(values, t.hop_seconds, voiced.copy())
    tracks["octave"] = compute_octave(tracks["f0"])
    return FeatureSet(tracks)


def map_template(fs, stats):
    """Remap a raw template into the target speaker's normalized domain.

    Per feature: an affine map sends the template's own [p5, p95] onto the
    speaker's [p5, p95], then the standard normalization maps the speaker
    range to [0, 1]. A template track with no spread cannot be remapped, so
    it becomes the middle of the speaker's range (0.5 normalized).
    """
    own = SpeakerStats.from_feature_sets([fs])

    def remap(name, track):
        t5, t95 = own.p5[name], own.p95[name]
        s5, s95 = stats.p5[name], stats.p95[name]
        if t95 - t5 <= 0:
            log.warning("template %s range is degenerate (p5 == p95 == %.4g); "
                        "using the middle of the speaker range", name, t5)
            return np.full_like(track.values, (s5 + s95) / 2.0)
        return s5 + (track.values - t5) * (s95 - s5) / (t95 - t5)

    return normalize_contours(fs.map_values(remap), stats)


def apply_deviations(fs, deviations):
    """Scale normalized contours by (1 + dev/100) per feature, re-clamped.

    Deviations compose multiplicatively and leave unvoiced frames at zero.
    """
    lo, hi = DEVIATION_BOUNDS
    for name, dev in deviations.items():
        if name not in FEATURE_NAMES:
            raise ValueError("unknown feature %r in deviations" % name)
        if not lo <= float(dev) <= hi:
            raise ValueError("deviation for %s is %.1f%%; allowed range "
                             "is [%.0f%%, %.0f%%]" % (name, dev, lo, hi))

    def nudge(name, track):
        factor = 1.0 + float(deviations.get(name, 0.0)) / 100.0
        out = np.clip(track.values * factor, NORM_CLAMP[0], NORM_CLAMP[1])
        return np.where(track.voiced_mask, out, 0.0)

    return fs.map_values(nudge)


def extract_template(source, extractor=None):
    """Raw feature template from a waveform or wav path."""
    if isinstance(source, str):
        source = Waveform.read(source)
    extractor = extractor or FeatureExtractor(
        mel=MelConfig(sample_rate=source.sample_rate))
    fs, _ = extractor(source)
    return fs


def load_acoustic(checkpoint):
    """(model in eval mode, tokenizer, speaker table) from a checkpoint.

    Accepts a path or an already-loaded payload. Training heads are not
    reconstructed; inference never needs them.
    """
    payload = checkpoint if isinstance(checkpoint, dict) \
        else load_checkpoint(checkpoint)
    cfg = ModelConfig.from_dict(payload["model_config"])
    model = AcousticModel(cfg)
    model.load_state_dict(payload["model"])
    model.eval()
    tokenizer = Tokenizer.from_dict(payload["extras"]["tokenizer"])
    table = SpeakerTable.from_dict(payload["extras"]["speakers"])
    return model, tokenizer, table


@dataclasses.dataclass
class SynthesisResult:
    mel: MelSpectrogram         # (80, T) log-mel, training-compatible
    alignment: np.ndarray       # (decoder steps, memory slots)
    gate: np.ndarray            # per-step gate probability
    truncated: bool
    template_frames: int

    @property
    def n_frames(self):
        return self.mel.n_frames


def synthesize(spec, checkpoint, seed=0, max_steps=None, gate_threshold=0.5,
               smooth_window=5):
    """Decode a template spec with a trained checkpoint.

    Same spec and seed give the identical mel. Warnings are raised when the
    gate never fires (truncation) and when the output length falls outside
    the expected ratio of the template length.
    """
    if not spec.textless and not spec.text.strip():
        raise ValueError("text required unless synthesizing textless")
    model, tokenizer, table = load_acoustic(checkpoint)
    if spec.speaker not in table:
        raise ValueError("unknown speaker %r; trained speakers: %s"
                         % (spec.speaker, ", ".join(table.speaker_ids)))

    template = smooth_template(spec.source, smooth_window)
    mapped = map_template(template, table.stats_of(spec.speaker))
    mapped = apply_deviations(mapped, spec.deviations)

    features = torch.from_numpy(mapped.to_matrix()).float()
    tokens = None
    if not spec.textless:
        ids = tokenizer.encode(spec.text)
        if ids.size == 0:
            raise ValueError("text required unless synthesizing textless")
        tokens = torch.from_numpy(ids)

    out = model.infer(tokens, features, table.index_of(spec.speaker),
                      textless=spec.textless, max_steps=max_steps,
                      gate_threshold=gate_threshold, seed=seed)

    t_out = out.mel_post.shape[2]
    t_in = spec.source.n_frames
    if out.truncated:
        warnings.warn("gate never fired within %d frames; output truncated"
                      % t_out)
    ratio = t_out / max(t_in, 1)
    if not LENGTH_RATIO_BOUNDS[0] <= ratio <= LENGTH_RATIO_BOUNDS[1]:
        warnings.warn("generated length %d is %.2fx the template length %d, "
                      "outside [%.1f, %.1f]"
                      % (t_out, ratio, t_in, *LENGTH_RATIO_BOUNDS))

    return SynthesisResult(
        mel=MelSpectrogram(out.mel_post[0].detach().numpy()),
        alignment=out.alignment[0].detach().numpy(),
        gate=torch.sigmoid(out.gate[0]).detach().numpy(),
        truncated=out.truncated,
        template_frames=t_in,
    )


def griffin_lim(mel, cfg=None, iterations=60, seed=0,
                return_residuals=False):
    """Waveform from a log-mel matrix by iterative phase reconstruction.

    The mel-to-linear mapping is the pseudo-inverse of the analysis
    filterbank; phases start random (seeded) and are refined by alternating
    projection. Returns the waveform, plus the per-iteration spectral
    convergence residuals when asked.
    """
    cfg = cfg or MelConfig()
    bins = mel.bins if isinstance(mel, MelSpectrogram) else np.asarray(mel)
    if bins.shape[0] != cfg.n_mels:
        raise ValueError("mel has %d bins; config expects %d"
                         % (bins.shape[0], cfg.n_mels))
    t = bins.shape[1]
    length = t * cfg.hop_length

    fb = mel_filterbank(cfg)
    mag = np.linalg.pinv(fb) @ np.exp(bins)
    mag = np.maximum(mag, 0.0)
    mag_norm = np.linalg.norm(mag)

    rng = np.random.default_rng(seed)
    phase = np.exp(2j * np.pi * rng.random(mag.shape))
    residuals = []
    for _ in range(max(1, iterations)):
        x = istft(mag * phase, cfg, length=length)
        spec = stft(x, cfg, n_frames=t)
        residuals.append(
            float(np.linalg.norm(np.abs(spec) - mag) / max(mag_norm, 1e-12)))
        phase = np.exp(1j * np.angle(spec))
    x = istft(mag * phase, cfg, length=length)

    wav = Waveform(np.clip(x, -1.0, 1.0), cfg.sample_rate)
    if return_residuals:
        return wav, residuals
    return wav
