"""Frame-level feature tracks, the nine-track feature set and normalization."""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# Fixed track order: this is the channel layout every consumer relies on.
FEATURE_NAMES = ("f0", "hnr", "cpp", "rms", "f1", "f2", "f3", "f4", "octave")

C0_HZ = 16.352  # pitch reference for the octave contour

# Bounds of the normalized contour domain; values outside the speaker's
# robust range are clamped here.
NORM_CLAMP = (-0.5, 1.5)


@dataclass
class FrameTrack:
    """One contour sampled per analysis frame, with a voicing mask.

    Unvoiced frames carry value 0 for pitch-dependent features; always-valid
    features (intensity) use an all-true mask.
    """

    values: np.ndarray
    hop_seconds: float
    voiced_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.voiced_mask = np.asarray(self.voiced_mask, dtype=bool)
        if self.values.shape != self.voiced_mask.shape:
            raise ValueError("values and voiced_mask must have equal length")

    def __len__(self):
        return len(self.values)

    def voiced_values(self):
        return self.values[self.voiced_mask]


@dataclass
class FeatureSet:
    """The nine conditioning contours, all aligned to one frame count."""

    tracks: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [n for n in FEATURE_NAMES if n not in self.tracks]
        if missing:
            raise ValueError("feature set missing tracks: %s" % ", ".join(missing))
        lengths = {len(t) for t in self.tracks.values()}
        if len(lengths) != 1:
            raise ValueError("feature tracks have unequal lengths: %s" % lengths)

    @property
    def n_frames(self):
        return len(self.tracks[FEATURE_NAMES[0]])

    @property
    def n_channels(self):
        return len(FEATURE_NAMES)

    def __getitem__(self, name):
        return self.tracks[name]

    def to_matrix(self):
        """(9, T) value matrix in the fixed track order."""
        return np.stack([self.tracks[n].values for n in FEATURE_NAMES])

    def mask_matrix(self):
        return np.stack([self.tracks[n].voiced_mask for n in FEATURE_NAMES])

    def map_values(self, fn):
        """New FeatureSet with per-track values transformed by fn(name, track)."""
        out = {}
        for name in FEATURE_NAMES:
            t = self.tracks[name]
            out[name] = FrameTrack(fn(name, t), t.hop_seconds, t.voiced_mask.copy())
        return FeatureSet(out)


@dataclass
class SpeakerStats:
    """Robust per-feature value ranges (5th/95th percentile) for one speaker."""

    p5: dict
    p95: dict

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if name not in self.p5 or name not in self.p95:
                raise ValueError("speaker stats missing feature %r" % name)
            if self.p5[name] > self.p95[name]:
                raise ValueError("p5 > p95 for feature %r" % name)

    @classmethod
    def from_feature_sets(cls, feature_sets):
        """Percentiles pooled over all voiced frames of a speaker's utterances."""
        p5, p95 = {}, {}
        for name in FEATURE_NAMES:
            pooled = np.concatenate([fs[name].voiced_values() for fs in feature_sets])
            if pooled.size == 0:
                p5[name], p95[name] = 0.0, 0.0
            else:
                p5[name] = float(np.percentile(pooled, 5))
                p95[name] = float(np.percentile(pooled, 95))
        return cls(p5, p95)

    def to_dict(self):
        return {"p5": dict(self.p5), "p95": dict(self.p95)}

    @classmethod
    def from_dict(cls, d):
        return cls(dict(d["p5"]), dict(d["p95"]))


def align_to_mel(values, n_frames):
    """Nearest-neighbor resample of a track to the mel frame count.

    Index rule: output frame t reads source frame floor(t * len / n_frames).
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("cannot align an empty track")
    src = np.floor(np.arange(n_frames) * len(values) / n_frames).astype(int)
    src = np.minimum(src, len(values) - 1)
    return values[src]


def align_track(track: FrameTrack, n_frames, hop_seconds):
    return FrameTrack(
        values=align_to_mel(track.values, n_frames),
        hop_seconds=hop_seconds,
        voiced_mask=align_to_mel(track.voiced_mask, n_frames),
    )


def compute_octave(f0: FrameTrack) -> FrameTrack:
    """Continuous pitch height: log2(f0 / C0) on voiced frames, 0 elsewhere."""
    values = np.zeros_like(f0.values)
    v = f0.voiced_mask & (f0.values > 0)
    values[v] = np.log2(f0.values[v] / C0_HZ)
    return FrameTrack(values, f0.hop_seconds, f0.voiced_mask.copy())


def normalize_track(values, mask, p5, p95, clamp=NORM_CLAMP, name=""):
    if p95 - p5 <= 0:
        log.warning("degenerate range for %s (p5 == p95 == %.4g); using constant 0.5", name, p5)
        out = np.full_like(np.asarray(values, dtype=np.float64), 0.5)
    else:
        out = (np.asarray(values, dtype=np.float64) - p5) / (p95 - p5)
        out = np.clip(out, clamp[0], clamp[1])
    out = np.where(mask, out, 0.0)
    return out


def normalize_contours(fs: FeatureSet, stats: SpeakerStats) -> FeatureSet:
    """Map each track so the speaker's [p5, p95] range lands on [0, 1].

    Out-of-range values clamp to [-0.5, 1.5]; unvoiced frames stay 0 so the
    encoder keeps seeing the voicing decision.
    """
    return fs.map_values(
        lambda name, t: normalize_track(
            t.values, t.voiced_mask, stats.p5[name], stats.p95[name], name=name
        )
    )
