"""One-shot extraction of the full feature set plus mel for an utterance."""

from dataclasses import dataclass, field

import numpy as np

from .audio import MelConfig, Waveform, compute_mel, extract_rms
from .cepstrum import cpp_track
from .formants import FormantConfig, formant_tracks
from .pitch import HNR_CLAMP_DB, PitchConfig, pitch_analysis
from .tracks import FEATURE_NAMES, FeatureSet, FrameTrack, align_track, compute_octave


@dataclass
class FeatureExtractor:
    """Shares one pitch analysis across every pitch-gated extractor."""

    mel: MelConfig = field(default_factory=MelConfig)
    pitch: PitchConfig = None
    formant: FormantConfig = None

    def __post_init__(self):
        if self.pitch is None:
            self.pitch = PitchConfig(sample_rate=self.mel.sample_rate, hop_length=self.mel.hop_length)
        if self.formant is None:
            self.formant = FormantConfig(sample_rate=self.mel.sample_rate, hop_length=self.mel.hop_length)

    def __call__(self, w: Waveform):
        """Returns (FeatureSet, MelSpectrogram); every track has mel length T."""
        mel = compute_mel(w, self.mel)
        t = mel.n_frames
        hop_s = self.mel.hop_length / self.mel.sample_rate

        f0_hz, strength, voiced = pitch_analysis(w.samples, self.pitch)
        f0 = FrameTrack(np.where(voiced, f0_hz, 0.0), self.pitch.hop_seconds, voiced)

        hnr_vals = np.zeros_like(strength)
        r = np.clip(strength[voiced], 1e-12, 1.0 - 1e-12)
        hnr_vals[voiced] = np.clip(10.0 * np.log10(r / (1.0 - r)), *HNR_CLAMP_DB)
        hnr = FrameTrack(hnr_vals, self.pitch.hop_seconds, voiced)

        cpp = cpp_track(w.samples, self.pitch, voiced)
        rms = extract_rms(w, self.mel)
        formants = formant_tracks(w.samples, self.formant, voiced)
        octave = compute_octave(f0)

        tracks = {
            "f0": f0,
            "hnr": hnr,
            "cpp": cpp,
            "rms": rms,
            "f1": formants[0],
            "f2": formants[1],
            "f3": formants[2],
            "f4": formants[3],
            "octave": octave,
        }
        tracks = {name: align_track(tr, t, hop_s) for name, tr in tracks.items()}
        return FeatureSet(tracks), mel


def extract_features(w: Waveform, mel_cfg: MelConfig = None):
    """Convenience wrapper with default configs derived from the waveform rate."""
    mel_cfg = mel_cfg or MelConfig(sample_rate=w.sample_rate)
    return FeatureExtractor(mel=mel_cfg)(w)
