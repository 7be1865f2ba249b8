from .audio import MelConfig, MelSpectrogram, Waveform, compute_mel, extract_rms
from .tracks import (
    C0_HZ,
    FEATURE_NAMES,
    FeatureSet,
    FrameTrack,
    SpeakerStats,
    align_to_mel,
    compute_octave,
    normalize_contours,
)
from .pitch import PitchConfig, extract_f0, extract_hnr
from .cepstrum import extract_cpp
from .formants import FormantConfig, extract_formants
from .extract import FeatureExtractor, extract_features
from .cache import load_feature_cache, save_feature_cache

__all__ = [
    "MelConfig",
    "MelSpectrogram",
    "Waveform",
    "compute_mel",
    "extract_rms",
    "C0_HZ",
    "FEATURE_NAMES",
    "FeatureSet",
    "FrameTrack",
    "SpeakerStats",
    "align_to_mel",
    "compute_octave",
    "normalize_contours",
    "PitchConfig",
    "extract_f0",
    "extract_hnr",
    "extract_cpp",
    "FormantConfig",
    "extract_formants",
    "FeatureExtractor",
    "extract_features",
    "load_feature_cache",
    "save_feature_cache",
]
