"""Per-utterance feature cache: a versioned npz container.

Layout (all arrays little-endian):
    version        int, currently 1
    tracks         float32 (9, T), rows in FEATURE_NAMES order
    masks          bool (9, T)
    mel            float32 (80, T)
    hop_length     int
    sample_rate    int
    hop_seconds    float
    speaker_id     str
    utterance_id   str
"""

import numpy as np

from .audio import MelSpectrogram
from .tracks import FEATURE_NAMES, FeatureSet, FrameTrack

CACHE_VERSION = 1


def save_feature_cache(path, fs: FeatureSet, mel: MelSpectrogram, hop_length, sample_rate,
                       speaker_id, utterance_id):
    if fs.n_frames != mel.n_frames:
        raise ValueError("feature set length %d != mel length %d" % (fs.n_frames, mel.n_frames))
    np.savez(
        path,
        version=np.int64(CACHE_VERSION),
        tracks=fs.to_matrix().astype(np.float32),
        masks=fs.mask_matrix(),
        mel=mel.bins.astype(np.float32),
        hop_length=np.int64(hop_length),
        sample_rate=np.int64(sample_rate),
        hop_seconds=np.float64(hop_length / sample_rate),
        speaker_id=np.str_(speaker_id),
        utterance_id=np.str_(utterance_id),
    )


def load_feature_cache(path):
    """Returns (FeatureSet, MelSpectrogram, meta dict)."""
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"])
        if version != CACHE_VERSION:
            raise ValueError("unsupported feature cache version %d" % version)
        tracks_m = z["tracks"]
        masks = z["masks"]
        mel = z["mel"]
        meta = {
            "hop_length": int(z["hop_length"]),
            "sample_rate": int(z["sample_rate"]),
            "speaker_id": str(z["speaker_id"]),
            "utterance_id": str(z["utterance_id"]),
        }
        hop_s = float(z["hop_seconds"])
    tracks = {
        name: FrameTrack(tracks_m[i], hop_s, masks[i]) for i, name in enumerate(FEATURE_NAMES)
    }
    return FeatureSet(tracks), MelSpectrogram(mel), meta
