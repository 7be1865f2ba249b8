"""Cepstral peak prominence on the pitch framing grid."""

import math

import numpy as np
from scipy.signal import get_window

from .audio import frame_signal
from .pitch import PitchConfig, pitch_analysis
from .tracks import FrameTrack


def cpp_track(samples, cfg: PitchConfig, voiced_mask):
    """Per-frame CPP in dB given a precomputed voicing mask.

    The real cepstrum of the dB magnitude spectrum is searched for its peak
    in the pitch-period quefrency range; CPP is the peak height above a
    linear regression fit over that range.
    """
    win = cfg.win_length
    frames = frame_signal(samples, win, cfg.hop_length)
    frames = frames - frames.mean(axis=1, keepdims=True)
    window = get_window("hann", win, fftbins=False)
    n_fft = 1 << int(math.ceil(math.log2(2 * win)))

    spec_db = 20.0 * np.log10(np.maximum(np.abs(np.fft.rfft(frames * window, n=n_fft, axis=1)), 1e-8))
    cep = np.fft.irfft(spec_db, n=n_fft, axis=1)

    q_min = max(2, int(math.floor(cfg.sample_rate / cfg.ceiling_hz)))
    q_max = min(n_fft // 2 - 1, int(math.ceil(cfg.sample_rate / cfg.floor_hz)))
    quefrencies = np.arange(q_min, q_max + 1)
    seg = cep[:, q_min : q_max + 1]

    peak_idx = np.argmax(seg, axis=1)
    peak_val = seg[np.arange(len(seg)), peak_idx]
    peak_q = quefrencies[peak_idx]

    # least-squares trend over the searched quefrency range, per frame
    q = quefrencies.astype(np.float64)
    q_mean = q.mean()
    q_var = np.mean((q - q_mean) ** 2)
    seg_mean = seg.mean(axis=1)
    slope = np.mean(seg * (q - q_mean), axis=1) / q_var
    trend_at_peak = seg_mean + slope * (peak_q - q_mean)

    values = np.where(voiced_mask, peak_val - trend_at_peak, 0.0)
    return FrameTrack(values, cfg.hop_seconds, np.asarray(voiced_mask, dtype=bool))


def extract_cpp(w, cfg: PitchConfig = None) -> FrameTrack:
    cfg = cfg or PitchConfig(sample_rate=w.sample_rate)
    _, _, voiced = pitch_analysis(w.samples, cfg)
    return cpp_track(w.samples, cfg, voiced)
