"""Autocorrelation pitch and harmonicity analysis.

Praat-comparable method without the external dependency: per frame, the
normalized autocorrelation is divided by the analysis window's own
autocorrelation, the best peak in the pitch lag range is refined by
parabolic interpolation, and its height doubles as the voicing strength
and the harmonics-to-noise estimate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .audio import frame_signal
from .tracks import FrameTrack

HNR_CLAMP_DB = (-20.0, 60.0)


@dataclass
class PitchConfig:
    sample_rate: int = 22050
    floor_hz: float = 70.0
    ceiling_hz: float = 800.0
    hop_length: int = 256
    voicing_threshold: float = 0.45
    silence_rms: float = 1e-4
    window_periods: float = 3.0  # window spans this many floor-pitch periods

    @property
    def win_length(self):
        return int(math.ceil(self.window_periods * self.sample_rate / self.floor_hz))

    @property
    def hop_seconds(self):
        return self.hop_length / self.sample_rate


def _autocorr(frames, n_fft):
    spec = np.fft.rfft(frames, n=n_fft, axis=1)
    return np.fft.irfft(np.abs(spec) ** 2, n=n_fft, axis=1)


def _parabolic(y_prev, y0, y_next):
    denom = y_prev - 2.0 * y0 + y_next
    delta = np.where(np.abs(denom) > 1e-12, 0.5 * (y_prev - y_next) / np.where(denom == 0, 1.0, denom), 0.0)
    delta = np.clip(delta, -0.5, 0.5)
    peak = y0 - 0.25 * (y_prev - y_next) * delta
    return delta, peak


def pitch_analysis(samples, cfg: PitchConfig):
    """Per-frame (f0_hz, peak_strength, voiced_mask).

    peak_strength is the window-corrected normalized autocorrelation at the
    detected pitch lag, in [0, 1); it is the voicing statistic and feeds the
    harmonicity estimate.
    """
    win = cfg.win_length
    frames = frame_signal(samples, win, cfg.hop_length)
    frames = frames - frames.mean(axis=1, keepdims=True)
    rms = np.sqrt(np.mean(frames**2, axis=1))

    window = get_window("hann", win, fftbins=False)
    n_fft = 1 << int(math.ceil(math.log2(2 * win)))
    r_sig = _autocorr(frames * window, n_fft)[:, :win]
    r_win = _autocorr(window[None, :], n_fft)[0, :win]

    with np.errstate(divide="ignore", invalid="ignore"):
        r = r_sig / np.maximum(r_sig[:, :1], 1e-20)
        r = r / np.maximum(r_win / r_win[0], 1e-6)

    lag_min = max(2, int(math.floor(cfg.sample_rate / cfg.ceiling_hz)))
    lag_max = min(win - 2, int(math.ceil(cfg.sample_rate / cfg.floor_hz)))

    n = frames.shape[0]
    f0 = np.zeros(n)
    strength = np.zeros(n)
    lags = np.arange(lag_min, lag_max + 1)
    seg = r[:, lag_min : lag_max + 1]
    is_peak = (seg >= r[:, lag_min - 1 : lag_max]) & (seg >= r[:, lag_min + 1 : lag_max + 2])
    candidates = np.where(is_peak, seg, -np.inf)
    best = np.argmax(candidates, axis=1)
    has_peak = np.isfinite(candidates[np.arange(n), best])

    best_lag = lags[best]
    y0 = r[np.arange(n), best_lag]
    y_prev = r[np.arange(n), best_lag - 1]
    y_next = r[np.arange(n), best_lag + 1]
    delta, peak = _parabolic(y_prev, y0, y_next)
    refined_lag = best_lag + delta

    valid = has_peak & (rms > cfg.silence_rms)
    strength[valid] = np.clip(peak[valid], 0.0, 1.0 - 1e-9)
    f0_all = cfg.sample_rate / np.maximum(refined_lag, 1.0)
    in_range = (f0_all >= cfg.floor_hz * 0.9) & (f0_all <= cfg.ceiling_hz * 1.1)
    voiced = valid & in_range & (strength > cfg.voicing_threshold)
    f0[voiced] = f0_all[voiced]
    strength[~valid] = 0.0
    return f0, strength, voiced


def extract_f0(w, cfg: PitchConfig = None) -> FrameTrack:
    """Fundamental frequency per frame; unvoiced frames are masked and zero."""
    cfg = cfg or PitchConfig(sample_rate=w.sample_rate)
    f0, _, voiced = pitch_analysis(w.samples, cfg)
    values = np.where(voiced, f0, 0.0)
    return FrameTrack(values, cfg.hop_seconds, voiced)


def extract_hnr(w, cfg: PitchConfig = None) -> FrameTrack:
    """Harmonics-to-noise ratio in dB: 10*log10(r / (1 - r)) at the pitch lag.

    Clamped to [-20, 60] dB; unvoiced frames carry 0.
    """
    cfg = cfg or PitchConfig(sample_rate=w.sample_rate)
    _, strength, voiced = pitch_analysis(w.samples, cfg)
    values = np.zeros_like(strength)
    r = np.clip(strength[voiced], 1e-12, 1.0 - 1e-12)
    values[voiced] = np.clip(10.0 * np.log10(r / (1.0 - r)), *HNR_CLAMP_DB)
    return FrameTrack(values, cfg.hop_seconds, voiced)
