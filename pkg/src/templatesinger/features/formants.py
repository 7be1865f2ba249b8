"""Formant tracking by LPC root finding at a reduced analysis rate."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window, resample_poly

from .audio import num_frames
from .pitch import PitchConfig, pitch_analysis
from .tracks import FrameTrack


@dataclass
class FormantConfig:
    sample_rate: int = 22050
    analysis_rate: int = 10000
    lpc_order: int = 12
    hop_length: int = 256  # at the input rate, so frames line up with mel
    win_seconds: float = 0.025
    preemphasis: float = 0.97
    min_formant_hz: float = 90.0
    max_formant_hz: float = 4900.0
    max_bandwidth_hz: float = 600.0


def levinson_durbin(r, order):
    """Solve the Toeplitz normal equations for the prediction-error filter
    A(z) = 1 + sum a_k z^-k; returns its p+1 coefficients (a[0] == 1)."""
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    if err <= 0:
        return a
    for i in range(1, order + 1):
        acc = np.dot(a[:i], r[i:0:-1])
        k = -acc / err
        a[: i + 1] = a[: i + 1] + k * a[: i + 1][::-1]
        err *= 1.0 - k * k
        if err <= 0:
            break
    return a


def lpc_formants(frame, order, rate, n_keep, cfg: FormantConfig):
    """Formant frequencies (Hz) of one pre-emphasized, windowed frame."""
    r = np.correlate(frame, frame, mode="full")[len(frame) - 1 : len(frame) + order]
    if r[0] < 1e-12:
        return np.zeros(n_keep)
    r = r / r[0]
    r[0] *= 1.0 + 1e-9  # white-noise floor, keeps the recursion stable
    a = levinson_durbin(r, order)
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 1e-8]
    freqs = np.angle(roots) * rate / (2.0 * math.pi)
    bws = -np.log(np.maximum(np.abs(roots), 1e-12)) * rate / math.pi
    keep = (
        (freqs > cfg.min_formant_hz)
        & (freqs < cfg.max_formant_hz)
        & (bws < cfg.max_bandwidth_hz)
    )
    freqs = np.sort(freqs[keep])[:n_keep]
    out = np.zeros(n_keep)
    out[: len(freqs)] = freqs
    return out


def formant_tracks(samples, cfg: FormantConfig, voiced_mask):
    """Four FrameTracks (F1..F4) on the mel framing grid."""
    t = num_frames(len(samples), cfg.hop_length)
    x = resample_poly(np.asarray(samples, dtype=np.float64), cfg.analysis_rate, cfg.sample_rate)
    x = np.append(x[0], x[1:] - cfg.preemphasis * x[:-1])

    win = int(round(cfg.win_seconds * cfg.analysis_rate))
    window = get_window("hann", win, fftbins=False)
    half = win // 2
    padded = np.pad(x, (half, win), mode="reflect" if len(x) > win else "constant")
    rate_ratio = cfg.analysis_rate / cfg.sample_rate

    voiced_mask = np.asarray(voiced_mask, dtype=bool)
    if len(voiced_mask) != t:
        raise ValueError("voiced mask length %d != frame count %d" % (len(voiced_mask), t))

    values = np.zeros((4, t))
    for i in range(t):
        if not voiced_mask[i]:
            continue
        start = int(round(i * cfg.hop_length * rate_ratio))
        frame = padded[start : start + win]
        frame = (frame - frame.mean()) * window
        values[:, i] = lpc_formants(frame, cfg.lpc_order, cfg.analysis_rate, 4, cfg)

    hop_seconds = cfg.hop_length / cfg.sample_rate
    return tuple(FrameTrack(values[k], hop_seconds, voiced_mask.copy()) for k in range(4))


def extract_formants(w, cfg: FormantConfig = None, voiced_mask=None):
    """F1-F4 per voiced frame; unvoiced frames carry zeros."""
    cfg = cfg or FormantConfig(sample_rate=w.sample_rate)
    if voiced_mask is None:
        _, _, voiced_mask = pitch_analysis(
            w.samples, PitchConfig(sample_rate=w.sample_rate, hop_length=cfg.hop_length)
        )
    return formant_tracks(w.samples, cfg, voiced_mask)
