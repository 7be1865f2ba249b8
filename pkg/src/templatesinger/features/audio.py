"""Waveform container, STFT framing and the 80-bin log-mel front end."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window


class AudioTooShortError(ValueError):
    pass


@dataclass
class Waveform:
    """Mono audio samples in [-1, 1] with their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("waveform must be mono (1-D)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    @classmethod
    def read(cls, path):
        sr, data = wavfile.read(path)
        data = np.asarray(data)
        if data.ndim == 2:  # downmix
            data = data.mean(axis=1)
        if data.dtype.kind == "i":
            data = data / float(np.iinfo(data.dtype).max)
        elif data.dtype.kind == "u":
            info = np.iinfo(data.dtype)
            data = (data.astype(np.float64) - (info.max + 1) / 2) / ((info.max + 1) / 2)
        return cls(np.clip(data.astype(np.float64), -1.0, 1.0), int(sr))

    def write(self, path):
        pcm = np.clip(self.samples, -1.0, 1.0)
        wavfile.write(path, self.sample_rate, (pcm * 32767.0).astype(np.int16))


@dataclass
class MelConfig:
    sample_rate: int = 22050
    n_fft: int = 1024
    win_length: int = 1024
    hop_length: int = 256
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    amp_floor: float = 1e-5  # magnitudes clamped here before the log

    @property
    def log_floor(self):
        """Value every bin takes on silence."""
        return math.log(self.amp_floor)


def num_frames(n_samples, hop_length):
    return int(math.ceil(n_samples / hop_length))


def frame_signal(x, win_length, hop_length, n_frames=None):
    """Slice ``x`` into centered frames: frame t covers t*hop +- win/2.

    Returns an (n_frames, win_length) array. The signal is reflect-padded so
    the frame count is exactly ceil(len(x)/hop) unless overridden.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < win_length:
        raise AudioTooShortError("audio too short: %d samples < window %d" % (len(x), win_length))
    if n_frames is None:
        n_frames = num_frames(len(x), hop_length)
    half = win_length // 2
    needed = (n_frames - 1) * hop_length + win_length
    pad_right = max(0, needed - (len(x) + half))
    padded = np.pad(x, (half, pad_right), mode="reflect")
    starts = np.arange(n_frames) * hop_length
    idx = starts[:, None] + np.arange(win_length)[None, :]
    return padded[idx]


def stft(x, cfg: MelConfig, n_frames=None):
    """Magnitude-and-phase STFT, (1 + n_fft/2, T) complex."""
    frames = frame_signal(x, cfg.win_length, cfg.hop_length, n_frames)
    window = get_window("hann", cfg.win_length, fftbins=True)
    spec = np.fft.rfft(frames * window, n=cfg.n_fft, axis=1)
    return spec.T


def istft(spec, cfg: MelConfig, length=None):
    """Inverse STFT by windowed overlap-add with squared-window normalization."""
    spec = np.asarray(spec)
    n_bins, t = spec.shape
    window = get_window("hann", cfg.win_length, fftbins=True)
    frames = np.fft.irfft(spec.T, n=cfg.n_fft, axis=1)[:, : cfg.win_length]
    half = cfg.win_length // 2
    total = (t - 1) * cfg.hop_length + cfg.win_length
    out = np.zeros(total)
    norm = np.zeros(total)
    for i in range(t):
        s = i * cfg.hop_length
        out[s : s + cfg.win_length] += frames[i] * window
        norm[s : s + cfg.win_length] += window**2
    out = out / np.maximum(norm, 1e-10)
    out = out[half:]  # undo the centering pad
    if length is not None:
        if len(out) < length:
            out = np.pad(out, (0, length - len(out)))
        out = out[:length]
    return out


def hz_to_mel(f):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    mel = f / (200.0 / 3.0)
    log_region = f >= 1000.0
    mel = np.where(log_region, 15.0 + np.log(np.maximum(f, 1e-10) / 1000.0) / (np.log(6.4) / 27.0), mel)
    return mel


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    f = m * (200.0 / 3.0)
    log_region = m >= 15.0
    f = np.where(log_region, 1000.0 * np.exp((np.log(6.4) / 27.0) * (m - 15.0)), f)
    return f


def mel_filterbank(cfg: MelConfig):
    """Triangular Slaney-normalized filterbank, (n_mels, 1 + n_fft/2)."""
    n_bins = 1 + cfg.n_fft // 2
    fft_freqs = np.arange(n_bins) * cfg.sample_rate / cfg.n_fft
    mel_pts = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((cfg.n_mels, n_bins))
    for i in range(cfg.n_mels):
        lo, center, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        up = (fft_freqs - lo) / max(center - lo, 1e-10)
        down = (hi - fft_freqs) / max(hi - center, 1e-10)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
        fb[i] *= 2.0 / (hi - lo)  # slaney area normalization
    return fb


@dataclass
class MelSpectrogram:
    """80 x T log-mel magnitude matrix."""

    bins: np.ndarray

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.float64)
        if self.bins.ndim != 2:
            raise ValueError("mel bins must be 2-D")
        if not np.all(np.isfinite(self.bins)):
            raise ValueError("mel bins contain non-finite entries")

    @property
    def n_frames(self):
        return self.bins.shape[1]


def compute_mel(w: Waveform, cfg: MelConfig) -> MelSpectrogram:
    """Log-mel magnitudes with T = ceil(len(samples)/hop) frames."""
    if cfg.sample_rate != w.sample_rate:
        raise ValueError("waveform rate %d != config rate %d" % (w.sample_rate, cfg.sample_rate))
    mag = np.abs(stft(w.samples, cfg))
    mel = mel_filterbank(cfg) @ mag
    return MelSpectrogram(np.log(np.maximum(mel, cfg.amp_floor)))


def extract_rms(w: Waveform, cfg: MelConfig):
    """Per-frame root-mean-square amplitude on the mel framing grid.

    Returns a FrameTrack whose mask is all-true (intensity is defined on
    every frame).
    """
    from .tracks import FrameTrack

    frames = frame_signal(w.samples, cfg.win_length, cfg.hop_length)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    return FrameTrack(
        values=rms,
        hop_seconds=cfg.hop_length / cfg.sample_rate,
        voiced_mask=np.ones(len(rms), dtype=bool),
    )
