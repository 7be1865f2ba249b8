"""Synthetic toy corpus: tones plus noise-shaped "speech".

Small deterministic corpora for demos, overfit checks, and end-to-end
smoke tests. Each utterance is a few voiced syllables (harmonic pulse
trains through vowel-like resonances, with vibrato) separated by short
gaps, written in the standard corpus layout.
"""

import os

import numpy as np
from scipy.signal import lfilter

from ..features.audio import Waveform

SYLLABLES = ("la", "da", "na", "mi", "so", "re")
VOWEL_SHAPES = {
    "a": ((800, 1200, 2500), (90, 110, 160)),
    "i": ((300, 2300, 3000), (60, 100, 170)),
    "o": ((450, 850, 2400), (70, 90, 150)),
    "e": ((500, 1800, 2600), (70, 100, 160)),
}


def _resonator(x, freq, bw, sr):
    r = np.exp(-np.pi * bw / sr)
    theta = 2 * np.pi * freq / sr
    return lfilter([1 - r], [1, -2 * r * np.cos(theta), r * r], x)


def _syllable(rng, sr, f0, vowel, dur):
    n = int(sr * dur)
    t = np.arange(n) / sr
    # gentle vibrato and a slight downward glide
    inst = f0 * (1 + 0.015 * np.sin(2 * np.pi * 5.5 * t)) * (1 - 0.03 * t / dur)
    phase = 2 * np.pi * np.cumsum(inst) / sr
    src = np.zeros(n)
    period = int(round(sr / f0))
    src[::period] = 1.0
    formants, bws = VOWEL_SHAPES[vowel]
    voiced = sum(g * _resonator(src, f, b, sr)
                 for g, f, b in zip((1.0, 0.7, 0.4), formants, bws))
    voiced = voiced / (np.max(np.abs(voiced)) + 1e-9)
    tone = 0.3 * np.sin(phase)
    breath = 0.01 * lfilter([1.0], [1.0, -0.95], rng.normal(0, 1, n))
    env = np.minimum(1.0, np.minimum(t / 0.03, (dur - t) / 0.05)).clip(0)
    return (0.5 * voiced + tone + breath) * env


def generate_toy_corpus(root, n_speakers=2, utterances_per_speaker=4,
                        seed=0, sr=22050):
    """Write a deterministic toy corpus; returns the list of wav paths."""
    rng = np.random.default_rng(seed)
    base_f0 = [140.0, 225.0, 180.0, 260.0]
    paths = []
    for s in range(n_speakers):
        speaker = "spk%d" % s
        spk_dir = os.path.join(root, speaker)
        os.makedirs(spk_dir, exist_ok=True)
        f0_base = base_f0[s % len(base_f0)]
        for u in range(utterances_per_speaker):
            n_syll = int(rng.integers(2, 5))
            sylls = [SYLLABLES[int(rng.integers(len(SYLLABLES)))]
                     for _ in range(n_syll)]
            pieces = []
            for syll in sylls:
                vowel = syll[1] if syll[1] in VOWEL_SHAPES else "a"
                f0 = f0_base * 2 ** (rng.integers(-2, 3) / 12.0)
                dur = 0.25 + 0.1 * rng.random()
                pieces.append(_syllable(rng, sr, f0, vowel, dur))
                pieces.append(np.zeros(int(sr * 0.05)))
            samples = np.concatenate(pieces[:-1])
            samples = 0.6 * samples / (np.max(np.abs(samples)) + 1e-9)
            utt = "utt%02d" % u
            wav_path = os.path.join(spk_dir, utt + ".wav")
            Waveform(samples, sr).write(wav_path)
            with open(os.path.join(spk_dir, utt + ".txt"), "w") as fh:
                fh.write(" ".join(sylls) + "\n")
            paths.append(wav_path)
    return paths
