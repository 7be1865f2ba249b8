"""Objective evaluation of generated singing against references.

Two metrics: pitch accuracy as the RMSE between median-normalized f0
contours (transposition-invariant by construction), and speaker similarity
as the cosine between mean speaker-head embeddings, reported as the median
across speakers. The speaker head is the model's own training-time
embedding extractor, not an external verification system, and the report
labels it that way.
"""

import dataclasses
import os
import statistics

import numpy as np
import torch

from .adversarial import TrainingHeads
from .features import FrameTrack, align_to_mel


def _track_parts(track):
    if isinstance(track, FrameTrack):
        return track.values, track.voiced_mask
    values = np.asarray(track, dtype=np.float64)
    return values, values > 0


def mf0_rmse(f0_gen, f0_ref):
    """RMSE between median-normalized pitch contours.

    The longer track is nearest-neighbor resampled to the shorter one and
    only mutually voiced frames are compared; each contour is divided by
    its own median over those frames, so uniform transposition of either
    side cancels.
    """
    gen, gen_mask = _track_parts(f0_gen)
    ref, ref_mask = _track_parts(f0_ref)
    n = min(len(gen), len(ref))
    if n == 0:
        raise ValueError("no voiced overlap between the pitch tracks")
    gen, gen_mask = align_to_mel(gen, n), align_to_mel(gen_mask, n)
    ref, ref_mask = align_to_mel(ref, n), align_to_mel(ref_mask, n)

    both = gen_mask & ref_mask & (gen > 0) & (ref > 0)
    if not both.any():
        raise ValueError("no voiced overlap between the pitch tracks")
    g = gen[both] / np.median(gen[both])
    r = ref[both] / np.median(ref[both])
    return float(np.sqrt(np.mean((g - r) ** 2)))


def _mean_embedding(mels, speaker_head):
    embs = []
    for mel in mels:
        x = torch.as_tensor(np.asarray(mel), dtype=torch.float32)
        with torch.no_grad():
            embs.append(speaker_head(x[None])[0])
    return torch.stack(embs).mean(dim=0)


def speaker_cos(gen_mels, ref_mels, speaker_head, speakers=None):
    """Median across speakers of cos(mean gen embedding, mean ref embedding).

    gen_mels and ref_mels are parallel lists of (80, T) matrices; speakers
    optionally labels each pair for grouping (one group otherwise).
    """
    if len(gen_mels) != len(ref_mels):
        raise ValueError("generated and reference lists differ in length")
    if not gen_mels:
        raise ValueError("empty evaluation group")
    if speakers is None:
        speakers = ["all"] * len(gen_mels)
    if len(speakers) != len(gen_mels):
        raise ValueError("speaker labels do not match the mel lists")

    by_speaker = {}
    for spk, g, r in zip(speakers, gen_mels, ref_mels):
        by_speaker.setdefault(spk, ([], []))
        by_speaker[spk][0].append(g)
        by_speaker[spk][1].append(r)

    cosines = []
    for spk in sorted(by_speaker):
        gens, refs = by_speaker[spk]
        a = _mean_embedding(gens, speaker_head)
        b = _mean_embedding(refs, speaker_head)
        cosines.append(float(torch.nn.functional.cosine_similarity(
            a[None], b[None]).squeeze()))
    return statistics.median(cosines)


@dataclasses.dataclass
class EvalReport:
    mf0_rmse: float
    spk_cos: float
    per_utterance: list            # dicts: id, speaker, mf0_rmse, frames
    n_voiced_gen: int
    n_voiced_ref: int

    def __post_init__(self):
        if self.mf0_rmse < 0:
            raise ValueError("mf0_rmse cannot be negative")

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        lines = [
            "evaluation report",
            "=================",
            "mF0 RMSE (median-normalized): %.6f" % self.mf0_rmse,
            "speaker cosine (internal speaker head, not an external "
            "verification model): %.6f" % self.spk_cos,
            "voiced frames: generated=%d reference=%d"
            % (self.n_voiced_gen, self.n_voiced_ref),
            "",
            "per utterance:",
        ]
        for row in self.per_utterance:
            rmse = ("%.6f" % row["mf0_rmse"]) if row["mf0_rmse"] is not None \
                else "no voiced overlap"
            lines.append("  %-24s speaker=%-10s mf0_rmse=%s voiced=%d/%d"
                         % (row["id"], row["speaker"], rmse,
                            row["voiced_gen"], row["voiced_ref"]))
        return "\n".join(lines) + "\n"


def load_speaker_head(checkpoint):
    """The trained speaker head from a checkpoint payload or path."""
    from .training import load_checkpoint

    payload = checkpoint if isinstance(checkpoint, dict) \
        else load_checkpoint(checkpoint)
    heads = TrainingHeads(
        speaker_dim=payload["model_config"]["speaker_dim"])
    heads.load_state_dict(payload["heads"])
    heads.eval()
    return heads.speaker_head


def _speaker_label(name):
    return name.split("_", 1)[0] if "_" in name else "all"


def evaluate_dirs(gen_dir, ref_dir, checkpoint):
    """Compare matching wav files of two directories.

    Files pair by basename; the part before the first underscore is the
    speaker label. Pitch tracks come from the standard extractor; speaker
    embeddings come from the checkpoint's speaker head applied to the mel
    of each file. Utterances with no voiced overlap are reported but
    excluded from the aggregate.
    """
    from .features import FeatureExtractor, MelConfig, Waveform, compute_mel
    from .features.pitch import PitchConfig, extract_f0

    names = sorted(set(os.listdir(gen_dir)) & set(os.listdir(ref_dir)))
    names = [n for n in names if n.endswith(".wav")]
    if not names:
        raise ValueError("no matching wav files between %s and %s"
                         % (gen_dir, ref_dir))

    speaker_head = load_speaker_head(checkpoint)
    rows, rmses = [], []
    gen_mels, ref_mels, labels = [], [], []
    voiced_gen = voiced_ref = 0
    for name in names:
        wg = Waveform.read(os.path.join(gen_dir, name))
        wr = Waveform.read(os.path.join(ref_dir, name))
        fg = extract_f0(wg, PitchConfig(sample_rate=wg.sample_rate))
        fr = extract_f0(wr, PitchConfig(sample_rate=wr.sample_rate))
        voiced_gen += int(fg.voiced_mask.sum())
        voiced_ref += int(fr.voiced_mask.sum())
        try:
            rmse = mf0_rmse(fg, fr)
            rmses.append(rmse)
        except ValueError:
            rmse = None
        label = _speaker_label(name)
        gen_mels.append(compute_mel(wg, MelConfig(sample_rate=wg.sample_rate)).bins)
        ref_mels.append(compute_mel(wr, MelConfig(sample_rate=wr.sample_rate)).bins)
        labels.append(label)
        rows.append({"id": name, "speaker": label, "mf0_rmse": rmse,
                     "voiced_gen": int(fg.voiced_mask.sum()),
                     "voiced_ref": int(fr.voiced_mask.sum())})

    if not rmses:
        raise ValueError("no voiced overlap in any utterance pair")
    return EvalReport(
        mf0_rmse=float(np.mean(rmses)),
        spk_cos=speaker_cos(gen_mels, ref_mels, speaker_head, labels),
        per_utterance=rows,
        n_voiced_gen=voiced_gen,
        n_voiced_ref=voiced_ref,
    )
