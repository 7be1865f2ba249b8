"""Loaded examples and padded, masked training batches.

Feature contours are normalized per speaker at load time (caches hold raw
values so stats can be pooled after extraction). Batches pad mel time to the
next multiple of the decoder group size r; gate targets are 1 at and after
each item's last valid frame.
"""

import dataclasses

import numpy as np
import torch

from ..features import MelConfig, normalize_contours
from ..features.cache import load_feature_cache

MEL_PAD_VALUE = float(MelConfig().log_floor)


@dataclasses.dataclass
class Example:
    utterance_id: str
    speaker_index: int
    token_ids: np.ndarray      # (N,) int64
    mel: np.ndarray            # (80, T)
    features: np.ndarray       # (9, T) normalized contours
    feature_mask: np.ndarray   # (9, T) bool

    @property
    def n_frames(self):
        return self.mel.shape[1]


def load_example(record, table):
    feats, mel, meta = load_feature_cache(record.cache_path)
    stats = table.stats_of(record.speaker_id)
    normed = normalize_contours(feats, stats)
    return Example(
        utterance_id=record.id,
        speaker_index=table.index_of(record.speaker_id),
        token_ids=np.asarray(record.token_ids, dtype=np.int64),
        mel=mel.bins.astype(np.float64),
        features=normed.to_matrix(),
        feature_mask=normed.mask_matrix(),
    )


@dataclasses.dataclass
class Batch:
    tokens: torch.Tensor        # (B, N_max) int64, 0 padded
    text_mask: torch.Tensor     # (B, N_max) bool
    text_lengths: torch.Tensor  # (B,) int64
    mels: torch.Tensor          # (B, 80, T_max) float32
    frame_mask: torch.Tensor    # (B, T_max) bool
    mel_lengths: torch.Tensor   # (B,) int64
    features: torch.Tensor      # (B, 9, T_max) float32
    feature_mask: torch.Tensor  # (B, 9, T_max) bool
    gate_targets: torch.Tensor  # (B, T_max) float32
    speaker_ids: torch.Tensor   # (B,) int64

    @property
    def size(self):
        return self.tokens.shape[0]


def padded_length(t, r):
    return ((t + r - 1) // r) * r


def make_batch(examples, r):
    """Collate loaded examples into one padded batch."""
    if not examples:
        raise ValueError("cannot batch zero examples")
    b = len(examples)
    text_lens = [len(e.token_ids) for e in examples]
    mel_lens = [e.n_frames for e in examples]
    n_max = max(max(text_lens), 1)
    t_max = padded_length(max(mel_lens), r)

    tokens = torch.zeros(b, n_max, dtype=torch.int64)
    text_mask = torch.zeros(b, n_max, dtype=torch.bool)
    mels = torch.full((b, 80, t_max), MEL_PAD_VALUE, dtype=torch.float32)
    frame_mask = torch.zeros(b, t_max, dtype=torch.bool)
    features = torch.zeros(b, 9, t_max, dtype=torch.float32)
    feature_mask = torch.zeros(b, 9, t_max, dtype=torch.bool)
    gate = torch.zeros(b, t_max, dtype=torch.float32)

    for i, e in enumerate(examples):
        n, t = text_lens[i], mel_lens[i]
        if n:
            tokens[i, :n] = torch.from_numpy(e.token_ids)
            text_mask[i, :n] = True
        mels[i, :, :t] = torch.from_numpy(e.mel).float()
        frame_mask[i, :t] = True
        features[i, :, :t] = torch.from_numpy(e.features).float()
        feature_mask[i, :, :t] = torch.from_numpy(e.feature_mask)
        gate[i, t - 1:] = 1.0

    return Batch(
        tokens=tokens,
        text_mask=text_mask,
        text_lengths=torch.tensor(text_lens, dtype=torch.int64),
        mels=mels,
        frame_mask=frame_mask,
        mel_lengths=torch.tensor(mel_lens, dtype=torch.int64),
        features=features,
        feature_mask=feature_mask,
        gate_targets=gate,
        speaker_ids=torch.tensor([e.speaker_index for e in examples],
                                 dtype=torch.int64),
    )


def sample_batch_indices(mel_lengths, batch_size, seed, step, bucket=True):
    """Stateless per-step batch selection, seedable for exact resume.

    With bucketing, items are drawn as a contiguous run of the
    length-sorted order starting at a random offset, so batch members have
    similar lengths and padding waste stays low.
    """
    n = len(mel_lengths)
    if n == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng([int(seed), int(step)])
    size = min(batch_size, n)
    if not bucket or n <= size:
        return rng.choice(n, size=size, replace=n < size)
    order = np.argsort(np.asarray(mel_lengths), kind="stable")
    start = int(rng.integers(0, n - size + 1))
    picked = order[start:start + size]
    return rng.permutation(picked)
