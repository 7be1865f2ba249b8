"""Rate-of-change losses: scale-free note movement on mel matrices.

f_scale exponentiates a min-max normalization, f_rate applies it to first
differences along time, and mel_rate_loss compares f_rate images of ground
truth and predictions. Because differencing removes shifts and the min-max
normalization removes positive scaling, the comparison is invariant to the
key the notes are sung in.
"""

import torch

DEGENERATE_RANGE = 1e-8


def f_scale(x):
    """exp of min-max normalization along the last axis.

    A degenerate range (max - min below 1e-8) maps to all ones, the
    continuous limit of exp(0).
    """
    x = torch.as_tensor(x)
    if x.shape[-1] == 0:
        raise ValueError("f_scale needs a nonempty sequence")
    lo = x.min(dim=-1, keepdim=True).values
    hi = x.max(dim=-1, keepdim=True).values
    rng = hi - lo
    safe = torch.where(rng < DEGENERATE_RANGE, torch.ones_like(rng), rng)
    normed = torch.where(rng < DEGENERATE_RANGE,
                         torch.zeros_like(x), (x - lo) / safe)
    return torch.exp(normed)


def f_rate(x):
    """f_scale of first differences along the last axis."""
    x = torch.as_tensor(x)
    if x.shape[-1] < 2:
        raise ValueError("f_rate needs at least 2 steps along time")
    return f_scale(x[..., 1:] - x[..., :-1])


def _item_rate_loss(mel, mel_dec, mel_post, valid):
    # valid: (T,) bool; frames are dropped before differencing
    if int(valid.sum()) < 2:
        return None
    gt = f_rate(mel[:, valid])
    dec = f_rate(mel_dec[:, valid])
    post = f_rate(mel_post[:, valid])
    return (gt - dec).abs().mean() + (gt - post).abs().mean()


def mel_rate_loss(mel, mel_dec, mel_post, mask=None):
    """L1 between f_rate of ground truth and of both decoder outputs.

    f_rate runs per mel bin along time. Accepts (80, T) or batched
    (B, 80, T) input with an optional (T,) / (B, T) frame mask; items with
    fewer than two valid frames contribute zero.
    """
    mel = torch.as_tensor(mel)
    mel_dec = torch.as_tensor(mel_dec)
    mel_post = torch.as_tensor(mel_post)
    if mel.dim() == 2:
        mel, mel_dec, mel_post = mel[None], mel_dec[None], mel_post[None]
        mask = None if mask is None else torch.as_tensor(mask)[None]
    b, _, t = mel.shape
    if mask is None:
        mask = torch.ones(b, t, dtype=torch.bool, device=mel.device)

    terms = []
    for i in range(b):
        item = _item_rate_loss(mel[i], mel_dec[i], mel_post[i], mask[i])
        terms.append(item if item is not None
                     else mel.new_zeros(()))
    return torch.stack(terms).mean()
