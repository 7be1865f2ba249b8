"""Remaining training objectives: spectrogram regression, stop token,
feature reconstruction, window classification, speaker similarity, and
attention guidance.

Every masked loss reduces per item over valid positions first and then
averages over the batch, so extra padding on any item can never move a
loss value.
"""

import torch

from .rates import f_rate
from .sdtw import soft_dtw_batch

EPS = 1e-7


def _as_batched(x, mask, feature_dims):
    x = torch.as_tensor(x)
    if x.dim() == feature_dims:
        x = x[None]
        mask = None if mask is None else torch.as_tensor(mask)[None]
    if mask is None:
        mask = torch.ones(x.shape[0], x.shape[-1], dtype=torch.bool,
                          device=x.device)
    return x, torch.as_tensor(mask)


def mel_loss(mel, mel_dec, mel_post, mask=None):
    """Sum of the two L1 regression terms: (target, decoder output) and
    (target, post-net output), masked per item."""
    mel, mask = _as_batched(mel, mask, 2)
    mel_dec = torch.as_tensor(mel_dec)
    mel_post = torch.as_tensor(mel_post)
    if mel_dec.dim() == 2:
        mel_dec, mel_post = mel_dec[None], mel_post[None]
    terms = []
    for i in range(mel.shape[0]):
        v = mask[i]
        if int(v.sum()) == 0:
            terms.append(mel.new_zeros(()))
            continue
        gt = mel[i][:, v]
        terms.append((gt - mel_dec[i][:, v]).abs().mean()
                     + (gt - mel_post[i][:, v]).abs().mean())
    return torch.stack(terms).mean()


def gate_loss(gate_logits, gate_targets, mask=None):
    """Binary cross-entropy on stop-token logits.

    Logits may be per decoder step; they are repeated to frame rate when
    the target is r times longer.
    """
    gate_logits = torch.as_tensor(gate_logits)
    gate_targets = torch.as_tensor(gate_targets)
    if gate_logits.dim() == 1:
        gate_logits = gate_logits[None]
        gate_targets = gate_targets[None]
        mask = None if mask is None else torch.as_tensor(mask)[None]
    b, s = gate_logits.shape
    t = gate_targets.shape[1]
    if t != s:
        if t % s != 0:
            raise ValueError("gate target length %d not a multiple of %d"
                             % (t, s))
        gate_logits = gate_logits.repeat_interleave(t // s, dim=1)
    if mask is None:
        mask = torch.ones_like(gate_targets, dtype=torch.bool)
    bce = torch.nn.functional.binary_cross_entropy_with_logits(
        gate_logits, gate_targets.to(gate_logits.dtype), reduction="none")
    terms = []
    for i in range(b):
        v = mask[i]
        terms.append(bce[i][v].mean() if int(v.sum()) else bce.new_zeros(()))
    return torch.stack(terms).mean()


def reconstruction_loss(feats, decs, mask=None, gamma=0.1, band=0.2):
    """Length-normalized SoftDTW on each feature track and on its f_rate.

    feats, decs: (N, T) or (B, N, T) with tracks in fixed order (F0, HNR,
    RMS). Each track contributes softdtw(values)/L + softdtw(f_rate)/L.
    """
    feats, mask = _as_batched(feats, mask, 2)
    decs = torch.as_tensor(decs)
    if decs.dim() == 2:
        decs = decs[None]
    terms = []
    for i in range(feats.shape[0]):
        v = mask[i]
        length = int(v.sum())
        if length == 0:
            terms.append(feats.new_zeros(()))
            continue
        gt = feats[i][:, v]   # (N, L): equal lengths, so one shared
        dec = decs[i][:, v]   # recursion covers all tracks
        item = soft_dtw_batch(gt, dec, gamma=gamma, band=band).sum() / length
        if length >= 2:
            item = item + soft_dtw_batch(f_rate(gt), f_rate(dec),
                                         gamma=gamma,
                                         band=band).sum() / length
        terms.append(item)
    return torch.stack(terms).mean()


def _bce_to_one(d):
    return -torch.log(torch.clamp(d, EPS, 1.0 - EPS))


def classification_loss(d_real, d_fake, conventional=False):
    """Window-classifier objective on mean sigmoid outputs.

    The default subtracts the two to-real cross-entropies, an unusual but
    deliberate form; conventional=True switches to the standard
    real-to-one plus fake-to-zero sum.
    """
    d_real = torch.as_tensor(d_real, dtype=torch.get_default_dtype()) \
        if not torch.is_tensor(d_real) else d_real
    d_fake = torch.as_tensor(d_fake, dtype=torch.get_default_dtype()) \
        if not torch.is_tensor(d_fake) else d_fake
    if conventional:
        fake = torch.clamp(d_fake, EPS, 1.0 - EPS)
        return _bce_to_one(d_real) - torch.log(1.0 - fake)
    return _bce_to_one(d_real) - _bce_to_one(d_fake)


def speaker_loss(x_spk, x_post):
    """One minus cosine similarity against the (frozen) speaker embedding.

    Gradient is blocked through x_spk so only the head output learns to
    match the embedding.
    """
    x_spk = torch.as_tensor(x_spk).detach()
    x_post = torch.as_tensor(x_post)
    if x_spk.dim() == 1:
        x_spk, x_post = x_spk[None], x_post[None]
    num = (x_spk * x_post).sum(dim=1)
    denom = torch.clamp(x_spk.norm(dim=1) * x_post.norm(dim=1), min=1e-8)
    return (1.0 - num / denom).mean()


def guided_attention_loss(alignment, text_lengths=None, step_lengths=None,
                          g=0.2):
    """Penalty for attention mass far from the text-time diagonal.

    alignment: (S, N) or (B, S, N) attention weights (decoder steps over
    memory positions). Each valid step contributes the weighted penalty
    sum over its valid memory positions; the result is the mean over
    valid steps, then over items.
    """
    alignment = torch.as_tensor(alignment)
    if alignment.dim() == 2:
        alignment = alignment[None]
        text_lengths = None if text_lengths is None else [int(text_lengths)]
        step_lengths = None if step_lengths is None else [int(step_lengths)]
    b, s_max, n_max = alignment.shape
    if text_lengths is None:
        text_lengths = [n_max] * b
    if step_lengths is None:
        step_lengths = [s_max] * b

    terms = []
    for i in range(b):
        n = int(text_lengths[i])
        s = int(step_lengths[i])
        if n == 0 or s == 0:
            terms.append(alignment.new_zeros(()))
            continue
        pos_n = torch.arange(n, device=alignment.device,
                             dtype=alignment.dtype) / n
        pos_s = torch.arange(s, device=alignment.device,
                             dtype=alignment.dtype) / s
        w = 1.0 - torch.exp(-((pos_n[None, :] - pos_s[:, None]) ** 2)
                            / (2.0 * g * g))
        per_step = (alignment[i, :s, :n] * w).sum(dim=1)
        terms.append(per_step.mean())
    return torch.stack(terms).mean()
