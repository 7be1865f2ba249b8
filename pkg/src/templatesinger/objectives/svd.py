"""Left-singular-basis comparison between target and predicted spectrograms.

Raw SVD leaves each singular vector's sign arbitrary, which would make the
comparison non-deterministic; we fix every U column so its
largest-magnitude entry is positive (V flips along with it, preserving the
factorization).
"""

import dataclasses

import torch

JITTER = 1e-8


@dataclasses.dataclass
class SvdFactors:
    u: torch.Tensor  # (m, k) sign-fixed left basis
    s: torch.Tensor  # (k,) descending
    v: torch.Tensor  # (n, k)


def _signed(u, v):
    idx = u.abs().argmax(dim=0)
    picked = u[idx, torch.arange(u.shape[1], device=u.device)]
    sign = torch.sign(picked)
    sign = torch.where(sign == 0, torch.ones_like(sign), sign)
    return u * sign[None, :], v * sign[None, :]


def _svd_with_retry(a):
    try:
        u, s, vh = torch.linalg.svd(a, full_matrices=False)
    except Exception:
        # rare non-convergence: retry once on a deterministically
        # jittered copy, then give up
        gen = torch.Generator().manual_seed(0)
        noise = torch.randn(a.shape, generator=gen, dtype=a.dtype) * JITTER
        try:
            u, s, vh = torch.linalg.svd(a + noise.to(a.device),
                                        full_matrices=False)
        except Exception as exc:
            raise RuntimeError("svd failed to converge") from exc
    return u, s, vh


def svd_factors(a, k=None):
    """Reduced SVD with the deterministic sign convention applied."""
    a = torch.as_tensor(a)
    u, s, vh = _svd_with_retry(a)
    u, v = _signed(u, vh.transpose(-2, -1))
    if k is not None:
        u, s, v = u[:, :k], s[:k], v[:, :k]
    return SvdFactors(u=u, s=s, v=v)


def _numerical_rank(s, shape):
    s = s.detach()
    if s.numel() == 0 or float(s[0]) == 0.0:
        return 0
    tol = max(shape) * torch.finfo(s.dtype).eps * s[0]
    return int((s > tol).sum())


def _item_svd_loss(mel, mel_post, valid, k):
    a = mel[:, valid]
    b = mel_post[:, valid]
    fa = svd_factors(a)
    fb = svd_factors(b)
    # basis vectors of (numerically) zero singular values are arbitrary,
    # so only directions both matrices actually span are compared
    k_eff = min(k, _numerical_rank(fa.s, a.shape),
                _numerical_rank(fb.s, b.shape))
    if k_eff == 0:
        return mel.new_zeros(())
    return (fa.u[:, :k_eff] - fb.u[:, :k_eff]).abs().sum()


def svd_loss(mel, mel_post, mask=None, k=8):
    """L1 distance between the first k sign-fixed left basis vectors.

    Invariant to positive rescaling of either argument (scale lives in the
    singular values) and deterministic across runs. k is clamped to the
    valid submatrix rank bound. Accepts (80, T) or (B, 80, T).
    """
    mel = torch.as_tensor(mel)
    mel_post = torch.as_tensor(mel_post)
    if mel.dim() == 2:
        mel, mel_post = mel[None], mel_post[None]
        mask = None if mask is None else torch.as_tensor(mask)[None]
    b, _, t = mel.shape
    if mask is None:
        mask = torch.ones(b, t, dtype=torch.bool, device=mel.device)
    terms = []
    for i in range(b):
        if int(mask[i].sum()) == 0:
            terms.append(mel.new_zeros(()))
        else:
            terms.append(_item_svd_loss(mel[i], mel_post[i], mask[i], k))
    return torch.stack(terms).mean()
