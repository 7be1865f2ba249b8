"""Soft dynamic time warping with a log-sum-exp soft minimum.

The recursion runs along anti-diagonals of the cost matrix so each step is
a vectorized tensor op, and autograd provides exact gradients. An optional
Sakoe-Chiba band limits the alignment corridor; banded cells are priced out
with a large constant rather than infinity so gradients stay finite.
"""

import torch

# far above any realistic path cost, far below overflow; soft-min weights
# against it underflow to exactly zero in float64
LARGE = 1e10


def _pairwise_sq_dist(a, b):
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)


def _band_penalty(ta, tb, band, device):
    # normalized Sakoe-Chiba corridor, widened so a monotone path between
    # the corners always exists
    frac = max(float(band), 2.0 / min(ta, tb))
    i = torch.arange(1, ta + 1, device=device, dtype=torch.float64)[:, None]
    j = torch.arange(1, tb + 1, device=device, dtype=torch.float64)[None, :]
    outside = (i / ta - j / tb).abs() > frac
    return outside.to(torch.float64) * LARGE


def soft_dtw(a, b, gamma=0.1, band=None):
    """Soft-minimum alignment cost over squared euclidean frame distances.

    a, b: (T, D) sequences, or 1-D tensors treated as (T, 1). As gamma
    approaches 0 the value approaches hard DTW. band, when given, is the
    corridor half-width as a fraction of sequence length.
    """
    a = torch.as_tensor(a)
    b = torch.as_tensor(b)
    if a.dim() == 1:
        a = a[:, None]
    if b.dim() == 1:
        b = b[:, None]
    return soft_dtw_batch(a[None], b[None], gamma=gamma, band=band)[0]


def soft_dtw_batch(a, b, gamma=0.1, band=None):
    """soft_dtw over K equal-length pairs sharing one recursion.

    a: (K, ta) or (K, ta, D); b: (K, tb) or (K, tb, D). Returns (K,)
    values identical to per-pair soft_dtw calls.
    """
    a = torch.as_tensor(a)
    b = torch.as_tensor(b)
    if a.dim() == 2:
        a = a[:, :, None]
    if b.dim() == 2:
        b = b[:, :, None]
    if a.shape[0] != b.shape[0]:
        raise ValueError("batch sizes differ")
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise ValueError("soft_dtw inputs must be nonempty")
    if gamma <= 0:
        raise ValueError("gamma must be positive")

    k, ta, tb = a.shape[0], a.shape[1], b.shape[1]
    cost = ((a[:, :, None, :] - b[:, None, :, :]) ** 2).sum(-1)  # (K,ta,tb)
    if band is not None:
        cost = cost + _band_penalty(ta, tb, band, a.device)[None].to(
            cost.dtype)

    big = torch.full((k, ta + 1), LARGE, dtype=cost.dtype,
                     device=cost.device)
    prev2 = big.clone()
    prev2[:, 0] = 0.0        # R[0, 0]
    prev = big.clone()       # diagonal s=1: R[0,1], R[1,0]
    arange = torch.arange(ta + 1, device=cost.device)

    for s in range(2, ta + tb + 1):
        i_lo = max(1, s - tb)
        i_hi = min(ta, s - 1)
        ivec = arange[i_lo:i_hi + 1]
        c = cost[:, ivec - 1, s - ivec - 1]
        cand = torch.stack([prev2[:, ivec - 1], prev[:, ivec - 1],
                            prev[:, ivec]])
        soft = -gamma * torch.logsumexp(-cand / gamma, dim=0)
        new = big.clone()
        new[:, i_lo:i_hi + 1] = c + soft
        prev2, prev = prev, new
    return prev[:, ta]
