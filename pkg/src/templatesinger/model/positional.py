"""Sinusoidal positional embeddings for the attention inputs."""

import math

import torch


def sinusoidal_embedding(positions, dim, device=None, dtype=None):
    """Classic interleaved sin/cos embedding.

    positions: int (count, embeds 0..n-1) or a 1-D tensor of indices.
    Returns (len(positions), dim); odd dims get the trailing column of the
    next even size trimmed.
    """
    if isinstance(positions, int):
        positions = torch.arange(positions, device=device)
    positions = positions.to(device=device, dtype=dtype or torch.float32)
    half = (dim + 1) // 2
    freq = torch.exp(
        torch.arange(half, device=positions.device,
                     dtype=positions.dtype) * (-math.log(10000.0) / half))
    args = positions[:, None] * freq[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    return emb[:, :dim]
