"""Mask-aware building blocks.

Batch normalization statistics must come from valid positions only;
otherwise the amount of padding in a batch would leak into every output.
Valid values are gathered into a contiguous tensor before reduction, so the
result is bitwise identical no matter how much padding follows them.
"""

import torch
from torch import nn


def sequence_mask(lengths, max_len=None):
    lengths = torch.as_tensor(lengths)
    if max_len is None:
        max_len = int(lengths.max())
    pos = torch.arange(max_len, device=lengths.device)
    return pos[None, :] < lengths[:, None]


class MaskedBatchNorm1d(nn.Module):
    """BatchNorm1d over (B, C, T) using only mask-valid time positions."""

    def __init__(self, num_features, eps=1e-5, momentum=0.1):
        super().__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.weight = nn.Parameter(torch.ones(num_features))
        self.bias = nn.Parameter(torch.zeros(num_features))
        self.register_buffer("running_mean", torch.zeros(num_features))
        self.register_buffer("running_var", torch.ones(num_features))

    def forward(self, x, mask):
        # x: (B, C, T); mask: (B, T)
        if self.training:
            valid = x.transpose(0, 1)[:, mask]  # (C, n_valid)
            n = valid.shape[1]
            if n < 1:
                raise ValueError("masked batch norm needs at least one "
                                 "valid position")
            mean = valid.mean(dim=1)
            var = valid.var(dim=1, unbiased=False)
            with torch.no_grad():
                m = self.momentum
                self.running_mean.mul_(1 - m).add_(m * mean)
                unbiased = var * (n / max(n - 1, 1))
                self.running_var.mul_(1 - m).add_(m * unbiased)
        else:
            mean, var = self.running_mean, self.running_var
        x = (x - mean[None, :, None]) / torch.sqrt(var[None, :, None]
                                                   + self.eps)
        return x * self.weight[None, :, None] + self.bias[None, :, None]


class MaskedConv1d(nn.Module):
    """Conv1d that zeroes padded input positions first, so longer padding
    can never bleed into valid outputs."""

    def __init__(self, in_channels, out_channels, kernel_size, **kwargs):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError("kernel size must be odd")
        self.conv = nn.Conv1d(in_channels, out_channels, kernel_size,
                              padding=kernel_size // 2, **kwargs)

    def forward(self, x, mask):
        x = x * mask[:, None, :].to(x.dtype)
        return self.conv(x)
