"""Residual refinement of the decoder output.

The conditioning embedding is projected to mel channels and added to the
decoder output before the conv stack. The final conv starts at zero, so
mel_post equals mel_dec exactly at initialization.
"""

import torch
from torch import nn

from .masked import MaskedBatchNorm1d


class Postnet(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.cond_proj = nn.Conv1d(cfg.feature_channels, cfg.n_mels, 1)
        k = cfg.postnet_kernel
        convs, norms = [], []
        ch = cfg.n_mels
        for i in range(cfg.postnet_layers - 1):
            convs.append(nn.Conv1d(ch, cfg.postnet_channels, k,
                                   padding=k // 2))
            norms.append(MaskedBatchNorm1d(cfg.postnet_channels))
            ch = cfg.postnet_channels
        self.convs = nn.ModuleList(convs)
        self.norms = nn.ModuleList(norms)
        self.final = nn.Conv1d(ch, cfg.n_mels, k, padding=k // 2)
        nn.init.zeros_(self.final.weight)
        nn.init.zeros_(self.final.bias)

    def forward(self, mel_dec, cond, frame_mask):
        # zero padded frames before every conv so valid outputs never
        # depend on how much padding follows them
        m = frame_mask[:, None, :].to(mel_dec.dtype)
        x = (mel_dec + self.cond_proj(cond)) * m
        for conv, norm in zip(self.convs, self.norms):
            x = torch.tanh(norm(conv(x), frame_mask)) * m
        return mel_dec + self.final(x)
