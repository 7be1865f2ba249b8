"""Text and vocal-feature encoders plus the text-side conditioning concat."""

import torch
from torch import nn

from .masked import MaskedBatchNorm1d, MaskedConv1d


class TextEncoder(nn.Module):
    """Character embedding, masked conv stack, bidirectional LSTM."""

    def __init__(self, cfg):
        super().__init__()
        self.embedding = nn.Embedding(cfg.vocab_size, cfg.text_embed_dim)
        convs = []
        norms = []
        ch = cfg.text_embed_dim
        for _ in range(cfg.encoder_conv_layers):
            convs.append(MaskedConv1d(ch, cfg.encoder_conv_channels,
                                      cfg.encoder_conv_kernel))
            norms.append(MaskedBatchNorm1d(cfg.encoder_conv_channels))
            ch = cfg.encoder_conv_channels
        self.convs = nn.ModuleList(convs)
        self.norms = nn.ModuleList(norms)
        self.lstm = nn.LSTM(ch, cfg.encoder_lstm_hidden, batch_first=True,
                            bidirectional=True)

    def forward(self, tokens, mask):
        # tokens: (B, N), mask: (B, N) -> (B, N, 2*hidden)
        x = self.embedding(tokens).transpose(1, 2)
        for conv, norm in zip(self.convs, self.norms):
            x = torch.relu(norm(conv(x, mask), mask))
        x = (x * mask[:, None, :].to(x.dtype)).transpose(1, 2)
        lengths = mask.sum(dim=1).cpu()
        packed = nn.utils.rnn.pack_padded_sequence(
            x, lengths, batch_first=True, enforce_sorted=False)
        out, _ = self.lstm(packed)
        out, _ = nn.utils.rnn.pad_packed_sequence(
            out, batch_first=True, total_length=tokens.shape[1])
        return out * mask[:, :, None].to(out.dtype)


class FeatureEncoder(nn.Module):
    """Stack of blocks, each three 1x1 convs [C,C], [C,H], [H,C], every conv
    followed by masked batch normalization and ELU. Output is zero on
    padded frames."""

    def __init__(self, cfg):
        super().__init__()
        c, h = cfg.feature_channels, cfg.feature_hidden
        self.feature_channels = c
        self.convs = nn.ModuleList()
        self.norms = nn.ModuleList()
        for _ in range(cfg.feature_blocks):
            for cin, cout in ((c, c), (c, h), (h, c)):
                self.convs.append(nn.Conv1d(cin, cout, 1))
                self.norms.append(MaskedBatchNorm1d(cout))

    def forward(self, features, mask):
        # features: (B, C, T), mask: (B, T) -> (B, C, T), zero where masked
        if features.shape[1] != self.feature_channels:
            raise ValueError("expected %d feature channels, got %d"
                             % (self.feature_channels, features.shape[1]))
        x = features
        for conv, norm in zip(self.convs, self.norms):
            x = torch.nn.functional.elu(norm(conv(x), mask))
        return x * mask[:, None, :].to(x.dtype)


def nearest_indices(src_len, dst_len, device=None):
    # matches the feature-alignment convention: floor(dst * src / dst)
    dst = torch.arange(dst_len, device=device)
    return torch.div(dst * src_len, dst_len, rounding_mode="floor")


def condition_text(text_enc, cond, text_mask, frame_mask):
    """Concatenate nearest-neighbor-resampled conditioning onto the text
    encoding along channels.

    text_enc: (B, N, D); cond: (B, C, T) -> (B, N, D + C). Each item's
    grid comes from its own valid lengths, so padding never shifts it.
    """
    n = text_enc.shape[1]
    text_lens = text_mask.sum(dim=1).clamp(min=1)
    frame_lens = frame_mask.sum(dim=1)
    pos = torch.arange(n, device=cond.device)
    idx = torch.div(pos[None, :] * frame_lens[:, None],
                    text_lens[:, None], rounding_mode="floor")
    idx = idx.clamp(min=0, max=cond.shape[2] - 1)
    resampled = torch.gather(
        cond, 2, idx[:, None, :].expand(-1, cond.shape[1], -1))
    out = torch.cat([text_enc, resampled.transpose(1, 2)], dim=2)
    return out * text_mask[:, :, None].to(out.dtype)
