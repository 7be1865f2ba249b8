"""Conditioned autoregressive decoder emitting r mel frames per step.

Per-step conditioning uses the encoded feature embedding twice: a slice
projection (mean of the step's r columns) concatenated into the prenet
input and the attention query, and a projected global mean in the query.
The decoder itself is causal, so trailing padding can never affect valid
steps.
"""

import torch
from torch import nn

from .attention import MoLAttention
from .positional import sinusoidal_embedding


class Prenet(nn.Module):
    """Two-layer bottleneck with always-on dropout (seedable)."""

    def __init__(self, in_dim, dims, dropout):
        super().__init__()
        self.dropout = dropout
        layers = []
        for d in dims:
            layers.append(nn.Linear(in_dim, d))
            in_dim = d
        self.layers = nn.ModuleList(layers)

    def forward(self, x, generator=None):
        for layer in self.layers:
            x = torch.relu(layer(x))
            if self.dropout > 0:
                # one mask broadcast over the batch: per-item outputs stay
                # independent of batch composition
                keep = torch.rand((1,) + x.shape[1:], device=x.device,
                                  generator=generator) >= self.dropout
                x = x * keep.to(x.dtype) / (1.0 - self.dropout)
        return x


class Decoder(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        c = cfg.feature_channels
        memory_dim = cfg.memory_dim
        self.slice_proj = nn.Linear(c, cfg.slice_proj_dim)
        self.mean_proj = nn.Linear(c, cfg.mean_proj_dim)
        self.prenet = Prenet(cfg.n_mels + cfg.slice_proj_dim,
                             cfg.prenet_dims, cfg.prenet_dropout)
        self.attention_rnn = nn.LSTMCell(
            cfg.prenet_dims[-1] + memory_dim, cfg.attention_rnn_dim)
        self.attention = MoLAttention(
            cfg.attention_rnn_dim + cfg.slice_proj_dim + cfg.mean_proj_dim,
            cfg.attention_hidden, cfg.attention_components)
        self.decoder_rnn = nn.LSTMCell(
            cfg.attention_rnn_dim + memory_dim, cfg.decoder_rnn_dim)
        self.frame_proj = nn.Linear(cfg.decoder_rnn_dim + memory_dim,
                                    cfg.n_mels * cfg.r)
        self.gate_proj = nn.Linear(cfg.decoder_rnn_dim + memory_dim, 1)
        # keep an untrained gate firmly open so early inference runs to
        # max_steps instead of stopping on noise
        nn.init.zeros_(self.gate_proj.weight)
        nn.init.constant_(self.gate_proj.bias, cfg.gate_bias_init)

    def _init_state(self, b, memory, device, dtype):
        zeros = lambda d: torch.zeros(b, d, device=device, dtype=dtype)
        return {
            "attn_h": zeros(self.cfg.attention_rnn_dim),
            "attn_c": zeros(self.cfg.attention_rnn_dim),
            "dec_h": zeros(self.cfg.decoder_rnn_dim),
            "dec_c": zeros(self.cfg.decoder_rnn_dim),
            "context": zeros(memory.shape[2]),
            "mu": self.attention.initial_state(b, device=device,
                                               dtype=dtype),
        }

    def _cond_slice(self, cond, step):
        r = self.cfg.r
        lo = step * r
        sl = cond[:, :, lo:lo + r]
        if sl.shape[2] == 0:
            sl = torch.zeros(cond.shape[0], cond.shape[1], 1,
                             device=cond.device, dtype=cond.dtype)
        return self.slice_proj(sl.mean(dim=2))

    def step(self, prev_frame, memory, memory_mask, cond, cond_mean_proj,
             step_index, state, generator=None):
        """One decoder step: r frames, one gate logit, one alignment row."""
        slice_p = self._cond_slice(cond, step_index)
        pre = self.prenet(torch.cat([prev_frame, slice_p], dim=1), generator)

        attn_in = torch.cat([pre, state["context"]], dim=1)
        attn_h, attn_c = self.attention_rnn(
            attn_in, (state["attn_h"], state["attn_c"]))

        query = torch.cat([attn_h, slice_p, cond_mean_proj], dim=1)
        pos = sinusoidal_embedding(
            torch.full((memory.shape[0],), float(step_index),
                       device=memory.device),
            self.attention.query_proj.out_features,
            device=memory.device, dtype=memory.dtype)
        context, weights, mu = self.attention(
            query, pos, memory, memory_mask, state["mu"])

        dec_in = torch.cat([attn_h, context], dim=1)
        dec_h, dec_c = self.decoder_rnn(dec_in, (state["dec_h"],
                                                 state["dec_c"]))
        proj_in = torch.cat([dec_h, context], dim=1)
        frames = self.frame_proj(proj_in).view(
            -1, self.cfg.n_mels, self.cfg.r)
        gate = self.gate_proj(proj_in).squeeze(1)

        new_state = {"attn_h": attn_h, "attn_c": attn_c, "dec_h": dec_h,
                     "dec_c": dec_c, "context": context, "mu": mu}
        return frames, gate, weights, new_state

    def cond_mean(self, cond, frame_mask):
        # cond is zero on padded frames, so a plain sum stays exact
        count = frame_mask.sum(dim=1, keepdim=True).clamp(min=1)
        mean = cond.sum(dim=2) / count.to(cond.dtype)
        return self.mean_proj(mean)

    def go_frame(self, b, device, dtype, fill):
        return torch.full((b, self.cfg.n_mels), fill, device=device,
                          dtype=dtype)

    def teacher_forced(self, memory, memory_mask, cond, frame_mask, mels,
                       generator=None):
        """Run all steps with ground-truth previous frames.

        mels: (B, 80, T) with T divisible by r. Returns (mel_dec, gates
        (B, S), alignment (B, S, N)).
        """
        b, _, t = mels.shape
        r = self.cfg.r
        if t % r != 0:
            raise ValueError("mel length %d not divisible by r=%d" % (t, r))
        steps = t // r
        state = self._init_state(b, memory, mels.device, mels.dtype)
        mean_p = self.cond_mean(cond, frame_mask)

        out_frames, out_gates, out_weights = [], [], []
        prev = self.go_frame(b, mels.device, mels.dtype,
                             self.cfg.go_frame_value)
        for s in range(steps):
            frames, gate, weights, state = self.step(
                prev, memory, memory_mask, cond, mean_p, s, state,
                generator)
            out_frames.append(frames)
            out_gates.append(gate)
            out_weights.append(weights)
            prev = mels[:, :, (s + 1) * r - 1]
        mel_dec = torch.cat(out_frames, dim=2)
        return (mel_dec, torch.stack(out_gates, dim=1),
                torch.stack(out_weights, dim=1))
