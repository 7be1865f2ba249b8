"""The assembled acoustic model: encoders, attention decoder, postnet.

Inputs are a token sequence (optional), normalized vocal feature contours
on the mel frame grid, and a speaker id. The feature embedding conditions
the model in four places: concatenated to the attention memory, sliced
into the prenet and attention query, pooled into the attention query, and
projected into the postnet input.
"""

import dataclasses
import math

import torch
from torch import nn

from .decoder import Decoder
from .encoders import FeatureEncoder, TextEncoder, condition_text
from .positional import sinusoidal_embedding
from .postnet import Postnet


@dataclasses.dataclass
class AcousticOutput:
    mel_dec: torch.Tensor    # (B, 80, T)
    mel_post: torch.Tensor   # (B, 80, T)
    gate: torch.Tensor       # (B, S) logits, S = T / r
    alignment: torch.Tensor  # (B, S, N)
    truncated: bool = False


class AcousticModel(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.text_encoder = TextEncoder(cfg)
        self.feature_encoder = FeatureEncoder(cfg)
        self.speaker_embedding = nn.Embedding(cfg.n_speakers,
                                              cfg.speaker_dim)
        self.textless_token = nn.Parameter(
            torch.randn(cfg.text_encoder_out_dim) * 0.02)
        self.decoder = Decoder(cfg)
        self.postnet = Postnet(cfg)

    def build_memory(self, tokens, text_mask, cond, frame_mask, speaker_ids,
                     textless=False):
        """Attention memory: [text | resampled features | speaker], with
        sinusoidal position information added."""
        b = cond.shape[0]
        if textless:
            text_enc = self.textless_token[None, None, :].expand(b, 1, -1)
            text_mask = torch.ones(b, 1, dtype=torch.bool,
                                   device=cond.device)
        else:
            text_enc = self.text_encoder(tokens, text_mask)
        memory = condition_text(text_enc, cond, text_mask, frame_mask)
        spk = self.speaker_embedding(speaker_ids)
        memory = torch.cat(
            [memory, spk[:, None, :].expand(-1, memory.shape[1], -1)], dim=2)
        pos = sinusoidal_embedding(memory.shape[1], memory.shape[2],
                                   device=memory.device)
        memory = memory + pos[None].to(memory.dtype)
        return memory * text_mask[:, :, None].to(memory.dtype), text_mask

    def forward_teacher_forced(self, batch, generator=None, textless=False):
        cond = self.feature_encoder(batch.features, batch.frame_mask)
        memory, memory_mask = self.build_memory(
            batch.tokens, batch.text_mask, cond, batch.frame_mask,
            batch.speaker_ids, textless=textless)
        mel_dec, gate, alignment = self.decoder.teacher_forced(
            memory, memory_mask, cond, batch.frame_mask, batch.mels,
            generator)
        mel_post = self.postnet(mel_dec, cond, batch.frame_mask)
        return AcousticOutput(mel_dec=mel_dec, mel_post=mel_post, gate=gate,
                              alignment=alignment)

    def default_max_steps(self, n_frames):
        return math.ceil((1.0 + self.cfg.max_steps_margin) * n_frames
                         / self.cfg.r)

    @torch.no_grad()
    def infer(self, tokens, features, speaker_id, textless=False,
              max_steps=None, gate_threshold=0.5, seed=None):
        """Autoregressive decoding conditioned on a feature template.

        tokens: (N,) int64 or None with textless=True; features: (9, T)
        normalized contours. Stops when the gate fires or at max_steps
        (default: template frame count plus margin), setting truncated in
        the latter case.
        """
        device = features.device
        features = features[None].float()
        t = features.shape[2]
        frame_mask = torch.ones(1, t, dtype=torch.bool, device=device)
        if tokens is None or (textless and tokens is None):
            textless = True
            tokens_b = torch.zeros(1, 1, dtype=torch.int64, device=device)
            text_mask = torch.ones(1, 1, dtype=torch.bool, device=device)
        else:
            tokens_b = torch.as_tensor(tokens, dtype=torch.int64,
                                       device=device)[None]
            text_mask = torch.ones_like(tokens_b, dtype=torch.bool)
        if max_steps is None:
            max_steps = self.default_max_steps(t)
        generator = None
        if seed is not None:
            generator = torch.Generator(device="cpu").manual_seed(int(seed))

        cond = self.feature_encoder(features, frame_mask)
        memory, memory_mask = self.build_memory(
            tokens_b, text_mask, cond, frame_mask,
            torch.tensor([speaker_id], device=device), textless=textless)
        mean_p = self.decoder.cond_mean(cond, frame_mask)
        state = self.decoder._init_state(1, memory, device, cond.dtype)
        prev = self.decoder.go_frame(1, device, cond.dtype,
                                     self.cfg.go_frame_value)

        frames, gates, weights = [], [], []
        truncated = True
        for s in range(max_steps):
            block, gate, w, state = self.decoder.step(
                prev, memory, memory_mask, cond, mean_p, s, state,
                generator)
            frames.append(block)
            gates.append(gate)
            weights.append(w)
            prev = block[:, :, -1]
            if torch.sigmoid(gate)[0] > gate_threshold:
                truncated = False
                break
        mel_dec = torch.cat(frames, dim=2)
        out_mask = torch.ones(1, mel_dec.shape[2], dtype=torch.bool,
                              device=device)
        mel_post = self.postnet(mel_dec, self._pad_cond(cond, mel_dec.shape[2]),
                                out_mask)
        return AcousticOutput(
            mel_dec=mel_dec, mel_post=mel_post,
            gate=torch.stack(gates, dim=1),
            alignment=torch.stack(weights, dim=1), truncated=truncated)

    @staticmethod
    def _pad_cond(cond, t_out):
        t = cond.shape[2]
        if t_out <= t:
            return cond[:, :, :t_out]
        pad = torch.zeros(cond.shape[0], cond.shape[1], t_out - t,
                          device=cond.device, dtype=cond.dtype)
        return torch.cat([cond, pad], dim=2)

    def parameter_counts(self):
        counts = {}
        for name, module in self.named_children():
            counts[name] = sum(p.numel() for p in module.parameters())
        counts["textless_token"] = self.textless_token.numel()
        counts["total"] = sum(p.numel() for p in self.parameters())
        return counts
