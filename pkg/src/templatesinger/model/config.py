"""Acoustic model hyperparameters.

Defaults follow the reference architecture scale; ``desk()`` gives a small
preset that trains in minutes on a laptop CPU for demos and tests.
"""

import dataclasses
import math


@dataclasses.dataclass
class ModelConfig:
    vocab_size: int
    n_speakers: int
    n_mels: int = 80
    r: int = 5                      # frames per decoder step

    # text encoder
    text_embed_dim: int = 512
    encoder_conv_layers: int = 3
    encoder_conv_channels: int = 512
    encoder_conv_kernel: int = 5
    encoder_lstm_hidden: int = 256  # per direction

    # feature encoder: blocks of 1x1 convs [C,C], [C,64], [64,C]
    feature_channels: int = 9
    feature_blocks: int = 8
    feature_hidden: int = 64

    # conditioning projections
    slice_proj_dim: int = 32
    mean_proj_dim: int = 32

    speaker_dim: int = 64

    # decoder
    prenet_dims: tuple = (256, 256)
    prenet_dropout: float = 0.5
    attention_rnn_dim: int = 1024
    decoder_rnn_dim: int = 1024
    attention_hidden: int = 128
    attention_components: int = 5   # mixture components K
    gate_bias_init: float = -4.0

    # postnet
    postnet_layers: int = 5
    postnet_channels: int = 512
    postnet_kernel: int = 5

    # first decoder input frame: the log-mel silence floor
    go_frame_value: float = math.log(1e-5)

    # inference
    max_steps_margin: float = 0.25

    def __post_init__(self):
        dims = [self.vocab_size, self.n_speakers, self.n_mels, self.r,
                self.text_embed_dim, self.encoder_conv_layers,
                self.encoder_conv_channels, self.encoder_lstm_hidden,
                self.feature_channels, self.feature_blocks,
                self.feature_hidden, self.slice_proj_dim, self.mean_proj_dim,
                self.speaker_dim, self.attention_rnn_dim,
                self.decoder_rnn_dim, self.attention_hidden,
                self.attention_components, self.postnet_layers,
                self.postnet_channels]
        if any(d < 1 for d in dims):
            raise ValueError("all model dimensions must be positive")
        if any(d < 1 for d in self.prenet_dims):
            raise ValueError("prenet dims must be positive")
        if self.encoder_conv_kernel % 2 == 0 or self.postnet_kernel % 2 == 0:
            raise ValueError("conv kernels must be odd to preserve length")
        self.prenet_dims = tuple(self.prenet_dims)

    @property
    def text_encoder_out_dim(self):
        return 2 * self.encoder_lstm_hidden

    @property
    def memory_dim(self):
        # encoded text | resampled feature embedding | speaker embedding
        return (self.text_encoder_out_dim + self.feature_channels
                + self.speaker_dim)

    @classmethod
    def desk(cls, vocab_size, n_speakers, **overrides):
        small = dict(
            text_embed_dim=32,
            encoder_conv_layers=1,
            encoder_conv_channels=32,
            encoder_lstm_hidden=16,
            feature_blocks=8,
            prenet_dims=(64, 64),
            attention_rnn_dim=128,
            decoder_rnn_dim=128,
            attention_hidden=32,
            postnet_layers=3,
            postnet_channels=64,
        )
        small.update(overrides)
        return cls(vocab_size=vocab_size, n_speakers=n_speakers, **small)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["prenet_dims"] = list(self.prenet_dims)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["prenet_dims"] = tuple(d["prenet_dims"])
        return cls(**d)
