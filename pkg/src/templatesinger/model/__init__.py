"""Conditioned sequence-to-sequence acoustic model."""

from .acoustic import AcousticModel, AcousticOutput
from .attention import MoLAttention, logistic_mixture_weights
from .config import ModelConfig
from .decoder import Decoder, Prenet
from .encoders import FeatureEncoder, TextEncoder, condition_text, nearest_indices
from .masked import MaskedBatchNorm1d, MaskedConv1d, sequence_mask
from .positional import sinusoidal_embedding
from .postnet import Postnet

__all__ = [
    "AcousticModel",
    "AcousticOutput",
    "MoLAttention",
    "logistic_mixture_weights",
    "ModelConfig",
    "Decoder",
    "Prenet",
    "FeatureEncoder",
    "TextEncoder",
    "condition_text",
    "nearest_indices",
    "MaskedBatchNorm1d",
    "MaskedConv1d",
    "sequence_mask",
    "sinusoidal_embedding",
    "Postnet",
]
