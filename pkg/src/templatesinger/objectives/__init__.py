"""Training objectives: regression, rate, basis, alignment, adversarial."""

from .losses import (
    classification_loss,
    gate_loss,
    guided_attention_loss,
    mel_loss,
    reconstruction_loss,
    speaker_loss,
)
from .rates import f_rate, f_scale, mel_rate_loss
from .report import COMPONENTS, PHASES, LossReport, total_loss
from .sdtw import soft_dtw, soft_dtw_batch
from .svd import SvdFactors, svd_factors, svd_loss

__all__ = [
    "classification_loss",
    "gate_loss",
    "guided_attention_loss",
    "mel_loss",
    "reconstruction_loss",
    "speaker_loss",
    "f_rate",
    "f_scale",
    "mel_rate_loss",
    "COMPONENTS",
    "PHASES",
    "LossReport",
    "total_loss",
    "soft_dtw",
    "soft_dtw_batch",
    "SvdFactors",
    "svd_factors",
    "svd_loss",
]
