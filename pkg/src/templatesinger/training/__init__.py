"""Training: phase schedule, ablation grid, checkpoints, and the loop."""

from .ablations import ABLATIONS, AUX, BASE, resolve_ablation
from .checkpoint import (
    CHECKPOINT_VERSION,
    check_resume_compatible,
    config_fingerprint,
    load_checkpoint,
    save_checkpoint,
)
from .loop import TRACK_ROWS, Trainer, TrainResult, train, train_from_dir
from .schedule import (
    PHASE_ADVERSARIAL,
    PHASE_PRETRAIN,
    PHASE_WARMUP,
    DivergenceTracker,
    TrainSchedule,
    lr_at,
    phase_at,
)

__all__ = [
    "ABLATIONS",
    "AUX",
    "BASE",
    "CHECKPOINT_VERSION",
    "DivergenceTracker",
    "PHASE_ADVERSARIAL",
    "PHASE_PRETRAIN",
    "PHASE_WARMUP",
    "TRACK_ROWS",
    "TrainResult",
    "TrainSchedule",
    "Trainer",
    "check_resume_compatible",
    "config_fingerprint",
    "lr_at",
    "load_checkpoint",
    "phase_at",
    "resolve_ablation",
    "save_checkpoint",
    "train",
    "train_from_dir",
]
