"""Atomic, versioned training checkpoints.

One file carries the model, the train-time heads, optimizer states, the
schedule and model configuration, and a fingerprint of both configs.
Inference-only consumers read just the model entry plus the bundled
tokenizer and speaker table; resuming refuses a fingerprint mismatch
unless forced.
"""

import hashlib
import json
import os

import torch

CHECKPOINT_VERSION = 1


def config_fingerprint(model_config_dict, schedule_dict):
    blob = json.dumps([model_config_dict, schedule_dict], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def save_checkpoint(path, step, model, heads, optimizers, schedule,
                    model_config, extras=None):
    """Write atomically (temp file then rename)."""
    payload = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "step": int(step),
        "model": model.state_dict(),
        "heads": heads.state_dict(),
        "optimizers": {name: opt.state_dict()
                       for name, opt in optimizers.items()},
        "schedule": schedule.to_dict(),
        "model_config": model_config.to_dict(),
        "config_fingerprint": config_fingerprint(model_config.to_dict(),
                                                 schedule.to_dict()),
        "extras": dict(extras or {}),
    }
    tmp = path + ".tmp"
    torch.save(payload, tmp)
    os.replace(tmp, path)
    return path


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("checkpoint_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint version %r" % version)
    return payload


def check_resume_compatible(payload, model_config, schedule, force=False):
    """Refuse to resume under a different configuration unless forced."""
    want = config_fingerprint(model_config.to_dict(), schedule.to_dict())
    have = payload.get("config_fingerprint")
    if have != want and not force:
        raise ValueError("checkpoint config fingerprint mismatch "
                         "(%s != %s); pass force to resume anyway"
                         % (have, want))
