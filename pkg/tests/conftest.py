"""Shared fixtures: a toy corpus prepared once and a small checkpoint."""

import json
import os

import pytest

from templatesinger.data import (
    PipelineConfig,
    Tokenizer,
    load_example,
    save_manifest,
)
from templatesinger.data.manifest import build_manifest
from templatesinger.data.toy import generate_toy_corpus
from templatesinger.training import Trainer, TrainSchedule, save_checkpoint


@pytest.fixture(scope="session")
def toy_setup(tmp_path_factory):
    """Toy corpus, extracted features, manifest dir, tokenizer, examples."""
    root = tmp_path_factory.mktemp("shared_toy")
    corpus = root / "corpus"
    generate_toy_corpus(str(corpus), n_speakers=2, utterances_per_speaker=3,
                        seed=11)
    cfg = PipelineConfig(cache_dir=str(root / "cache"))
    records, table = build_manifest(str(corpus), cfg)
    tokenizer = Tokenizer(cfg.tokenizer)
    examples = [load_example(r, table) for r in records]

    data_dir = root / "data"
    data_dir.mkdir()
    save_manifest(str(data_dir / "manifest.jsonl"), records, table)
    with open(data_dir / "tokenizer.json", "w") as fh:
        json.dump(tokenizer.to_dict(), fh)

    return {
        "root": str(root),
        "corpus": str(corpus),
        "data_dir": str(data_dir),
        "records": records,
        "table": table,
        "tokenizer": tokenizer,
        "examples": examples,
    }


@pytest.fixture(scope="session")
def tiny_checkpoint(toy_setup, tmp_path_factory):
    """An untrained desk-scale checkpoint with heads, tokenizer, speakers."""
    sched = TrainSchedule(total_steps=4, batch_size=2, checkpoint_every=4,
                          log_every=1, window_min=8, window_max=16,
                          window_count=4, critic_updates=1,
                          divergence_window=4, textless_rate=0.0)
    trainer = Trainer(toy_setup["examples"], toy_setup["table"],
                      toy_setup["tokenizer"], schedule=sched)
    path = tmp_path_factory.mktemp("ck") / "tiny.pt"
    save_checkpoint(str(path), 0, trainer.model, trainer.heads,
                    {"generator": trainer.opt_gen,
                     "critic": trainer.opt_critic},
                    sched, trainer.model_config,
                    extras=trainer.checkpoint_extras())
    return str(path)
