"""Command line interface: feature extraction, data preparation, training,
template synthesis, and evaluation.

Config files are YAML. The train config accepts two sections, ``model`` and
``schedule``, whose keys mirror the ModelConfig and TrainSchedule fields;
``model.preset`` picks the size preset ("desk" by default, "full" for the
full-scale dimensions). Vocabulary and speaker count always come from the
prepared data, never from the config.
"""

import dataclasses
import glob
import json
import os

import click
import numpy as np
import yaml

from .data import (
    PipelineConfig,
    Tokenizer,
    TokenizerConfig,
    load_example,
    load_manifest,
    save_manifest,
)
from .data.manifest import build_manifest
from .features import (
    FeatureExtractor,
    MelConfig,
    Waveform,
    save_feature_cache,
)
from .model import ModelConfig
from .training import TrainSchedule, train

SYNTH_CONTAINER_VERSION = 1


@click.group()
def main():
    """Template-based singing voice synthesis toolkit."""


# ------------------------------------------------------------------ helpers


def _load_yaml(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise click.UsageError("config %s must be a mapping" % path)
    return data


def _reject_unknown(data, allowed, where):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise click.UsageError(
            "unknown %s keys: %s (allowed: %s)"
            % (where, ", ".join(unknown), ", ".join(sorted(allowed))))


def _speaker_label(stem):
    return stem.split("_", 1)[0] if "_" in stem else "unknown"


def parse_deviations(text):
    """'f0=+5,rms=-10' -> {'f0': 5.0, 'rms': -10.0}."""
    devs = {}
    for part in (text or "").split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise click.UsageError(
                "bad deviation %r; expected name=percent" % part)
        name, value = part.split("=", 1)
        try:
            devs[name.strip()] = float(value)
        except ValueError:
            raise click.UsageError("bad deviation value %r for %s"
                                   % (value, name.strip()))
    return devs


def _build_model_config(overrides, vocab_size, n_speakers):
    overrides = dict(overrides or {})
    preset = overrides.pop("preset", "desk")
    if preset == "desk":
        cfg = ModelConfig.desk(vocab_size=vocab_size, n_speakers=n_speakers)
    elif preset == "full":
        cfg = ModelConfig(vocab_size=vocab_size, n_speakers=n_speakers)
    else:
        raise click.UsageError("unknown model preset %r (desk or full)"
                               % preset)
    if overrides:
        try:
            cfg = dataclasses.replace(cfg, **overrides)
        except TypeError as exc:
            raise click.UsageError("bad model config: %s" % exc)
    return cfg


# ----------------------------------------------------------------- features


@main.group()
def features():
    """Feature extraction utilities."""


@features.command("extract")
@click.option("--in", "in_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of wav files.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False),
              help="Directory for the feature cache files.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="YAML with a 'mel' section of MelConfig overrides.")
def features_extract(in_dir, out_dir, config_path):
    """Extract the nine feature tracks plus mel for every wav in a
    directory. Cache files are named after the wav; a 'spk_utt.wav' stem
    records 'spk' as the speaker id."""
    conf = _load_yaml(config_path)
    _reject_unknown(conf, {"mel"}, "config")
    try:
        mel_cfg = MelConfig(**(conf.get("mel") or {}))
    except TypeError as exc:
        raise click.UsageError("bad mel config: %s" % exc)

    wavs = sorted(glob.glob(os.path.join(in_dir, "*.wav")))
    if not wavs:
        raise click.UsageError("no wav files under %s" % in_dir)
    os.makedirs(out_dir, exist_ok=True)
    extractor = FeatureExtractor(mel=mel_cfg)
    written = 0
    for path in wavs:
        stem = os.path.splitext(os.path.basename(path))[0]
        try:
            w = Waveform.read(path)
            feats, mel = extractor(w)
        except Exception as exc:
            click.echo("skipping %s: %s" % (path, exc), err=True)
            continue
        save_feature_cache(
            os.path.join(out_dir, stem + ".npz"), feats, mel,
            mel_cfg.hop_length, mel_cfg.sample_rate,
            speaker_id=_speaker_label(stem), utterance_id=stem)
        written += 1
    click.echo("wrote %d feature caches to %s" % (written, out_dir))


# --------------------------------------------------------------------- data


@main.group()
def data():
    """Training data preparation."""


@data.command("prepare")
@click.option("--corpus", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Corpus root laid out as <root>/<speaker>/<utt>.wav"
                   " (+ .txt transcript).")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--textless", is_flag=True,
              help="Accept utterances without transcripts.")
def data_prepare(corpus, out_dir, textless):
    """Extract features for a corpus and write the training manifest."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = PipelineConfig(cache_dir=os.path.join(out_dir, "cache"),
                         textless=textless)
    records, table = build_manifest(corpus, cfg)
    save_manifest(os.path.join(out_dir, "manifest.jsonl"), records, table)
    with open(os.path.join(out_dir, "tokenizer.json"), "w") as fh:
        json.dump(Tokenizer(cfg.tokenizer).to_dict(), fh, indent=2)
    click.echo("prepared %d utterances from %d speakers into %s"
               % (len(records), len(table), out_dir))


# -------------------------------------------------------------------- train


@main.command("train")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="YAML with 'model' and 'schedule' sections.")
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory produced by 'data prepare'.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--ablation", default=None,
              help="Ablation name or number 1-9 (default: full).")
@click.option("--resume", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Checkpoint to resume from.")
@click.option("--force", is_flag=True,
              help="Resume even if the config fingerprint differs.")
def train_cmd(config_path, data_dir, out_dir, ablation, resume, force):
    """Train the acoustic model on a prepared data directory."""
    conf = _load_yaml(config_path)
    _reject_unknown(conf, {"model", "schedule", "ablation"}, "config")
    try:
        schedule = TrainSchedule(**(conf.get("schedule") or {}))
    except (TypeError, ValueError) as exc:
        raise click.UsageError("bad schedule config: %s" % exc)
    ablation = ablation or conf.get("ablation") or "full"

    records, table = load_manifest(os.path.join(data_dir, "manifest.jsonl"))
    tok_path = os.path.join(data_dir, "tokenizer.json")
    if os.path.exists(tok_path):
        with open(tok_path) as fh:
            tokenizer = Tokenizer.from_dict(json.load(fh))
    else:
        tokenizer = Tokenizer(TokenizerConfig())
    examples = [load_example(rec, table) for rec in records]
    model_cfg = _build_model_config(conf.get("model"), tokenizer.vocab_size,
                                    len(table))

    def progress(entry):
        click.echo("step %(step)d  phase=%(phase)s  total=%(total).4f  "
                   "mel=%(l_mel).4f" % entry)

    try:
        result = train(examples, table, tokenizer, out_dir,
                       model_config=model_cfg, schedule=schedule,
                       ablation=ablation, resume=resume, force=force,
                       progress=progress)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo("final checkpoint: %s" % result.checkpoint_path)


# -------------------------------------------------------------------- synth


@main.command("synth")
@click.option("--template", "template_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Source wav to extract the feature template from.")
@click.option("--speaker", required=True, help="Target speaker id.")
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--text", default="", help="Transcript to sing.")
@click.option("--textless", is_flag=True,
              help="Decode from the learned silent-text memory.")
@click.option("--dev", "deviations", default="",
              help="Per-feature relative deviations, e.g. f0=+5,rms=-10.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--gl-iterations", default=60, show_default=True,
              help="Griffin-Lim phase reconstruction iterations.")
def synth_cmd(template_path, speaker, checkpoint, text, textless,
              deviations, out_dir, seed, gl_iterations):
    """Synthesize one utterance from a template wav. Writes mel.npz,
    alignment.txt, and output.wav into the output directory."""
    from .synthesis import TemplateSpec, extract_template, griffin_lim, \
        synthesize

    devs = parse_deviations(deviations)
    try:
        spec = TemplateSpec(source=extract_template(template_path),
                            speaker=speaker, deviations=devs,
                            textless=textless, text=text)
        result = synthesize(spec, checkpoint, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    os.makedirs(out_dir, exist_ok=True)
    mel_cfg = MelConfig()
    np.savez(os.path.join(out_dir, "mel.npz"),
             container_version=SYNTH_CONTAINER_VERSION,
             mel=result.mel.bins.astype(np.float32),
             gate=result.gate.astype(np.float32),
             template_frames=result.template_frames,
             hop_length=mel_cfg.hop_length,
             sample_rate=mel_cfg.sample_rate)
    np.savetxt(os.path.join(out_dir, "alignment.txt"), result.alignment)
    wav = griffin_lim(result.mel, mel_cfg, iterations=gl_iterations,
                      seed=seed)
    wav.write(os.path.join(out_dir, "output.wav"))
    click.echo("synthesized %d frames (template %d%s) into %s"
               % (result.n_frames, result.template_frames,
                  ", truncated" if result.truncated else "", out_dir))


# --------------------------------------------------------------------- eval


@main.command("eval")
@click.option("--gen", "gen_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of generated wavs.")
@click.option("--ref", "ref_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of reference wavs with matching names.")
@click.option("--checkpoint", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default="report.txt", show_default=True,
              type=click.Path(dir_okay=False))
def eval_cmd(gen_dir, ref_dir, checkpoint, out_path):
    """Objective metrics between generated and reference audio."""
    from .evaluation import evaluate_dirs

    try:
        report = evaluate_dirs(gen_dir, ref_dir, checkpoint)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    with open(out_path, "w") as fh:
        fh.write(report.to_text())
    click.echo("mF0 RMSE %.6f  speaker cos %.6f  -> %s"
               % (report.mf0_rmse, report.spk_cos, out_path))


if __name__ == "__main__":
    main()
