"""The training loop: phased objectives, critic updates, checkpoints.

Every per-step random choice (batch members, dropout masks, window draws,
interpolation points) is derived from (seed, step), so an interrupted run
resumed from a checkpoint replays exactly the steps an uninterrupted run
would have taken. Examples are loaded up front; desk-scale corpora fit in
memory.
"""

import dataclasses
import json
import os
import statistics

import numpy as np
import torch

from ..adversarial import (
    TrainingHeads,
    critic_loss,
    gradient_penalty,
    sample_window_pairs,
    sample_windows,
    score_windows,
)
from ..data import (
    Tokenizer,
    TokenizerConfig,
    load_example,
    load_manifest,
    make_batch,
    sample_batch_indices,
)
from ..model import AcousticModel, ModelConfig
from ..objectives import (
    classification_loss,
    gate_loss,
    guided_attention_loss,
    mel_loss,
    mel_rate_loss,
    reconstruction_loss,
    speaker_loss,
    svd_loss,
    total_loss,
)
from .ablations import resolve_ablation
from .checkpoint import (
    check_resume_compatible,
    load_checkpoint,
    save_checkpoint,
)
from .schedule import (
    PHASE_ADVERSARIAL,
    PHASE_PRETRAIN,
    DivergenceTracker,
    TrainSchedule,
    lr_at,
    phase_at,
)

# rows of the nine-feature matrix reconstructed by the feature decoders
TRACK_ROWS = {"f0": 0, "hnr": 1, "rms": 3}


def _step_seed(seed, step, tag):
    seq = np.random.SeedSequence([int(seed), int(step), int(tag)])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclasses.dataclass
class TrainResult:
    checkpoint_path: str
    history: list
    model: AcousticModel
    heads: TrainingHeads


class Trainer:
    """Owns the model, heads, optimizers, and per-step mechanics."""

    def __init__(self, examples, table, tokenizer, model_config=None,
                 schedule=None, ablation="full"):
        if not examples:
            raise ValueError("cannot train on zero examples")
        self.schedule = schedule or TrainSchedule()
        self.examples = list(examples)
        self.table = table
        self.tokenizer = tokenizer
        self.ablation, self.enabled = resolve_ablation(ablation)
        self.model_config = model_config or ModelConfig.desk(
            vocab_size=tokenizer.vocab_size, n_speakers=len(table))
        if self.model_config.vocab_size < tokenizer.vocab_size:
            raise ValueError("model vocab smaller than tokenizer vocab")

        torch.manual_seed(self.schedule.seed)
        self.model = AcousticModel(self.model_config)
        self.heads = TrainingHeads(speaker_dim=self.model_config.speaker_dim)
        self.gen_params = list(self.model.parameters()) + [
            p for name, p in self.heads.named_parameters()
            if not name.startswith("critic")]
        self.critic_params = list(self.heads.critic.parameters())
        adam = dict(betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-6)
        self.opt_gen = torch.optim.Adam(self.gen_params,
                                        lr=self.schedule.lr0, **adam)
        self.opt_critic = torch.optim.Adam(self.critic_params,
                                           lr=self.schedule.lr0, **adam)
        self.tracker = DivergenceTracker(self.schedule.divergence_window)
        self.mel_lengths = [e.n_frames for e in self.examples]
        self.batch_size = min(self.schedule.batch_size, len(self.examples))

    # ------------------------------------------------------------ state

    def checkpoint_extras(self):
        return {
            "tokenizer": self.tokenizer.to_dict(),
            "speakers": self.table.to_dict(),
            "ablation": self.ablation,
            "divergence": {"gaps": list(self.tracker.gaps),
                           "diverged": self.tracker.diverged},
        }

    def load_state(self, payload):
        self.model.load_state_dict(payload["model"])
        self.heads.load_state_dict(payload["heads"])
        self.opt_gen.load_state_dict(payload["optimizers"]["generator"])
        self.opt_critic.load_state_dict(payload["optimizers"]["critic"])
        div = payload.get("extras", {}).get("divergence")
        if div:
            self.tracker.gaps.extend(div["gaps"])
            self.tracker._diverged = bool(div["diverged"])

    # ------------------------------------------------------------- step

    def _batch(self, step):
        picked = sample_batch_indices(self.mel_lengths, self.batch_size,
                                      self.schedule.seed, step)
        return make_batch([self.examples[i] for i in picked],
                          self.schedule.r)

    def step(self, step_index):
        """One full training step; returns the loggable entry."""
        sched = self.schedule
        batch = self._batch(step_index)
        critic_on = "critic" in self.enabled
        phase = phase_at(step_index, sched,
                         self.tracker.diverged if critic_on else True)
        lr = lr_at(step_index, sched)
        for opt in (self.opt_gen, self.opt_critic):
            for group in opt.param_groups:
                group["lr"] = lr

        textless = bool((batch.text_lengths == 0).any())
        if not textless and sched.textless_rate > 0:
            draw = np.random.default_rng(
                [sched.seed, step_index, 3]).random()
            textless = draw < sched.textless_rate

        gen = torch.Generator().manual_seed(
            _step_seed(sched.seed, step_index, 0))
        out = self.model.forward_teacher_forced(batch, generator=gen,
                                                textless=textless)

        critic_log = {}
        if critic_on and phase != PHASE_PRETRAIN:
            critic_log = self._critic_updates(batch, out.mel_post.detach(),
                                              step_index)

        report, critic_score = self._generator_losses(
            batch, out, phase, step_index, textless)
        self.opt_gen.zero_grad(set_to_none=True)
        report.total.backward()
        preclip = float(torch.nn.utils.clip_grad_norm_(
            self.gen_params, sched.grad_clip_norm))
        self.opt_gen.step()

        entry = report.to_dict()
        entry.update(step=step_index, phase=phase, lr=lr,
                     textless=textless, grad_norm_preclip=preclip)
        entry.update(critic_log)
        return entry

    def _window_range(self):
        return (self.schedule.window_min, self.schedule.window_max)

    def _generator_losses(self, batch, out, phase, step, textless):
        sched = self.schedule
        on = self.enabled
        step_lengths = torch.div(batch.mel_lengths + sched.r - 1, sched.r,
                                 rounding_mode="floor")

        l_mel = mel_loss(batch.mels, out.mel_dec, out.mel_post,
                         batch.frame_mask)
        l_gate = gate_loss(out.gate, batch.gate_targets, batch.frame_mask)
        if textless:
            l_att = 0.0   # a single memory slot has no alignment to guide
        else:
            l_att = guided_attention_loss(out.alignment, batch.text_lengths,
                                          step_lengths)

        l_svd = svd_loss(batch.mels, out.mel_post, batch.frame_mask) \
            if "l_svd" in on else 0.0
        l_mr = mel_rate_loss(batch.mels, out.mel_dec, out.mel_post,
                             batch.frame_mask) if "l_mr" in on else 0.0

        if "l_rec" in on:
            tracks = self.heads.decode_tracks(out.mel_dec)
            decs = torch.stack([tracks[n] for n in TRACK_ROWS], dim=1)
            feats = batch.features[:, list(TRACK_ROWS.values()), :]
            l_rec = reconstruction_loss(feats, decs, batch.frame_mask)
        else:
            l_rec = 0.0

        if "l_class" in on:
            reals = sample_windows(
                batch.mels, batch.frame_mask,
                np.random.default_rng([sched.seed, step, 11]),
                sched.window_count, self._window_range(), "real")
            fakes = sample_windows(
                out.mel_post, batch.frame_mask,
                np.random.default_rng([sched.seed, step, 12]),
                sched.window_count, self._window_range(), "generated")
            d_real = torch.stack(
                [self.heads.mel_classifier(w.window[None])[0]
                 for w in reals])
            d_fake = torch.stack(
                [self.heads.mel_classifier(w.window[None])[0]
                 for w in fakes])
            l_class = classification_loss(d_real, d_fake).mean()
        else:
            l_class = 0.0

        if "l_spk" in on:
            spk = self.model.speaker_embedding(batch.speaker_ids)
            embs, kept = [], []
            for i in range(batch.size):
                t = int(batch.mel_lengths[i])
                if t >= self.heads.speaker_head.MIN_FRAMES:
                    embs.append(self.heads.speaker_head(
                        out.mel_post[i:i + 1, :, :t]))
                    kept.append(i)
            l_spk = speaker_loss(spk[kept], torch.cat(embs)) \
                if embs else 0.0
        else:
            l_spk = 0.0

        critic_score = None
        if "critic" in on and phase == PHASE_ADVERSARIAL:
            fakes = sample_windows(
                out.mel_post, batch.frame_mask,
                np.random.default_rng([sched.seed, step, 13]),
                sched.window_count, self._window_range(), "generated")
            critic_score = score_windows(self.heads.critic, fakes).mean()

        try:
            report = total_loss(l_mel=l_mel, l_gate=l_gate, l_svd=l_svd,
                                l_mr=l_mr, l_att=l_att, l_rec=l_rec,
                                l_class=l_class, l_spk=l_spk,
                                critic_score=critic_score, phase=phase)
        except ValueError as exc:
            raise RuntimeError("training aborted at step %d: %s"
                               % (step, exc)) from exc
        return report, critic_score

    def _critic_updates(self, batch, fake_mels, step):
        sched = self.schedule
        losses, gaps = [], []
        for k in range(sched.critic_updates):
            rng = np.random.default_rng([sched.seed, step, 20 + k])
            reals, fakes = sample_window_pairs(
                batch.mels, fake_mels, batch.frame_mask, rng,
                sched.window_count, self._window_range())
            real_scores = score_windows(self.heads.critic, reals)
            fake_scores = score_windows(self.heads.critic, fakes)
            gp = gradient_penalty(
                self.heads.critic, reals, fakes,
                generator=torch.Generator().manual_seed(
                    _step_seed(sched.seed, step, 40 + k)))
            loss = critic_loss(real_scores, fake_scores, gp,
                               sched.gp_weight)
            self.opt_critic.zero_grad(set_to_none=True)
            loss.backward()
            torch.nn.utils.clip_grad_norm_(self.critic_params,
                                           sched.grad_clip_norm)
            self.opt_critic.step()
            gap = float((real_scores.mean() - fake_scores.mean()).detach())
            self.tracker.update(gap)
            losses.append(float(loss.detach()))
            gaps.append(gap)
        return {"l_critic": statistics.fmean(losses),
                "score_gap": statistics.fmean(gaps)}


def train(examples, table, tokenizer, out_dir, model_config=None,
          schedule=None, ablation="full", resume=None, force=False,
          progress=None):
    """Run the schedule end to end; returns the final checkpoint path,
    the logged history, and the trained modules."""
    schedule = schedule or TrainSchedule()
    trainer = Trainer(examples, table, tokenizer,
                      model_config=model_config, schedule=schedule,
                      ablation=ablation)
    start = 0
    if resume is not None:
        payload = load_checkpoint(resume)
        check_resume_compatible(payload, trainer.model_config, schedule,
                                force=force)
        trainer.load_state(payload)
        start = payload["step"] + 1

    ck_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ck_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "losses.jsonl")
    history = []
    final_path = None

    with open(log_path, "a") as log:
        for step in range(start, schedule.total_steps):
            entry = trainer.step(step)
            last = step == schedule.total_steps - 1
            if step % schedule.log_every == 0 or last:
                history.append(entry)
                log.write(json.dumps(entry) + "\n")
                if progress is not None:
                    progress(entry)
            if (step + 1) % schedule.checkpoint_every == 0 or last:
                final_path = save_checkpoint(
                    os.path.join(ck_dir, "step_%06d.pt" % step), step,
                    trainer.model, trainer.heads,
                    {"generator": trainer.opt_gen,
                     "critic": trainer.opt_critic},
                    schedule, trainer.model_config,
                    extras=trainer.checkpoint_extras())

    return TrainResult(checkpoint_path=final_path, history=history,
                       model=trainer.model, heads=trainer.heads)


def train_from_dir(data_dir, out_dir, model_config=None, schedule=None,
                   ablation="full", resume=None, force=False,
                   progress=None):
    """Train from a prepared data directory (manifest.jsonl plus feature
    caches, and tokenizer.json when prepared with a custom inventory)."""
    records, table = load_manifest(os.path.join(data_dir, "manifest.jsonl"))
    tok_path = os.path.join(data_dir, "tokenizer.json")
    if os.path.exists(tok_path):
        with open(tok_path) as fh:
            tokenizer = Tokenizer.from_dict(json.load(fh))
    else:
        tokenizer = Tokenizer(TokenizerConfig())
    examples = [load_example(rec, table) for rec in records]
    return train(examples, table, tokenizer, out_dir,
                 model_config=model_config, schedule=schedule,
                 ablation=ablation, resume=resume, force=force,
                 progress=progress)
