"""Corpus scanning, feature caching, and the utterance manifest.

Corpus layout: ``<root>/<speaker>/<utt>.wav`` with a sibling ``<utt>.txt``
transcript. ``build_manifest`` extracts features for every valid utterance,
writes one cache file per utterance, pools per-speaker normalization stats,
and returns the records plus the speaker table. The manifest file is
line-delimited JSON with a version header on the first line.
"""

import dataclasses
import json
import logging
import os

from ..features import (
    FeatureExtractor,
    SpeakerStats,
    Waveform,
    load_feature_cache,
    save_feature_cache,
)
from .tokenizer import Tokenizer, TokenizerConfig

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1


@dataclasses.dataclass
class UtteranceRecord:
    id: str
    speaker_id: str
    token_ids: tuple
    cache_path: str

    def to_dict(self):
        return {
            "id": self.id,
            "speaker_id": self.speaker_id,
            "token_ids": list(self.token_ids),
            "cache_path": self.cache_path,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], d["speaker_id"], tuple(d["token_ids"]),
                   d["cache_path"])


class SpeakerTable:
    """Dense speaker index plus per-speaker normalization stats."""

    def __init__(self, speaker_ids, stats):
        self.speaker_ids = list(speaker_ids)
        self.stats = dict(stats)
        missing = set(self.speaker_ids) - set(self.stats)
        if missing:
            raise ValueError("missing stats for speakers: %s" % sorted(missing))

    def __len__(self):
        return len(self.speaker_ids)

    def __contains__(self, speaker_id):
        return speaker_id in self.stats

    def index_of(self, speaker_id):
        return self.speaker_ids.index(speaker_id)

    def stats_of(self, speaker_id):
        return self.stats[speaker_id]

    def to_dict(self):
        return {
            "speaker_ids": self.speaker_ids,
            "stats": {s: self.stats[s].to_dict() for s in self.speaker_ids},
        }

    @classmethod
    def from_dict(cls, d):
        stats = {s: SpeakerStats.from_dict(v) for s, v in d["stats"].items()}
        return cls(d["speaker_ids"], stats)


@dataclasses.dataclass
class PipelineConfig:
    cache_dir: str = "cache"
    tokenizer: TokenizerConfig = dataclasses.field(default_factory=TokenizerConfig)
    extractor: FeatureExtractor = dataclasses.field(default_factory=FeatureExtractor)
    textless: bool = False


def scan_corpus(corpus_dir):
    """Yields (speaker_id, utterance_id, wav_path, txt_path or None)."""
    for speaker in sorted(os.listdir(corpus_dir)):
        spk_dir = os.path.join(corpus_dir, speaker)
        if not os.path.isdir(spk_dir):
            continue
        for fname in sorted(os.listdir(spk_dir)):
            if not fname.endswith(".wav"):
                continue
            utt = fname[: -len(".wav")]
            wav_path = os.path.join(spk_dir, fname)
            txt_path = os.path.join(spk_dir, utt + ".txt")
            yield speaker, utt, wav_path, (txt_path if os.path.exists(txt_path) else None)


def build_manifest(corpus_dir, config=None):
    """Extract and cache features for every utterance under corpus_dir.

    Returns (records, speaker_table). Utterances with unreadable audio or a
    missing transcript are skipped with a warning rather than failing the
    whole build.
    """
    config = config or PipelineConfig()
    tokenizer = Tokenizer(config.tokenizer)
    os.makedirs(config.cache_dir, exist_ok=True)

    records = []
    per_speaker_feats = {}
    for speaker, utt, wav_path, txt_path in scan_corpus(corpus_dir):
        if txt_path is None and not config.textless:
            log.warning("skipping %s/%s: no transcript", speaker, utt)
            continue
        try:
            w = Waveform.read(wav_path)
            feats, mel = config.extractor(w)
        except Exception as exc:
            log.warning("skipping %s/%s: %s", speaker, utt, exc)
            continue
        if txt_path is not None:
            with open(txt_path) as fh:
                text = fh.read().strip()
            token_ids = tuple(int(i) for i in tokenizer.encode(text))
        else:
            token_ids = ()
        if not token_ids and not config.textless:
            log.warning("skipping %s/%s: empty transcript", speaker, utt)
            continue
        cache_path = os.path.join(config.cache_dir, "%s_%s.npz" % (speaker, utt))
        save_feature_cache(cache_path, feats, mel,
                           config.extractor.mel.hop_length,
                           config.extractor.mel.sample_rate,
                           speaker_id=speaker, utterance_id=utt)
        records.append(UtteranceRecord(utt, speaker, token_ids, cache_path))
        per_speaker_feats.setdefault(speaker, []).append(feats)

    if not records:
        raise ValueError("no utterances found under %s" % corpus_dir)

    speakers = sorted(per_speaker_feats)
    stats = {s: SpeakerStats.from_feature_sets(per_speaker_feats[s])
             for s in speakers}
    return records, SpeakerTable(speakers, stats)


def save_manifest(path, records, table):
    with open(path, "w") as fh:
        header = {"manifest_version": MANIFEST_VERSION,
                  "speakers": table.to_dict()}
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")


def load_manifest(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        version = header.get("manifest_version")
        if version != MANIFEST_VERSION:
            raise ValueError("unsupported manifest version %r" % version)
        table = SpeakerTable.from_dict(header["speakers"])
        records = [UtteranceRecord.from_dict(json.loads(line))
                   for line in fh if line.strip()]
    for rec in records:
        if rec.speaker_id not in table:
            raise ValueError("record %s references unknown speaker %s"
                             % (rec.id, rec.speaker_id))
    return records, table
