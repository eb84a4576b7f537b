"""Reading and validating corpus files.

All inputs are UTF-8 delimited text with a header row; ``.csv`` files are
comma separated, everything else is tab separated.

phones file    utterance_id, source (pred | ref_us | ref_uk), phones
segments file  utterance_id, speaker_id, phone, word, t_start, t_end
EMA file       t, ULx, ULy, LLx, LLy, LIx, LIy, TTx, TTy, TBx, TBy, TDx, TDy

The manifest is a JSON or YAML mapping::

    schema_version: 1
    ema_rate: 50            # optional; inferred from the t column otherwise
    phones: phones.tsv      # optional default for utterances
    segments: segments.tsv  # optional default for utterances
    speakers:
      - {id: s01, accent: US}
    utterances:
      - {id: s01_001, speaker: s01, ema: ema/s01_001.tsv}
"""

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np
import yaml

from .align import GAP, PhonemeSeq
from .errors import InputError, MalformedRow, MissingFile, SchemaMismatch
from .reparam import EMA_CHANNELS, EmaTrack

SCHEMA_VERSION = 1
SOURCES = ("pred", "ref_us", "ref_uk")
ACCENTS = ("US", "UK", "other")
PHONES_HEADER = ("utterance_id", "source", "phones")
SEGMENTS_HEADER = ("utterance_id", "speaker_id", "phone", "word", "t_start", "t_end")
EMA_HEADER = ("t",) + EMA_CHANNELS
# labels an aligner emits for non-speech; such segments are skipped
NON_SPEECH = frozenset({"", "sil", "sp", "spn", "<eps>"})


@dataclass(frozen=True)
class SegmentRecord:
    utterance_id: str
    speaker_id: str
    phone: str
    t_start: float
    t_end: float
    word: str = ""


@dataclass
class Utterance:
    id: str
    speaker: str
    pred: PhonemeSeq
    ref_us: PhonemeSeq
    ref_uk: PhonemeSeq
    ema: EmaTrack
    segments: List[SegmentRecord]
    dropped_frames: int = 0


@dataclass
class CorpusManifest:
    path: Path
    speakers: Dict[str, str]          # id -> accent label
    utterances: List[dict]            # {id, speaker, phones, segments, ema}
    ema_rate: float = None


@dataclass
class Corpus:
    manifest: CorpusManifest
    utterances: Dict[str, Utterance] = field(default_factory=dict)
    errors: List[InputError] = field(default_factory=list)
    input_hashes: Dict[str, str] = field(default_factory=dict)

    @property
    def speakers(self):
        return self.manifest.speakers

    def by_speaker(self):
        out = {}
        for utt in self.utterances.values():
            out.setdefault(utt.speaker, []).append(utt)
        return out

    def inventory(self):
        labels = set()
        for u in self.utterances.values():
            for seq in (u.pred, u.ref_us, u.ref_uk):
                labels.update(seq.phones)
        return labels


def _delimiter(path):
    return "," if Path(path).suffix.lower() == ".csv" else "\t"


def read_rows(path, header):
    """Yield (line number, row) after checking the header; widths are checked."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=_delimiter(path))
        try:
            head = next(reader)
        except StopIteration:
            raise MalformedRow(path, 1, "file is empty; header row required") from None
        head = tuple(h.strip() for h in head)
        if head != tuple(header):
            raise MalformedRow(path, 1, f"expected header {list(header)}, got {list(head)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(path, line, f"expected {len(header)} columns, got {len(row)}")
            yield line, [c.strip() for c in row]


def _float(path, line, text, what):
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(path, line, f"{what} is not a number: {text!r}") from None


def load_phones(path) -> Dict[str, Dict[str, PhonemeSeq]]:
    out = {}
    for line, (utt, source, phones) in read_rows(path, PHONES_HEADER):
        if source not in SOURCES:
            raise MalformedRow(path, line, f"unknown source {source!r}")
        toks = phones.split()
        if GAP in toks:
            raise MalformedRow(path, line, f"gap symbol {GAP!r} is reserved")
        entry = out.setdefault(utt, {})
        if source in entry:
            raise SchemaMismatch(f"{path}:{line}: duplicate {source} row for {utt!r}")
        entry[source] = PhonemeSeq(tuple(toks), utt)
    return out


def load_segments(path) -> Dict[str, List[SegmentRecord]]:
    out = {}
    for line, (utt, spk, phone, word, t0, t1) in read_rows(path, SEGMENTS_HEADER):
        a = _float(path, line, t0, "t_start")
        b = _float(path, line, t1, "t_end")
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise MalformedRow(path, line, f"need t_start < t_end, got {t0}, {t1}")
        out.setdefault(utt, []).append(SegmentRecord(utt, spk, phone, a, b, word))
    for segs in out.values():
        segs.sort(key=lambda s: (s.t_start, s.t_end))
    return out


def load_ema(path, speaker_id="", utterance_id="", rate=None):
    """Return (EmaTrack, number of frames dropped for NaN)."""
    times, frames = [], []
    dropped = 0
    for line, row in read_rows(path, EMA_HEADER):
        vals = [_float(path, line, c, EMA_HEADER[i]) for i, c in enumerate(row)]
        if any(math.isnan(v) for v in vals):
            dropped += 1
            continue
        if any(math.isinf(v) for v in vals):
            raise MalformedRow(path, line, "infinite value")
        if times and vals[0] <= times[-1]:
            raise MalformedRow(path, line, "t must be strictly increasing")
        times.append(vals[0])
        frames.append(vals[1:])
    if not frames:
        raise MalformedRow(path, 2, "no usable EMA frames")
    times = np.array(times)
    if rate is None:
        rate = 1.0 / float(np.median(np.diff(times))) if len(times) > 1 else 50.0
    track = EmaTrack(times, np.array(frames), float(rate), speaker_id, utterance_id)
    return track, dropped


def _load_document(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise SchemaMismatch(f"{path}: cannot parse: {exc}") from None


def load_manifest(path) -> CorpusManifest:
    path = Path(path)
    doc = _load_document(path)
    if not isinstance(doc, dict):
        raise SchemaMismatch(f"{path}: manifest must be a mapping")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"{path}: schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION}")
    base = path.parent
    speakers = {}
    for s in doc.get("speakers") or []:
        sid, acc = str(s.get("id", "")), s.get("accent", "other")
        if not sid:
            raise SchemaMismatch(f"{path}: speaker without id")
        if acc not in ACCENTS:
            raise SchemaMismatch(f"{path}: speaker {sid}: accent must be one of {ACCENTS}")
        if sid in speakers:
            raise SchemaMismatch(f"{path}: duplicate speaker id {sid!r}")
        speakers[sid] = acc
    utts = []
    seen = set()
    for u in doc.get("utterances") or []:
        uid = str(u.get("id", ""))
        if not uid:
            raise SchemaMismatch(f"{path}: utterance without id")
        if uid in seen:
            raise SchemaMismatch(f"{path}: duplicate utterance id {uid!r}")
        seen.add(uid)
        spk = str(u.get("speaker", ""))
        if spk not in speakers:
            raise SchemaMismatch(f"{path}: utterance {uid}: unknown speaker {spk!r}")
        entry = {"id": uid, "speaker": spk}
        for key in ("phones", "segments", "ema"):
            rel = u.get(key, doc.get(key) if key != "ema" else None)
            if not rel:
                raise SchemaMismatch(f"{path}: utterance {uid}: no {key} file")
            entry[key] = base / rel
        utts.append(entry)
    if not utts:
        raise SchemaMismatch(f"{path}: manifest lists no utterances")
    rate = doc.get("ema_rate")
    return CorpusManifest(path, speakers, utts, None if rate is None else float(rate))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def ingest(manifest_path, strict: bool = True) -> Corpus:
    """Load and validate everything a manifest references.

    With ``strict`` the first error is raised. Otherwise utterances with
    errors are skipped and the errors are collected on ``Corpus.errors``.
    """
    manifest = load_manifest(manifest_path)
    corpus = Corpus(manifest)
    base = manifest.path.parent

    def record(p):
        corpus.input_hashes[os.path.relpath(p, base)] = file_sha256(p)

    record(manifest.path)
    phones_cache, seg_cache = {}, {}

    def cached(cache, loader, p):
        if p not in cache:
            try:
                cache[p] = loader(p)
            except InputError as exc:
                cache[p] = exc
            else:
                record(p)
        if isinstance(cache[p], InputError):
            raise cache[p]
        return cache[p]

    for entry in manifest.utterances:
        uid, spk = entry["id"], entry["speaker"]
        try:
            phones = cached(phones_cache, load_phones, entry["phones"]).get(uid)
            if phones is None:
                raise SchemaMismatch(f"{entry['phones']}: no rows for utterance {uid!r}")
            missing = [s for s in SOURCES if s not in phones]
            if missing:
                raise SchemaMismatch(f"{entry['phones']}: utterance {uid!r} lacks {missing}")
            segs = cached(seg_cache, load_segments, entry["segments"]).get(uid, [])
            for s in segs:
                if s.speaker_id != spk:
                    raise SchemaMismatch(
                        f"{entry['segments']}: utterance {uid!r} segment speaker "
                        f"{s.speaker_id!r} != manifest speaker {spk!r}")
            track, dropped = load_ema(entry["ema"], spk, uid, manifest.ema_rate)
            record(entry["ema"])
        except InputError as exc:
            if strict:
                raise
            corpus.errors.append(exc)
            continue
        corpus.utterances[uid] = Utterance(
            uid, spk, phones["pred"], phones["ref_us"], phones["ref_uk"], track,
            [s for s in segs if s.phone not in NON_SPEECH], dropped)

    inv = corpus.inventory()
    for uid, utt in list(corpus.utterances.items()):
        bad = [s for s in utt.segments if s.phone not in inv]
        if bad:
            exc = SchemaMismatch(
                f"utterance {uid!r}: segment phone {bad[0].phone!r} is not in the phone inventory")
            if strict:
                raise exc
            corpus.errors.append(exc)
            del corpus.utterances[uid]
    if not corpus.utterances:
        raise SchemaMismatch(f"{manifest_path}: no utterance could be loaded")
    return corpus
