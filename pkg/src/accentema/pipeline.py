"""End-to-end analysis: accent scores, articulatory statistics, regressions."""

import json
import math
import platform
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy

from . import __version__
from .align import WeightTable, align
from .config import PipelineConfig
from .errors import (AccentEmaError, ConstantPredictor, DegenerateN, EmptySegment,
                     PipelineError, TooFewSamples, WidenedSegment)
from .gesture import fit_gesture
from .pmi import AccentScore, TrainResult, speaker_accent_score, train_weights
from .reparam import FEATURES, fit_bases, reparameterize, segment_frames, segment_mean
from .stats import RegressionResult, SummaryCell, linreg, summarize_one

MEASURE_FIELDS = {"us": "pmi_ld_us", "relative": "relative"}


@dataclass
class ScoreResult:
    train_us: TrainResult
    train_uk: TrainResult
    utterances: List[dict]
    speakers: Dict[str, AccentScore]


@dataclass
class SegmentStat:
    speaker_id: str
    utterance_id: str
    index: int
    phone: str
    vowel: str
    t_start: float
    t_end: float
    feature: str
    mean: float
    T: float = math.nan
    k: float = math.nan
    x0: float = math.nan
    t_s: float = math.nan
    mse: float = math.nan
    converged: bool = False
    n_frames: int = 0
    status: str = "ok"


@dataclass
class CellResult:
    vowel: str
    feature: str
    statistic: str
    measure: str
    status: str                         # ok | insufficient-data | constant-predictor
    result: Optional[RegressionResult]
    points: List[tuple] = field(default_factory=list)   # (speaker, x, y)

    @property
    def key(self):
        return (self.vowel, self.feature, self.statistic, self.measure)


@dataclass
class Report:
    config: PipelineConfig
    scores: ScoreResult
    segments: List[SegmentStat]
    cells: List[CellResult]
    summary_cells: List[SummaryCell]
    summary: dict
    provenance: dict
    bases: dict


# -- accent scores ------------------------------------------------------------

def score_corpus(corpus, cfg: PipelineConfig) -> ScoreResult:
    utts = [corpus.utterances[k] for k in sorted(corpus.utterances)]
    inv = corpus.inventory()
    train_us = train_weights([(u.pred.phones, u.ref_us.phones) for u in utts], cfg.train, inv)
    train_uk = train_weights([(u.pred.phones, u.ref_uk.phones) for u in utts], cfg.train, inv)
    unit = WeightTable.unit(inv)

    rows = []
    for u in utts:
        try:
            row = {
                "speaker_id": u.speaker,
                "utterance_id": u.id,
                "ld_us": align(u.pred, u.ref_us, unit).normalized_cost,
                "ld_uk": align(u.pred, u.ref_uk, unit).normalized_cost,
                "pmi_ld_us": align(u.pred, u.ref_us, train_us.weights).normalized_cost,
                "pmi_ld_uk": align(u.pred, u.ref_uk, train_uk.weights).normalized_cost,
            }
        except AccentEmaError as exc:
            raise PipelineError(exc, u.speaker, u.id) from exc
        row["ld_diff"] = row["ld_us"] - row["ld_uk"]
        row["pmi_ld_diff"] = row["pmi_ld_us"] - row["pmi_ld_uk"]
        rows.append(row)

    speakers = {}
    for spk in sorted({r["speaker_id"] for r in rows}):
        mine = [r for r in rows if r["speaker_id"] == spk]
        speakers[spk] = speaker_accent_score(
            spk,
            [(r["utterance_id"], r["pmi_ld_us"], r["pmi_ld_uk"]) for r in mine],
            [(r["utterance_id"], r["ld_us"], r["ld_uk"]) for r in mine],
        )
    return ScoreResult(train_us, train_uk, rows, speakers)


# -- articulatory statistics ----------------------------------------------------

def _vowel_mask(utt, cfg):
    mask = np.zeros(len(utt.ema.times), dtype=bool)
    for s in utt.segments:
        if cfg.map_phone(s.phone) in cfg.vowels:
            mask |= segment_frames(utt.ema.times, s.t_start, s.t_end)
    return mask


def reparam_corpus(corpus, cfg: PipelineConfig):
    """Return (speaker -> TonguePcaBasis, utterance id -> ReparamTrack)."""
    utts = [corpus.utterances[k] for k in sorted(corpus.utterances)]
    tracks = [u.ema for u in utts]
    masks = [_vowel_mask(u, cfg) for u in utts] if cfg.pca_frames == "vowels" else None
    try:
        bases = fit_bases(tracks, cfg.pca_scope, masks)
    except AccentEmaError as exc:
        raise PipelineError(exc) from exc
    return bases, {u.id: reparameterize(u.ema, bases[u.speaker]) for u in utts}


def _utterance_stats(args):
    utt_id, speaker, segments, track, cfg = args
    out = []
    for idx, seg in enumerate(segments):
        vowel = cfg.map_phone(seg.phone)
        if vowel not in cfg.vowels:
            continue
        where = f"{seg.phone}@{seg.t_start:g}-{seg.t_end:g}"
        status = "ok"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", WidenedSegment)
            try:
                means = segment_mean(track, seg.t_start, seg.t_end, widen=True)
            except EmptySegment:
                means = None
            if any(issubclass(w.category, WidenedSegment) for w in caught):
                status = "widened"
        if means is None:
            for f in FEATURES:
                out.append(SegmentStat(speaker, utt_id, idx, seg.phone, vowel,
                                       seg.t_start, seg.t_end, f, math.nan, status="empty-segment"))
            continue
        for j, f in enumerate(FEATURES):
            st = SegmentStat(speaker, utt_id, idx, seg.phone, vowel, seg.t_start, seg.t_end,
                             f, float(means[j]), status=status)
            if "T" in cfg.statistics:
                try:
                    fit = fit_gesture(track.times, track.channels[:, j], seg.t_start, seg.t_end, cfg.fit)
                except TooFewSamples:
                    st.status = "too-few-samples"
                except AccentEmaError as exc:
                    raise PipelineError(exc, speaker, utt_id, where) from exc
                else:
                    p = fit.params
                    st.T, st.k, st.x0, st.t_s = p.T, p.k, p.x0, p.t_s
                    st.mse, st.converged, st.n_frames = fit.weighted_mse, fit.converged, fit.n_frames
            out.append(st)
    return out


def segment_stats(corpus, tracks, cfg: PipelineConfig) -> List[SegmentStat]:
    jobs = [(uid, corpus.utterances[uid].speaker, corpus.utterances[uid].segments, tracks[uid], cfg)
            for uid in sorted(corpus.utterances)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_utterance_stats, jobs, chunksize=4))
    else:
        parts = [_utterance_stats(j) for j in jobs]
    return [s for part in parts for s in part]


def speaker_features(stats: List[SegmentStat], cfg: PipelineConfig):
    """(vowel, feature, statistic) -> speaker -> mean over that speaker's segments."""
    acc = {}
    for s in stats:
        for stat, val in (("mean", s.mean), ("T", s.T)):
            if stat in cfg.statistics and math.isfinite(val):
                acc.setdefault((s.vowel, s.feature, stat), {}).setdefault(s.speaker_id, []).append(val)
    return {key: {spk: math.fsum(v) / len(v) for spk, v in sorted(per.items())}
            for key, per in acc.items()}


# -- regression -----------------------------------------------------------------

def regress_cells(measures: Dict[str, Dict[str, float]], features, cfg: PipelineConfig) -> List[CellResult]:
    """One regression per (vowel, feature, statistic, measure).

    ``measures`` maps speaker -> {"us": ..., "relative": ...}. Every cell of the
    full grid is returned; those without enough speakers carry a status.
    """
    cells = []
    for vowel in cfg.vowels:
        for feat in FEATURES:
            for stat in cfg.statistics:
                per = features.get((vowel, feat, stat), {})
                for measure in cfg.measures:
                    pts = [(spk, measures[spk][measure], y) for spk, y in sorted(per.items())
                           if spk in measures and math.isfinite(measures[spk][measure])]
                    if len(pts) < cfg.min_speakers:
                        cells.append(CellResult(vowel, feat, stat, measure, "insufficient-data", None, pts))
                        continue
                    try:
                        res = linreg([p[1] for p in pts], [p[2] for p in pts])
                    except ConstantPredictor:
                        cells.append(CellResult(vowel, feat, stat, measure, "constant-predictor", None, pts))
                        continue
                    except DegenerateN:
                        cells.append(CellResult(vowel, feat, stat, measure, "insufficient-data", None, pts))
                        continue
                    cells.append(CellResult(vowel, feat, stat, measure, "ok", res, pts))
    return cells


def summarize_cells(cells: List[CellResult], cfg: PipelineConfig):
    summary_cells = []
    for c in cells:
        if c.result is None:
            summary_cells.append(SummaryCell(c.vowel, c.feature, c.statistic, "none", False, False, c.measure))
        else:
            summary_cells.append(summarize_one(c.vowel, c.feature, c.statistic, c.result, c.measure,
                                               alpha=cfg.alpha, strong_r=cfg.strong_r))
    summary = {"cells_total": len(cells), "status_counts": {}, "per_measure": {}}
    for c in cells:
        summary["status_counts"][c.status] = summary["status_counts"].get(c.status, 0) + 1
    for m in cfg.measures:
        mine = [(c, s) for c, s in zip(cells, summary_cells) if c.measure == m]
        tested = [(c, s) for c, s in mine if c.result is not None]
        vowels_tested = sorted({c.vowel for c, _ in tested}, key=cfg.vowels.index)
        sig = [s for _, s in tested if s.significant]
        summary["per_measure"][m] = {
            "tests_run": len(tested),
            "significant": len(sig),
            "strong": sum(s.strong for s in sig),
            "vowels_tested": len(vowels_tested),
            "mean_significant_per_vowel": (len(sig) / len(vowels_tested)) if vowels_tested else 0.0,
            "multiple_comparison_correction": None,
        }
    return summary_cells, summary


# -- orchestration -----------------------------------------------------------------

def speaker_measures(speakers: Dict[str, AccentScore]):
    return {spk: {m: getattr(s, f) for m, f in MEASURE_FIELDS.items()} for spk, s in speakers.items()}


def provenance(corpus) -> dict:
    return {
        "package": "accentema",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "inputs": dict(sorted(corpus.input_hashes.items())),
        "ingest_errors": [str(e) for e in corpus.errors],
        "dropped_nan_frames": {u: corpus.utterances[u].dropped_frames
                               for u in sorted(corpus.utterances)
                               if corpus.utterances[u].dropped_frames},
    }


def run_pipeline(corpus, cfg: PipelineConfig) -> Report:
    n_speakers = len({u.speaker for u in corpus.utterances.values()})
    if n_speakers < cfg.min_speakers:
        raise DegenerateN(f"need at least {cfg.min_speakers} speakers, corpus has {n_speakers}")
    scores = score_corpus(corpus, cfg)
    bases, tracks = reparam_corpus(corpus, cfg)
    seg = segment_stats(corpus, tracks, cfg)
    feats = speaker_features(seg, cfg)
    cells = regress_cells(speaker_measures(scores.speakers), feats, cfg)
    summary_cells, summary = summarize_cells(cells, cfg)
    summary["training"] = {
        "us": {"iterations": scores.train_us.iterations, "converged": scores.train_us.converged},
        "uk": {"iterations": scores.train_uk.iterations, "converged": scores.train_uk.converged},
    }
    summary["segments"] = _segment_counts(seg)
    return Report(cfg, scores, seg, cells, summary_cells, summary, provenance(corpus),
                  {spk: b.to_dict() for spk, b in bases.items()})


def _segment_counts(seg):
    counts = {}
    for s in seg:
        counts[s.status] = counts.get(s.status, 0) + 1
    return dict(sorted(counts.items()))
